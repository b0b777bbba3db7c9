#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "smrm/io.hpp"
#include "smrm/synthetic.hpp"

using namespace smrm;
namespace fs = std::filesystem;

namespace {

Dataset parse(const std::string& text, const std::vector<std::string>& predictors) {
    std::istringstream in(text);
    IngestConfig cfg;
    cfg.predictor_columns = predictors;
    return parse_csv(in, cfg, "mem");
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "smrm_test_io";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("one missing response sets exactly one mask entry") {
    const Dataset d = parse("x,a,b\n1,2,NA\n2,3,4\n3,5,6\n", {"x"});
    CHECK(d.n() == 3);
    CHECK(d.p() == 1);
    CHECK((!d.Y.mask()).count() == 1);
    CHECK_FALSE(d.Y.observed(0, 1));
    CHECK(d.Y.column_names() == std::vector<std::string>{"a", "b"});
    CHECK(d.predictor_names == std::vector<std::string>{"x"});
}

TEST_CASE("missing predictor is an error naming the cell") {
    try {
        parse("x,a\n1,2\nNA,3\n", {"x"});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::missing_predictor);
        const std::string msg = e.what();
        CHECK(msg.find("mem:3") != std::string::npos);
        CHECK(msg.find("'x'") != std::string::npos);
    }
}

TEST_CASE("fully missing response column is rejected") {
    try {
        parse("x,a,b\n1,NA,2\n2,NA,3\n", {"x"});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::fully_missing_column);
        CHECK(std::string(e.what()).find("'a'") != std::string::npos);
    }
}

TEST_CASE("parse errors carry row and column") {
    try {
        parse("x,a\n1,2\n2,abc\n", {"x"});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::parse_error);
        CHECK(std::string(e.what()).find("mem:3, column 'a'") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("x,a\n1,2,3\n", {"x"}), Error);
    CHECK_THROWS_AS(parse("x,a\n1,2\n", {"nope"}), Error);
    CHECK_THROWS_AS(parse("", {"x"}), Error);
}

TEST_CASE("comments, quotes, whitespace and scientific notation") {
    const Dataset d = parse("# leading comment\n\"x\", \"a,b\"\n1e-3, -2.5E+2\n# inside\n+4,.5\n", {"x"});
    CHECK(d.Y.column_names() == std::vector<std::string>{"a,b"});
    CHECK(d.X(0, 0) == 1e-3);
    CHECK(d.Y(0, 0) == -250.0);
    CHECK(d.X(1, 0) == 4.0);
    CHECK(d.Y(1, 0) == 0.5);
}

TEST_CASE("response and predictor lists") {
    std::istringstream in("u,v,w\n1,2,3\n4,5,6\n");
    IngestConfig cfg;
    cfg.response_columns = {"w", "u"};
    const Dataset d = parse_csv(in, cfg);
    CHECK(d.predictor_names == std::vector<std::string>{"v"});
    CHECK(d.Y.column_names() == std::vector<std::string>{"w", "u"});
    CHECK(d.Y(1, 1) == 4.0);
    std::istringstream again("u,v\n1,2\n");
    cfg.response_columns = {"u"};
    cfg.predictor_columns = {"u"};
    CHECK_THROWS_AS(parse_csv(again, cfg), Error);
}

TEST_CASE("format_double round-trips") {
    Rng rng(31);
    for (int k = 0; k < 2000; ++k) {
        const double v = std::ldexp(oracle::uniform(rng, -1, 1), static_cast<int>(uniform_index(rng, 200)) - 100);
        CHECK(parse_double(format_double(v)) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK_THROWS_AS(parse_double("1.5x"), Error);
    CHECK_THROWS_AS(parse_double(""), Error);
}

TEST_CASE("dataset write then ingest is the identity") {
    SyntheticSpec spec;
    spec.n = 50;
    spec.missing_rate = 0.3;
    spec.seed = 2;
    const SyntheticData sim = generate_synthetic(spec);
    const fs::path path = scratch("roundtrip.csv");
    write_dataset_csv(path, sim.data, "NA", "header line\nsecond line");
    IngestConfig cfg;
    cfg.predictor_columns = sim.data.predictor_names;
    const Dataset back = ingest_csv(path, cfg);
    CHECK(back.X == sim.data.X);
    CHECK(back.Y.mask().cwiseEqual(sim.data.Y.mask()).all());
    CHECK(back.Y.column_names() == sim.data.Y.column_names());
    CHECK(back.predictor_names == sim.data.predictor_names);
    for (Index i = 0; i < back.n(); ++i)
        for (Index l = 0; l < back.q(); ++l)
            if (back.Y.observed(i, l)) CHECK(back.Y(i, l) == sim.data.Y(i, l));
    std::ifstream in(path);
    std::string first;
    std::getline(in, first);
    CHECK(first == "# header line");
    CHECK_FALSE(fs::exists(path.string() + ".tmp"));
}

TEST_CASE("list splitting") {
    CHECK(split_list(" a, b ,,c ") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_list("").empty());
}

TEST_CASE("matrix tables and heatmaps") {
    Matrix R(2, 2);
    R << 1, -0.5, -0.5, 1;
    const CsvTable t = matrix_table(R, {"a", "b"}, {"a", "b"}, "corner");
    CHECK(t.header == std::vector<std::string>{"corner", "a", "b"});
    CHECK(t.rows[0] == std::vector<std::string>{"a", "1", "-0.5"});
    const std::string svg = heatmap_svg(R, {"a", "b"}, "t");
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("#ffffff") == std::string::npos);
    CHECK(svg.find("#ff0000") != std::string::npos);
    CHECK(svg.find("#8080ff") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

TEST_CASE("zero missing rate gives complete responses") {
    SyntheticSpec spec;
    spec.missing_rate = 0.0;
    CHECK(generate_synthetic(spec).data.Y.mask().all());
    spec.mechanism = Mechanism::none;
    spec.missing_rate = 0.7;
    CHECK(generate_synthetic(spec).data.Y.mask().all());
}

TEST_CASE("generator is deterministic in its seed") {
    SyntheticSpec spec;
    spec.seed = 9;
    const SyntheticData a = generate_synthetic(spec);
    const SyntheticData b = generate_synthetic(spec);
    CHECK(a.data.X == b.data.X);
    CHECK(a.data.Y.values() == b.data.Y.values());
    CHECK(a.data.Y.mask().cwiseEqual(b.data.Y.mask()).all());
    CHECK(a.truth.K == b.truth.K);
    spec.seed = 10;
    CHECK(generate_synthetic(spec).data.X != a.data.X);
}

TEST_CASE("true precision is diagonally dominant with the requested edges") {
    SyntheticSpec spec;
    spec.q = 8;
    spec.n_edges = 6;
    spec.noise = 2.0;
    const SyntheticData sim = generate_synthetic(spec);
    const Matrix& K = sim.truth.K;
    CHECK(is_spd(K));
    Index edges = 0;
    for (Index a = 0; a < 8; ++a) {
        double off = 0;
        for (Index b = 0; b < 8; ++b) {
            if (a == b) continue;
            off += std::abs(K(a, b));
            if (b > a && K(a, b) != 0.0) ++edges;
        }
        CHECK(K(a, a) > off);
    }
    CHECK(edges == 6);
}

TEST_CASE("error covariance converges to the inverse precision") {
    SyntheticSpec spec;
    spec.n = 100000;
    spec.p = 2;
    spec.q = 4;
    spec.n_edges = 3;
    spec.mechanism = Mechanism::none;
    spec.seed = 4;
    const SyntheticData sim = generate_synthetic(spec);
    const Matrix E = sim.data.Y.values() - sim.truth.predict(sim.data.X);
    const Matrix C = E.transpose() * E / static_cast<double>(spec.n);
    const Matrix Sigma = sim.truth.K.inverse();
    CHECK((C - Sigma).norm() / Sigma.norm() < 0.02);
}

TEST_CASE("MCAR and MAR masks") {
    SyntheticSpec spec;
    spec.n = 4000;
    spec.q = 3;
    spec.missing_rate = 0.4;
    const SyntheticData mcar = generate_synthetic(spec);
    CHECK(mcar.data.Y.missing_ratio().mean() == doctest::Approx(0.4).epsilon(0.05));

    spec.mechanism = Mechanism::mar;
    const SyntheticData mar = generate_synthetic(spec);
    CHECK(mar.data.Y.mask().col(0).all());
    CHECK(mar.data.Y.missing_ratio()(1) == doctest::Approx(0.4).epsilon(0.07));
    // Missingness rises with the first response.
    double lo = 0, hi = 0;
    const Vector y0 = mar.data.Y.values().col(0);
    const double med = [&] {
        std::vector<double> v(y0.data(), y0.data() + y0.size());
        std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
        return v[v.size() / 2];
    }();
    for (Index i = 0; i < spec.n; ++i) (y0(i) < med ? lo : hi) += mar.data.Y.observed(i, 1) ? 0 : 1;
    CHECK(hi > 2 * lo);
}

TEST_CASE("an impossible mask is retried then reported") {
    SyntheticSpec spec;
    spec.n = 3;
    spec.missing_rate = 1.0;
    spec.max_retries = 5;
    try {
        generate_synthetic(spec);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::fully_missing_column);
    }
    SyntheticSpec bad;
    bad.missing_rate = 1.5;
    CHECK_THROWS_AS(generate_synthetic(bad), Error);
}
