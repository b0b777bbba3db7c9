#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "smrm/path_eval.hpp"
#include "smrm/synthetic.hpp"

using namespace smrm;

namespace {

SyntheticData family(std::uint64_t seed, Index n = 80) {
    SyntheticSpec spec;
    spec.n = n;
    spec.p = 4;
    spec.q = 3;
    spec.n_edges = 2;
    spec.missing_rate = 0.3;
    spec.seed = seed;
    return generate_synthetic(spec);
}

}  // namespace

TEST_CASE("split sizes use the floor for training and are seeded") {
    const SyntheticData sim = family(1, 101);
    const SplitResult a = train_test_split(sim.data, 0.8, 5);
    CHECK(a.data.rows_with(SplitTag::train).size() == 80);
    CHECK(a.data.rows_with(SplitTag::test).size() == 21);
    CHECK(a.data.split == train_test_split(sim.data, 0.8, 5).data.split);
    CHECK(a.data.split != train_test_split(sim.data, 0.8, 6).data.split);
    CHECK_THROWS_AS(train_test_split(sim.data, 1.0, 5), Error);
    CHECK_THROWS_AS(train_test_split(sim.data, 0.001, 5), Error);
}

TEST_CASE("split redraws until every response is observed in training") {
    Dataset d;
    d.X = Matrix::Random(10, 1);
    BoolMatrix mask = BoolMatrix::Constant(10, 2, true);
    mask.col(1).setConstant(false);
    mask(3, 1) = true;  // a single observation that must land in training
    d.Y = MaskedMatrix(Matrix::Zero(10, 2), mask);
    const SplitResult s = train_test_split(d, 0.5, 1);
    CHECK(s.data.split[3] == SplitTag::train);
    CHECK(s.seed_used == 1 + static_cast<std::uint64_t>(s.retries));
    CHECK_THROWS_AS(train_test_split(d, 0.1, 1, 0), Error);
}

TEST_CASE("lambda1 grid") {
    const std::vector<double> g = lambda1_grid();
    CHECK(g.size() == 200);
    CHECK(g.front() == 1.0);
    CHECK(g.back() == 6.5e-3);
    for (std::size_t k = 1; k < g.size(); ++k) {
        CHECK(g[k] < g[k - 1]);
        CHECK(std::log(g[k - 1] / g[k]) == doctest::Approx(std::log(1.0 / 6.5e-3) / 199));
    }
    CHECK(default_r_values() == std::vector<double>{3, 2, 1, 0.75, 0.5, 0.225, 0.2, 0.175, 0.1});
}

TEST_CASE("adjusted penalty divided by a recovers the uniform penalty") {
    const SyntheticData sim = family(2);
    const SplitResult s = train_test_split(sim.data, 0.8, 1);
    const BaselineResult base = run_baseline(s.data, {});
    const Dataset tr = s.data.train();
    const Lambda2Matrix adj = build_lambda2_adjusted(tr.X, tr.Y, base.lambda_train, 0.3);
    const Lambda2Matrix uni = build_lambda2_uniform(base.lambda_train, 0.3, 4);
    for (Index l = 0; l < 3; ++l) {
        CHECK(adj.a(l) > 0);
        for (Index j = 0; j < 4; ++j) CHECK(adj.values(j, l) / adj.a(l) == doctest::Approx(uni.values(j, l)).epsilon(1e-14));
    }
    const Lambda2Matrix re = rescale(adj, 0.6);
    CHECK(re.values.isApprox(2.0 * adj.values));
    CHECK(uni.values(0, 0) == 0.3 * base.lambda_train(0));
}

TEST_CASE("evaluation arithmetic") {
    Matrix y(2, 1);
    y << 1, 3;
    const MaskedMatrix Y = MaskedMatrix::complete(y);
    Matrix pred(2, 1);
    pred << 1, 3;
    CHECK(evaluate_predictions(pred, Y, Vector::Constant(1, 4.0)).mse_tilde_smrm == 0.0);
    pred << 3, 1;  // squared errors 4 and 4
    Vector ref(1);
    ref << 8.0;
    const EvalReport rep = evaluate_predictions(pred, Y, ref);
    CHECK(rep.per_response_mse_smrm(0) == 4.0);
    CHECK(rep.mse_tilde_smrm == 0.5);
    CHECK(rep.mse_tilde_lasso == 1.0);
}

TEST_CASE("responses without observed test entries are excluded") {
    Matrix v = Matrix::Ones(3, 2);
    BoolMatrix m = BoolMatrix::Constant(3, 2, true);
    m.col(1).setConstant(false);
    const EvalReport rep = evaluate_predictions(Matrix::Zero(3, 2), MaskedMatrix(v, m), Vector::Constant(2, 1.0));
    CHECK(rep.q_effective == 1);
    CHECK_FALSE(rep.included[1]);
    CHECK(std::isnan(rep.per_response_mse_smrm(1)));
    CHECK(rep.mse_tilde_smrm == 1.0);
}

TEST_CASE("unobserved test values never influence a report") {
    Rng rng(3);
    const Matrix pred = oracle::random_normal(10, 3, rng);
    Matrix vals = oracle::random_normal(10, 3, rng);
    BoolMatrix m = BoolMatrix::Constant(10, 3, true);
    m(2, 1) = m(5, 0) = m(7, 2) = false;
    const EvalReport a = evaluate_predictions(pred, MaskedMatrix(vals, m), Vector::Ones(3));
    vals(2, 1) = 1e6;
    vals(5, 0) = -3e5;
    vals(7, 2) = 42;
    const EvalReport b = evaluate_predictions(pred, MaskedMatrix(vals, m), Vector::Ones(3));
    CHECK(a.per_response_mse_smrm == b.per_response_mse_smrm);
    CHECK(a.mse_tilde_smrm == b.mse_tilde_smrm);
}

TEST_CASE("the lasso baseline scored against itself gives exactly q") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const SyntheticData sim = family(seed);
        const SplitResult s = train_test_split(sim.data, 0.8, seed);
        const BaselineResult base = run_baseline(s.data, {});
        const EvalReport rep = evaluate(base.fits, s.data.test(), base.mse_test);
        CHECK(rep.mse_tilde_smrm == static_cast<double>(rep.q_effective));
        CHECK(rep.mse_tilde_lasso == static_cast<double>(rep.q_effective));
        CHECK(rep.q_effective == 3);
    }
}

TEST_CASE("log transform round trip and domain") {
    Matrix v(2, 2);
    v << 1.0, 2.5, 0.125, 7.0;
    BoolMatrix m = BoolMatrix::Constant(2, 2, true);
    m(1, 0) = false;
    v(1, 0) = -1.0;  // unobserved, so ignored
    const MaskedMatrix Y(v, m);
    const MaskedMatrix L = log_transform(Y);
    CHECK(L(0, 0) == 0.0);
    CHECK(L.mask().cwiseEqual(m).all());
    const Matrix back = exp_back(L.values());
    for (Index i = 0; i < 2; ++i)
        for (Index l = 0; l < 2; ++l)
            if (m(i, l)) CHECK(back(i, l) == doctest::Approx(v(i, l)).epsilon(1e-15));
    v(0, 1) = 0.0;
    try {
        log_transform(MaskedMatrix(v, m));
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("y2") != std::string::npos);
    }
}

TEST_CASE("support AUC") {
    Matrix truth = Matrix::Identity(3, 3);
    truth(0, 1) = truth(1, 0) = 0.5;
    Matrix est = Matrix::Identity(3, 3);
    est(0, 1) = est(1, 0) = -0.2;
    CHECK(support_auc(est, truth) == 1.0);
    est(1, 2) = est(2, 1) = 0.3;
    CHECK(support_auc(est, truth) == 0.5);
    est(0, 2) = est(2, 0) = 0.2;
    CHECK(support_auc(est, truth) == doctest::Approx(0.25));
    CHECK_THROWS_AS(support_auc(est, Matrix::Identity(3, 3)), Error);
}

TEST_CASE("paths are deterministic and parallel sweeps match sequential ones") {
    const SyntheticData sim = family(4);
    const SplitResult s = train_test_split(sim.data, 0.8, 1);
    const BaselineResult base = run_baseline(s.data, {});
    const Dataset tr = s.data.train();
    const Lambda2Matrix L = build_lambda2_adjusted(tr.X, tr.Y, base.lambda_train, 1.0);
    const std::vector<double> grid = lambda1_grid(0.01, 1.0, 8);
    const SmrmConfig cfg;
    const PathResult a = run_path(s.data, rescale(L, 0.5), grid, cfg, base.mse_test);
    const PathResult b = run_path(s.data, rescale(L, 0.5), grid, cfg, base.mse_test);
    REQUIRE(a.points.size() == 8);
    for (std::size_t k = 0; k < 8; ++k) {
        CHECK(a.points[k].objective_trace == b.points[k].objective_trace);
        CHECK(a.points[k].report.mse_tilde_smrm == b.points[k].report.mse_tilde_smrm);
        CHECK(a.points[k].lambda1 == grid[k]);
    }
    const std::vector<PathResult> par = run_sweep(s.data, L, {1.0, 0.5, 0.2}, grid, cfg, base.mse_test, Scale::raw, 3);
    REQUIRE(par.size() == 3);
    CHECK(par[1].r == 0.5);
    for (std::size_t k = 0; k < 8; ++k) CHECK(par[1].points[k].objective_trace == a.points[k].objective_trace);
    CHECK_THROWS_AS(run_path(s.data, L, {0.1, 0.2}, cfg, base.mse_test), Error);
}
