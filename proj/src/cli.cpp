#include "smrm/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <utility>

namespace smrm {

// One line per config key: field, help text.
#define SMRM_CONFIG_FIELDS(X)                                                         \
    X(input, "input CSV (header row, predictors complete)")                           \
    X(output, "output directory")                                                     \
    X(missing_token, "cell text marking a missing response")                          \
    X(response_columns, "comma-separated response column names")                      \
    X(predictor_columns, "comma-separated predictor column names")                    \
    X(scale, "modeling scale: raw or log")                                            \
    X(split_ratio, "fraction of rows used for training")                              \
    X(split_seed, "seed of the train/test shuffle")                                   \
    X(lambda1, "precision penalty for fit and simulate")                              \
    X(lambda1_high, "largest lambda1 of the path grid")                               \
    X(lambda1_low, "smallest lambda1 of the path grid")                               \
    X(lambda1_points, "number of lambda1 grid points")                                \
    X(r, "coefficient penalty multiplier for fit and simulate")                       \
    X(r_values, "comma-separated multipliers swept by path")                          \
    X(lambda2_mode, "coefficient penalty construction: uniform or adjusted")          \
    X(cv_folds, "lasso cross-validation folds")                                       \
    X(cv_seed, "seed of the fold assignment")                                         \
    X(cv_grid_points, "lasso lambda grid size")                                       \
    X(cv_grid_ratio, "smallest / largest lasso lambda")                               \
    X(lasso_tol, "lasso coordinate descent tolerance")                                \
    X(epsilon, "EM stopping threshold on sum |delta B|")                              \
    X(max_em_iter, "EM iteration cap")                                                \
    X(inner_tol, "coefficient step tolerance")                                        \
    X(inner_max_iter, "coefficient step sweep cap")                                   \
    X(glasso_tol, "precision step tolerance")                                         \
    X(glasso_max_iter, "precision step sweep cap")                                    \
    X(threads, "worker threads for the r sweep")                                      \
    X(svg, "also render heatmaps as SVG")                                             \
    X(sim_n, "synthetic rows")                                                        \
    X(sim_p, "synthetic predictors")                                                  \
    X(sim_q, "synthetic responses")                                                   \
    X(sim_coef_sparsity, "fraction of zero coefficients")                             \
    X(sim_edges, "nonzero off-diagonal pairs of the true precision")                  \
    X(sim_edge_min, "smallest edge magnitude")                                        \
    X(sim_edge_max, "largest edge magnitude")                                         \
    X(sim_diag_margin, "diagonal dominance margin")                                   \
    X(sim_noise, "error scale")                                                       \
    X(sim_mechanism, "none, mcar or mar")                                             \
    X(sim_missing_rate, "expected missing fraction")                                  \
    X(sim_seed, "synthetic generator seed")

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

json config_json(const RunConfig& c) {
    json j;
#define SMRM_TO_JSON(field, help) j[#field] = c.field;
    SMRM_CONFIG_FIELDS(SMRM_TO_JSON)
#undef SMRM_TO_JSON
    return j;
}

json conventions(const RunConfig& c) {
    return {{"lambda1_penalty", "sum over ordered pairs l != l' of |K_ll'|; diagonal unpenalized"},
            {"lambda2_penalty", "2 * sum_jl lambda2_jl |B_jl|"},
            {"lasso_objective", "(1/n) ||y - b0 - X b||^2 + lambda ||b||_1"},
            {"mse", "observed test entries only"},
            {"mse_tilde", "sum_l MSE_l / MSE_l(lasso)"},
            {"scale", c.scale},
            {"lambda2_mode", c.lambda2_mode}};
}

std::string comment_line(const RunConfig& c, const std::string& sub) {
    std::ostringstream s;
    s << "smrm " << kVersion << " " << sub << " split_seed=" << c.split_seed << " cv_seed=" << c.cv_seed;
    if (sub == "simulate") s << " sim_seed=" << c.sim_seed;
    s << " lambda1=ordered-pairs lambda2_factor=2 lambda2_mode=" << c.lambda2_mode << " scale=" << c.scale;
    return s.str();
}

std::vector<std::string> names_or_default(const std::vector<std::string>& names, Index count, const std::string& stem) {
    if (!names.empty()) return names;
    std::vector<std::string> out;
    for (Index k = 0; k < count; ++k) out.push_back(stem + std::to_string(k + 1));
    return out;
}

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(item));
    return out;
}

/// Collects outputs of one run and renders them with a shared header.
class Outputs {
public:
    Outputs(const RunConfig& c, std::string sub) : dir_(c.output), comment_(comment_line(c, sub)) {}

    void table(const std::string& name, const CsvTable& t) {
        write_csv_table(dir_ / name, t, comment_);
        files_.push_back(dir_ / name);
    }
    void text(const std::string& name, const std::string& contents) {
        write_file_atomic(dir_ / name, contents);
        files_.push_back(dir_ / name);
    }
    void heatmap(const RunConfig& c, const std::string& stem, const Matrix& R, const std::vector<std::string>& labels,
                 const std::string& title) {
        table(stem + ".csv", matrix_table(R, labels, labels));
        if (c.svg) {
            std::string svg = heatmap_svg(R, labels, title);
            svg.insert(svg.find('\n') + 1, "<!-- " + comment_ + " -->\n");
            text(stem + ".svg", svg);
        }
    }
    const fs::path& dir() const { return dir_; }
    std::vector<fs::path>& files() { return files_; }

private:
    fs::path dir_;
    std::string comment_;
    std::vector<fs::path> files_;
};

struct Prepared {
    Dataset raw;
    Dataset modeled;
    Scale scale = Scale::raw;
};

Prepared load_input(const RunConfig& c) {
    if (c.input.empty()) throw Error(ErrorCode::invalid_argument, "no input file given (key 'input')");
    Prepared out;
    out.raw = ingest_csv(c.input, c.ingest());
    out.scale = parse_scale(c.scale);
    out.modeled = out.raw;
    if (out.scale == Scale::log) out.modeled.Y = log_transform(out.raw.Y);
    return out;
}

Lambda2Matrix lambda2_for(const RunConfig& c, const Dataset& split_data, const BaselineResult& base, double r) {
    const Dataset train = split_data.train();
    if (parse_lambda2_mode(c.lambda2_mode) == Lambda2Mode::uniform) {
        return build_lambda2_uniform(base.lambda_train, r, split_data.p());
    }
    return build_lambda2_adjusted(train.X, train.Y, base.lambda_train, r, c.baseline().lasso);
}

json split_json(const SplitResult& s) {
    return {{"seed_used", s.seed_used},
            {"retries", s.retries},
            {"n_train", s.data.rows_with(SplitTag::train).size()},
            {"n_test", s.data.rows_with(SplitTag::test).size()}};
}

json vector_json(const Vector& v) {
    json a = json::array();
    for (Index k = 0; k < v.size(); ++k) {
        if (std::isfinite(v(k))) a.push_back(v(k));
        else a.push_back(nullptr);
    }
    return a;
}

CsvTable baseline_table(const BaselineResult& b) {
    CsvTable t;
    t.header = {"name", "lambda_train", "mse"};
    for (std::size_t l = 0; l < b.names.size(); ++l) {
        const auto k = static_cast<Index>(l);
        t.rows.push_back({b.names[l], format_double(b.lambda_train(k)), format_double(b.mse_test(k))});
    }
    return t;
}

CsvTable lambda2_table(const Lambda2Matrix& L, const std::vector<std::string>& names) {
    CsvTable t;
    t.header = {"name", "lambda_train", "a", "base"};
    const Vector base = L.base_row();
    for (std::size_t l = 0; l < names.size(); ++l) {
        const auto k = static_cast<Index>(l);
        t.rows.push_back({names[l], format_double(L.lambda_train(k)),
                          L.a.size() ? format_double(L.a(k)) : std::string("1"), format_double(base(k))});
    }
    return t;
}

CsvTable coefficient_table(const ModelParams& params, const std::vector<std::string>& predictors,
                           const std::vector<std::string>& responses) {
    std::vector<std::string> rows{"(intercept)"};
    rows.insert(rows.end(), predictors.begin(), predictors.end());
    return matrix_table(params.stacked(), rows, responses, "coefficient");
}

CsvTable evaluation_table(const EvalReport& rep, const std::vector<std::string>& names) {
    CsvTable t;
    t.header = {"name", "mse_lasso", "mse_smrm", "ratio", "included"};
    for (std::size_t l = 0; l < names.size(); ++l) {
        const auto k = static_cast<Index>(l);
        const double ratio = rep.per_response_mse_smrm(k) / rep.per_response_mse_lasso(k);
        t.rows.push_back({names[l], format_double(rep.per_response_mse_lasso(k)),
                          format_double(rep.per_response_mse_smrm(k)), format_double(ratio),
                          rep.included[l] ? "true" : "false"});
    }
    return t;
}

json report_json(const EvalReport& rep) {
    return {{"mse_tilde_smrm", rep.mse_tilde_smrm},
            {"mse_tilde_lasso", rep.mse_tilde_lasso},
            {"q_effective", rep.q_effective},
            {"scale", std::string(to_string(rep.scale))}};
}

Index offdiag_count(const Matrix& K) { return offdiagonal_nonzeros(K); }

// ---------------------------------------------------------------------------

void cmd_missingness(const RunConfig& c, Outputs& out, json& meta) {
    const Dataset data = ingest_csv(c.input, c.ingest());
    const Vector ratio = data.Y.missing_ratio();
    CsvTable cols;
    cols.header = {"name", "observed", "missing", "missing_ratio"};
    for (Index l = 0; l < data.q(); ++l) {
        const Index obs = data.Y.observed_count(l);
        cols.rows.push_back({data.Y.column_names()[static_cast<std::size_t>(l)], std::to_string(obs),
                             std::to_string(data.n() - obs), format_double(ratio(l))});
    }
    out.table("missingness_columns.csv", cols);

    CsvTable rows;
    rows.header = {"row", "missing", "missing_ratio"};
    for (Index i = 0; i < data.n(); ++i) {
        const Index miss = data.q() - data.Y.mask().row(i).count();
        rows.rows.push_back({std::to_string(i + 1), std::to_string(miss),
                             format_double(static_cast<double>(miss) / static_cast<double>(data.q()))});
    }
    out.table("missingness_rows.csv", rows);

    const double total = 1.0 - static_cast<double>(data.Y.observed_count()) /
                                   static_cast<double>(data.n() * data.q());
    meta["summary"] = {{"n", data.n()}, {"p", data.p()}, {"q", data.q()}, {"total_missing_ratio", total}};
}

void cmd_baseline(const RunConfig& c, Outputs& out, json& meta) {
    const Prepared in = load_input(c);
    const SplitResult split = train_test_split(in.modeled, c.split_ratio, c.split_seed);
    const BaselineResult base = run_baseline(split.data, c.baseline());
    out.table("baseline.csv", baseline_table(base));

    CsvTable detail;
    detail.header = {"name", "lambda_train", "mse_test", "mse_train", "cv_best_index", "cv_error"};
    for (std::size_t l = 0; l < base.names.size(); ++l) {
        const auto k = static_cast<Index>(l);
        const auto& cv = base.cv[l];
        detail.rows.push_back({base.names[l], format_double(base.lambda_train(k)), format_double(base.mse_test(k)),
                               format_double(base.mse_train(k)), std::to_string(cv.best_index),
                               format_double(cv.cv_errors[cv.best_index])});
    }
    out.table("baseline_detail.csv", detail);

    const EvalReport self = evaluate(base.fits, split.data.test(), base.mse_test, in.scale);
    meta["split"] = split_json(split);
    meta["summary"] = report_json(self);
    meta["summary"]["lambda_train"] = vector_json(base.lambda_train);
    meta["summary"]["mse_test"] = vector_json(base.mse_test);
}

void cmd_fit(const RunConfig& c, Outputs& out, json& meta) {
    const Prepared in = load_input(c);
    const SplitResult split = train_test_split(in.modeled, c.split_ratio, c.split_seed);
    const BaselineResult base = run_baseline(split.data, c.baseline());
    const Lambda2Matrix L = lambda2_for(c, split.data, base, c.r);

    SmrmConfig solver = c.solver();
    solver.lambda1 = c.lambda1;
    solver.lambda2 = L.values;
    const SmrmFit fit = smrm_fit(split.data, solver);
    const Dataset test = split.data.test();
    const EvalReport rep = evaluate(fit, test, base.mse_test, in.scale);

    const auto& responses = split.data.Y.column_names();
    const auto predictors = names_or_default(split.data.predictor_names, split.data.p(), "x");
    out.table("baseline.csv", baseline_table(base));
    out.table("lambda2.csv", lambda2_table(L, responses));
    out.table("coefficients.csv", coefficient_table(fit.params, predictors, responses));
    out.table("precision.csv", matrix_table(fit.params.K, responses, responses));
    out.heatmap(c, "correlation", precision_to_correlation(fit.params.K), responses, "correlation");
    out.heatmap(c, "partial_correlation", precision_to_partial_correlation(fit.params.K), responses,
                "partial correlation");
    out.table("evaluation.csv", evaluation_table(rep, responses));

    CsvTable trace;
    trace.header = {"iteration", "objective", "coefficient_change"};
    for (std::size_t k = 0; k < fit.objective_trace.size(); ++k) {
        trace.rows.push_back({std::to_string(k), format_double(fit.objective_trace[k]),
                              k == 0 ? std::string("") : format_double(fit.coefficient_change[k - 1])});
    }
    out.table("trace.csv", trace);

    const std::vector<Index> train_rows = split.data.rows_with(SplitTag::train);
    std::vector<std::string> labels;
    for (Index i : train_rows) labels.push_back(std::to_string(i + 1));
    out.table("imputed.csv", matrix_table(fit.Y_imputed, labels, responses, "row"));
    if (in.scale == Scale::log) {
        out.table("imputed_original_scale.csv", matrix_table(exp_back(fit.Y_imputed), labels, responses, "row"));
    }

    meta["split"] = split_json(split);
    meta["summary"] = report_json(rep);
    meta["summary"]["em_iters"] = fit.em_iters;
    meta["summary"]["converged"] = fit.converged;
    meta["summary"]["offdiagonal_pairs"] = offdiag_count(fit.params.K) / 2;
}

void cmd_path(const RunConfig& c, Outputs& out, json& meta, std::ostream& log) {
    const Prepared in = load_input(c);
    const SplitResult split = train_test_split(in.modeled, c.split_ratio, c.split_seed);
    const BaselineResult base = run_baseline(split.data, c.baseline());
    const Lambda2Matrix L = lambda2_for(c, split.data, base, 1.0);
    const std::vector<double> grid = lambda1_grid(c.lambda1_low, c.lambda1_high, c.lambda1_points);
    const std::vector<double> rs = parse_doubles(c.r_values);
    if (rs.empty()) throw Error(ErrorCode::invalid_argument, "r_values is empty");
    log << "path: " << rs.size() << " r values x " << grid.size() << " lambda1 points\n";

    const std::vector<PathResult> paths = run_sweep(split.data, L, rs, grid, c.solver(), base.mse_test, in.scale, c.threads);
    const auto& responses = split.data.Y.column_names();

    CsvTable curve;
    curve.header = {"r", "lambda1", "log10_lambda1", "mse_tilde_smrm", "mse_tilde_lasso", "q_effective", "em_iters",
                    "converged", "offdiagonal_pairs"};
    CsvTable per;
    per.header = {"r", "lambda1"};
    per.header.insert(per.header.end(), responses.begin(), responses.end());
    CsvTable best;
    best.header = {"r", "best_lambda1", "best_mse_tilde_smrm", "mse_tilde_lasso"};
    json best_json = json::array();

    for (const PathResult& path : paths) {
        for (const PathPoint& pt : path.points) {
            curve.rows.push_back({format_double(path.r), format_double(pt.lambda1), format_double(std::log10(pt.lambda1)),
                                  format_double(pt.report.mse_tilde_smrm), format_double(pt.report.mse_tilde_lasso),
                                  std::to_string(pt.report.q_effective), std::to_string(pt.em_iters),
                                  pt.converged ? "true" : "false", std::to_string(offdiag_count(pt.params.K) / 2)});
            std::vector<std::string> row{format_double(path.r), format_double(pt.lambda1)};
            for (Index l = 0; l < pt.report.per_response_mse_smrm.size(); ++l) {
                row.push_back(format_double(pt.report.per_response_mse_smrm(l)));
            }
            per.rows.push_back(std::move(row));
        }
        const PathPoint& b = path.points[path.best_index()];
        best.rows.push_back({format_double(path.r), format_double(b.lambda1), format_double(b.report.mse_tilde_smrm),
                             format_double(b.report.mse_tilde_lasso)});
        best_json.push_back({{"r", path.r}, {"lambda1", b.lambda1}, {"mse_tilde_smrm", b.report.mse_tilde_smrm}});
        const std::string stem = "r" + format_double(path.r);
        out.heatmap(c, "partial_correlation_" + stem, precision_to_partial_correlation(b.params.K), responses,
                    "partial correlation, r = " + format_double(path.r));
        out.heatmap(c, "correlation_" + stem, b.report.correlation_matrix, responses,
                    "correlation, r = " + format_double(path.r));
    }
    out.table("path.csv", curve);
    out.table("path_per_response.csv", per);
    out.table("path_best.csv", best);
    out.table("baseline.csv", baseline_table(base));
    out.table("lambda2.csv", lambda2_table(L, responses));

    meta["split"] = split_json(split);
    meta["summary"] = {{"grid_points", grid.size()}, {"best", best_json}};
}

void cmd_simulate(const RunConfig& c, Outputs& out, json& meta) {
    const SyntheticData sim = generate_synthetic(c.synthetic());
    const auto& responses = sim.data.Y.column_names();
    const auto& predictors = sim.data.predictor_names;

    const fs::path data_path = out.dir() / "data.csv";
    write_dataset_csv(data_path, sim.data, c.missing_token, comment_line(c, "simulate"));
    out.files().push_back(data_path);
    out.table("truth_coefficients.csv", coefficient_table(sim.truth, predictors, responses));
    out.table("truth_precision.csv", matrix_table(sim.truth.K, responses, responses));

    std::string pred_list;
    for (const auto& name : predictors) pred_list += (pred_list.empty() ? "" : ",") + name;
    std::ostringstream conf;
    conf << "# configuration for fitting the generated data\n"
         << "input=" << fs::absolute(data_path).string() << "\n"
         << "missing_token=" << c.missing_token << "\n"
         << "predictor_columns=" << pred_list << "\n";
    out.text("fit.conf", conf.str());

    const SplitResult split = train_test_split(sim.data, c.split_ratio, c.split_seed);
    const BaselineResult base = run_baseline(split.data, c.baseline());
    const Lambda2Matrix L = lambda2_for(c, split.data, base, c.r);
    SmrmConfig solver = c.solver();
    solver.lambda1 = c.lambda1;
    solver.lambda2 = L.values;
    const SmrmFit fit = smrm_fit(split.data, solver);
    const EvalReport rep = evaluate(fit, split.data.test(), base.mse_test, Scale::raw);

    const Matrix dB = fit.params.B - sim.truth.B;
    const double k_err = (fit.params.K - sim.truth.K).norm() / sim.truth.K.norm();
    CsvTable rec;
    rec.header = {"metric", "value"};
    rec.rows.push_back({"missing_ratio", format_double(sim.data.Y.missing_ratio().mean())});
    rec.rows.push_back({"coef_max_abs_error", format_double(dB.cwiseAbs().maxCoeff())});
    rec.rows.push_back({"coef_rmse", format_double(std::sqrt(dB.squaredNorm() / static_cast<double>(dB.size())))});
    rec.rows.push_back({"precision_rel_frobenius_error", format_double(k_err)});
    const Index true_edges = offdiag_count(sim.truth.K) / 2;
    const Index pairs = sim.data.q() * (sim.data.q() - 1) / 2;
    if (true_edges > 0 && true_edges < pairs) {
        rec.rows.push_back({"support_auc", format_double(support_auc(fit.params.K, sim.truth.K))});
    }
    rec.rows.push_back({"mse_tilde_smrm", format_double(rep.mse_tilde_smrm)});
    rec.rows.push_back({"mse_tilde_lasso", format_double(rep.mse_tilde_lasso)});
    out.table("recovery.csv", rec);
    out.table("coefficients.csv", coefficient_table(fit.params, predictors, responses));
    out.table("precision.csv", matrix_table(fit.params.K, responses, responses));

    meta["split"] = split_json(split);
    meta["summary"] = report_json(rep);
    meta["summary"]["mask_retries"] = sim.retries;
    meta["summary"]["precision_rel_frobenius_error"] = k_err;
}

}  // namespace

IngestConfig RunConfig::ingest() const {
    IngestConfig cfg;
    cfg.missing_token = missing_token;
    cfg.response_columns = split_list(response_columns);
    cfg.predictor_columns = split_list(predictor_columns);
    return cfg;
}

SmrmConfig RunConfig::solver() const {
    SmrmConfig s;
    s.lambda1 = lambda1;
    s.epsilon = epsilon;
    s.max_em_iter = max_em_iter;
    s.inner_tol = inner_tol;
    s.inner_max_iter = inner_max_iter;
    s.glasso_tol = glasso_tol;
    s.glasso_max_iter = glasso_max_iter;
    return s;
}

BaselineConfig RunConfig::baseline() const {
    BaselineConfig b;
    b.folds = cv_folds;
    b.seed = cv_seed;
    b.grid_points = cv_grid_points;
    b.grid_ratio = cv_grid_ratio;
    b.lasso.tol = lasso_tol;
    return b;
}

SyntheticSpec RunConfig::synthetic() const {
    SyntheticSpec s;
    s.n = sim_n;
    s.p = sim_p;
    s.q = sim_q;
    s.coef_sparsity = sim_coef_sparsity;
    s.n_edges = sim_edges;
    s.edge_min = sim_edge_min;
    s.edge_max = sim_edge_max;
    s.diag_margin = sim_diag_margin;
    s.noise = sim_noise;
    s.mechanism = parse_mechanism(sim_mechanism);
    s.missing_rate = sim_missing_rate;
    s.seed = sim_seed;
    return s;
}

void RunConfig::validate(const std::string& subcommand) const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::invalid_argument, msg); };
    if (output.empty()) fail("output directory must be set");
    if (subcommand != "simulate" && input.empty()) fail("input must be set for " + subcommand);
    parse_scale(scale);
    parse_lambda2_mode(lambda2_mode);
    const auto resp = split_list(response_columns);
    const auto pred = split_list(predictor_columns);
    for (const auto& name : resp) {
        if (std::find(pred.begin(), pred.end(), name) != pred.end()) {
            fail("column '" + name + "' listed as both predictor and response");
        }
    }
    if (!(lambda1 >= 0)) fail("lambda1 must be nonnegative");
    if (!(r >= 0)) fail("r must be nonnegative");
    if (!(lambda1_low > 0 && lambda1_high > lambda1_low)) fail("need 0 < lambda1_low < lambda1_high");
    if (lambda1_points < 2) fail("lambda1_points must be at least 2");
    for (double v : parse_doubles(r_values)) {
        if (!(v >= 0)) fail("r_values must be nonnegative");
    }
    if (cv_folds < 2) fail("cv_folds must be at least 2");
    if (threads < 1) fail("threads must be at least 1");
    if (subcommand == "simulate") synthetic().validate();
}

std::vector<fs::path> run(const std::string& subcommand, const RunConfig& config, std::ostream& log) {
    config.validate(subcommand);
    fs::create_directories(config.output);
    Outputs out(config, subcommand);
    json meta;
    meta["version"] = kVersion;
    meta["subcommand"] = subcommand;
    meta["config"] = config_json(config);
    meta["conventions"] = conventions(config);

    if (subcommand == "missingness") cmd_missingness(config, out, meta);
    else if (subcommand == "baseline") cmd_baseline(config, out, meta);
    else if (subcommand == "fit") cmd_fit(config, out, meta);
    else if (subcommand == "path") cmd_path(config, out, meta, log);
    else if (subcommand == "simulate") cmd_simulate(config, out, meta);
    else throw Error(ErrorCode::invalid_argument, "unknown subcommand '" + subcommand + "'");

    json files = json::array();
    for (const auto& f : out.files()) files.push_back(f.filename().string());
    meta["outputs"] = files;
    meta["status"] = "ok";
    out.text("metadata.json", meta.dump(2) + "\n");
    return out.files();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sparse multivariate regression with missing responses"};
    app.set_version_flag("--version", std::string(kVersion));
    app.set_config("--config", "", "flat key=value configuration file");
    app.allow_config_extras(CLI::config_extras_mode::error);
    // Lists are plain comma-separated strings we split ourselves.
    app.get_config_formatter_base()->arrayDelimiter('\x1f');
    app.require_subcommand(1);

    RunConfig config;
#define SMRM_ADD_OPTION(field, help) app.add_option("--" #field, config.field, help)->capture_default_str();
    SMRM_CONFIG_FIELDS(SMRM_ADD_OPTION)
#undef SMRM_ADD_OPTION

    const std::pair<const char*, const char*> subcommands[] = {
        {"baseline", "per-response lasso with cross-validated lambda"},
        {"fit", "one EM fit at lambda1 and r"},
        {"path", "EM over the lambda1 grid for every r"},
        {"simulate", "generate synthetic data, fit it and score recovery"},
        {"missingness", "per-column and per-row missing counts"},
    };
    for (const auto& [name, help] : subcommands) {
        app.add_subcommand(name, help)->fallthrough();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        const std::vector<fs::path> files = run(sub, config, err);
        for (const auto& f : files) {
            if (!fs::exists(f)) {
                err << "missing artifact: " << f.string() << "\n";
                return 3;
            }
        }
        out << "wrote " << files.size() << " files to " << config.output << "\n";
        return 0;
    } catch (const std::exception& e) {
        json record = {{"status", "error"}, {"subcommand", sub}, {"message", e.what()}, {"version", kVersion}};
        if (const auto* se = dynamic_cast<const Error*>(&e)) record["code"] = std::string(to_string(se->code()));
        else record["code"] = "internal";
        err << "error: " << e.what() << "\n";
        try {
            fs::create_directories(config.output);
            write_file_atomic(fs::path(config.output) / "error.json", record.dump(2) + "\n");
        } catch (const std::exception&) {
            err << "could not write error record\n";
        }
        return 2;
    }
}

}  // namespace smrm
