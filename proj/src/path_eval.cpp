#include "smrm/path_eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "smrm/random.hpp"

namespace smrm {

SplitResult train_test_split(const Dataset& data, double ratio, std::uint64_t seed, int max_retries) {
    data.validate();
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "split ratio must lie strictly between 0 and 1");
    }
    const Index n = data.n();
    // Floor, with a small guard so that e.g. 0.29 * 100 lands on 29.
    const auto n_train = static_cast<Index>(std::floor(ratio * static_cast<double>(n) + 1e-9));
    if (n_train < 1 || n_train >= n) {
        throw Error(ErrorCode::split_unsatisfiable,
                    "split ratio leaves an empty train or test set for n = " + std::to_string(n));
    }

    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        const std::uint64_t sub_seed = seed + static_cast<std::uint64_t>(attempt);
        std::vector<Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Index{0});
        Rng rng(sub_seed);
        seeded_shuffle(order, rng);

        std::vector<SplitTag> tags(static_cast<std::size_t>(n), SplitTag::test);
        for (Index k = 0; k < n_train; ++k) tags[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = SplitTag::train;

        bool ok = true;
        for (Index l = 0; l < data.q() && ok; ++l) {
            bool seen = false;
            for (Index i = 0; i < n && !seen; ++i) {
                seen = tags[static_cast<std::size_t>(i)] == SplitTag::train && data.Y.observed(i, l);
            }
            ok = seen;
        }
        if (ok) {
            SplitResult out;
            out.data = data;
            out.data.split = std::move(tags);
            out.retries = attempt;
            out.seed_used = sub_seed;
            return out;
        }
    }
    throw Error(ErrorCode::split_unsatisfiable,
                "no split with an observed training entry in every response after " +
                    std::to_string(max_retries) + " retries");
}

std::string_view to_string(Lambda2Mode mode) {
    return mode == Lambda2Mode::uniform ? "uniform" : "adjusted";
}

Lambda2Mode parse_lambda2_mode(std::string_view text) {
    if (text == "uniform") return Lambda2Mode::uniform;
    if (text == "adjusted") return Lambda2Mode::adjusted;
    throw Error(ErrorCode::invalid_argument, "lambda2 mode must be 'uniform' or 'adjusted'");
}

Vector Lambda2Matrix::base_row() const {
    return a.size() == lambda_train.size() ? Vector(lambda_train.cwiseProduct(a)) : lambda_train;
}

namespace {

Matrix replicate_row(const Vector& row, double r, Index p) {
    Matrix out(p, row.size());
    for (Index j = 0; j < p; ++j) out.row(j) = r * row.transpose();
    return out;
}

void check_lambda_train(const Vector& lambda_train, double r) {
    if (r == 0.0 || !std::isfinite(r)) throw Error(ErrorCode::invalid_argument, "multiplier r must be nonzero");
    for (Index l = 0; l < lambda_train.size(); ++l) {
        if (!(lambda_train(l) >= 0.0) || !std::isfinite(lambda_train(l))) {
            throw Error(ErrorCode::invalid_argument, "training penalties must be finite and >= 0");
        }
    }
}

std::vector<Index> observed_rows(const MaskedMatrix& Y, Index l) {
    std::vector<Index> rows;
    for (Index i = 0; i < Y.rows(); ++i) {
        if (Y.observed(i, l)) rows.push_back(i);
    }
    return rows;
}

}  // namespace

Lambda2Matrix build_lambda2_uniform(const Vector& lambda_train, double r, Index p) {
    check_lambda_train(lambda_train, r);
    if (p < 1) throw Error(ErrorCode::invalid_argument, "need at least one predictor");
    Lambda2Matrix out;
    out.mode = Lambda2Mode::uniform;
    out.r = r;
    out.lambda_train = lambda_train;
    out.values = replicate_row(lambda_train, r, p);
    return out;
}

Lambda2Matrix build_lambda2_adjusted(const Matrix& X_train, const MaskedMatrix& Y_train, const Vector& lambda_train,
                                     double r, const LassoOptions& options) {
    check_lambda_train(lambda_train, r);
    if (X_train.rows() != Y_train.rows() || lambda_train.size() != Y_train.cols()) {
        throw Error(ErrorCode::dimension_mismatch, "build_lambda2_adjusted: inconsistent dimensions");
    }
    const Index q = Y_train.cols();
    Lambda2Matrix out;
    out.mode = Lambda2Mode::adjusted;
    out.r = r;
    out.lambda_train = lambda_train;
    out.a.resize(q);
    for (Index l = 0; l < q; ++l) {
        const std::vector<Index> rows = observed_rows(Y_train, l);
        const std::string& name = Y_train.column_names()[static_cast<std::size_t>(l)];
        if (rows.size() < 2) {
            throw Error(ErrorCode::invalid_argument, "response '" + name + "' needs >= 2 observed training entries");
        }
        const Matrix X = X_train(rows, Eigen::all);
        const Vector y = Y_train.values()(rows, l);
        const LassoFit fit = lasso_fit(X, y, lambda_train(l), options);
        const double t = (y - lasso_predict(fit, X)).squaredNorm() / static_cast<double>(rows.size());
        if (!(t > 0.0)) {
            throw Error(ErrorCode::degenerate_fit,
                        "response '" + name + "' is fitted exactly by the lasso; its variance weight is undefined");
        }
        out.a(l) = 1.0 / t;
    }
    out.values = replicate_row(out.base_row(), r, X_train.cols());
    return out;
}

Lambda2Matrix rescale(const Lambda2Matrix& base, double r) {
    check_lambda_train(base.lambda_train, r);
    Lambda2Matrix out = base;
    out.r = r;
    out.values = replicate_row(base.base_row(), r, base.values.rows());
    return out;
}

std::vector<double> lambda1_grid(double low, double high, int n_points) {
    if (!(low > 0.0 && low < high) || !std::isfinite(high) || n_points < 2) {
        throw Error(ErrorCode::invalid_argument, "lambda1 grid needs 0 < low < high and at least 2 points");
    }
    std::vector<double> grid(static_cast<std::size_t>(n_points));
    const double lh = std::log(high);
    const double ll = std::log(low);
    for (int k = 0; k < n_points; ++k) {
        grid[static_cast<std::size_t>(k)] = std::exp(lh + (ll - lh) * static_cast<double>(k) / (n_points - 1));
    }
    grid.front() = high;
    grid.back() = low;
    return grid;
}

std::vector<double> default_r_values() { return {3, 2, 1, 0.75, 0.5, 0.225, 0.2, 0.175, 0.1}; }

BaselineResult run_baseline(const Dataset& split_data, const BaselineConfig& config) {
    split_data.validate();
    const Dataset train = split_data.train();
    const Dataset test = split_data.test();
    const Index q = split_data.q();
    BaselineResult out;
    out.names = split_data.Y.column_names();
    out.lambda_train.resize(q);
    out.mse_test.resize(q);
    out.mse_train.resize(q);

    for (Index l = 0; l < q; ++l) {
        const std::vector<Index> rows = observed_rows(train.Y, l);
        const Matrix X = train.X(rows, Eigen::all);
        const Vector y = train.Y.values()(rows, l);
        const std::vector<double> grid = lasso_default_grid(X, y, config.grid_points, config.grid_ratio);
        LassoCvResult cv = lasso_cv(X, y, grid, config.folds, config.seed, config.lasso);
        LassoFit fit = lasso_fit(X, y, cv.best_lambda, config.lasso);
        out.lambda_train(l) = cv.best_lambda;
        out.mse_train(l) = (y - lasso_predict(fit, X)).squaredNorm() / static_cast<double>(y.size());

        // Scored exactly as evaluate_predictions scores, so the lasso normalises to 1.
        const Vector pred = lasso_predict(fit, test.X);
        out.mse_test(l) = observed_mse(pred, test.Y, l);
        out.fits.push_back(std::move(fit));
        out.cv.push_back(std::move(cv));
    }
    return out;
}

std::string_view to_string(Scale scale) { return scale == Scale::raw ? "raw" : "log"; }

Scale parse_scale(std::string_view text) {
    if (text == "raw") return Scale::raw;
    if (text == "log") return Scale::log;
    throw Error(ErrorCode::invalid_argument, "scale must be 'raw' or 'log'");
}

double observed_mse(const Vector& predictions, const MaskedMatrix& Y, Index l) {
    double sse = 0.0;
    Index count = 0;
    for (Index i = 0; i < Y.rows(); ++i) {
        if (!Y.observed(i, l)) continue;
        const double e = Y(i, l) - predictions(i);
        sse += e * e;
        ++count;
    }
    return count == 0 ? std::numeric_limits<double>::quiet_NaN() : sse / static_cast<double>(count);
}

EvalReport evaluate_predictions(const Matrix& predictions, const MaskedMatrix& Y_test,
                                const Vector& lasso_reference_mse) {
    const Index q = Y_test.cols();
    if (predictions.rows() != Y_test.rows() || predictions.cols() != q || lasso_reference_mse.size() != q) {
        throw Error(ErrorCode::dimension_mismatch, "evaluate: inconsistent dimensions");
    }
    EvalReport report;
    report.per_response_mse_lasso = lasso_reference_mse;
    report.per_response_mse_smrm = Vector::Constant(q, std::numeric_limits<double>::quiet_NaN());
    report.included.assign(static_cast<std::size_t>(q), false);
    for (Index l = 0; l < q; ++l) {
        const double mse = observed_mse(predictions.col(l), Y_test, l);
        if (std::isnan(mse)) continue;
        const double ref = lasso_reference_mse(l);
        if (!(ref > 0.0) || !std::isfinite(ref)) {
            throw Error(ErrorCode::invalid_argument,
                        "reference MSE for '" + Y_test.column_names()[static_cast<std::size_t>(l)] +
                            "' must be positive");
        }
        report.per_response_mse_smrm(l) = mse;
        report.included[static_cast<std::size_t>(l)] = true;
        report.mse_tilde_lasso += ref / ref;
        report.mse_tilde_smrm += mse / ref;
        ++report.q_effective;
    }
    return report;
}

EvalReport evaluate(const SmrmFit& fit, const Dataset& test, const Vector& lasso_reference_mse, Scale scale) {
    EvalReport report = evaluate_predictions(fit.params.predict(test.X), test.Y, lasso_reference_mse);
    report.correlation_matrix = precision_to_correlation(fit.params.K);
    report.scale = scale;
    return report;
}

EvalReport evaluate(const std::vector<LassoFit>& fits, const Dataset& test, const Vector& lasso_reference_mse,
                    Scale scale) {
    if (static_cast<Index>(fits.size()) != test.q()) {
        throw Error(ErrorCode::dimension_mismatch, "evaluate: need one lasso fit per response");
    }
    Matrix pred(test.n(), test.q());
    for (Index l = 0; l < test.q(); ++l) pred.col(l) = lasso_predict(fits[static_cast<std::size_t>(l)], test.X);
    EvalReport report = evaluate_predictions(pred, test.Y, lasso_reference_mse);
    report.scale = scale;
    return report;
}

double support_auc(const Matrix& K_hat, const Matrix& K_true) {
    if (K_hat.rows() != K_true.rows() || K_hat.cols() != K_true.cols() || K_hat.rows() != K_hat.cols()) {
        throw Error(ErrorCode::dimension_mismatch, "support_auc: shapes differ");
    }
    std::vector<double> pos, neg;
    for (Index a = 0; a < K_true.rows(); ++a) {
        for (Index b = a + 1; b < K_true.cols(); ++b) {
            (K_true(a, b) != 0.0 ? pos : neg).push_back(std::abs(K_hat(a, b)));
        }
    }
    if (pos.empty() || neg.empty()) {
        throw Error(ErrorCode::invalid_argument, "support_auc: true support must contain both edges and non-edges");
    }
    double wins = 0.0;
    for (double s : pos) {
        for (double t : neg) wins += s > t ? 1.0 : (s == t ? 0.5 : 0.0);
    }
    return wins / static_cast<double>(pos.size() * neg.size());
}

MaskedMatrix log_transform(const MaskedMatrix& Y) {
    Matrix v = Y.values();
    for (Index i = 0; i < Y.rows(); ++i) {
        for (Index l = 0; l < Y.cols(); ++l) {
            if (!Y.observed(i, l)) continue;
            if (!(v(i, l) > 0.0)) {
                throw Error(ErrorCode::invalid_argument,
                            "log transform needs positive values; row " + std::to_string(i + 1) + ", column '" +
                                Y.column_names()[static_cast<std::size_t>(l)] + "' is " + std::to_string(v(i, l)));
            }
            v(i, l) = std::log(v(i, l));
        }
    }
    return MaskedMatrix(std::move(v), Y.mask(), Y.column_names());
}

Matrix exp_back(const Matrix& predictions) { return predictions.array().exp().matrix(); }

std::size_t PathResult::best_index() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < points.size(); ++k) {
        if (points[k].report.mse_tilde_smrm < points[best].report.mse_tilde_smrm) best = k;
    }
    return best;
}

PathResult run_path(const Dataset& split_data, const Lambda2Matrix& lambda2, const std::vector<double>& grid,
                    const SmrmConfig& defaults, const Vector& lasso_reference_mse, Scale scale) {
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] < grid[k - 1])) {
            throw Error(ErrorCode::invalid_argument, "run_path: lambda1 grid must be strictly descending");
        }
    }
    const Dataset train = split_data.train();
    const Dataset test = split_data.test();
    PathResult out;
    out.r = lambda2.r;
    out.mode = lambda2.mode;
    out.points.reserve(grid.size());

    SmrmConfig config = defaults;
    config.lambda2 = lambda2.values;
    std::optional<ModelParams> warm;
    for (double lambda1 : grid) {
        config.lambda1 = lambda1;
        SmrmFit fit = smrm_fit(train, config, warm);
        PathPoint point;
        point.lambda1 = lambda1;
        point.report = evaluate(fit, test, lasso_reference_mse, scale);
        point.report.lambda1 = lambda1;
        point.report.r = lambda2.r;
        point.em_iters = fit.em_iters;
        point.converged = fit.converged;
        point.objective_trace = std::move(fit.objective_trace);
        point.params = fit.params;
        warm = std::move(fit.params);
        out.points.push_back(std::move(point));
    }
    return out;
}

std::vector<PathResult> run_sweep(const Dataset& split_data, const Lambda2Matrix& base,
                                  const std::vector<double>& r_values, const std::vector<double>& grid,
                                  const SmrmConfig& defaults, const Vector& lasso_reference_mse, Scale scale,
                                  int threads) {
    std::vector<PathResult> results(r_values.size());
    std::vector<std::exception_ptr> errors(r_values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < r_values.size(); k = next++) {
            try {
                results[k] = run_path(split_data, rescale(base, r_values[k]), grid, defaults, lasso_reference_mse, scale);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(r_values.size())));
    if (n_workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return results;
}

}  // namespace smrm
