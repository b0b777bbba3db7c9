#include "smrm/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smrm/random.hpp"

namespace smrm {
namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

void check_inputs(const Matrix& X, const Vector& y, double lambda) {
    if (X.rows() != y.size()) {
        throw Error(ErrorCode::dimension_mismatch, "lasso: X rows and y length differ");
    }
    if (X.rows() < 1) throw Error(ErrorCode::invalid_argument, "lasso: need at least one row");
    if (!X.allFinite() || !y.allFinite()) throw Error(ErrorCode::non_finite, "lasso: non-finite input");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorCode::invalid_argument, "lasso: penalty must be finite and >= 0");
    }
}

struct Centered {
    Matrix Xc;
    Vector yc;
    Vector x_mean;
    double y_mean;
    Vector col_sq;  // (1/n) ||xc_j||^2
};

Centered center(const Matrix& X, const Vector& y) {
    Centered c;
    const double n = static_cast<double>(X.rows());
    c.x_mean = X.colwise().mean().transpose();
    c.y_mean = y.mean();
    c.Xc = X.rowwise() - c.x_mean.transpose();
    c.yc = y.array() - c.y_mean;
    c.col_sq = c.Xc.colwise().squaredNorm().transpose() / n;
    return c;
}

// Evaluated from scratch in extended precision so that per-sweep traces are
// not dominated by accumulated residual drift.
double centered_objective(const Centered& c, const Vector& beta, double lambda) {
    const Index n = c.Xc.rows();
    long double loss = 0.0L;
    for (Index i = 0; i < n; ++i) {
        long double r = c.yc(i);
        for (Index j = 0; j < beta.size(); ++j) r -= static_cast<long double>(c.Xc(i, j)) * beta(j);
        loss += r * r;
    }
    long double pen = 0.0L;
    for (Index j = 0; j < beta.size(); ++j) pen += std::fabs(static_cast<long double>(beta(j)));
    return static_cast<double>(loss / n + lambda * pen);
}

double kkt_violation(const Centered& c, const Vector& beta, double lambda) {
    const double n = static_cast<double>(c.Xc.rows());
    const Vector r = c.yc - c.Xc * beta;
    const Vector grad = (2.0 / n) * (c.Xc.transpose() * r);
    double worst = 0.0;
    for (Index j = 0; j < beta.size(); ++j) {
        double v;
        if (c.col_sq(j) == 0.0) {
            v = 0.0;
        } else if (beta(j) != 0.0) {
            v = std::fabs(grad(j) - lambda * (beta(j) > 0 ? 1.0 : -1.0));
        } else {
            v = std::max(0.0, std::fabs(grad(j)) - lambda);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

LassoFit fit_centered(const Centered& c, double lambda, const LassoOptions& opt, const Vector& beta_init) {
    const Index n = c.Xc.rows();
    const Index p = c.Xc.cols();
    LassoFit fit;
    fit.lambda = lambda;
    fit.beta = beta_init.size() == p ? beta_init : Vector::Zero(p);
    for (Index j = 0; j < p; ++j) {
        if (c.col_sq(j) == 0.0) fit.beta(j) = 0.0;
    }
    Vector r = c.yc - c.Xc * fit.beta;
    const double inv_n = 1.0 / static_cast<double>(n);
    if (opt.record_objective) fit.objective_trace.push_back(centered_objective(c, fit.beta, lambda));

    for (int it = 0; it < opt.max_iter; ++it) {
        double max_step = 0.0;
        for (Index j = 0; j < p; ++j) {
            const double v = c.col_sq(j);
            if (v == 0.0) continue;
            const double old = fit.beta(j);
            const double z = inv_n * c.Xc.col(j).dot(r) + v * old;
            const double updated = soft_threshold(z, 0.5 * lambda) / v;
            if (updated != old) {
                r.noalias() -= (updated - old) * c.Xc.col(j);
                fit.beta(j) = updated;
                max_step = std::max(max_step, std::fabs(updated - old) * std::sqrt(v));
            }
        }
        fit.n_iter = it + 1;
        if (opt.record_objective) fit.objective_trace.push_back(centered_objective(c, fit.beta, lambda));
        if (max_step <= opt.tol && kkt_violation(c, fit.beta, lambda) <= opt.tol) {
            fit.converged = true;
            break;
        }
    }
    fit.beta0 = c.y_mean - c.x_mean.dot(fit.beta);
    return fit;
}

}  // namespace

LassoFit lasso_fit(const Matrix& X, const Vector& y, double lambda, const LassoOptions& options,
                   const Vector& beta_init) {
    check_inputs(X, y, lambda);
    if (beta_init.size() != 0 && beta_init.size() != X.cols()) {
        throw Error(ErrorCode::dimension_mismatch, "lasso: warm start has wrong length");
    }
    return fit_centered(center(X, y), lambda, options, beta_init);
}

std::vector<LassoFit> lasso_path(const Matrix& X, const Vector& y, const std::vector<double>& lambdas,
                                 const LassoOptions& options) {
    if (lambdas.empty()) return {};
    check_inputs(X, y, lambdas.front());
    const Centered c = center(X, y);
    std::vector<LassoFit> fits;
    fits.reserve(lambdas.size());
    Vector warm = Vector::Zero(X.cols());
    for (double lambda : lambdas) {
        if (!(lambda >= 0.0)) throw Error(ErrorCode::invalid_argument, "lasso: negative penalty in grid");
        fits.push_back(fit_centered(c, lambda, options, warm));
        warm = fits.back().beta;
    }
    return fits;
}

Vector lasso_predict(const LassoFit& fit, const Matrix& X_new) {
    if (X_new.cols() != fit.beta.size()) {
        throw Error(ErrorCode::dimension_mismatch, "lasso_predict: column count does not match fit");
    }
    Vector out = X_new * fit.beta;
    out.array() += fit.beta0;
    return out;
}

double lasso_objective(const Matrix& X, const Vector& y, double beta0, const Vector& beta, double lambda) {
    const Vector r = (y - X * beta).array() - beta0;
    return r.squaredNorm() / static_cast<double>(X.rows()) + lambda * beta.lpNorm<1>();
}

double lasso_kkt_violation(const Matrix& X, const Vector& y, const LassoFit& fit) {
    return kkt_violation(center(X, y), fit.beta, fit.lambda);
}

double lasso_lambda_max(const Matrix& X, const Vector& y) {
    const Centered c = center(X, y);
    if (c.Xc.cols() == 0) return 0.0;
    const double n = static_cast<double>(X.rows());
    return 2.0 * (c.Xc.transpose() * c.yc).cwiseAbs().maxCoeff() / n;
}

std::vector<double> lasso_default_grid(const Matrix& X, const Vector& y, int n_points, double ratio) {
    if (n_points < 1 || !(ratio > 0.0 && ratio < 1.0)) {
        throw Error(ErrorCode::invalid_argument, "lasso grid: need n_points >= 1 and 0 < ratio < 1");
    }
    double top = lasso_lambda_max(X, y);
    if (!(top > 0.0)) top = 1.0;
    std::vector<double> grid(static_cast<std::size_t>(n_points));
    const double lo = std::log(top * ratio);
    const double hi = std::log(top);
    for (int k = 0; k < n_points; ++k) {
        const double t = n_points == 1 ? 0.0 : static_cast<double>(k) / (n_points - 1);
        grid[static_cast<std::size_t>(k)] = std::exp(hi + t * (lo - hi));
    }
    grid.front() = top;
    return grid;
}

std::vector<int> fold_assignment(Index n, int k, std::uint64_t seed) {
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);
    seeded_shuffle(order, rng);
    std::vector<int> folds(static_cast<std::size_t>(n));
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
        folds[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(k));
    }
    return folds;
}

LassoCvResult lasso_cv(const Matrix& X, const Vector& y, const std::vector<double>& lambdas, int k,
                       std::uint64_t seed, const LassoOptions& options) {
    if (k < 2) throw Error(ErrorCode::invalid_argument, "lasso_cv: need at least 2 folds");
    if (X.rows() < k) {
        throw Error(ErrorCode::invalid_argument, "lasso_cv: fewer rows (" + std::to_string(X.rows()) +
                                                     ") than folds (" + std::to_string(k) + ")");
    }
    if (lambdas.empty()) throw Error(ErrorCode::invalid_argument, "lasso_cv: empty penalty grid");
    for (std::size_t i = 1; i < lambdas.size(); ++i) {
        if (lambdas[i] > lambdas[i - 1]) {
            throw Error(ErrorCode::invalid_argument, "lasso_cv: penalty grid must be descending");
        }
    }
    check_inputs(X, y, lambdas.back());

    const std::vector<int> folds = fold_assignment(X.rows(), k, seed);
    LassoCvResult out;
    out.lambdas = lambdas;
    out.folds = k;
    out.seed = seed;
    out.cv_errors.assign(lambdas.size(), 0.0);

    for (int f = 0; f < k; ++f) {
        std::vector<Index> train, held;
        for (Index i = 0; i < X.rows(); ++i) (folds[static_cast<std::size_t>(i)] == f ? held : train).push_back(i);
        const Matrix Xt = X(train, Eigen::all);
        const Vector yt = y(train);
        const Matrix Xh = X(held, Eigen::all);
        const Vector yh = y(held);
        const std::vector<LassoFit> path = lasso_path(Xt, yt, lambdas, options);
        for (std::size_t g = 0; g < lambdas.size(); ++g) {
            const double mse = (yh - lasso_predict(path[g], Xh)).squaredNorm() / static_cast<double>(yh.size());
            out.cv_errors[g] += mse / k;
        }
    }
    out.best_index = 0;
    for (std::size_t g = 1; g < lambdas.size(); ++g) {
        if (out.cv_errors[g] < out.cv_errors[out.best_index]) out.best_index = g;
    }
    out.best_lambda = lambdas[out.best_index];
    return out;
}

}  // namespace smrm
