#pragma once

#include <cstdint>
#include <vector>

#include "smrm/core_types.hpp"

namespace smrm {

// Single-response lasso with unpenalized intercept:
//
//   minimize (1/n) ||y - beta0 1 - X beta||^2 + lambda ||beta||_1
//
// The loss is scaled by 1/n (not 1/2n), so the one-dimensional update
// soft-thresholds at lambda / 2.

struct LassoOptions {
    /// Stop once every subgradient condition holds to within tol.
    double tol = 1e-7;
    int max_iter = 100000;
    /// Record the objective after every sweep (used by tests).
    bool record_objective = false;
};

struct LassoFit {
    double beta0 = 0.0;
    Vector beta;
    double lambda = 0.0;
    int n_iter = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

LassoFit lasso_fit(const Matrix& X, const Vector& y, double lambda, const LassoOptions& options = {},
                   const Vector& beta_init = Vector());

/// Fits every penalty of a descending grid, each warm-started from the previous one.
std::vector<LassoFit> lasso_path(const Matrix& X, const Vector& y, const std::vector<double>& lambdas,
                                 const LassoOptions& options = {});

Vector lasso_predict(const LassoFit& fit, const Matrix& X_new);

double lasso_objective(const Matrix& X, const Vector& y, double beta0, const Vector& beta, double lambda);

/// Largest violation of the subgradient optimality conditions at `fit`.
double lasso_kkt_violation(const Matrix& X, const Vector& y, const LassoFit& fit);

/// Smallest penalty at which every coefficient is zero: 2 max_j |(1/n) x_j^T (y - ybar)|.
double lasso_lambda_max(const Matrix& X, const Vector& y);

/// `n_points` log-spaced penalties from lambda_max down to ratio * lambda_max.
std::vector<double> lasso_default_grid(const Matrix& X, const Vector& y, int n_points = 100, double ratio = 1e-4);

/// Fold index in [0, k) for each of n rows, from a seeded shuffle.
std::vector<int> fold_assignment(Index n, int k, std::uint64_t seed);

struct LassoCvResult {
    double best_lambda = 0.0;
    std::size_t best_index = 0;
    std::vector<double> lambdas;
    std::vector<double> cv_errors;
    int folds = 0;
    std::uint64_t seed = 0;
};

/// k-fold cross-validation over a descending grid; ties go to the larger penalty.
LassoCvResult lasso_cv(const Matrix& X, const Vector& y, const std::vector<double>& lambdas, int k,
                       std::uint64_t seed, const LassoOptions& options = {});

}  // namespace smrm
