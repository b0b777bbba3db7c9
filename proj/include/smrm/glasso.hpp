#pragma once

#include <vector>

#include "smrm/core_types.hpp"

namespace smrm {

// Graphical lasso with unpenalized diagonal:
//
//   minimize tr(S K) - log|K| + lambda * sum_{l != l'} |K_ll'|
//
// The sum runs over ordered pairs, so each unordered pair carries 2 lambda.
//
// Each sweep visits every column and minimizes the objective exactly over
// that column's off-diagonal entries and its diagonal entry; the off-diagonal
// block is a lasso in the current inverse of the remaining submatrix. Iterates
// stay positive definite and the objective never increases.

struct GlassoOptions {
    /// Sweep stops once mean|Sigma_new - Sigma_old| <= tol * mean|S_offdiag|.
    double tol = 1e-4;
    int max_iter = 100;
    int inner_max_iter = 10000;
    bool record_objective = false;
};

struct GlassoResult {
    Matrix K;
    Matrix Sigma;
    int n_iter = 0;
    bool converged = false;
    std::vector<double> objective_trace;
};

/// `K_init`, when non-empty and positive definite, warm-starts the sweeps;
/// otherwise they start from diag(1 / S_ll).
GlassoResult glasso_fit(const Matrix& S, double lambda, const GlassoOptions& options = {},
                        const Matrix& K_init = Matrix());

double glasso_objective(const Matrix& S, const Matrix& K, double lambda);

/// tr(S K) - q + lambda * sum_{l != l'} |K_ll'|; zero at the optimum.
double glasso_duality_gap(const Matrix& S, const Matrix& K, double lambda);

/// Largest violation of the stationarity conditions, using Sigma = K^{-1}.
double glasso_kkt_violation(const Matrix& S, const Matrix& K, double lambda);

Index offdiagonal_nonzeros(const Matrix& K, double threshold = 0.0);

}  // namespace smrm
