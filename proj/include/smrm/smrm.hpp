#pragma once

#include <optional>
#include <vector>

#include "smrm/core_types.hpp"
#include "smrm/glasso.hpp"

namespace smrm {

// Sparse multivariate regression with missing responses.
//
// Objective on the training rows (X~ = [1 X], B~ = [b0^T; B]):
//
//   g(B~, K) = tr[(1/n) (Y - X~ B~)^T (Y - X~ B~) K] - log|K|
//            + lambda1 * sum_{l != l'} |K_ll'| + 2 * sum_{j,l} lambda2(j,l) |B_jl|
//
// The EM loop alternates an E-step (conditional moments of the missing
// responses under the current mean and precision) with one coordinate-descent
// pass over B and one graphical-lasso pass over K.

struct SmrmConfig {
    double lambda1 = 0.0;
    /// p x q penalty matrix; entry (j, l) multiplies |B_jl| with a factor of 2.
    Matrix lambda2;
    /// EM stops once sum_{j,l} |B_jl^(m+1) - B_jl^(m)| < epsilon (intercepts excluded).
    double epsilon = 1e-4;
    int max_em_iter = 200;
    double inner_tol = 1e-6;
    int inner_max_iter = 1000;
    double glasso_tol = 1e-4;
    int glasso_max_iter = 100;

    void validate(Index p, Index q) const;
};

struct EStepResult {
    /// Observed entries copied, missing entries replaced by conditional means.
    Matrix Y_hat;
    /// E[Y^T Y | Y_obs] = Y_hat^T Y_hat + sum_i cov_i.
    Matrix expected_scatter;
    /// sum_i of conditional covariances K_mm^{-1}, embedded into q x q.
    Matrix conditional_cov_sum;
};

EStepResult e_step(const Matrix& X_tilde, const MaskedMatrix& Y, const ModelParams& params);

struct BStepResult {
    Vector b0;
    Matrix B;
    int n_iter = 0;
    bool converged = false;
};

/// Cyclic coordinate descent on B for fixed K, warm-started from `B_init`.
/// b0 is unpenalized and returned in closed form, mean(Y_hat) - B^T mean(X).
BStepResult m_step_B(const Matrix& X_tilde, const Matrix& Y_hat, const Matrix& K, const Matrix& lambda2,
                     const Matrix& B_init, double tol, int max_iter);

/// (1/n) E[(Y - X~ B~)^T (Y - X~ B~) | Y_obs].
Matrix expected_residual_covariance(const Matrix& X_tilde, const EStepResult& estep, const Vector& b0,
                                    const Matrix& B);

GlassoResult m_step_K(const Matrix& X_tilde, const EStepResult& estep, const Vector& b0, const Matrix& B,
                      double lambda1, const GlassoOptions& options = {}, const Matrix& K_init = Matrix());

/// lambda1 * sum_{l != l'} |K_ll'| + 2 * sum lambda2 .* |B|.
double penalty_value(const ModelParams& params, const SmrmConfig& config);

/// Expected complete-data objective: tr(S K) - log|K| + penalties, with S from `estep`.
double penalized_objective(const Matrix& X_tilde, const EStepResult& estep, const ModelParams& params,
                           const SmrmConfig& config);

/// Observed-data objective (1/n) sum_i [r_o^T Sigma_oo^{-1} r_o - log|Sigma_oo^{-1}|] + penalties.
/// Equals `penalized_objective` on complete data; this is what EM decreases.
double observed_objective(const Matrix& X_tilde, const MaskedMatrix& Y, const ModelParams& params,
                          const SmrmConfig& config);

/// b0 = observed column means, B = 0, K = diag(1 / observed column variances).
ModelParams default_init(const MaskedMatrix& Y, Index p);

struct SmrmFit {
    ModelParams params;
    /// Observed-data objective at the start and after each EM iteration.
    std::vector<double> objective_trace;
    /// sum |Delta B| per EM iteration.
    std::vector<double> coefficient_change;
    int em_iters = 0;
    bool converged = false;
    Matrix Y_imputed;
};

/// Fits on the rows of `data` tagged train (all rows when untagged).
SmrmFit smrm_fit(const Dataset& data, const SmrmConfig& config,
                 const std::optional<ModelParams>& init = std::nullopt);

}  // namespace smrm
