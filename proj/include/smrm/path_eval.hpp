#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "smrm/core_types.hpp"
#include "smrm/lasso.hpp"
#include "smrm/smrm.hpp"

namespace smrm {

// ---------------------------------------------------------------------------
// Train / test split
// ---------------------------------------------------------------------------

struct SplitResult {
    Dataset data;  // all rows, tagged
    int retries = 0;
    std::uint64_t seed_used = 0;
};

/// Tags floor(ratio * n) shuffled rows as train and the rest as test. A split
/// whose training responses contain a fully missing column is redrawn with
/// seed + 1, seed + 2, ... up to `max_retries` times.
SplitResult train_test_split(const Dataset& data, double ratio, std::uint64_t seed, int max_retries = 100);

// ---------------------------------------------------------------------------
// Penalty matrices
// ---------------------------------------------------------------------------

enum class Lambda2Mode { uniform, adjusted };

std::string_view to_string(Lambda2Mode mode);
Lambda2Mode parse_lambda2_mode(std::string_view text);

/// p x q matrix, constant within each column: r * lambda_l (uniform) or
/// r * lambda_l * a_l with a_l the inverse training MSE of the lasso (adjusted).
struct Lambda2Matrix {
    Matrix values;
    Lambda2Mode mode = Lambda2Mode::uniform;
    double r = 1.0;
    Vector lambda_train;
    /// Empty for the uniform construction.
    Vector a;

    /// The length-q row replicated p times (lambda_l or lambda_l * a_l, before r).
    Vector base_row() const;
};

Lambda2Matrix build_lambda2_uniform(const Vector& lambda_train, double r, Index p);

Lambda2Matrix build_lambda2_adjusted(const Matrix& X_train, const MaskedMatrix& Y_train, const Vector& lambda_train,
                                     double r, const LassoOptions& options = {});

/// Same matrix with a different multiplier r.
Lambda2Matrix rescale(const Lambda2Matrix& base, double r);

/// Log-equispaced, strictly descending from `high` to `low`.
std::vector<double> lambda1_grid(double low = 6.5e-3, double high = 1.0, int n_points = 200);

/// The multipliers swept in the reference analysis.
std::vector<double> default_r_values();

// ---------------------------------------------------------------------------
// Lasso baseline
// ---------------------------------------------------------------------------

struct BaselineConfig {
    int folds = 5;
    std::uint64_t seed = 1;
    int grid_points = 100;
    double grid_ratio = 1e-4;
    LassoOptions lasso;
};

struct BaselineResult {
    std::vector<std::string> names;
    Vector lambda_train;
    std::vector<LassoFit> fits;
    std::vector<LassoCvResult> cv;
    /// Test MSE per response over observed test entries; NaN when none exist.
    Vector mse_test;
    /// Training MSE per response over observed training entries.
    Vector mse_train;
};

/// Per response: drop rows where that response is missing, choose lambda by
/// cross-validation on the training rows, refit, and score the test rows.
BaselineResult run_baseline(const Dataset& split_data, const BaselineConfig& config);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

enum class Scale { raw, log };

std::string_view to_string(Scale scale);
Scale parse_scale(std::string_view text);

struct EvalReport {
    Vector per_response_mse_lasso;
    Vector per_response_mse_smrm;
    double mse_tilde_lasso = 0.0;
    double mse_tilde_smrm = 0.0;
    double lambda1 = 0.0;
    double r = 0.0;
    Matrix correlation_matrix;
    /// Responses without observed test entries are excluded from the sums.
    std::vector<bool> included;
    Index q_effective = 0;
    Scale scale = Scale::raw;
};

/// Mean squared error over the observed entries of column l; NaN when none.
double observed_mse(const Vector& predictions, const MaskedMatrix& Y, Index l);

/// Scores a complete prediction matrix against the observed test entries.
EvalReport evaluate_predictions(const Matrix& predictions, const MaskedMatrix& Y_test,
                                const Vector& lasso_reference_mse);

EvalReport evaluate(const SmrmFit& fit, const Dataset& test, const Vector& lasso_reference_mse,
                    Scale scale = Scale::raw);

EvalReport evaluate(const std::vector<LassoFit>& fits, const Dataset& test, const Vector& lasso_reference_mse,
                    Scale scale = Scale::raw);

/// Area under the ROC curve of |K_hat_ll'| as a score for the off-diagonal
/// support of `K_true` (upper triangle). Ties count one half.
double support_auc(const Matrix& K_hat, const Matrix& K_true);

/// Elementwise log of observed entries; throws on a nonpositive observed value.
MaskedMatrix log_transform(const MaskedMatrix& Y);
Matrix exp_back(const Matrix& predictions);

// ---------------------------------------------------------------------------
// Regularization path
// ---------------------------------------------------------------------------

struct PathPoint {
    double lambda1 = 0.0;
    ModelParams params;
    EvalReport report;
    std::vector<double> objective_trace;
    int em_iters = 0;
    bool converged = false;
};

struct PathResult {
    double r = 0.0;
    Lambda2Mode mode = Lambda2Mode::uniform;
    std::vector<PathPoint> points;

    /// Index of the point with the smallest mse_tilde_smrm.
    std::size_t best_index() const;
};

/// Fits every lambda1 of a descending grid, each initialised at the previous
/// fit. `defaults` supplies tolerances; its lambda1 and lambda2 are replaced.
PathResult run_path(const Dataset& split_data, const Lambda2Matrix& lambda2, const std::vector<double>& grid,
                    const SmrmConfig& defaults, const Vector& lasso_reference_mse, Scale scale = Scale::raw);

/// One path per r; independent chains run on up to `threads` workers.
std::vector<PathResult> run_sweep(const Dataset& split_data, const Lambda2Matrix& base,
                                  const std::vector<double>& r_values, const std::vector<double>& grid,
                                  const SmrmConfig& defaults, const Vector& lasso_reference_mse,
                                  Scale scale = Scale::raw, int threads = 1);

}  // namespace smrm
