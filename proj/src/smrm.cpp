#include "smrm/smrm.hpp"

#include <cmath>

namespace smrm {
namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double log_det_chol(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

void check_design(const Matrix& X_tilde, Index n, Index p) {
    if (X_tilde.rows() != n || X_tilde.cols() != p + 1) {
        throw Error(ErrorCode::dimension_mismatch, "design matrix with intercept has the wrong shape");
    }
}

Matrix mean_matrix(const Matrix& X_tilde, const Vector& b0, const Matrix& B) {
    Matrix M = X_tilde.rightCols(B.rows()) * B;
    M.rowwise() += b0.transpose();
    return M;
}

}  // namespace

void SmrmConfig::validate(Index p, Index q) const {
    if (!(lambda1 >= 0.0) || !std::isfinite(lambda1)) {
        throw Error(ErrorCode::invalid_argument, "lambda1 must be finite and >= 0");
    }
    if (lambda2.rows() != p || lambda2.cols() != q) {
        throw Error(ErrorCode::dimension_mismatch, "lambda2 must be p x q");
    }
    if (!lambda2.allFinite() || (q > 0 && p > 0 && lambda2.minCoeff() < 0.0)) {
        throw Error(ErrorCode::invalid_argument, "lambda2 entries must be finite and >= 0");
    }
    if (!(epsilon > 0.0)) throw Error(ErrorCode::invalid_argument, "epsilon must be > 0");
    if (max_em_iter < 1 || inner_max_iter < 1 || glasso_max_iter < 1) {
        throw Error(ErrorCode::invalid_argument, "iteration limits must be >= 1");
    }
}

EStepResult e_step(const Matrix& X_tilde, const MaskedMatrix& Y, const ModelParams& params) {
    const Index n = Y.rows();
    const Index q = Y.cols();
    check_design(X_tilde, n, params.p());
    if (params.q() != q) throw Error(ErrorCode::dimension_mismatch, "e_step: response count mismatch");
    require_spd(params.K, "precision matrix");

    const Matrix mu = mean_matrix(X_tilde, params.b0, params.B);
    EStepResult out;
    out.Y_hat = Y.values();
    out.conditional_cov_sum = Matrix::Zero(q, q);

    for (Index i = 0; i < n; ++i) {
        const RowPartition part = partition_row(Y, i);
        if (part.mis.empty()) continue;
        const Matrix K_mm = params.K(part.mis, part.mis);
        Eigen::LLT<Matrix> llt(K_mm);
        Vector c = mu(i, part.mis).transpose();
        if (!part.obs.empty()) {
            const Vector resid = Y.values()(i, part.obs).transpose() - mu(i, part.obs).transpose();
            c -= llt.solve(params.K(part.mis, part.obs) * resid);
        }
        const Matrix cov = llt.solve(Matrix::Identity(K_mm.rows(), K_mm.cols()));
        for (std::size_t a = 0; a < part.mis.size(); ++a) {
            out.Y_hat(i, part.mis[a]) = c(static_cast<Index>(a));
            for (std::size_t b = 0; b < part.mis.size(); ++b) {
                out.conditional_cov_sum(part.mis[a], part.mis[b]) +=
                    0.5 * (cov(static_cast<Index>(a), static_cast<Index>(b)) +
                           cov(static_cast<Index>(b), static_cast<Index>(a)));
            }
        }
    }
    out.expected_scatter = out.Y_hat.transpose() * out.Y_hat + out.conditional_cov_sum;
    return out;
}

BStepResult m_step_B(const Matrix& X_tilde, const Matrix& Y_hat, const Matrix& K, const Matrix& lambda2,
                     const Matrix& B_init, double tol, int max_iter) {
    const Index n = Y_hat.rows();
    const Index q = Y_hat.cols();
    const Index p = X_tilde.cols() - 1;
    check_design(X_tilde, n, p);
    if (K.rows() != q || K.cols() != q || lambda2.rows() != p || lambda2.cols() != q) {
        throw Error(ErrorCode::dimension_mismatch, "m_step_B: inconsistent dimensions");
    }
    if (!Y_hat.allFinite()) throw Error(ErrorCode::non_finite, "m_step_B: response matrix must be complete");
    require_spd(K, "precision matrix");

    // The intercept is profiled out: centring X and Y leaves the optimal b0
    // equal to mean(Y) - B^T mean(X) for every B and every positive definite K.
    const Matrix X = X_tilde.rightCols(p);
    const Vector x_mean = X.colwise().mean().transpose();
    const Vector y_mean = Y_hat.colwise().mean().transpose();
    const Matrix Xc = X.rowwise() - x_mean.transpose();
    const Matrix Yc = Y_hat.rowwise() - y_mean.transpose();
    const double inv_n = 1.0 / static_cast<double>(n);

    const Matrix G = inv_n * (Xc.transpose() * Xc);
    const Matrix C = inv_n * (Xc.transpose() * Yc) * K;

    BStepResult out;
    out.B = (B_init.rows() == p && B_init.cols() == q) ? B_init : Matrix::Zero(p, q);
    Matrix M = G * out.B * K;

    for (int it = 0; it < max_iter; ++it) {
        double max_step = 0.0;
        for (Index l = 0; l < q; ++l) {
            for (Index j = 0; j < p; ++j) {
                const double a = G(j, j) * K(l, l);
                const double old = out.B(j, l);
                if (a <= 0.0) {
                    if (old != 0.0) {
                        throw Error(ErrorCode::degenerate_fit,
                                    "m_step_B: zero curvature at an active coefficient");
                    }
                    continue;
                }
                const double z = C(j, l) - M(j, l) + a * old;
                const double updated = soft_threshold(z, lambda2(j, l)) / a;
                const double delta = updated - old;
                if (delta != 0.0) {
                    M.noalias() += delta * G.col(j) * K.row(l);
                    out.B(j, l) = updated;
                    max_step = std::max(max_step, std::fabs(delta) * std::sqrt(a));
                }
            }
        }
        out.n_iter = it + 1;
        if (max_step <= tol) {
            out.converged = true;
            break;
        }
    }
    out.b0 = y_mean - out.B.transpose() * x_mean;
    return out;
}

Matrix expected_residual_covariance(const Matrix& X_tilde, const EStepResult& estep, const Vector& b0,
                                    const Matrix& B) {
    const Index n = estep.Y_hat.rows();
    check_design(X_tilde, n, B.rows());
    const Matrix R = estep.Y_hat - mean_matrix(X_tilde, b0, B);
    // Same as (1/n)(E[Y^T Y] - M^T Y_hat - Y_hat^T M + M^T M), formed from the
    // centred residuals to avoid cancellation when the means are large.
    Matrix S = (R.transpose() * R + estep.conditional_cov_sum) / static_cast<double>(n);
    return 0.5 * (S + S.transpose());
}

GlassoResult m_step_K(const Matrix& X_tilde, const EStepResult& estep, const Vector& b0, const Matrix& B,
                      double lambda1, const GlassoOptions& options, const Matrix& K_init) {
    return glasso_fit(expected_residual_covariance(X_tilde, estep, b0, B), lambda1, options, K_init);
}

double penalty_value(const ModelParams& params, const SmrmConfig& config) {
    const double k_off = params.K.cwiseAbs().sum() - params.K.diagonal().cwiseAbs().sum();
    return config.lambda1 * k_off + 2.0 * (config.lambda2.cwiseProduct(params.B.cwiseAbs())).sum();
}

double penalized_objective(const Matrix& X_tilde, const EStepResult& estep, const ModelParams& params,
                           const SmrmConfig& config) {
    Eigen::LLT<Matrix> llt(params.K);
    if (llt.info() != Eigen::Success || !is_spd(params.K)) {
        throw Error(ErrorCode::not_positive_definite, "penalized_objective: K is not positive definite");
    }
    const Matrix S = expected_residual_covariance(X_tilde, estep, params.b0, params.B);
    return S.cwiseProduct(params.K).sum() - log_det_chol(llt) + penalty_value(params, config);
}

double observed_objective(const Matrix& X_tilde, const MaskedMatrix& Y, const ModelParams& params,
                          const SmrmConfig& config) {
    const Index n = Y.rows();
    check_design(X_tilde, n, params.p());
    require_spd(params.K, "precision matrix");
    const Matrix mu = mean_matrix(X_tilde, params.b0, params.B);
    Eigen::LLT<Matrix> full(params.K);
    const double log_det_k = log_det_chol(full);

    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
        const RowPartition part = partition_row(Y, i);
        if (part.obs.empty()) continue;
        const Vector r = Y.values()(i, part.obs).transpose() - mu(i, part.obs).transpose();
        if (part.mis.empty()) {
            total += r.dot(params.K * r) - log_det_k;
            continue;
        }
        // Sigma_oo^{-1} is the Schur complement K_oo - K_om K_mm^{-1} K_mo, and
        // log|Sigma_oo^{-1}| = log|K| - log|K_mm|.
        const Matrix K_mm = params.K(part.mis, part.mis);
        const Matrix K_mo = params.K(part.mis, part.obs);
        Eigen::LLT<Matrix> llt(K_mm);
        const Matrix P_oo = Matrix(params.K(part.obs, part.obs)) - K_mo.transpose() * llt.solve(K_mo);
        total += r.dot(P_oo * r) - (log_det_k - log_det_chol(llt));
    }
    return total / static_cast<double>(n) + penalty_value(params, config);
}

ModelParams default_init(const MaskedMatrix& Y, Index p) {
    const Index q = Y.cols();
    ModelParams init;
    init.b0 = Vector::Zero(q);
    init.B = Matrix::Zero(p, q);
    init.K = Matrix::Zero(q, q);
    for (Index l = 0; l < q; ++l) {
        double sum = 0.0, sq = 0.0;
        Index count = 0;
        for (Index i = 0; i < Y.rows(); ++i) {
            if (!Y.observed(i, l)) continue;
            sum += Y(i, l);
            ++count;
        }
        const double mean = count > 0 ? sum / static_cast<double>(count) : 0.0;
        for (Index i = 0; i < Y.rows(); ++i) {
            if (Y.observed(i, l)) sq += (Y(i, l) - mean) * (Y(i, l) - mean);
        }
        const double var = count > 1 ? sq / static_cast<double>(count) : 0.0;
        init.b0(l) = mean;
        init.K(l, l) = var > 0.0 ? 1.0 / var : 1.0;
    }
    return init;
}

SmrmFit smrm_fit(const Dataset& data, const SmrmConfig& config, const std::optional<ModelParams>& init) {
    data.validate();
    const Dataset train = data.split.empty() ? data : data.train();
    const Index p = train.p();
    const Index q = train.q();
    if (train.n() < 1) throw Error(ErrorCode::invalid_argument, "smrm_fit: no training rows");
    train.Y.require_observed_columns();
    config.validate(p, q);

    const Matrix X_tilde = with_intercept(train.X);
    SmrmFit fit;
    fit.params = init ? *init : default_init(train.Y, p);
    fit.params.validate();
    if (fit.params.p() != p || fit.params.q() != q) {
        throw Error(ErrorCode::dimension_mismatch, "smrm_fit: initial parameters have the wrong shape");
    }

    GlassoOptions gopt;
    gopt.tol = config.glasso_tol;
    gopt.max_iter = config.glasso_max_iter;

    double objective = observed_objective(X_tilde, train.Y, fit.params, config);
    fit.objective_trace.push_back(objective);

    for (int m = 0; m < config.max_em_iter; ++m) {
        const EStepResult estep = e_step(X_tilde, train.Y, fit.params);
        const BStepResult bstep = m_step_B(X_tilde, estep.Y_hat, fit.params.K, config.lambda2, fit.params.B, config.inner_tol, config.inner_max_iter);
        const GlassoResult kstep = m_step_K(X_tilde, estep, bstep.b0, bstep.B, config.lambda1, gopt, fit.params.K);

        ModelParams next{bstep.b0, bstep.B, kstep.K};
        if (!is_spd(next.K)) {
            throw Error(ErrorCode::not_positive_definite, "smrm_fit: M-step produced a non-SPD precision matrix");
        }
        const double next_objective = observed_objective(X_tilde, train.Y, next, config);
        if (next_objective > objective + 1e-6 * std::max(1.0, std::fabs(objective))) {
            throw Error(ErrorCode::objective_increase,
                        "smrm_fit: objective increased from " + std::to_string(objective) + " to " +
                            std::to_string(next_objective) + " at EM iteration " + std::to_string(m + 1));
        }
        const double change = (next.B - fit.params.B).cwiseAbs().sum();
        fit.params = std::move(next);
        objective = next_objective;
        fit.objective_trace.push_back(objective);
        fit.coefficient_change.push_back(change);
        fit.em_iters = m + 1;
        if (change < config.epsilon) {
            fit.converged = true;
            break;
        }
    }
    fit.Y_imputed = e_step(X_tilde, train.Y, fit.params).Y_hat;
    return fit;
}

}  // namespace smrm
