#include "smrm/glasso.hpp"

#include <algorithm>
#include <cmath>

namespace smrm {
namespace {

double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

double log_det_spd(const Matrix& K) {
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::not_positive_definite, "log-determinant of a non-positive-definite matrix");
    }
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

double offdiag_l1(const Matrix& K) {
    return K.cwiseAbs().sum() - K.diagonal().cwiseAbs().sum();
}

Matrix spd_inverse(const Matrix& K) {
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::not_positive_definite, "glasso iterate lost positive definiteness");
    }
    Matrix inv = llt.solve(Matrix::Identity(K.rows(), K.cols()));
    return 0.5 * (inv + inv.transpose());
}

std::vector<Index> all_but(Index q, Index j) {
    std::vector<Index> idx;
    idx.reserve(static_cast<std::size_t>(q - 1));
    for (Index k = 0; k < q; ++k) {
        if (k != j) idx.push_back(k);
    }
    return idx;
}

}  // namespace

double glasso_objective(const Matrix& S, const Matrix& K, double lambda) {
    return (S.cwiseProduct(K)).sum() - log_det_spd(K) + lambda * offdiag_l1(K);
}

double glasso_duality_gap(const Matrix& S, const Matrix& K, double lambda) {
    return (S.cwiseProduct(K)).sum() - static_cast<double>(K.rows()) + lambda * offdiag_l1(K);
}

double glasso_kkt_violation(const Matrix& S, const Matrix& K, double lambda) {
    const Matrix W = spd_inverse(K);
    double worst = 0.0;
    for (Index l = 0; l < K.rows(); ++l) {
        for (Index m = 0; m < K.cols(); ++m) {
            const double g = S(l, m) - W(l, m);
            double v;
            if (l == m) {
                v = std::fabs(g);
            } else if (K(l, m) != 0.0) {
                v = std::fabs(g + lambda * (K(l, m) > 0 ? 1.0 : -1.0));
            } else {
                v = std::max(0.0, std::fabs(g) - lambda);
            }
            worst = std::max(worst, v);
        }
    }
    return worst;
}

Index offdiagonal_nonzeros(const Matrix& K, double threshold) {
    Index count = 0;
    for (Index l = 0; l < K.rows(); ++l) {
        for (Index m = 0; m < K.cols(); ++m) {
            if (l != m && std::fabs(K(l, m)) > threshold) ++count;
        }
    }
    return count;
}

GlassoResult glasso_fit(const Matrix& S, double lambda, const GlassoOptions& options, const Matrix& K_init) {
    const Index q = S.rows();
    if (S.cols() != q) throw Error(ErrorCode::dimension_mismatch, "glasso: S must be square");
    if (!S.allFinite()) throw Error(ErrorCode::non_finite, "glasso: S has non-finite entries");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorCode::invalid_argument, "glasso: penalty must be finite and >= 0");
    }
    if (q > 0 && (S - S.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, S.cwiseAbs().maxCoeff())) {
        throw Error(ErrorCode::invalid_argument, "glasso: S must be symmetric");
    }
    if (q > 0 && S.diagonal().minCoeff() <= 0.0) {
        throw Error(ErrorCode::unbounded_problem, "glasso: S has a nonpositive diagonal entry");
    }
    if (lambda == 0.0 && !is_spd(S)) {
        throw Error(ErrorCode::unbounded_problem, "glasso: rank-deficient S requires a positive penalty");
    }

    GlassoResult out;
    Matrix Theta;
    if (K_init.rows() == q && K_init.cols() == q && is_spd(K_init)) {
        Theta = 0.5 * (K_init + K_init.transpose());
    } else {
        Theta = S.diagonal().cwiseInverse().asDiagonal();
    }
    if (q <= 1) {
        out.K = S.diagonal().cwiseInverse().asDiagonal();
        out.Sigma = S;
        out.converged = true;
        if (options.record_objective) out.objective_trace.push_back(glasso_objective(S, out.K, lambda));
        return out;
    }

    double scale = (S.cwiseAbs().sum() - S.diagonal().cwiseAbs().sum()) / static_cast<double>(q * (q - 1));
    if (!(scale > 0.0)) scale = S.diagonal().mean();
    const double threshold = options.tol * scale;
    const double inner_threshold = 1e-3 * threshold;

    if (options.record_objective) out.objective_trace.push_back(glasso_objective(S, Theta, lambda));
    Matrix W = spd_inverse(Theta);

    for (int it = 0; it < options.max_iter; ++it) {
        const Matrix W_start = W;
        for (Index j = 0; j < q; ++j) {
            const std::vector<Index> rest = all_but(q, j);
            const double s22 = S(j, j);
            const Vector s12 = S(rest, j);
            const Vector w12 = W(rest, j);
            // Inverse of Theta without row/column j.
            const Matrix A = Matrix(W(rest, rest)) - w12 * w12.transpose() / W(j, j);
            const Matrix Qm = s22 * A;

            Vector theta = Theta(rest, j);
            Vector grad = Qm * theta + s12;
            for (int inner = 0; inner < options.inner_max_iter; ++inner) {
                double max_step = 0.0;
                for (Index k = 0; k < q - 1; ++k) {
                    const double qkk = Qm(k, k);
                    const double old = theta(k);
                    const double updated = soft_threshold(qkk * old - grad(k), lambda) / qkk;
                    if (updated != old) {
                        grad.noalias() += (updated - old) * Qm.col(k);
                        theta(k) = updated;
                        max_step = std::max(max_step, std::fabs(updated - old) * qkk);
                    }
                }
                if (max_step <= inner_threshold) break;
            }

            const Vector A_theta = A * theta;
            const double theta22 = 1.0 / s22 + theta.dot(A_theta);
            for (std::size_t k = 0; k < rest.size(); ++k) {
                Theta(rest[k], j) = theta(static_cast<Index>(k));
                Theta(j, rest[k]) = theta(static_cast<Index>(k));
            }
            Theta(j, j) = theta22;

            const Matrix W11 = A + s22 * A_theta * A_theta.transpose();
            const Vector new_w12 = -s22 * A_theta;
            for (std::size_t a = 0; a < rest.size(); ++a) {
                for (std::size_t b = 0; b < rest.size(); ++b) {
                    W(rest[a], rest[b]) = W11(static_cast<Index>(a), static_cast<Index>(b));
                }
                W(rest[a], j) = new_w12(static_cast<Index>(a));
                W(j, rest[a]) = new_w12(static_cast<Index>(a));
            }
            W(j, j) = s22;
        }
        out.n_iter = it + 1;
        W = spd_inverse(Theta);
        if (options.record_objective) out.objective_trace.push_back(glasso_objective(S, Theta, lambda));
        const double change = (W - W_start).cwiseAbs().mean();
        if (change <= threshold) {
            out.converged = true;
            break;
        }
    }

    out.K = 0.5 * (Theta + Theta.transpose());
    out.Sigma = spd_inverse(out.K);
    return out;
}

}  // namespace smrm
