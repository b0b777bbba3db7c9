#include "smrm/core_types.hpp"

#include <algorithm>
#include <cmath>

namespace smrm {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::not_positive_definite: return "not_positive_definite";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::non_finite: return "non_finite";
        case ErrorCode::fully_missing_column: return "fully_missing_column";
        case ErrorCode::missing_predictor: return "missing_predictor";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::unbounded_problem: return "unbounded_problem";
        case ErrorCode::objective_increase: return "objective_increase";
        case ErrorCode::split_unsatisfiable: return "split_unsatisfiable";
        case ErrorCode::degenerate_fit: return "degenerate_fit";
    }
    return "unknown";
}

MaskedMatrix::MaskedMatrix(Matrix values, BoolMatrix mask, std::vector<std::string> column_names)
    : values_(std::move(values)), mask_(std::move(mask)), names_(std::move(column_names)) {
    if (values_.rows() != mask_.rows() || values_.cols() != mask_.cols()) {
        throw Error(ErrorCode::dimension_mismatch, "mask and values differ in shape");
    }
    if (names_.empty()) {
        for (Index l = 0; l < values_.cols(); ++l) names_.push_back("y" + std::to_string(l + 1));
    } else if (static_cast<Index>(names_.size()) != values_.cols()) {
        throw Error(ErrorCode::dimension_mismatch, "column name count does not match columns");
    }
    for (Index l = 0; l < values_.cols(); ++l) {
        for (Index i = 0; i < values_.rows(); ++i) {
            if (mask_(i, l) && !std::isfinite(values_(i, l))) {
                throw Error(ErrorCode::non_finite, "non-finite observed value in column " + names_[l]);
            }
        }
    }
}

MaskedMatrix MaskedMatrix::complete(Matrix values, std::vector<std::string> column_names) {
    BoolMatrix mask = BoolMatrix::Constant(values.rows(), values.cols(), true);
    return MaskedMatrix(std::move(values), std::move(mask), std::move(column_names));
}

Index MaskedMatrix::observed_count(Index l) const { return mask_.col(l).count(); }

Index MaskedMatrix::observed_count() const { return mask_.count(); }

Vector MaskedMatrix::missing_ratio() const {
    Vector out(cols());
    for (Index l = 0; l < cols(); ++l) {
        out(l) = rows() == 0 ? 0.0
                             : 1.0 - static_cast<double>(observed_count(l)) / static_cast<double>(rows());
    }
    return out;
}

void MaskedMatrix::require_observed_columns() const {
    for (Index l = 0; l < cols(); ++l) {
        if (observed_count(l) == 0) {
            throw Error(ErrorCode::fully_missing_column,
                        "response column '" + names_[l] + "' has no observed entries");
        }
    }
}

MaskedMatrix MaskedMatrix::select_rows(const std::vector<Index>& rows) const {
    Matrix v(static_cast<Index>(rows.size()), cols());
    BoolMatrix m(static_cast<Index>(rows.size()), cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        v.row(static_cast<Index>(k)) = values_.row(rows[k]);
        m.row(static_cast<Index>(k)) = mask_.row(rows[k]);
    }
    return MaskedMatrix(std::move(v), std::move(m), names_);
}

MaskedMatrix MaskedMatrix::select_cols(const std::vector<Index>& cols) const {
    Matrix v(rows(), static_cast<Index>(cols.size()));
    BoolMatrix m(rows(), static_cast<Index>(cols.size()));
    std::vector<std::string> names;
    for (std::size_t k = 0; k < cols.size(); ++k) {
        v.col(static_cast<Index>(k)) = values_.col(cols[k]);
        m.col(static_cast<Index>(k)) = mask_.col(cols[k]);
        names.push_back(names_[cols[k]]);
    }
    return MaskedMatrix(std::move(v), std::move(m), std::move(names));
}

RowPartition partition_row(const Eigen::Ref<const Eigen::Array<bool, Eigen::Dynamic, 1>>& mask_row) {
    RowPartition part;
    for (Index l = 0; l < mask_row.size(); ++l) {
        (mask_row(l) ? part.obs : part.mis).push_back(l);
    }
    return part;
}

RowPartition partition_row(const MaskedMatrix& Y, Index row) {
    Eigen::Array<bool, Eigen::Dynamic, 1> m = Y.mask().row(row).transpose();
    return partition_row(m);
}

void ModelParams::validate() const {
    const Index q = B.cols();
    if (b0.size() != q || K.rows() != q || K.cols() != q) {
        throw Error(ErrorCode::dimension_mismatch, "model parameter shapes are inconsistent");
    }
    if (!B.allFinite() || !b0.allFinite()) {
        throw Error(ErrorCode::non_finite, "non-finite regression coefficients");
    }
    require_spd(K, "precision matrix");
}

Matrix ModelParams::stacked() const {
    Matrix out(B.rows() + 1, B.cols());
    out.row(0) = b0.transpose();
    out.bottomRows(B.rows()) = B;
    return out;
}

Matrix ModelParams::predict(const Matrix& X) const {
    if (X.cols() != B.rows()) {
        throw Error(ErrorCode::dimension_mismatch, "predictor count does not match coefficients");
    }
    Matrix out = X * B;
    out.rowwise() += b0.transpose();
    return out;
}

void Dataset::validate() const {
    if (X.rows() != Y.rows()) {
        throw Error(ErrorCode::dimension_mismatch, "X and Y row counts differ");
    }
    if (!split.empty() && static_cast<Index>(split.size()) != X.rows()) {
        throw Error(ErrorCode::dimension_mismatch, "split tags do not cover every row");
    }
    if (!predictor_names.empty() && static_cast<Index>(predictor_names.size()) != X.cols()) {
        throw Error(ErrorCode::dimension_mismatch, "predictor name count does not match X");
    }
    if (!X.allFinite()) {
        throw Error(ErrorCode::missing_predictor, "design matrix must be complete and finite");
    }
}

std::vector<Index> Dataset::rows_with(SplitTag tag) const {
    std::vector<Index> rows;
    for (Index i = 0; i < n(); ++i) {
        const SplitTag t = split.empty() ? SplitTag::train : split[static_cast<std::size_t>(i)];
        if (t == tag) rows.push_back(i);
    }
    return rows;
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
    Dataset out;
    out.X.resize(static_cast<Index>(rows.size()), p());
    for (std::size_t k = 0; k < rows.size(); ++k) out.X.row(static_cast<Index>(k)) = X.row(rows[k]);
    out.Y = Y.select_rows(rows);
    out.predictor_names = predictor_names;
    if (!split.empty()) {
        for (Index r : rows) out.split.push_back(split[static_cast<std::size_t>(r)]);
    }
    return out;
}

Matrix with_intercept(const Matrix& X) {
    Matrix out(X.rows(), X.cols() + 1);
    out.col(0).setOnes();
    out.rightCols(X.cols()) = X;
    return out;
}

bool is_spd(const Matrix& K) {
    if (K.rows() != K.cols() || !K.allFinite()) return false;
    if (K.size() == 0) return true;
    const double scale = K.cwiseAbs().maxCoeff();
    if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) return false;
    Eigen::LLT<Matrix> llt(K);
    return llt.info() == Eigen::Success;
}

void require_spd(const Matrix& K, const char* what) {
    if (!is_spd(K)) {
        throw Error(ErrorCode::not_positive_definite, std::string(what) + " is not symmetric positive definite");
    }
}

Matrix submatrix(const Matrix& A, const std::vector<Index>& rows, const std::vector<Index>& cols) {
    return A(rows, cols);
}

Vector subvector(const Vector& v, const std::vector<Index>& idx) { return v(idx); }

ConditionalGaussian conditional_gaussian(const Vector& mu, const Matrix& K, const RowPartition& part,
                                         const Vector& y_obs) {
    const Index q = mu.size();
    if (K.rows() != q || K.cols() != q ||
        static_cast<Index>(part.obs.size() + part.mis.size()) != q ||
        y_obs.size() != static_cast<Index>(part.obs.size())) {
        throw Error(ErrorCode::dimension_mismatch, "conditional_gaussian: inconsistent dimensions");
    }
    require_spd(K, "precision matrix");
    ConditionalGaussian out;
    if (part.mis.empty()) return out;

    out.precision = K(part.mis, part.mis);
    const Vector resid = y_obs - mu(part.obs);
    const Matrix K_mo = K(part.mis, part.obs);
    Eigen::LLT<Matrix> llt(out.precision);
    out.mean = mu(part.mis) - llt.solve(K_mo * resid);
    return out;
}

Matrix precision_to_correlation(const Matrix& K) {
    require_spd(K, "precision matrix");
    Eigen::LLT<Matrix> llt(K);
    Matrix Sigma = llt.solve(Matrix::Identity(K.rows(), K.cols()));
    Sigma = 0.5 * (Sigma + Sigma.transpose());
    const Vector d = Sigma.diagonal().cwiseSqrt().cwiseInverse();
    Matrix R = d.asDiagonal() * Sigma * d.asDiagonal();
    for (Index l = 0; l < R.rows(); ++l) {
        R(l, l) = 1.0;
        for (Index m = 0; m < R.cols(); ++m) R(l, m) = std::clamp(R(l, m), -1.0, 1.0);
    }
    return R;
}

Matrix precision_to_partial_correlation(const Matrix& K) {
    require_spd(K, "precision matrix");
    const Vector d = K.diagonal().cwiseSqrt().cwiseInverse();
    Matrix R = -(d.asDiagonal() * K * d.asDiagonal());
    R.diagonal().setOnes();
    return R;
}

}  // namespace smrm
