#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "smrm/error.hpp"

namespace smrm {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Response matrix with holes. `mask(i, l)` is true when entry (i, l) was
/// observed; values under a false mask carry no meaning and are never read.
class MaskedMatrix {
public:
    MaskedMatrix() = default;
    MaskedMatrix(Matrix values, BoolMatrix mask, std::vector<std::string> column_names = {});

    /// All entries observed.
    static MaskedMatrix complete(Matrix values, std::vector<std::string> column_names = {});

    Index rows() const { return values_.rows(); }
    Index cols() const { return values_.cols(); }

    const Matrix& values() const { return values_; }
    const BoolMatrix& mask() const { return mask_; }
    const std::vector<std::string>& column_names() const { return names_; }

    bool observed(Index i, Index l) const { return mask_(i, l); }
    double operator()(Index i, Index l) const { return values_(i, l); }

    Index observed_count(Index l) const;
    Index observed_count() const;
    /// Fraction of missing entries per column.
    Vector missing_ratio() const;

    /// Throws `fully_missing_column` naming the first column without observations.
    void require_observed_columns() const;

    MaskedMatrix select_rows(const std::vector<Index>& rows) const;
    MaskedMatrix select_cols(const std::vector<Index>& cols) const;

private:
    Matrix values_;
    BoolMatrix mask_;
    std::vector<std::string> names_;
};

/// Observed / missing column indices of one response row (0-based, ascending).
struct RowPartition {
    std::vector<Index> obs;
    std::vector<Index> mis;
};

RowPartition partition_row(const Eigen::Ref<const Eigen::Array<bool, Eigen::Dynamic, 1>>& mask_row);
RowPartition partition_row(const MaskedMatrix& Y, Index row);

/// Intercepts b0 (q), coefficients B (p x q), precision K (q x q).
struct ModelParams {
    Vector b0;
    Matrix B;
    Matrix K;

    Index p() const { return B.rows(); }
    Index q() const { return B.cols(); }

    /// Checks shapes, symmetry and positive definiteness of K.
    void validate() const;
    /// Coefficient matrix with the intercept stacked on top, (p + 1) x q.
    Matrix stacked() const;
    /// Mean responses X b + b0 for a predictor matrix without intercept column.
    Matrix predict(const Matrix& X) const;
};

enum class SplitTag { train, test };

struct Dataset {
    Matrix X;
    MaskedMatrix Y;
    std::vector<std::string> predictor_names;
    std::vector<SplitTag> split;

    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
    Index q() const { return Y.cols(); }

    /// Checks row counts agree and X is finite.
    void validate() const;
    std::vector<Index> rows_with(SplitTag tag) const;
    Dataset subset(const std::vector<Index>& rows) const;
    Dataset train() const { return subset(rows_with(SplitTag::train)); }
    Dataset test() const { return subset(rows_with(SplitTag::test)); }
};

/// Prepends a column of ones.
Matrix with_intercept(const Matrix& X);

/// Symmetry to 1e-10 * max|K| plus a successful Cholesky factorisation.
bool is_spd(const Matrix& K);
void require_spd(const Matrix& K, const char* what);

struct ConditionalGaussian {
    Vector mean;       // |mis|
    Matrix precision;  // |mis| x |mis|, equal to K[mis, mis]
};

/// Distribution of the missing block given the observed block, computed from
/// precision-matrix blocks: mean mu_mis - K_mm^{-1} K_mo (y_obs - mu_obs).
ConditionalGaussian conditional_gaussian(const Vector& mu, const Matrix& K,
                                         const RowPartition& part, const Vector& y_obs);

/// Correlation matrix of Sigma = K^{-1}.
Matrix precision_to_correlation(const Matrix& K);
/// Partial correlations -K_ll' / sqrt(K_ll K_l'l'), unit diagonal.
Matrix precision_to_partial_correlation(const Matrix& K);

Matrix submatrix(const Matrix& A, const std::vector<Index>& rows, const std::vector<Index>& cols);
Vector subvector(const Vector& v, const std::vector<Index>& idx);

}  // namespace smrm
