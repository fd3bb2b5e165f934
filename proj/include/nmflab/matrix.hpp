#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>

#include "errors.hpp"

// Dense non-negative matrix arithmetic shared by every other module.
//
// Storage is column-major (Eigen's default) and all shape conventions put
// samples in columns: the observation matrix Y is P x N, the covariate
// matrix A is R x N, the basis X is P x Q and the parameter matrix Theta
// is Q x R.

namespace nmflab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

namespace detail {

inline std::string shape_str(Index r, Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

} // namespace detail

/// Dense real matrix whose entries are finite and >= 0.
/// The invariant is checked on construction; operations that provably
/// preserve it use the `unchecked` tag to skip the scan.
class NonNegMatrix {
public:
    struct unchecked_t {};
    static constexpr unchecked_t unchecked{};

    NonNegMatrix() : m_(Matrix::Zero(1, 1)) {}

    NonNegMatrix(Index rows, Index cols, double fill = 0.0)
        : m_(Matrix::Constant(rows, cols, fill)) {
        validate();
    }

    explicit NonNegMatrix(Matrix m) : m_(std::move(m)) { validate(); }

    NonNegMatrix(Matrix m, unchecked_t) : m_(std::move(m)) {}

    static NonNegMatrix identity(Index n) {
        return NonNegMatrix(Matrix::Identity(n, n), unchecked);
    }

    Index rows() const { return m_.rows(); }
    Index cols() const { return m_.cols(); }
    double operator()(Index r, Index c) const { return m_(r, c); }

    const Matrix& data() const { return m_; }

private:
    void validate() const {
        if (m_.rows() < 1 || m_.cols() < 1)
            throw shape_error("matrix must have at least one row and one column, got " +
                              detail::shape_str(m_.rows(), m_.cols()));
        if (!m_.allFinite())
            throw domain_error("matrix contains NaN or infinite entries");
        if (m_.rows() > 0 && m_.cols() > 0 && m_.minCoeff() < 0.0)
            throw domain_error("matrix contains negative entries");
    }

    Matrix m_;
};

/// Standard matrix product.
inline NonNegMatrix matmul(const NonNegMatrix& lhs, const NonNegMatrix& rhs) {
    if (lhs.cols() != rhs.rows())
        throw shape_error("matmul: " + detail::shape_str(lhs.rows(), lhs.cols()) +
                          " * " + detail::shape_str(rhs.rows(), rhs.cols()));
    return NonNegMatrix(lhs.data() * rhs.data(), NonNegMatrix::unchecked);
}

/// Entrywise product.
inline NonNegMatrix hadamard(const NonNegMatrix& lhs, const NonNegMatrix& rhs) {
    if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols())
        throw shape_error("hadamard: " + detail::shape_str(lhs.rows(), lhs.cols()) +
                          " vs " + detail::shape_str(rhs.rows(), rhs.cols()));
    return NonNegMatrix((lhs.data().array() * rhs.data().array()).matrix(),
                        NonNegMatrix::unchecked);
}

/// Entrywise num / (den + eps). The eps term keeps zero denominators finite.
inline NonNegMatrix hadamard_div(const NonNegMatrix& num, const NonNegMatrix& den,
                                 double eps = 1e-12) {
    if (num.rows() != den.rows() || num.cols() != den.cols())
        throw shape_error("hadamard_div: " + detail::shape_str(num.rows(), num.cols()) +
                          " vs " + detail::shape_str(den.rows(), den.cols()));
    return NonNegMatrix((num.data().array() / (den.data().array() + eps)).matrix(),
                        NonNegMatrix::unchecked);
}

struct ColumnNormalized {
    NonNegMatrix matrix;
    Vector column_sums; // sums before normalization; 0 marks a replaced column
};

/// Divide each column by its sum. An all-zero column becomes the uniform
/// column 1/rows so that the result is always column-stochastic; its
/// reported sum stays 0 so callers can detect the degeneracy.
inline ColumnNormalized column_normalize(const NonNegMatrix& m) {
    Matrix out = m.data();
    Vector sums(m.cols());
    const double uniform = 1.0 / static_cast<double>(m.rows());
    for (Index c = 0; c < m.cols(); ++c) {
        const double s = out.col(c).sum();
        sums(c) = s;
        if (s > 0.0)
            out.col(c) /= s;
        else
            out.col(c).setConstant(uniform);
    }
    return {NonNegMatrix(std::move(out), NonNegMatrix::unchecked), std::move(sums)};
}

/// Squared Euclidean (Frobenius) loss, summed over all entries.
inline double frobenius_loss(const NonNegMatrix& y, const NonNegMatrix& yhat) {
    if (y.rows() != yhat.rows() || y.cols() != yhat.cols())
        throw shape_error("frobenius_loss: " + detail::shape_str(y.rows(), y.cols()) +
                          " vs " + detail::shape_str(yhat.rows(), yhat.cols()));
    return (y.data() - yhat.data()).squaredNorm();
}

} // namespace nmflab
