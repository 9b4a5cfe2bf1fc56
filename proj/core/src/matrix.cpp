#include "uniloc/numcore/matrix.hpp"

#include "uniloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace uniloc::numcore {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
        raise(ErrorKind::dimension, "matrix data length " + std::to_string(data_.size()) +
                                        " != " + std::to_string(rows) + "x" + std::to_string(cols));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) raise(ErrorKind::dimension, "ragged matrix literal");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::row(std::span<const double> values) {
    return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void gemm(const Matrix& a, bool transA, const Matrix& b, bool transB, Matrix& c, bool accumulate) {
    const std::size_t m = transA ? a.cols() : a.rows();
    const std::size_t k = transA ? a.rows() : a.cols();
    const std::size_t kb = transB ? b.cols() : b.rows();
    const std::size_t n = transB ? b.rows() : b.cols();
    if (k != kb)
        raise(ErrorKind::dimension, "gemm inner dimensions " + std::to_string(k) + " vs " +
                                        std::to_string(kb));
    if (!accumulate || c.rows() != m || c.cols() != n) {
        if (accumulate && !c.empty())
            raise(ErrorKind::dimension, "gemm accumulate target has wrong shape");
        c = Matrix(m, n);
    }

    const double* A = a.data().data();
    const double* B = b.data().data();
    double* C = c.data().data();
    const std::size_t lda = a.cols();
    const std::size_t ldb = b.cols();

    if (!transB) {
        // Row of C accumulates scaled rows of B; inner loop is contiguous.
        for (std::size_t i = 0; i < m; ++i) {
            double* crow = C + i * n;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = transA ? A[p * lda + i] : A[i * lda + p];
                if (av == 0.0) continue;
                const double* brow = B + p * ldb;
                for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
            }
        }
    } else {
        // B is used transposed: C[i][j] = dot(row i of op(A), row j of B).
        std::vector<double> arow(k);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) arow[p] = transA ? A[p * lda + i] : A[i * lda + p];
            double* crow = C + i * n;
            for (std::size_t j = 0; j < n; ++j) {
                const double* brow = B + j * ldb;
                double s = 0.0;
                for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
                crow[j] += s;
            }
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    Matrix c;
    gemm(a, false, b, false, c, false);
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
    double s = 0.0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(std::span<const double> v) noexcept { return std::sqrt(dot(v, v)); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) raise(ErrorKind::dimension, "max_abs_diff shape mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

} // namespace uniloc::numcore
