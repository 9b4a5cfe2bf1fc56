#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace uniloc::numcore {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix row(std::span<const double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row_span(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row_span(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    std::vector<double>& data() noexcept { return data_; }
    const std::vector<double>& data() const noexcept { return data_; }

    void fill(double value);
    bool same_shape(const Matrix& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// C (+)= op(A) * op(B). Shapes are checked; throws ErrorKind::dimension on mismatch.
void gemm(const Matrix& a, bool transA, const Matrix& b, bool transB, Matrix& c, bool accumulate);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double l2_norm(std::span<const double> v) noexcept;
double max_abs_diff(const Matrix& a, const Matrix& b);

} // namespace uniloc::numcore
