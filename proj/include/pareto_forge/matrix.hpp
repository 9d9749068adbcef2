// Dense row-major matrix and rank-4 tensor containers.
//
// Deliberately minimal: the models trained here are tiny (widths < 100), and
// the sparsity machinery works row-wise (row norms, row zeroing, row means),
// so a contiguous buffer with row views is all that is needed.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "pareto_forge/common.hpp"

namespace pforge {

class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double row_norm(std::size_t r) const {
        double s = 0.0;
        for (double x : row(r)) s += x * x;
        return std::sqrt(s);
    }

    bool row_is_zero(std::size_t r) const {
        for (double x : row(r))
            if (x != 0.0) return false;
        return true;
    }

    void zero_row(std::size_t r) {
        auto rv = row(r);
        std::fill(rv.begin(), rv.end(), 0.0);
    }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// out = a * b, shapes (n x k) * (k x m).
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    return out;
}

/// out = a^T * b, shapes (n x k)^T * (n x m) -> (k x m).
inline Matrix matmul_at_b(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), "matmul_at_b: row counts differ");
    Matrix out(a.cols(), b.cols());
    for (std::size_t n = 0; n < a.rows(); ++n)
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double v = a(n, i);
            if (v == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += v * b(n, j);
        }
    return out;
}

/// out = a * b^T, shapes (n x k) * (m x k)^T -> (n x m).
inline Matrix matmul_a_bt(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), "matmul_a_bt: column counts differ");
    Matrix out(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(j, k);
            out(i, j) = s;
        }
    return out;
}

/// Rank-4 tensor with axes (filter width, filter height, prev channels, channels).
class Tensor4 {
  public:
    Tensor4() = default;
    Tensor4(std::size_t fw, std::size_t fh, std::size_t n_prev, std::size_t n)
        : dims_{fw, fh, n_prev, n}, data_(fw * fh * n_prev * n, 0.0) {}

    const std::array<std::size_t, 4>& dims() const { return dims_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
        return data_[index(a, b, c, d)];
    }
    double operator()(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
        return data_[index(a, b, c, d)];
    }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

  private:
    std::size_t index(std::size_t a, std::size_t b, std::size_t c, std::size_t d) const {
        return ((a * dims_[1] + b) * dims_[2] + c) * dims_[3] + d;
    }

    std::array<std::size_t, 4> dims_{0, 0, 0, 0};
    std::vector<double> data_;
};

}  // namespace pforge
