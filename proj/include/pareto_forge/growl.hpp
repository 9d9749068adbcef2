// Group ordered weighted l1 (GrOWL) machinery.
//
// The layer-wise penalty on a weight matrix W (rows = outputs of the previous
// layer's neurons) with nonincreasing weights theta, theta_1 > 0, is
//
//     G_theta(W) = sum_i theta_i * ||w_[i]||_2,
//
// where w_[i] is the row with the i-th largest l2 norm. The proximity
// operator reduces to the ordered-weighted-l1 prox on the vector of row
// norms: sort descending, shift by the weights, project onto the
// nonincreasing cone (pool-adjacent-violators), clip at zero, unsort, then
// rescale each row to its new norm. Convolutional weights reshape to
// (N_prev) x (Fw*Fh*N) before any of this applies.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

#include "pareto_forge/common.hpp"
#include "pareto_forge/matrix.hpp"

namespace pforge {

/// Nonincreasing nonnegative weights over sorted row norms; theta[0] > 0.
struct GrowlPattern {
    std::vector<double> theta;

    static GrowlPattern make(std::vector<double> theta) {
        require(!theta.empty(), "growl pattern: empty");
        require(theta.front() > 0.0, "growl pattern: theta[0] must be positive");
        for (std::size_t i = 0; i < theta.size(); ++i) {
            require(theta[i] >= 0.0, "growl pattern: negative entry");
            require(i == 0 || theta[i] <= theta[i - 1], "growl pattern: must be nonincreasing");
        }
        return GrowlPattern{std::move(theta)};
    }

    std::size_t size() const { return theta.size(); }
};

/// Spike pattern (beta1 + beta2, beta2, ..., beta2): full weight on the
/// largest row norm, a flat tail on the rest.
inline GrowlPattern growl_spike(double beta1, double beta2, std::size_t n) {
    require(beta1 > 0.0 && beta2 > 0.0, "growl_spike: betas must be positive");
    require(n >= 1, "growl_spike: n must be >= 1");
    std::vector<double> theta(n, beta2);
    theta[0] = beta1 + beta2;
    return GrowlPattern{std::move(theta)};
}

inline std::vector<double> row_norms(const Matrix& w) {
    std::vector<double> b(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) b[r] = w.row_norm(r);
    return b;
}

/// Indices of `values` sorted descending; ties keep the smaller original
/// index first (stable, for determinism across platforms).
inline std::vector<std::size_t> descending_order(const std::vector<double>& values) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return idx;
}

inline double growl_penalty_layer(const Matrix& w, const GrowlPattern& pattern) {
    if (pattern.size() != w.rows())
        throw std::domain_error("growl_penalty_layer: pattern length != row count");
    auto b = row_norms(w);
    std::sort(b.begin(), b.end(), std::greater<>());
    double value = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) value += pattern.theta[i] * b[i];
    return value;
}

/// The sparsity objective L_0: sum of layer-wise penalties.
inline double growl_total(const std::vector<std::pair<const Matrix*, const GrowlPattern*>>& layers) {
    double total = 0.0;
    for (const auto& [w, pattern] : layers) total += growl_penalty_layer(*w, *pattern);
    return total;
}

/// Isotonic projection onto the nonincreasing cone, equal weights
/// (pool adjacent violators).
inline std::vector<double> pava_nonincreasing(const std::vector<double>& v) {
    std::vector<double> mean;   // running block means
    std::vector<std::size_t> count;
    mean.reserve(v.size());
    count.reserve(v.size());
    for (double x : v) {
        mean.push_back(x);
        count.push_back(1);
        // merge while the tail violates mean[k-1] >= mean[k]
        while (mean.size() >= 2 && mean[mean.size() - 2] < mean.back()) {
            const double merged = (mean[mean.size() - 2] * count[count.size() - 2] +
                                   mean.back() * count.back()) /
                                  double(count[count.size() - 2] + count.back());
            count[count.size() - 2] += count.back();
            mean[mean.size() - 2] = merged;
            mean.pop_back();
            count.pop_back();
        }
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t k = 0; k < mean.size(); ++k) out.insert(out.end(), count[k], mean[k]);
    return out;
}

/// Ordered-weighted-l1 prox on a nonnegative vector b with nonincreasing
/// weights w (already scaled by the step): argmin_z 1/2||z-b||^2 +
/// sum_i w_i z_[i], z >= 0.
inline std::vector<double> owl_prox_norms(const std::vector<double>& b,
                                          const std::vector<double>& weights) {
    require(b.size() == weights.size(), "owl_prox_norms: length mismatch");
    const auto order = descending_order(b);
    std::vector<double> shifted(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) shifted[i] = b[order[i]] - weights[i];
    auto projected = pava_nonincreasing(shifted);
    std::vector<double> z(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) z[order[i]] = std::max(0.0, projected[i]);
    return z;
}

/// Proximity operator of step * G_theta applied to W. Rows are rescaled to
/// their new norms; rows whose new norm is zero are zeroed exactly, and rows
/// that were already zero stay zero.
inline Matrix prox_growl(const Matrix& w, const GrowlPattern& pattern, double step) {
    if (step <= 0.0) throw std::domain_error("prox_growl: step must be positive");
    if (pattern.size() != w.rows())
        throw std::domain_error("prox_growl: pattern length != row count");
    const auto b = row_norms(w);
    std::vector<double> weights(pattern.theta);
    for (double& wi : weights) wi *= step;
    const auto z = owl_prox_norms(b, weights);
    Matrix out = w;
    for (std::size_t r = 0; r < w.rows(); ++r) {
        if (b[r] == 0.0 || z[r] == 0.0) {
            out.zero_row(r);
            continue;
        }
        const double scale = z[r] / b[r];
        for (double& x : out.row(r)) x *= scale;
    }
    return out;
}

/// Zero every row with l2 norm strictly below tau; returns the new matrix and
/// the indices of rows zeroed by this call.
inline std::pair<Matrix, std::vector<std::size_t>> threshold_rows(const Matrix& w, double tau) {
    require(tau >= 0.0, "threshold_rows: tau must be >= 0");
    Matrix out = w;
    std::vector<std::size_t> zeroed;
    for (std::size_t r = 0; r < w.rows(); ++r) {
        if (w.row_norm(r) < tau && !w.row_is_zero(r)) {
            out.zero_row(r);
            zeroed.push_back(r);
        }
    }
    return {std::move(out), std::move(zeroed)};
}

/// Fraction of zero rows.
inline double layer_sparsity(const Matrix& w) {
    if (w.rows() == 0) return 0.0;
    std::size_t zero = 0;
    for (std::size_t r = 0; r < w.rows(); ++r)
        if (w.row_is_zero(r)) ++zero;
    return double(zero) / double(w.rows());
}

/// Dynamic-rank entry point for reshape_conv; anything but 4 axes is a
/// domain error.
inline Tensor4 tensor4_from_flat(const std::vector<double>& data,
                                 const std::vector<std::size_t>& dims) {
    if (dims.size() != 4)
        throw std::domain_error("reshape_conv: expected a 4-axis tensor, got rank " +
                                std::to_string(dims.size()));
    Tensor4 t(dims[0], dims[1], dims[2], dims[3]);
    require(data.size() == t.size(), "tensor4_from_flat: element count mismatch");
    t.data() = data;
    return t;
}

/// Reshape a conv weight (Fw, Fh, N_prev, N) to N_prev x (Fw*Fh*N); row i
/// gathers every entry whose previous-channel index is i.
inline Matrix reshape_conv(const Tensor4& w4) {
    const auto& d = w4.dims();
    if (d[0] == 0 || d[1] == 0 || d[2] == 0 || d[3] == 0)
        throw std::domain_error("reshape_conv: tensor has an empty axis");
    Matrix out(d[2], d[0] * d[1] * d[3]);
    for (std::size_t fw = 0; fw < d[0]; ++fw)
        for (std::size_t fh = 0; fh < d[1]; ++fh)
            for (std::size_t p = 0; p < d[2]; ++p)
                for (std::size_t n = 0; n < d[3]; ++n)
                    out(p, (fw * d[1] + fh) * d[3] + n) = w4(fw, fh, p, n);
    return out;
}

}  // namespace pforge
