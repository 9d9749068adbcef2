// Neuron clustering for parameter tying.
//
// Pairwise similarity between rows of a weight matrix:
//
//     S(i,j) = <w_i, w_j> / max(||w_i||^2, ||w_j||^2)  in [-1, 1],
//
// computed over nonzero (surviving) rows only; pruned rows never join a
// cluster. Clusters come from affinity propagation (responsibility /
// availability message passing with damping); the diagonal preference value
// steers the number of exemplars. Rows of one cluster are then substituted
// by their mean.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "pareto_forge/common.hpp"
#include "pareto_forge/io.hpp"
#include "pareto_forge/matrix.hpp"

namespace pforge {

/// Similarity over the surviving (nonzero) rows of a layer. `active[p]` is
/// the original row index behind matrix position p.
struct SimilarityMatrix {
    Matrix s;
    std::vector<std::size_t> active;
};

inline SimilarityMatrix row_similarity(const Matrix& w) {
    std::vector<std::size_t> active;
    for (std::size_t r = 0; r < w.rows(); ++r)
        if (!w.row_is_zero(r)) active.push_back(r);
    if (active.empty()) throw std::domain_error("row_similarity: all rows are zero");

    std::vector<double> sq(active.size());
    for (std::size_t p = 0; p < active.size(); ++p) {
        const double n = w.row_norm(active[p]);
        sq[p] = n * n;
    }
    Matrix s(active.size(), active.size());
    for (std::size_t p = 0; p < active.size(); ++p) {
        for (std::size_t q = p; q < active.size(); ++q) {
            double dot = 0.0;
            const auto ri = w.row(active[p]);
            const auto rj = w.row(active[q]);
            for (std::size_t c = 0; c < ri.size(); ++c) dot += ri[c] * rj[c];
            const double v = std::clamp(dot / std::max(sq[p], sq[q]), -1.0, 1.0);
            s(p, q) = v;
            s(q, p) = v;
        }
    }
    return {std::move(s), std::move(active)};
}

/// Cluster id per original row; pruned rows carry the sentinel label.
struct ClusterAssignment {
    static constexpr int kPruned = -1;

    std::vector<int> labels;        // per original row: exemplar's original row index, or kPruned
    std::vector<std::size_t> exemplars;  // original row indices
    bool converged = true;
};

/// Frey-Dueck affinity propagation on a precomputed similarity matrix. The
/// diagonal is overwritten with `preference` before message passing. Labels
/// are deterministic given inputs; if the exemplar set is not stable for
/// `conv_window` sweeps within max_iter, the current labels are returned
/// with converged = false.
inline ClusterAssignment affinity_propagation(const SimilarityMatrix& sim, double preference,
                                              double damping = 0.9, std::size_t max_iter = 200,
                                              std::size_t conv_window = 15,
                                              std::size_t total_rows = 0) {
    require(damping >= 0.5 && damping < 1.0, "affinity_propagation: damping must be in [0.5, 1)");
    require(max_iter >= 1, "affinity_propagation: max_iter must be >= 1");
    const std::size_t n = sim.active.size();
    require(sim.s.rows() == n && sim.s.cols() == n, "affinity_propagation: similarity not square");
    if (total_rows == 0)
        total_rows = n == 0 ? 0 : (*std::max_element(sim.active.begin(), sim.active.end()) + 1);

    ClusterAssignment out;
    out.labels.assign(total_rows, ClusterAssignment::kPruned);

    Matrix s = sim.s;
    for (std::size_t i = 0; i < n; ++i) s(i, i) = preference;
    // deterministic symmetry-breaking perturbation: with exactly tied
    // similarities the exemplar evidence settles at 0 and never elects
    {
        double spread = 1.0;
        for (double v : s.data()) spread = std::max(spread, std::abs(v));
        const double scale = 1e-6 * spread;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double phi = 0.6180339887498949 * double(i * n + j + 1);
                s(i, j) += scale * (phi - std::floor(phi) - 0.5);
            }
    }

    if (n == 1) {
        out.labels[sim.active[0]] = int(sim.active[0]);
        out.exemplars = {sim.active[0]};
        return out;
    }

    Matrix r(n, n), a(n, n);
    std::vector<std::size_t> exemplars, prev_exemplars;
    std::size_t stable = 0;
    bool converged = false;

    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // responsibilities
        for (std::size_t i = 0; i < n; ++i) {
            double max1 = -std::numeric_limits<double>::infinity(), max2 = max1;
            std::size_t arg1 = 0;
            for (std::size_t k = 0; k < n; ++k) {
                const double v = a(i, k) + s(i, k);
                if (v > max1) {
                    max2 = max1;
                    max1 = v;
                    arg1 = k;
                } else if (v > max2) {
                    max2 = v;
                }
            }
            for (std::size_t k = 0; k < n; ++k) {
                const double target = s(i, k) - (k == arg1 ? max2 : max1);
                r(i, k) = damping * r(i, k) + (1.0 - damping) * target;
            }
        }
        // availabilities
        for (std::size_t k = 0; k < n; ++k) {
            double pos_sum = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (i != k) pos_sum += std::max(0.0, r(i, k));
            for (std::size_t i = 0; i < n; ++i) {
                const double target = (i == k)
                                          ? pos_sum
                                          : std::min(0.0, r(k, k) + pos_sum - std::max(0.0, r(i, k)));
                a(i, k) = damping * a(i, k) + (1.0 - damping) * target;
            }
        }
        // exemplar set this sweep
        exemplars.clear();
        for (std::size_t k = 0; k < n; ++k)
            if (r(k, k) + a(k, k) > 0.0) exemplars.push_back(k);
        if (!exemplars.empty() && exemplars == prev_exemplars) {
            if (++stable >= conv_window) {
                converged = true;
                break;
            }
        } else {
            stable = 0;
        }
        prev_exemplars = exemplars;
    }

    if (exemplars.empty()) {
        // degenerate run: fall back to the single best self-evidence point
        std::size_t best = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (r(k, k) + a(k, k) > r(best, best) + a(best, best)) best = k;
        exemplars = {best};
        converged = false;
    }

    // final assignment: nearest exemplar by similarity, exemplars to themselves
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = exemplars[0];
        if (std::find(exemplars.begin(), exemplars.end(), i) != exemplars.end()) {
            best = i;
        } else {
            for (std::size_t k : exemplars)
                if (s(i, k) > s(i, best)) best = k;
        }
        out.labels[sim.active[i]] = int(sim.active[best]);
    }
    for (std::size_t k : exemplars) out.exemplars.push_back(sim.active[k]);
    std::sort(out.exemplars.begin(), out.exemplars.end());
    out.converged = converged;
    return out;
}

/// Substitute every clustered row by its cluster mean; pruned rows stay zero.
/// Idempotent.
inline Matrix tie_clusters(const Matrix& w, const ClusterAssignment& c) {
    if (c.labels.size() != w.rows())
        throw std::domain_error("tie_clusters: label count != row count");
    for (int label : c.labels) {
        if (label == ClusterAssignment::kPruned) continue;
        if (label < 0 || std::size_t(label) >= w.rows() ||
            std::find(c.exemplars.begin(), c.exemplars.end(), std::size_t(label)) ==
                c.exemplars.end())
            throw std::domain_error("tie_clusters: label does not name an exemplar");
    }
    Matrix out = w;
    for (std::size_t e : c.exemplars) {
        std::vector<std::size_t> members;
        for (std::size_t r = 0; r < w.rows(); ++r)
            if (c.labels[r] == int(e)) members.push_back(r);
        if (members.size() < 2) continue;
        std::vector<double> mean(w.cols(), 0.0);
        for (std::size_t r : members)
            for (std::size_t col = 0; col < w.cols(); ++col) mean[col] += w(r, col);
        for (double& v : mean) v /= double(members.size());
        for (std::size_t r : members)
            for (std::size_t col = 0; col < w.cols(); ++col) out(r, col) = mean[col];
    }
    return out;
}

/// CSV dump of a similarity matrix; first row/column carry the original row
/// indices of the surviving rows.
inline std::string similarity_to_csv(const SimilarityMatrix& sim) {
    std::ostringstream out;
    out << "row";
    for (std::size_t q : sim.active) out << ",r" << q;
    out << "\n";
    for (std::size_t p = 0; p < sim.active.size(); ++p) {
        out << "r" << sim.active[p];
        for (std::size_t q = 0; q < sim.active.size(); ++q)
            out << "," << format_double(sim.s(p, q));
        out << "\n";
    }
    return out.str();
}

}  // namespace pforge
