// Dominance relations over finite sets of objective vectors: Pareto
// filtering, the additive epsilon-nondominance archive test, and the
// finite-set Geoffrion properness certificate.

#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "pareto_forge/common.hpp"
#include "pareto_forge/scalarize.hpp"

namespace pforge {

/// p dominates q: p_i <= q_i everywhere and p_j < q_j somewhere.
inline bool dominates(const ObjectiveVector& p, const ObjectiveVector& q) {
    if (p.size() != q.size())
        throw std::domain_error("dominates: objective vectors of different length");
    bool strict = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > q[i]) return false;
        if (p[i] < q[i]) strict = true;
    }
    return strict;
}

/// Additive rule: p eps-dominates q iff p_i - eps <= q_i everywhere and
/// p_j - eps < q_j somewhere. With eps = 0 this is exactly dominates().
/// Note that for eps > 0 the relation is not antisymmetric: two points within
/// an eps-box of each other eps-dominate one another, which is what lets the
/// archive absorb training stochasticity.
inline bool eps_dominates(const ObjectiveVector& p, const ObjectiveVector& q, double eps) {
    if (p.size() != q.size())
        throw std::domain_error("eps_dominates: objective vectors of different length");
    bool strict = false;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] - eps > q[i]) return false;
        if (p[i] - eps < q[i]) strict = true;
    }
    return strict;
}

/// Indices of points not dominated by any other point. Duplicate vectors keep
/// the first occurrence. Output is invariant under input permutation (as a
/// set of points) and idempotent.
inline std::vector<std::size_t> pareto_filter(const std::vector<ObjectiveVector>& points) {
    if (points.empty()) throw std::domain_error("pareto_filter: empty input");
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < points.size() && keep; ++j) {
            if (j == i) continue;
            if (dominates(points[j], points[i])) keep = false;
            if (j < i && points[j] == points[i]) keep = false;
        }
        if (keep) kept.push_back(i);
    }
    return kept;
}

/// Sequential archive pass with the additive eps rule: candidates are visited
/// in input order, rejected if an archive member eps-dominates (or equals)
/// them, and evict members they eps-dominate. eps = 0 reduces exactly to
/// pareto_filter; for eps > 0 the kept set depends on input order (mutual
/// eps-domination is resolved first-seen-wins).
inline std::vector<std::size_t> eps_nondominance_filter(const std::vector<ObjectiveVector>& points,
                                                        double eps) {
    if (eps < 0.0) throw std::domain_error("eps_nondominance_filter: negative epsilon");
    if (points.empty()) throw std::domain_error("eps_nondominance_filter: empty input");
    std::vector<std::size_t> archive;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool rejected = false;
        for (std::size_t j : archive) {
            if (points[j] == points[i] || eps_dominates(points[j], points[i], eps)) {
                rejected = true;
                break;
            }
        }
        if (rejected) continue;
        std::erase_if(archive, [&](std::size_t j) { return eps_dominates(points[i], points[j], eps); });
        archive.push_back(i);
    }
    std::sort(archive.begin(), archive.end());
    return archive;
}

/// Finite-set Geoffrion certificate: a point passes for trade-off bound M iff
/// for every rival and every objective the rival strictly improves, some
/// worsened objective keeps the improvement/worsening ratio <= M. Points are
/// assumed to be mutually nondominated already.
inline std::vector<bool> proper_pareto_certify(const std::vector<ObjectiveVector>& points,
                                               double M) {
    if (M <= 0.0) throw std::domain_error("proper_pareto_certify: M must be positive");
    std::vector<bool> certified(points.size(), true);
    for (std::size_t p = 0; p < points.size(); ++p) {
        for (std::size_t q = 0; q < points.size() && certified[p]; ++q) {
            if (q == p) continue;
            if (points[q].size() != points[p].size())
                throw std::domain_error("proper_pareto_certify: length mismatch");
            for (std::size_t i = 0; i < points[p].size() && certified[p]; ++i) {
                if (!(points[q][i] < points[p][i])) continue;
                bool bounded = false;
                for (std::size_t j = 0; j < points[p].size(); ++j) {
                    if (points[p][j] < points[q][j] &&
                        (points[p][i] - points[q][i]) <= M * (points[q][j] - points[p][j])) {
                        bounded = true;
                        break;
                    }
                }
                if (!bounded) certified[p] = false;
            }
        }
    }
    return certified;
}

}  // namespace pforge
