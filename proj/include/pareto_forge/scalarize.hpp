// Weighted Chebyshev scalarization of a multi-objective problem, its
// epsilon-modified variant, and the augmented Lagrangian used to solve the
// resulting scalar problems.
//
// The scalar problem for objectives L = (L_0, ..., L_m), importance vector k
// on the unit simplex and reference point a (strictly below every attainable
// L) is
//
//     min t   s.t.   k_i [ (L_i - a_i) + eps * sum_j (L_j - a_j) ] <= t,
//
// with eps = 0 giving the plain weighted Chebyshev form. The constraint stack
// H(x, t) is folded into the augmented Lagrangian
//
//     L_A(x, t, lambda, mu) = t + sum_i phi(H_i, lambda_i, mu)
//
// where phi is either the standard inequality (clamped multiplier) form or
// the literal equality-style form t + lambda^T H + mu/2 ||H||^2, selectable
// for comparison. Multipliers ascend via lambda <- max(0, lambda + mu * H)
// and mu follows a geometric schedule (default factor 0.5).

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pareto_forge/common.hpp"

namespace pforge {

/// Point in criterion space: index 0 is the sparsity objective, 1..m the
/// task losses.
using ObjectiveVector = std::vector<double>;

inline void validate_objectives(const ObjectiveVector& v) {
    require(v.size() >= 2, "objective vector must have at least 2 entries");
    require(all_finite(v), "objective vector has non-finite entries");
}

/// Importance vector k on the unit simplex.
struct PreferenceVector {
    std::vector<double> k;

    static PreferenceVector make(std::vector<double> k) {
        double sum = 0.0;
        for (double ki : k) {
            require(ki >= 0.0, "preference: entries must be nonnegative");
            sum += ki;
        }
        require(std::abs(sum - 1.0) <= 1e-12, "preference: entries must sum to 1");
        return PreferenceVector{std::move(k)};
    }

    std::size_t size() const { return k.size(); }
};

/// Utopian anchor; must lie strictly below every objective vector it is used
/// against (checked at each use, see wc_constraints).
struct ReferencePoint {
    std::vector<double> a;

    std::size_t size() const { return a.size(); }
};

struct ScalarizationConfig {
    double epsilon_disturbance = 1e-4;  // the preference-cone disturbance
    PreferenceVector preference;
    ReferencePoint reference;

    void validate(std::size_t num_objectives) const {
        require(epsilon_disturbance >= 0.0, "epsilon_disturbance must be >= 0");
        require(preference.size() == num_objectives,
                "preference length does not match objective count");
        require(reference.size() == num_objectives,
                "reference length does not match objective count");
    }
};

inline void check_reference_below(const ObjectiveVector& L, const ReferencePoint& a) {
    for (std::size_t i = 0; i < L.size(); ++i) {
        if (!(a.a[i] < L[i]))
            throw std::domain_error("reference point not strictly below objective " +
                                    std::to_string(i) + " (a_i=" + std::to_string(a.a[i]) +
                                    " >= L_i=" + std::to_string(L[i]) + ")");
    }
}

/// Constraint stack H_i = k_i [ (L_i - a_i) + eps * sum_j (L_j - a_j) ] - t.
inline std::vector<double> wc_constraints(const ObjectiveVector& L, double t,
                                          const ScalarizationConfig& cfg) {
    validate_objectives(L);
    cfg.validate(L.size());
    check_reference_below(L, cfg.reference);
    double total_dev = 0.0;
    for (std::size_t i = 0; i < L.size(); ++i) total_dev += L[i] - cfg.reference.a[i];
    std::vector<double> h(L.size());
    for (std::size_t i = 0; i < L.size(); ++i)
        h[i] = cfg.preference.k[i] * ((L[i] - cfg.reference.a[i]) +
                                      cfg.epsilon_disturbance * total_dev) - t;
    return h;
}

/// max_i of the (modified) weighted Chebyshev terms; i.e. the smallest t with
/// all constraints inactive-or-tight.
inline double chebyshev_value(const ObjectiveVector& L, const ScalarizationConfig& cfg) {
    auto h = wc_constraints(L, 0.0, cfg);
    return *std::max_element(h.begin(), h.end());
}

/// t initialization: max_i k_i (L_i - a_i) at the current iterate (the
/// epsilon term is intentionally left out; constraints start inactive or
/// within eps of tight).
inline double initial_t(const ObjectiveVector& L, const ScalarizationConfig& cfg) {
    check_reference_below(L, cfg.reference);
    double t0 = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < L.size(); ++i)
        t0 = std::max(t0, cfg.preference.k[i] * (L[i] - cfg.reference.a[i]));
    return t0;
}

/// Which augmented Lagrangian to assemble. `inequality` treats H <= 0 with
/// nonnegative multipliers (the consistent reading); `paper_literal` is the
/// equality-style form kept for comparison (unbounded below in lambda, never
/// used for multiplier updates).
enum class ALForm { inequality, paper_literal };

struct ALState {
    double t = 0.0;
    std::vector<double> lambda;  // one multiplier per constraint, >= 0
    double mu = 1.0;             // augmentation coefficient, > 0
    long iteration = 0;

    static ALState make(std::size_t num_constraints, double mu0, double t0 = 0.0) {
        require(mu0 > 0.0, "mu must be positive");
        return ALState{t0, std::vector<double>(num_constraints, 0.0), mu0, 0};
    }
};

struct MultiplierSchedule {
    double mu_factor = 0.5;  // mu <- mu_factor * mu per outer iteration

    void validate() const { require(mu_factor > 0.0, "mu_factor must be positive"); }
};

/// Scalar augmented Lagrangian value for a given constraint stack.
inline double al_loss(const std::vector<double>& h, const ALState& state,
                      ALForm form = ALForm::inequality) {
    require(state.mu > 0.0, "al_loss: mu must be positive");
    require(h.size() == state.lambda.size(), "al_loss: H/lambda length mismatch");
    double value = state.t;
    if (form == ALForm::paper_literal) {
        double lh = 0.0, hh = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            lh += state.lambda[i] * h[i];
            hh += h[i] * h[i];
        }
        value += lh + 0.5 * state.mu * hh;
    } else {
        // sum_i [ max(0, lambda_i + mu h_i)^2 - lambda_i^2 ] / (2 mu)
        for (std::size_t i = 0; i < h.size(); ++i) {
            const double shifted = std::max(0.0, state.lambda[i] + state.mu * h[i]);
            value += (shifted * shifted - state.lambda[i] * state.lambda[i]) / (2.0 * state.mu);
        }
    }
    if (!std::isfinite(value)) throw NumericError("al_loss: non-finite value");
    return value;
}

/// d L_A / d H_i; the per-constraint weight that chains into objective
/// gradients. For the inequality form this is max(0, lambda_i + mu H_i).
inline std::vector<double> al_constraint_weights(const std::vector<double>& h,
                                                 const ALState& state,
                                                 ALForm form = ALForm::inequality) {
    require(h.size() == state.lambda.size(), "al_constraint_weights: length mismatch");
    std::vector<double> w(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        w[i] = (form == ALForm::paper_literal)
                   ? state.lambda[i] + state.mu * h[i]
                   : std::max(0.0, state.lambda[i] + state.mu * h[i]);
    }
    return w;
}

/// d L_A / d t given the constraint weights (each H_i carries -t).
inline double al_t_derivative(const std::vector<double>& constraint_weights) {
    double s = 0.0;
    for (double w : constraint_weights) s += w;
    return 1.0 - s;
}

/// Clamped multiplier ascent and penalty schedule; call once per outer
/// iteration after the inner minimization.
inline ALState al_update(const std::vector<double>& h, const ALState& state,
                         const MultiplierSchedule& schedule) {
    schedule.validate();
    require(h.size() == state.lambda.size(), "al_update: H/lambda length mismatch");
    ALState next = state;
    for (std::size_t i = 0; i < h.size(); ++i)
        next.lambda[i] = std::max(0.0, state.lambda[i] + state.mu * h[i]);
    next.mu = state.mu * schedule.mu_factor;
    next.iteration = state.iteration + 1;
    return next;
}

}  // namespace pforge
