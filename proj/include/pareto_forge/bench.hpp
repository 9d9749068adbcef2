// Desk-scale benchmark harness: analytic multi-objective problems with known
// fronts, an augmented-Lagrangian solver for them, a weighted-sum solver for
// comparison, a synthetic two-task dataset, the preference-vector sweep, and
// front reports.
//
// The analytic catalogue:
//   CONVEX2   f1 = ||x - e1||^2, f2 = ||x + e1||^2 over R^2; the front image
//             satisfies sqrt(f1) + sqrt(f2) = 2.
//   CONCAVE2  f = (x, 1 - x^2) over [0, 1]; every x is Pareto optimal and the
//             front is concave, so weighted sums only ever reach endpoints.
//   SPARSE3   two overlapping quadratics plus an ordered-weighted-l1 norm as
//             the sparsity objective, mirroring the (L_0, L_1, L_2) shape of
//             the training problem.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pareto_forge/archive.hpp"
#include "pareto_forge/common.hpp"
#include "pareto_forge/data.hpp"
#include "pareto_forge/dominance.hpp"
#include "pareto_forge/growl.hpp"
#include "pareto_forge/io.hpp"
#include "pareto_forge/net.hpp"
#include "pareto_forge/scalarize.hpp"
#include "pareto_forge/trainer.hpp"

namespace pforge {

// ---------------------------------------------------------------------------
// analytic problems

struct AnalyticMOP {
    std::string name;
    int dim = 0;
    int objectives = 0;
    bool convex_front = true;
    std::vector<double> lower, upper;  // empty = unbounded

    std::function<ObjectiveVector(const std::vector<double>&)> f;
    std::function<std::vector<std::vector<double>>(const std::vector<double>&)> grad;
    std::function<bool(const ObjectiveVector&)> on_front;          // null if unknown
    std::function<std::vector<ObjectiveVector>(int)> front_samples;  // null if unknown

    std::vector<double> clip(std::vector<double> x) const {
        if (lower.empty()) return x;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
        return x;
    }
};

inline AnalyticMOP make_convex2() {
    AnalyticMOP p;
    p.name = "convex2";
    p.dim = 2;
    p.objectives = 2;
    p.convex_front = true;
    p.f = [](const std::vector<double>& x) {
        const double f1 = (x[0] - 1) * (x[0] - 1) + x[1] * x[1];
        const double f2 = (x[0] + 1) * (x[0] + 1) + x[1] * x[1];
        return ObjectiveVector{f1, f2};
    };
    p.grad = [](const std::vector<double>& x) {
        return std::vector<std::vector<double>>{{2 * (x[0] - 1), 2 * x[1]},
                                                {2 * (x[0] + 1), 2 * x[1]}};
    };
    p.on_front = [](const ObjectiveVector& v) {
        if (v[0] < 0 || v[1] < 0) return false;
        return std::abs(std::sqrt(v[0]) + std::sqrt(v[1]) - 2.0) <= 1e-9;
    };
    p.front_samples = [](int n) {
        std::vector<ObjectiveVector> out;
        for (int i = 0; i < n; ++i) {
            const double s = -1.0 + 2.0 * double(i) / double(n - 1);
            out.push_back({(s - 1) * (s - 1), (s + 1) * (s + 1)});
        }
        return out;
    };
    return p;
}

inline AnalyticMOP make_concave2() {
    AnalyticMOP p;
    p.name = "concave2";
    p.dim = 1;
    p.objectives = 2;
    p.convex_front = false;
    p.lower = {0.0};
    p.upper = {1.0};
    p.f = [](const std::vector<double>& x) { return ObjectiveVector{x[0], 1.0 - x[0] * x[0]}; };
    p.grad = [](const std::vector<double>& x) {
        return std::vector<std::vector<double>>{{1.0}, {-2.0 * x[0]}};
    };
    p.on_front = [](const ObjectiveVector& v) {
        return v[0] >= -1e-12 && v[0] <= 1.0 + 1e-12 &&
               std::abs(v[1] - (1.0 - v[0] * v[0])) <= 1e-9;
    };
    p.front_samples = [](int n) {
        std::vector<ObjectiveVector> out;
        for (int i = 0; i < n; ++i) {
            const double x = double(i) / double(n - 1);
            out.push_back({x, 1.0 - x * x});
        }
        return out;
    };
    return p;
}

inline AnalyticMOP make_sparse3() {
    AnalyticMOP p;
    p.name = "sparse3";
    p.dim = 6;
    p.objectives = 3;
    p.convex_front = true;
    const std::vector<double> c1{1.0, 1.0, 0.8, 0.0, 0.0, 0.0};
    const std::vector<double> c2{0.0, 0.0, 0.8, 1.0, 1.0, 0.0};
    const double w_head = 1.0, w_tail = 0.25;  // spike weights on sorted |x|
    p.f = [=](const std::vector<double>& x) {
        std::vector<double> mag(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) mag[i] = std::abs(x[i]);
        std::sort(mag.begin(), mag.end(), std::greater<>());
        double f0 = w_head * mag[0];
        for (double m : mag) f0 += w_tail * m;
        double f1 = 0, f2 = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            f1 += (x[i] - c1[i]) * (x[i] - c1[i]);
            f2 += (x[i] - c2[i]) * (x[i] - c2[i]);
        }
        return ObjectiveVector{f0, f1, f2};
    };
    p.grad = [=](const std::vector<double>& x) {
        std::vector<double> mag(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) mag[i] = std::abs(x[i]);
        const auto order = descending_order(mag);
        std::vector<double> g0(x.size(), 0.0);
        for (std::size_t rank = 0; rank < order.size(); ++rank) {
            const std::size_t i = order[rank];
            const double sign = x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0);
            g0[i] = (w_tail + (rank == 0 ? w_head : 0.0)) * sign;
        }
        std::vector<double> g1(x.size()), g2(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            g1[i] = 2 * (x[i] - c1[i]);
            g2[i] = 2 * (x[i] - c2[i]);
        }
        return std::vector<std::vector<double>>{g0, g1, g2};
    };
    return p;
}

inline std::vector<AnalyticMOP> analytic_problems() {
    return {make_convex2(), make_concave2(), make_sparse3()};
}

inline AnalyticMOP analytic_problem(const std::string& name) {
    for (auto& p : analytic_problems())
        if (p.name == name) return p;
    throw ConfigError("unknown analytic problem: " + name);
}

// ---------------------------------------------------------------------------
// augmented Lagrangian solver for analytic problems

struct ALSolveOptions {
    double mu0 = 50.0;
    double mu_factor = 1.5;
    double mu_max = 1e6;
    int outer_iterations = 60;
    int inner_max_iters = 4000;
    double inner_tolerance = 1e-10;
    double feasibility_tolerance = 1e-6;
    ALForm form = ALForm::inequality;

    void validate() const {
        require(mu0 > 0 && mu_factor > 0 && mu_max >= mu0, "solver: bad mu settings");
        require(outer_iterations >= 1 && inner_max_iters >= 1, "solver: iteration counts");
        require(inner_tolerance > 0 && feasibility_tolerance > 0, "solver: tolerances");
    }
};

struct AnalyticIterRecord {
    int outer = 0;
    double t = 0, max_h = 0, mu = 0, al_value = 0;
    ObjectiveVector objectives;
};

struct AnalyticSolveResult {
    std::vector<double> x;
    double t = 0;
    ObjectiveVector objectives;
    std::vector<double> lambda;
    double max_h = 0;
    bool feasible = false;
    std::vector<AnalyticIterRecord> history;
};

namespace detail {

/// Exact minimization of L_A over t by bisection on its derivative, which is
/// nondecreasing in t for both AL forms.
inline double minimize_t(const std::vector<double>& c, const ALState& state, ALForm form) {
    auto dphi = [&](double t) {
        double s = 0.0;
        for (std::size_t q = 0; q < c.size(); ++q) {
            const double raw = state.lambda[q] + state.mu * (c[q] - t);
            s += (form == ALForm::paper_literal) ? raw : std::max(0.0, raw);
        }
        return 1.0 - s;
    };
    double hi = *std::max_element(c.begin(), c.end());
    for (double l : state.lambda) hi = std::max(hi, hi + l / state.mu);
    hi += 1.0;
    double lo = hi - 1.0;
    double width = 1.0;
    while (dphi(lo) > 0.0 && width < 1e12) {
        width *= 2.0;
        lo = hi - width;
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (dphi(mid) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// One full solve of the scalarized problem: inner projected gradient descent
/// over x with exact minimization over t, then clamped multiplier ascent.
inline AnalyticSolveResult chebyshev_solve(const AnalyticMOP& problem,
                                           const ScalarizationConfig& cfg,
                                           std::vector<double> x0, const ALSolveOptions& options) {
    options.validate();
    cfg.validate(std::size_t(problem.objectives));
    require(int(x0.size()) == problem.dim, "chebyshev_solve: x0 dimension mismatch");

    const double eps = cfg.epsilon_disturbance;
    const auto& k = cfg.preference.k;
    const auto& a = cfg.reference.a;

    auto constraint_levels = [&](const ObjectiveVector& f) {
        check_reference_below(f, cfg.reference);
        double total = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) total += f[i] - a[i];
        std::vector<double> c(f.size());
        for (std::size_t i = 0; i < f.size(); ++i) c[i] = k[i] * ((f[i] - a[i]) + eps * total);
        return c;
    };

    std::vector<double> x = problem.clip(std::move(x0));
    ALState state = ALState::make(std::size_t(problem.objectives), options.mu0);
    MultiplierSchedule schedule{options.mu_factor};

    AnalyticSolveResult res;
    for (int outer = 1; outer <= options.outer_iterations; ++outer) {
        state.t = initial_t(problem.f(x), cfg);
        double step = 1.0;
        for (int inner = 0; inner < options.inner_max_iters; ++inner) {
            const auto f = problem.f(x);
            const auto c = constraint_levels(f);
            state.t = detail::minimize_t(c, state, options.form);
            std::vector<double> h(c.size());
            for (std::size_t q = 0; q < c.size(); ++q) h[q] = c[q] - state.t;
            const auto cw = al_constraint_weights(h, state, options.form);

            const auto grads = problem.grad(x);
            std::vector<double> g(x.size(), 0.0);
            std::vector<double> grad_total(x.size(), 0.0);
            for (int q = 0; q < problem.objectives; ++q)
                for (std::size_t d = 0; d < x.size(); ++d) grad_total[d] += grads[q][d];
            for (int q = 0; q < problem.objectives; ++q) {
                for (std::size_t d = 0; d < x.size(); ++d)
                    g[d] += cw[q] * k[q] * (grads[q][d] + eps * grad_total[d]);
            }

            // projected-gradient stationarity check at unit reference step
            double stat = 0.0;
            {
                std::vector<double> probe(x.size());
                for (std::size_t d = 0; d < x.size(); ++d) probe[d] = x[d] - g[d];
                probe = problem.clip(std::move(probe));
                for (std::size_t d = 0; d < x.size(); ++d)
                    stat = std::max(stat, std::abs(x[d] - probe[d]));
            }
            if (stat <= options.inner_tolerance) break;

            const double l_cur = al_loss(h, state, options.form);
            bool accepted = false;
            for (step = std::min(step * 2.0, 1e6); step >= 1e-18; step *= 0.5) {
                std::vector<double> cand(x.size());
                for (std::size_t d = 0; d < x.size(); ++d) cand[d] = x[d] - step * g[d];
                cand = problem.clip(std::move(cand));
                double decrease = 0.0;
                for (std::size_t d = 0; d < x.size(); ++d) decrease += g[d] * (x[d] - cand[d]);
                const auto fc = problem.f(cand);
                const auto cc = constraint_levels(fc);
                std::vector<double> hc(cc.size());
                for (std::size_t q = 0; q < cc.size(); ++q) hc[q] = cc[q] - state.t;
                if (al_loss(hc, state, options.form) <= l_cur - 1e-4 * decrease) {
                    x = std::move(cand);
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;  // subgradient resolution reached
        }

        const auto f = problem.f(x);
        const auto c = constraint_levels(f);
        state.t = detail::minimize_t(c, state, options.form);
        std::vector<double> h(c.size());
        for (std::size_t q = 0; q < c.size(); ++q) h[q] = c[q] - state.t;

        AnalyticIterRecord rec;
        rec.outer = outer;
        rec.t = state.t;
        rec.max_h = *std::max_element(h.begin(), h.end());
        rec.mu = state.mu;
        rec.al_value = al_loss(h, state, options.form);
        rec.objectives = f;
        res.history.push_back(rec);

        state = al_update(h, state, schedule);
        state.mu = std::min(state.mu, options.mu_max);
    }

    res.x = x;
    res.t = res.history.back().t;
    res.objectives = problem.f(x);
    res.lambda = state.lambda;
    res.max_h = res.history.back().max_h;
    res.feasible = res.max_h <= options.feasibility_tolerance;
    return res;
}

/// Weighted-sum baseline: projected gradient descent on sum_i w_i f_i.
inline std::vector<double> weighted_sum_solve(const AnalyticMOP& problem,
                                              const std::vector<double>& weights,
                                              std::vector<double> x0, int max_iters = 4000,
                                              double tolerance = 1e-10) {
    require(int(weights.size()) == problem.objectives, "weighted_sum_solve: weight count");
    std::vector<double> x = problem.clip(std::move(x0));
    auto value = [&](const std::vector<double>& p) {
        const auto f = problem.f(p);
        double v = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) v += weights[i] * f[i];
        return v;
    };
    double step = 1.0;
    for (int iter = 0; iter < max_iters; ++iter) {
        const auto grads = problem.grad(x);
        std::vector<double> g(x.size(), 0.0);
        for (std::size_t q = 0; q < weights.size(); ++q)
            for (std::size_t d = 0; d < x.size(); ++d) g[d] += weights[q] * grads[q][d];
        std::vector<double> probe(x.size());
        for (std::size_t d = 0; d < x.size(); ++d) probe[d] = x[d] - g[d];
        probe = problem.clip(std::move(probe));
        double stat = 0.0;
        for (std::size_t d = 0; d < x.size(); ++d) stat = std::max(stat, std::abs(x[d] - probe[d]));
        if (stat <= tolerance) break;
        const double v_cur = value(x);
        bool accepted = false;
        for (step = std::min(step * 2.0, 1e6); step >= 1e-18; step *= 0.5) {
            std::vector<double> cand(x.size());
            for (std::size_t d = 0; d < x.size(); ++d) cand[d] = x[d] - step * g[d];
            cand = problem.clip(std::move(cand));
            double decrease = 0.0;
            for (std::size_t d = 0; d < x.size(); ++d) decrease += g[d] * (x[d] - cand[d]);
            if (value(cand) <= v_cur - 1e-4 * decrease) {
                x = std::move(cand);
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
    }
    return x;
}

// ---------------------------------------------------------------------------
// synthetic two-task dataset

struct DatasetConfig {
    int feature_dim = 16;
    int classes_task1 = 3;
    int classes_task2 = 3;
    int samples = 4000;
    std::uint64_t seed = 7;
    double separation = 3.0;
    double noise = 1.0;
    double train_fraction = 0.7;
    double val_fraction = 0.15;  // remainder is the test split

    void validate() const {
        require(feature_dim >= 4, "dataset: feature_dim must be >= 4");
        require(classes_task1 >= 2 && classes_task2 >= 2, "dataset: class counts must be >= 2");
        require(samples >= 10, "dataset: samples must be >= 10");
        require(separation > 0 && noise > 0, "dataset: separation and noise must be positive");
        require(train_fraction > 0 && val_fraction > 0 &&
                    train_fraction + val_fraction < 1.0,
                "dataset: invalid split fractions");
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"feature_dim", feature_dim}, {"classes_task1", classes_task1},
                              {"classes_task2", classes_task2}, {"samples", samples},
                              {"seed", seed}, {"separation", separation}, {"noise", noise},
                              {"train_fraction", train_fraction}, {"val_fraction", val_fraction}};
    }
};

/// Class-conditional Gaussian features. Task 1 labels shift the first half of
/// the feature axes, task 2 the middle half; the quarter-overlap makes the
/// tasks correlated but not identical.
inline Dataset make_dataset(const DatasetConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(mix_seed(cfg.seed, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> pick1(0, cfg.classes_task1 - 1);
    std::uniform_int_distribution<int> pick2(0, cfg.classes_task2 - 1);

    const int a_begin = 0, a_end = cfg.feature_dim / 2;
    const int b_begin = cfg.feature_dim / 4, b_end = std::min(cfg.feature_dim, 3 * cfg.feature_dim / 4);

    // orthonormal class directions scaled by the separation, so class-mean
    // distances do not depend on the seed; components on the dims shared with
    // the other task are damped, keeping the tasks correlated without letting
    // cross-task interference grow with the separation
    const double overlap_damping = 0.45;
    auto class_means = [&](int classes, int width, int ov_lo, int ov_hi) {
        require(classes <= width, "dataset: class count exceeds subspace width");
        Matrix m(classes, width);
        for (int c = 0; c < classes; ++c) {
            for (int d = 0; d < width; ++d) m(c, d) = normal(rng);
            for (int prev = 0; prev < c; ++prev) {
                double dot = 0.0;
                for (int d = 0; d < width; ++d) dot += m(c, d) * m(prev, d);
                for (int d = 0; d < width; ++d) m(c, d) -= dot * m(prev, d);
            }
            double norm = 0.0;
            for (int d = 0; d < width; ++d) norm += m(c, d) * m(c, d);
            norm = std::sqrt(norm);
            require(norm > 1e-9, "dataset: degenerate class direction draw");
            for (int d = 0; d < width; ++d) m(c, d) /= norm;
        }
        for (int c = 0; c < classes; ++c) {
            for (int d = ov_lo; d < ov_hi; ++d) m(c, d) *= overlap_damping;
            double norm = 0.0;
            for (int d = 0; d < width; ++d) norm += m(c, d) * m(c, d);
            norm = std::sqrt(norm);
            for (int d = 0; d < width; ++d) m(c, d) = m(c, d) / norm * cfg.separation;
        }
        return m;
    };
    const Matrix mu1 =
        class_means(cfg.classes_task1, a_end - a_begin, b_begin - a_begin, a_end - a_begin);
    const Matrix mu2 = class_means(cfg.classes_task2, b_end - b_begin, 0, a_end - b_begin);

    Matrix inputs(cfg.samples, cfg.feature_dim);
    std::vector<int> y1(cfg.samples), y2(cfg.samples);
    for (int i = 0; i < cfg.samples; ++i) {
        y1[i] = pick1(rng);
        y2[i] = pick2(rng);
        for (int d = 0; d < cfg.feature_dim; ++d) inputs(i, d) = cfg.noise * normal(rng);
        for (int d = a_begin; d < a_end; ++d) inputs(i, d) += mu1(y1[i], d - a_begin);
        for (int d = b_begin; d < b_end; ++d) inputs(i, d) += mu2(y2[i], d - b_begin);
    }

    const int n_train = int(std::floor(cfg.train_fraction * cfg.samples));
    const int n_val = int(std::floor(cfg.val_fraction * cfg.samples));
    auto slice = [&](int begin, int end) {
        DataSplit s;
        s.inputs = Matrix(end - begin, cfg.feature_dim);
        s.labels.assign(2, std::vector<int>(end - begin));
        for (int i = begin; i < end; ++i) {
            for (int d = 0; d < cfg.feature_dim; ++d) s.inputs(i - begin, d) = inputs(i, d);
            s.labels[0][i - begin] = y1[i];
            s.labels[1][i - begin] = y2[i];
        }
        return s;
    };
    Dataset data;
    data.train = slice(0, n_train);
    data.val = slice(n_train, n_train + n_val);
    data.test = slice(n_train + n_val, cfg.samples);
    data.feature_dim = cfg.feature_dim;
    data.class_counts = {cfg.classes_task1, cfg.classes_task2};
    return data;
}

// ---------------------------------------------------------------------------
// sweep harness

struct SweepPlan {
    std::vector<double> k0_grid;  // empty: bi-objective simplex sweep
    int samples_per_k0 = 18;
    double archive_epsilon = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        require(samples_per_k0 >= 1, "sweep plan: samples_per_k0 must be >= 1");
        require(archive_epsilon >= 0.0, "sweep plan: archive epsilon must be >= 0");
        for (double k0 : k0_grid)
            require(k0 >= 0.0 && k0 < 1.0, "sweep plan: k0 values must lie in [0, 1)");
    }
};

/// Preference vectors of the plan: for each k0 of the grid, samples_per_k0
/// evenly spaced interior points of the simplex slice {k : k_0 = k0}. With an
/// empty grid (bi-objective problems) the slice is the whole simplex.
inline std::vector<PreferenceVector> build_preferences(const SweepPlan& plan,
                                                       std::size_t num_objectives) {
    plan.validate();
    require(num_objectives == 2 || num_objectives == 3,
            "sweep: only 2- and 3-objective plans are supported");
    std::vector<PreferenceVector> out;
    if (num_objectives == 2) {
        require(plan.k0_grid.empty(), "sweep: k0 grid requires 3 objectives");
        for (int j = 1; j <= plan.samples_per_k0; ++j) {
            const double w = double(j) / double(plan.samples_per_k0 + 1);
            out.push_back(PreferenceVector::make({w, 1.0 - w}));
        }
        return out;
    }
    require(!plan.k0_grid.empty(), "sweep: 3-objective plans need a k0 grid");
    for (double k0 : plan.k0_grid) {
        for (int j = 1; j <= plan.samples_per_k0; ++j) {
            const double w = double(j) / double(plan.samples_per_k0 + 1);
            const double k1 = (1.0 - k0) * w;
            out.push_back(PreferenceVector::make({k0, k1, 1.0 - k0 - k1}));
        }
    }
    return out;
}

struct RunOutcome {
    int index = -1;
    PreferenceVector preference;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    ObjectiveVector objectives;
    MetricsRecord metrics;
    std::string checkpoint;

    nlohmann::json to_json() const {
        nlohmann::json j{{"index", index}, {"k", preference.k}, {"seed", seed},
                         {"status", ok ? "done" : "failed"}};
        if (ok) {
            j["objectives"] = objectives;
            j["metrics"] = metrics.to_json();
            j["checkpoint"] = checkpoint;
        } else {
            j["error"] = error;
        }
        return j;
    }

    static RunOutcome from_json(const nlohmann::json& j) {
        RunOutcome r;
        r.index = j.at("index").get<int>();
        r.preference = PreferenceVector{j.at("k").get<std::vector<double>>()};
        r.seed = j.at("seed").get<std::uint64_t>();
        r.ok = j.at("status").get<std::string>() == "done";
        if (r.ok) {
            r.objectives = j.at("objectives").get<std::vector<double>>();
            r.metrics = MetricsRecord::from_json(j.at("metrics"));
            r.checkpoint = j.value("checkpoint", "");
        } else {
            r.error = j.value("error", "");
        }
        return r;
    }
};

using RunFn = std::function<RunOutcome(const PreferenceVector&, std::uint64_t, int)>;

struct SweepResult {
    ParetoArchive archive{0.0};
    std::vector<RunOutcome> runs;
};

/// Executes one solve per preference vector (bounded parallelism), then
/// builds the archive by inserting successful runs in index order through the
/// eps-nondominance rule. `prior` carries already-completed runs (by index)
/// when resuming.
inline SweepResult sweep(const SweepPlan& plan, std::size_t num_objectives, const RunFn& run,
                         int jobs = 1, const std::vector<RunOutcome>& prior = {}) {
    const auto preferences = build_preferences(plan, num_objectives);
    SweepResult result;
    result.archive = ParetoArchive(plan.archive_epsilon);
    result.runs.resize(preferences.size());

    std::vector<bool> done(preferences.size(), false);
    for (const auto& p : prior) {
        if (p.index >= 0 && p.index < int(preferences.size()) && p.ok &&
            p.preference.k == preferences[p.index].k) {
            result.runs[p.index] = p;
            done[p.index] = true;
        }
    }

    auto execute = [&](int i) {
        const std::uint64_t run_seed = mix_seed(plan.seed, std::uint64_t(i));
        RunOutcome out;
        try {
            out = run(preferences[i], run_seed, i);
            out.ok = true;
        } catch (const std::exception& e) {
            out.ok = false;
            out.error = e.what();
        }
        out.index = i;
        out.preference = preferences[i];
        out.seed = run_seed;
        result.runs[i] = std::move(out);
    };

    if (jobs <= 1) {
        for (std::size_t i = 0; i < preferences.size(); ++i)
            if (!done[i]) execute(int(i));
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= preferences.size()) return;
                if (!done[i]) execute(int(i));
            }
        };
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    for (const auto& r : result.runs) {
        if (!r.ok) continue;
        result.archive.insert(ArchiveEntry{r.preference, r.objectives, r.metrics, r.checkpoint});
    }
    return result;
}

// ---------------------------------------------------------------------------
// front report

struct FrontReport {
    std::vector<int> cluster_bin;            // per archive entry: floor(SR * 10), capped at 9
    std::vector<std::string> cluster_label;  // per bin id present, "SR [lo,hi)"
    std::vector<std::size_t> projected_kept; // entries surviving the 2D re-filter
    double generational_distance = std::numeric_limits<double>::quiet_NaN();
    std::string text;
};

inline int sparsity_bin(double sr) { return std::min(9, int(std::floor(sr * 10.0))); }

inline std::string sparsity_bin_label(int bin) {
    std::ostringstream s;
    s << "SR [" << bin * 10 << "%," << (bin + 1) * 10 << "%" << (bin == 9 ? "]" : ")");
    return s.str();
}

/// Cluster entries by sparsity rate, project onto the main objectives (drop
/// the sparsity coordinate when present, re-filter dominance in 2D), and
/// compute the generational distance to a known front.
inline FrontReport front_report(const ParetoArchive& archive, const AnalyticMOP* problem = nullptr) {
    if (archive.empty()) throw std::domain_error("front_report: empty archive");
    FrontReport rep;

    for (const auto& e : archive.entries()) rep.cluster_bin.push_back(sparsity_bin(e.metrics.sr));

    std::vector<ObjectiveVector> projected;
    const bool drop_first = archive.entries().front().objectives.size() > 2;
    for (const auto& e : archive.entries()) {
        ObjectiveVector p = e.objectives;
        if (drop_first) p.erase(p.begin());
        projected.push_back(std::move(p));
    }
    rep.projected_kept = pareto_filter(projected);

    if (problem && problem->front_samples) {
        const auto front = problem->front_samples(10001);
        double total = 0.0;
        for (const auto& e : archive.entries()) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& fp : front) {
                double d = 0.0;
                for (std::size_t i = 0; i < fp.size(); ++i)
                    d += (e.objectives[i] - fp[i]) * (e.objectives[i] - fp[i]);
                best = std::min(best, d);
            }
            total += std::sqrt(best);
        }
        rep.generational_distance = total / double(archive.size());
    }

    std::ostringstream text;
    text << "archive: " << archive.size() << " entries (epsilon=" << archive.epsilon() << ")\n";
    std::vector<int> bins(rep.cluster_bin);
    std::sort(bins.begin(), bins.end());
    bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
    text << "clusters by sparsity rate:\n";
    for (int b : bins) {
        std::size_t count = 0;
        double best_avg = 0.0;
        for (std::size_t i = 0; i < archive.size(); ++i) {
            if (rep.cluster_bin[i] != b) continue;
            ++count;
            best_avg = std::max(best_avg, archive.entries()[i].metrics.average_accuracy);
        }
        rep.cluster_label.push_back(sparsity_bin_label(b));
        text << "  " << sparsity_bin_label(b) << ": " << count
             << " entries, best avg accuracy " << format_double(best_avg) << "\n";
    }
    text << "2D projection onto main objectives keeps " << rep.projected_kept.size() << " of "
         << archive.size() << " entries\n";
    if (!std::isnan(rep.generational_distance))
        text << "generational distance to known front: "
             << format_double(rep.generational_distance) << "\n";
    rep.text = text.str();
    return rep;
}

/// Front CSV: `k0,k1,...,f0,f1,...,SR,CR,PS,cluster`.
inline std::string front_to_csv(const ParetoArchive& archive) {
    require(!archive.empty(), "front_to_csv: empty archive");
    const std::size_t kn = archive.entries().front().preference.size();
    const std::size_t fn = archive.entries().front().objectives.size();
    std::ostringstream out;
    for (std::size_t i = 0; i < kn; ++i) out << (i ? "," : "") << "k" << i;
    for (std::size_t i = 0; i < fn; ++i) out << ",f" << i;
    out << ",SR,CR,PS,cluster\n";
    for (const auto& e : archive.entries()) {
        for (std::size_t i = 0; i < kn; ++i) out << (i ? "," : "") << format_double(e.preference.k[i]);
        for (std::size_t i = 0; i < fn; ++i) out << "," << format_double(e.objectives[i]);
        out << "," << format_double(e.metrics.sr) << "," << format_double(e.metrics.cr) << ","
            << format_double(e.metrics.ps) << "," << sparsity_bin(e.metrics.sr) << "\n";
    }
    return out.str();
}

}  // namespace pforge
