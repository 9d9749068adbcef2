// Minimal dense feedforward engine and the two multi-task architectures.
//
// MDMTN: a shared stack S, one lightweight monitor M_i per task (at most two
// layers, same output dimension as S), and per-task output stacks O_i fed by
// the learned fusion
//
//     O_i( alpha1_i * S(u) + alpha2_i * M_i(u) ).
//
// HPS (hard parameter sharing) is the same machinery without monitors and
// fusion. Hidden layers use the rectifier; logits are linear with the
// softmax folded into the cross-entropy. GrOWL regularization flags are
// false on input layers (first layer of the shared stack and of each
// monitor) and on every task-specific output layer; the fusion coefficients
// carry no regularization at all.
//
// backward() differentiates the augmented-Lagrangian-scalarized objective
// exactly, with one deliberate exception: the GrOWL objective L_0 enters the
// constraint stack as a value only (its minimization is handled by the
// proximity operator, never by gradients).

#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "pareto_forge/common.hpp"
#include "pareto_forge/matrix.hpp"
#include "pareto_forge/metrics.hpp"
#include "pareto_forge/scalarize.hpp"

namespace pforge {

enum class Role { input, shared, monitor, output };

inline std::string role_name(Role r) {
    switch (r) {
        case Role::input: return "input";
        case Role::shared: return "shared";
        case Role::monitor: return "monitor";
        case Role::output: return "output";
    }
    return "?";
}

inline Role role_from_name(const std::string& s) {
    if (s == "input") return Role::input;
    if (s == "shared") return Role::shared;
    if (s == "monitor") return Role::monitor;
    if (s == "output") return Role::output;
    throw IoError("unknown layer role: " + s);
}

struct DenseLayer {
    std::string name;
    Role role = Role::shared;
    int task = -1;  // owning task for monitor/output layers
    Matrix w;       // rows = previous width, cols = layer width
    std::vector<double> b;
    bool growl = false;
};

struct MDMTNSpec {
    int input_dim = 0;
    std::vector<int> shared_widths;                // last entry = fusion dimension D
    std::vector<std::vector<int>> monitor_widths;  // per task; empty vector = HPS-style task
    std::vector<std::vector<int>> output_widths;   // per task; last entry = class count

    int tasks() const { return int(output_widths.size()); }
    int fusion_dim() const { return shared_widths.back(); }
    bool has_monitors() const {
        for (const auto& m : monitor_widths)
            if (!m.empty()) return true;
        return false;
    }

    void validate() const {
        require(input_dim >= 1, "model: input_dim must be >= 1");
        require(!shared_widths.empty(), "model: shared stack must have at least one layer");
        require(!output_widths.empty(), "model: at least one task required");
        require(monitor_widths.empty() || monitor_widths.size() == output_widths.size(),
                "model: monitor_widths must be empty or per-task");
        for (const auto& m : monitor_widths) {
            require(m.size() <= 2, "model: monitors can have at most two layers");
            if (!m.empty())
                require(m.back() == fusion_dim(),
                        "model: monitor output dimension must equal the shared output dimension");
        }
        for (const auto& o : output_widths)
            require(!o.empty(), "model: output stack must have at least one layer");
        for (int wd : shared_widths) require(wd >= 1, "model: widths must be >= 1");
    }

    nlohmann::json to_json() const {
        return nlohmann::json{{"input_dim", input_dim},
                              {"shared_widths", shared_widths},
                              {"monitor_widths", monitor_widths},
                              {"output_widths", output_widths}};
    }

    static MDMTNSpec from_json(const nlohmann::json& j) {
        MDMTNSpec s;
        s.input_dim = j.at("input_dim").get<int>();
        s.shared_widths = j.at("shared_widths").get<std::vector<int>>();
        if (j.contains("monitor_widths"))
            s.monitor_widths = j.at("monitor_widths").get<std::vector<std::vector<int>>>();
        s.output_widths = j.at("output_widths").get<std::vector<std::vector<int>>>();
        s.validate();
        return s;
    }
};

/// All trainable parameters: layer matrices + biases, tagged with roles and
/// GrOWL flags, plus the per-task fusion coefficients (alpha1, alpha2).
struct ParamStore {
    MDMTNSpec spec;
    std::vector<DenseLayer> layers;
    std::vector<std::array<double, 2>> alpha;  // per task; empty when no monitors

    std::size_t flat_size() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.w.size() + l.b.size();
        return n + 2 * alpha.size();
    }

    std::vector<double> to_flat() const {
        std::vector<double> flat;
        flat.reserve(flat_size());
        for (const auto& l : layers) {
            flat.insert(flat.end(), l.w.data().begin(), l.w.data().end());
            flat.insert(flat.end(), l.b.begin(), l.b.end());
        }
        for (const auto& a : alpha) {
            flat.push_back(a[0]);
            flat.push_back(a[1]);
        }
        return flat;
    }

    void from_flat(const std::vector<double>& flat) {
        require(flat.size() == flat_size(), "from_flat: length mismatch");
        std::size_t pos = 0;
        for (auto& l : layers) {
            std::copy(flat.begin() + pos, flat.begin() + pos + l.w.size(), l.w.data().begin());
            pos += l.w.size();
            std::copy(flat.begin() + pos, flat.begin() + pos + l.b.size(), l.b.begin());
            pos += l.b.size();
        }
        for (auto& a : alpha) {
            a[0] = flat[pos++];
            a[1] = flat[pos++];
        }
    }

    ParamStore zeros_like() const {
        ParamStore g = *this;
        for (auto& l : g.layers) {
            std::fill(l.w.data().begin(), l.w.data().end(), 0.0);
            std::fill(l.b.begin(), l.b.end(), 0.0);
        }
        for (auto& a : g.alpha) a = {0.0, 0.0};
        return g;
    }

    std::vector<DenseLayer*> regularized_layers() {
        std::vector<DenseLayer*> out;
        for (auto& l : layers)
            if (l.growl) out.push_back(&l);
        return out;
    }
    std::vector<const DenseLayer*> regularized_layers() const {
        std::vector<const DenseLayer*> out;
        for (const auto& l : layers)
            if (l.growl) out.push_back(&l);
        return out;
    }

    DenseLayer& layer(const std::string& name) {
        for (auto& l : layers)
            if (l.name == name) return l;
        throw std::invalid_argument("no such layer: " + name);
    }
};

using Gradient = ParamStore;

/// Build the layer set (zero-valued) for a spec. Layer order is the forward
/// order: shared stack, monitors task by task, output stacks task by task.
inline ParamStore build_params(const MDMTNSpec& spec) {
    spec.validate();
    ParamStore p;
    p.spec = spec;
    int prev = spec.input_dim;
    for (std::size_t i = 0; i < spec.shared_widths.size(); ++i) {
        const bool is_input = (i == 0);
        p.layers.push_back({"shared." + std::to_string(i),
                            is_input ? Role::input : Role::shared, -1,
                            Matrix(prev, spec.shared_widths[i]),
                            std::vector<double>(spec.shared_widths[i], 0.0),
                            !is_input});
        prev = spec.shared_widths[i];
    }
    for (int task = 0; task < spec.tasks(); ++task) {
        if (spec.monitor_widths.empty() || spec.monitor_widths[task].empty()) continue;
        prev = spec.input_dim;
        const auto& widths = spec.monitor_widths[task];
        for (std::size_t i = 0; i < widths.size(); ++i) {
            const bool is_input = (i == 0);
            p.layers.push_back({"monitor" + std::to_string(task) + "." + std::to_string(i),
                                is_input ? Role::input : Role::monitor, task,
                                Matrix(prev, widths[i]), std::vector<double>(widths[i], 0.0),
                                !is_input});
            prev = widths[i];
        }
    }
    for (int task = 0; task < spec.tasks(); ++task) {
        prev = spec.fusion_dim();
        const auto& widths = spec.output_widths[task];
        for (std::size_t i = 0; i < widths.size(); ++i) {
            p.layers.push_back({"out" + std::to_string(task) + "." + std::to_string(i),
                                Role::output, task, Matrix(prev, widths[i]),
                                std::vector<double>(widths[i], 0.0), false});
            prev = widths[i];
        }
    }
    if (spec.has_monitors())
        p.alpha.assign(spec.tasks(), {0.5, 0.5});
    return p;
}

// ---------------------------------------------------------------------------
// forward / loss / backward

struct TaskBatch {
    Matrix inputs;                                 // batch x features
    std::vector<std::vector<int>> labels;          // per task: batch class ids

    void validate(int tasks) const {
        require(int(labels.size()) == tasks, "batch: label set count != task count");
        for (const auto& l : labels)
            require(l.size() == inputs.rows(), "batch: label count != batch size");
    }
};

namespace detail {

struct StackTrace {
    std::vector<Matrix> inputs;    // input to each layer
    std::vector<Matrix> preacts;   // pre-activation outputs
    Matrix output;                 // post-activation of the last layer
};

inline Matrix dense_forward(const DenseLayer& l, const Matrix& x) {
    if (x.cols() != l.w.rows())
        throw std::domain_error("shape mismatch at layer " + l.name + ": input width " +
                                std::to_string(x.cols()) + " vs " + std::to_string(l.w.rows()));
    Matrix z = matmul(x, l.w);
    for (std::size_t r = 0; r < z.rows(); ++r)
        for (std::size_t c = 0; c < z.cols(); ++c) z(r, c) += l.b[c];
    return z;
}

inline Matrix relu(const Matrix& z) {
    Matrix a = z;
    for (double& v : a.data()) v = std::max(0.0, v);
    return a;
}

/// Runs a contiguous stack of layers; rectifier after every layer unless it
/// is the final logits stack (relu_last = false leaves the last layer linear).
inline StackTrace run_stack(const std::vector<const DenseLayer*>& stack, const Matrix& x,
                            bool relu_last) {
    StackTrace t;
    Matrix cur = x;
    for (std::size_t i = 0; i < stack.size(); ++i) {
        t.inputs.push_back(cur);
        Matrix z = dense_forward(*stack[i], cur);
        t.preacts.push_back(z);
        cur = (relu_last || i + 1 < stack.size()) ? relu(z) : std::move(z);
    }
    t.output = cur;
    return t;
}

}  // namespace detail

struct ForwardTrace {
    detail::StackTrace shared;
    std::vector<detail::StackTrace> monitors;   // per task (empty trace when no monitor)
    std::vector<Matrix> fused;                  // per task: input to the output stack
    std::vector<detail::StackTrace> outputs;    // per task
    std::vector<Matrix> logits;                 // per task
};

inline std::vector<const DenseLayer*> stack_of(const ParamStore& p, Role role, int task) {
    std::vector<const DenseLayer*> out;
    for (const auto& l : p.layers) {
        const bool in_shared = (role == Role::shared) &&
                               (l.role == Role::shared || (l.role == Role::input && l.task < 0));
        const bool in_monitor = (role == Role::monitor) && l.task == task &&
                                (l.role == Role::monitor || l.role == Role::input);
        const bool in_output = (role == Role::output) && l.role == Role::output && l.task == task;
        if (in_shared || in_monitor || in_output) out.push_back(&l);
    }
    return out;
}

/// Per-task logits for the MDMTN (or HPS when the spec has no monitors).
inline std::vector<Matrix> forward_mdmtn(const ParamStore& p, const Matrix& inputs,
                                         ForwardTrace* trace = nullptr) {
    ForwardTrace local;
    ForwardTrace& t = trace ? *trace : local;
    t = ForwardTrace{};
    t.shared = detail::run_stack(stack_of(p, Role::shared, -1), inputs, true);
    const int tasks = p.spec.tasks();
    t.monitors.resize(tasks);
    t.fused.resize(tasks);
    t.outputs.resize(tasks);
    t.logits.resize(tasks);
    for (int task = 0; task < tasks; ++task) {
        auto monitor_stack = stack_of(p, Role::monitor, task);
        if (!monitor_stack.empty()) {
            t.monitors[task] = detail::run_stack(monitor_stack, inputs, true);
            const auto& a = p.alpha.at(task);
            Matrix fused(t.shared.output.rows(), t.shared.output.cols());
            for (std::size_t i = 0; i < fused.data().size(); ++i)
                fused.data()[i] = a[0] * t.shared.output.data()[i] +
                                  a[1] * t.monitors[task].output.data()[i];
            t.fused[task] = std::move(fused);
        } else {
            t.fused[task] = t.shared.output;
        }
        t.outputs[task] = detail::run_stack(stack_of(p, Role::output, task), t.fused[task], false);
        t.logits[task] = t.outputs[task].output;
    }
    return t.logits;
}

/// Hard parameter sharing forward: output stacks applied to the shared
/// features directly. The ParamStore must have no monitors.
inline std::vector<Matrix> forward_hps(const ParamStore& p, const Matrix& inputs,
                                       ForwardTrace* trace = nullptr) {
    require(!p.spec.has_monitors(), "forward_hps: spec has monitors");
    return forward_mdmtn(p, inputs, trace);
}

/// Mean cross-entropy per task (softmax folded in, log-sum-exp stabilized).
inline std::vector<double> task_losses(const std::vector<Matrix>& logits,
                                       const std::vector<std::vector<int>>& labels) {
    require(logits.size() == labels.size(), "task_losses: task count mismatch");
    std::vector<double> losses(logits.size(), 0.0);
    for (std::size_t task = 0; task < logits.size(); ++task) {
        const Matrix& z = logits[task];
        require(labels[task].size() == z.rows(), "task_losses: label count != batch size");
        double sum = 0.0;
        for (std::size_t r = 0; r < z.rows(); ++r) {
            const int y = labels[task][r];
            if (y < 0 || std::size_t(y) >= z.cols())
                throw std::domain_error("task_losses: label " + std::to_string(y) +
                                        " out of range for " + std::to_string(z.cols()) +
                                        " classes");
            double zmax = z(r, 0);
            for (std::size_t c = 1; c < z.cols(); ++c) zmax = std::max(zmax, z(r, c));
            double lse = 0.0;
            for (std::size_t c = 0; c < z.cols(); ++c) lse += std::exp(z(r, c) - zmax);
            sum += std::log(lse) + zmax - z(r, y);
        }
        losses[task] = sum / double(z.rows());
    }
    return losses;
}

struct BackwardResult {
    Gradient grad;
    double dt = 0.0;                 // d L_A / d t
    std::vector<double> h;           // constraint stack at the evaluated point
    std::vector<double> losses;      // task losses L_1..L_m
    double al_value = 0.0;
};

namespace detail {

/// Backprop through a stack recorded by run_stack; returns gradient w.r.t.
/// the stack input and accumulates parameter gradients.
inline Matrix stack_backward(const std::vector<const DenseLayer*>& stack, const StackTrace& t,
                             Matrix d_out, bool relu_last, Gradient& grad) {
    for (std::size_t ii = stack.size(); ii-- > 0;) {
        const bool has_relu = relu_last || ii + 1 < stack.size();
        if (has_relu) {
            for (std::size_t i = 0; i < d_out.data().size(); ++i)
                if (t.preacts[ii].data()[i] <= 0.0) d_out.data()[i] = 0.0;
        }
        DenseLayer& gl = grad.layer(stack[ii]->name);
        Matrix dw = matmul_at_b(t.inputs[ii], d_out);
        for (std::size_t i = 0; i < dw.data().size(); ++i) gl.w.data()[i] += dw.data()[i];
        for (std::size_t c = 0; c < d_out.cols(); ++c) {
            double s = 0.0;
            for (std::size_t r = 0; r < d_out.rows(); ++r) s += d_out(r, c);
            gl.b[c] += s;
        }
        d_out = matmul_a_bt(d_out, stack[ii]->w);
    }
    return d_out;
}

}  // namespace detail

/// Exact reverse-mode gradient of al_loss(wc_constraints(L, t), state) where
/// L = (l0_value, task_losses(params, batch)) and l0_value is treated as a
/// constant. Covers every network parameter, the fusion coefficients, and t.
inline BackwardResult backward(const ParamStore& p, const TaskBatch& batch,
                               const ForwardTrace& trace, double l0_value,
                               const ScalarizationConfig& cfg, const ALState& state,
                               ALForm form = ALForm::inequality) {
    const int tasks = p.spec.tasks();
    batch.validate(tasks);

    BackwardResult res;
    res.losses = task_losses(trace.logits, batch.labels);
    ObjectiveVector objectives;
    objectives.push_back(l0_value);
    objectives.insert(objectives.end(), res.losses.begin(), res.losses.end());
    res.h = wc_constraints(objectives, state.t, cfg);
    res.al_value = al_loss(res.h, state, form);
    const auto cw = al_constraint_weights(res.h, state, form);
    res.dt = al_t_derivative(cw);

    // d L_A / d L_i for the task losses: every constraint row carries
    // k_q * eps through the shared deviation sum, row i also carries k_i.
    const double eps = cfg.epsilon_disturbance;
    std::vector<double> loss_coeff(tasks, 0.0);
    for (int i = 0; i < tasks; ++i) {
        double c = 0.0;
        for (std::size_t q = 0; q < cw.size(); ++q)
            c += cw[q] * cfg.preference.k[q] * ((int(q) == i + 1 ? 1.0 : 0.0) + eps);
        loss_coeff[i] = c;
    }

    res.grad = p.zeros_like();
    Matrix d_shared_out(trace.shared.output.rows(), trace.shared.output.cols());

    for (int task = 0; task < tasks; ++task) {
        const Matrix& z = trace.logits[task];
        const double scale = loss_coeff[task] / double(z.rows());
        Matrix dlogits(z.rows(), z.cols());
        for (std::size_t r = 0; r < z.rows(); ++r) {
            double zmax = z(r, 0);
            for (std::size_t c = 1; c < z.cols(); ++c) zmax = std::max(zmax, z(r, c));
            double lse = 0.0;
            for (std::size_t c = 0; c < z.cols(); ++c) lse += std::exp(z(r, c) - zmax);
            for (std::size_t c = 0; c < z.cols(); ++c) {
                const double softmax = std::exp(z(r, c) - zmax) / lse;
                dlogits(r, c) = scale * (softmax - (int(c) == batch.labels[task][r] ? 1.0 : 0.0));
            }
        }
        Matrix d_fused = detail::stack_backward(stack_of(p, Role::output, task),
                                                trace.outputs[task], std::move(dlogits), false,
                                                res.grad);
        auto monitor_stack = stack_of(p, Role::monitor, task);
        if (!monitor_stack.empty()) {
            const auto& a = p.alpha.at(task);
            double da1 = 0.0, da2 = 0.0;
            for (std::size_t i = 0; i < d_fused.data().size(); ++i) {
                da1 += d_fused.data()[i] * trace.shared.output.data()[i];
                da2 += d_fused.data()[i] * trace.monitors[task].output.data()[i];
                d_shared_out.data()[i] += a[0] * d_fused.data()[i];
            }
            res.grad.alpha[task][0] += da1;
            res.grad.alpha[task][1] += da2;
            Matrix d_monitor = d_fused;
            for (double& v : d_monitor.data()) v *= a[1];
            detail::stack_backward(monitor_stack, trace.monitors[task], std::move(d_monitor),
                                   true, res.grad);
        } else {
            for (std::size_t i = 0; i < d_fused.data().size(); ++i)
                d_shared_out.data()[i] += d_fused.data()[i];
        }
    }
    detail::stack_backward(stack_of(p, Role::shared, -1), trace.shared, std::move(d_shared_out),
                           true, res.grad);

    for (const auto& l : res.grad.layers) {
        if (!all_finite(l.w.data()) || !all_finite(l.b))
            throw NumericError("non-finite gradient at layer " + l.name);
    }
    return res;
}

// ---------------------------------------------------------------------------
// initialization

/// Gaussian matrix with orthonormalized columns (rows when cols > rows),
/// the starting point for layer-sequential unit-variance initialization.
inline Matrix orthonormal_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = normal(rng);
    const bool by_cols = rows >= cols;
    const std::size_t vectors = by_cols ? cols : rows;
    const std::size_t dim = by_cols ? rows : cols;
    auto at = [&](std::size_t vec, std::size_t d) -> double& {
        return by_cols ? m(d, vec) : m(vec, d);
    };
    for (std::size_t v = 0; v < vectors; ++v) {
        for (std::size_t u = 0; u < v; ++u) {
            double dot = 0.0;
            for (std::size_t d = 0; d < dim; ++d) dot += at(v, d) * at(u, d);
            for (std::size_t d = 0; d < dim; ++d) at(v, d) -= dot * at(u, d);
        }
        double norm = 0.0;
        for (std::size_t d = 0; d < dim; ++d) norm += at(v, d) * at(v, d);
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw NumericError("orthonormal_matrix: degenerate draw");
        for (std::size_t d = 0; d < dim; ++d) at(v, d) /= norm;
    }
    return m;
}

/// Layer-sequential unit-variance init: orthonormal start, then each layer's
/// weights are rescaled until the pre-activation variance on the probe batch
/// is within tol of 1.
inline ParamStore lsuv_init(const MDMTNSpec& spec, const Matrix& probe, std::uint64_t seed,
                            double tol = 0.05, int max_passes = 10) {
    require(probe.rows() >= 2, "lsuv_init: probe batch must have at least 2 samples");
    ParamStore p = build_params(spec);
    std::mt19937_64 rng(seed);
    for (auto& l : p.layers) l.w = orthonormal_matrix(l.w.rows(), l.w.cols(), rng);

    auto variance = [](const Matrix& z) {
        double mean = 0.0;
        for (double v : z.data()) mean += v;
        mean /= double(z.data().size());
        double var = 0.0;
        for (double v : z.data()) var += (v - mean) * (v - mean);
        return var / double(z.data().size());
    };

    // visit stacks in forward order so each layer sees settled inputs
    auto tune_stack = [&](const std::vector<const DenseLayer*>& stack, const Matrix& x,
                          bool relu_last) {
        Matrix cur = x;
        for (std::size_t i = 0; i < stack.size(); ++i) {
            DenseLayer& l = p.layer(stack[i]->name);
            Matrix z;
            for (int pass = 0; pass < max_passes; ++pass) {
                z = detail::dense_forward(l, cur);
                const double var = variance(z);
                if (var < 1e-12) throw std::domain_error("lsuv_init: zero-variance probe at " + l.name);
                if (std::abs(var - 1.0) <= tol) break;
                const double s = 1.0 / std::sqrt(var);
                for (double& v : l.w.data()) v *= s;
            }
            z = detail::dense_forward(l, cur);
            cur = (relu_last || i + 1 < stack.size()) ? detail::relu(z) : z;
        }
        return cur;
    };

    const Matrix shared_out = tune_stack(stack_of(p, Role::shared, -1), probe, true);
    for (int task = 0; task < spec.tasks(); ++task) {
        auto monitor_stack = stack_of(p, Role::monitor, task);
        Matrix fused = shared_out;
        if (!monitor_stack.empty()) {
            const Matrix monitor_out = tune_stack(monitor_stack, probe, true);
            const auto& a = p.alpha.at(task);
            for (std::size_t i = 0; i < fused.data().size(); ++i)
                fused.data()[i] = a[0] * shared_out.data()[i] + a[1] * monitor_out.data()[i];
        }
        tune_stack(stack_of(p, Role::output, task), fused, false);
    }
    return p;
}

// ---------------------------------------------------------------------------
// checkpoint format
//
//   bytes 0..7    little-endian uint64: JSON header length in bytes
//   bytes 8..8+N  UTF-8 JSON header {format, model, layers, alphas, metrics,
//                 param_count}
//   remainder     param_count little-endian float64 values: for each layer in
//                 declaration order the weight matrix row-major then the
//                 bias, then per task (alpha1, alpha2)

inline std::string checkpoint_bytes(const ParamStore& p, const MetricsRecord& metrics) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : p.layers)
        layers.push_back({{"name", l.name},
                          {"role", role_name(l.role)},
                          {"task", l.task},
                          {"rows", l.w.rows()},
                          {"cols", l.w.cols()},
                          {"growl", l.growl}});
    const auto flat = p.to_flat();
    nlohmann::json header{{"format", "pareto-forge-checkpoint-v1"},
                          {"model", p.spec.to_json()},
                          {"layers", layers},
                          {"alpha_tasks", p.alpha.size()},
                          {"metrics", metrics.to_json()},
                          {"param_count", flat.size()}};
    const std::string head = header.dump();
    std::string bytes;
    bytes.reserve(8 + head.size() + flat.size() * 8);
    const std::uint64_t len = head.size();
    for (int i = 0; i < 8; ++i) bytes.push_back(char((len >> (8 * i)) & 0xff));
    bytes += head;
    for (double v : flat) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        for (int i = 0; i < 8; ++i) bytes.push_back(char((bits >> (8 * i)) & 0xff));
    }
    return bytes;
}

inline std::pair<ParamStore, MetricsRecord> checkpoint_from_bytes(const std::string& bytes) {
    if (bytes.size() < 8) throw IoError("checkpoint: truncated length prefix");
    std::uint64_t len = 0;
    for (int i = 0; i < 8; ++i) len |= std::uint64_t(std::uint8_t(bytes[i])) << (8 * i);
    if (bytes.size() < 8 + len) throw IoError("checkpoint: truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(8, len));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("checkpoint: bad header: ") + e.what());
    }
    if (header.value("format", "") != "pareto-forge-checkpoint-v1")
        throw IoError("checkpoint: unknown format tag");
    ParamStore p = build_params(MDMTNSpec::from_json(header.at("model")));
    // growl flags / roles round-trip through the header in case they were overridden
    const auto& layers = header.at("layers");
    if (layers.size() != p.layers.size()) throw IoError("checkpoint: layer count mismatch");
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        p.layers[i].growl = layers[i].at("growl").get<bool>();
        p.layers[i].role = role_from_name(layers[i].at("role").get<std::string>());
    }
    const std::size_t count = header.at("param_count").get<std::size_t>();
    if (count != p.flat_size()) throw IoError("checkpoint: parameter count mismatch");
    if (bytes.size() != 8 + len + count * 8) throw IoError("checkpoint: truncated parameter block");
    std::vector<double> flat(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int bite = 0; bite < 8; ++bite)
            bits |= std::uint64_t(std::uint8_t(bytes[8 + len + i * 8 + bite])) << (8 * bite);
        std::memcpy(&flat[i], &bits, 8);
    }
    p.from_flat(flat);
    return {std::move(p), MetricsRecord::from_json(header.at("metrics"))};
}

}  // namespace pforge
