// Two-phase training loop.
//
// Phase 1 (sparsity-inducing and parameter-tying): for M1 outer iterations of
// s epochs each, minimize the augmented Lagrangian of the scalarized
// objective over (parameters, t); at the end of every epoch apply the GrOWL
// proximity operator and row thresholding to each regularized layer, capped
// by the per-layer maximum sparsity rate eta2; checkpoint whenever the
// average validation accuracy over the main tasks improves while model
// sparsity is at least eta1; after every iteration update the multipliers.
// Clusters of surviving correlated rows are then identified per layer on the
// carried checkpoint.
//
// Phase 2 (parameter sharing / retraining): same loop with fresh multipliers
// for at most M2 iterations, restricted to the surviving connectivities
// (pruned rows stay zero), with the proximity step replaced by cluster-mean
// substitution after every epoch.
//
// With a zero sparsity weight (k_0 = 0) the proximity operator, thresholding
// and clustering are disabled and the loop degenerates to plain scalarized
// multi-task training (SR = 0, CR = PS = 1).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "pareto_forge/cluster.hpp"
#include "pareto_forge/common.hpp"
#include "pareto_forge/data.hpp"
#include "pareto_forge/growl.hpp"
#include "pareto_forge/io.hpp"
#include "pareto_forge/metrics.hpp"
#include "pareto_forge/net.hpp"
#include "pareto_forge/optim.hpp"
#include "pareto_forge/scalarize.hpp"

namespace pforge {

struct TrainConfig {
    int m1 = 3;               // phase-1 outer iterations
    int m2 = 10;              // phase-2 outer iterations (maximum)
    int epochs_per_iter = 3;  // s
    int batch_size = 64;

    double lr1 = 2.5e-3;      // phase-1 learning rate and per-iteration decay
    double lr1_decay = 0.5;
    double lr2 = 2.5e-3;      // phase-2
    double lr2_decay = 0.5;

    double mu0 = 2.5e-5;      // augmentation coefficient start
    double mu_factor = 0.5;   // halved per iteration, per the training profile

    double eta_min = 0.2;      // minimal sparsity rate for a checkpoint to qualify
    double eta_max = 0.8;      // per-layer cap to avoid emptied layers
    double tau = 1e-3;         // row-norm threshold
    double growl_beta1 = 0.02; // spike pattern (beta1 + beta2, beta2, ...)
    double growl_beta2 = 0.05;
    double prox_step = -1.0;   // < 0: use the current learning rate

    double cluster_preference = 0.7;
    double cluster_damping = 0.9;
    int cluster_max_iter = 200;

    std::string optimizer = "adam";  // or "sgd"
    double sgd_momentum = 0.0;
    std::string al_form = "inequality";  // or "paper_literal"
    std::uint64_t seed = 0;

    void validate() const {
        require(m1 >= 1 && m2 >= 1 && epochs_per_iter >= 1, "train config: M1, M2, s must be >= 1");
        require(batch_size >= 1, "train config: batch_size must be >= 1");
        require(lr1 > 0.0 && lr2 > 0.0, "train config: learning rates must be positive");
        require(lr1_decay > 0.0 && lr2_decay > 0.0, "train config: lr decays must be positive");
        require(mu0 > 0.0 && mu_factor > 0.0, "train config: mu0 and mu_factor must be positive");
        require(eta_min <= eta_max, "train config: eta_min must be <= eta_max");
        require(eta_min >= 0.0 && eta_max <= 1.0, "train config: sparsity range must be in [0,1]");
        require(tau >= 0.0, "train config: tau must be >= 0");
        require(growl_beta1 > 0.0 && growl_beta2 > 0.0, "train config: growl betas must be positive");
        require(optimizer == "adam" || optimizer == "sgd", "train config: unknown optimizer");
        require(al_form == "inequality" || al_form == "paper_literal",
                "train config: unknown al_form");
    }

    ALForm form() const {
        return al_form == "paper_literal" ? ALForm::paper_literal : ALForm::inequality;
    }

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"m1", m1}, {"m2", m2}, {"epochs_per_iter", epochs_per_iter},
            {"batch_size", batch_size}, {"lr1", lr1}, {"lr1_decay", lr1_decay},
            {"lr2", lr2}, {"lr2_decay", lr2_decay}, {"mu0", mu0}, {"mu_factor", mu_factor},
            {"eta_min", eta_min}, {"eta_max", eta_max}, {"tau", tau},
            {"growl_beta1", growl_beta1}, {"growl_beta2", growl_beta2},
            {"prox_step", prox_step}, {"cluster_preference", cluster_preference},
            {"cluster_damping", cluster_damping}, {"cluster_max_iter", cluster_max_iter},
            {"optimizer", optimizer}, {"sgd_momentum", sgd_momentum}, {"al_form", al_form},
            {"seed", seed}};
    }
};

/// Accuracy per task plus the unweighted average.
inline std::pair<std::vector<double>, double> evaluate(const ParamStore& params,
                                                       const DataSplit& split) {
    require(split.size() > 0, "evaluate: empty dataset");
    split.validate();
    const auto logits = forward_mdmtn(params, split.inputs);
    std::vector<double> acc(logits.size(), 0.0);
    for (std::size_t task = 0; task < logits.size(); ++task) {
        std::size_t correct = 0;
        const Matrix& z = logits[task];
        for (std::size_t r = 0; r < z.rows(); ++r) {
            std::size_t arg = 0;
            for (std::size_t c = 1; c < z.cols(); ++c)
                if (z(r, c) > z(r, arg)) arg = c;
            if (int(arg) == split.labels[task][r]) ++correct;
        }
        acc[task] = double(correct) / double(z.rows());
    }
    double avg = 0.0;
    for (double a : acc) avg += a;
    avg /= double(acc.size());
    return {acc, avg};
}

/// SR / CR / PS over every trainable parameter. Uniqueness is exact bit
/// equality among nonzero values, which is what cluster tying produces.
inline MetricsRecord compute_metrics(const ParamStore& params) {
    const auto flat = params.to_flat();
    std::size_t zero = 0;
    std::unordered_set<std::uint64_t> unique;
    unique.reserve(flat.size());
    for (double v : flat) {
        if (v == 0.0) {
            ++zero;
            continue;
        }
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        unique.insert(bits);
    }
    MetricsRecord m;
    const double total = double(flat.size());
    const double nonzero = total - double(zero);
    m.sr = double(zero) / total;
    // all-zero stores have no unique nonzero value; identities do not apply at SR = 1
    m.ps = unique.empty() ? 1.0 : nonzero / double(unique.size());
    m.cr = unique.empty() ? 1.0 : total / double(unique.size());
    return m;
}

struct EpochRecord {
    int phase = 1;
    int iteration = 0;
    int epoch = 0;
    ObjectiveVector objectives;  // L_0 .. L_m on the training split
    double t = 0.0;
    double max_h = 0.0;
    double mu = 0.0;
    double sr = 0.0;
    std::vector<double> val_accuracy;
};

/// Run log CSV: iteration, epoch, L0..Lm, t, max_H, mu, SR, per-task val
/// accuracy.
inline std::string history_to_csv(const std::vector<EpochRecord>& history) {
    std::ostringstream out;
    require(!history.empty(), "history_to_csv: empty history");
    const std::size_t m1 = history.front().objectives.size();
    const std::size_t tasks = history.front().val_accuracy.size();
    out << "phase,iteration,epoch";
    for (std::size_t i = 0; i < m1; ++i) out << ",L" << i;
    out << ",t,max_H,mu,SR";
    for (std::size_t i = 0; i < tasks; ++i) out << ",val_acc" << (i + 1);
    out << "\n";
    for (const auto& r : history) {
        out << r.phase << "," << r.iteration << "," << r.epoch;
        for (double v : r.objectives) out << "," << format_double(v);
        out << "," << format_double(r.t) << "," << format_double(r.max_h) << ","
            << format_double(r.mu) << "," << format_double(r.sr);
        for (double v : r.val_accuracy) out << "," << format_double(v);
        out << "\n";
    }
    return out.str();
}

struct Phase1Result {
    ParamStore model;                        // best checkpoint (or final, see saved_checkpoint)
    std::vector<ClusterAssignment> clusters; // per regularized layer, in layer order
    std::vector<std::string> cluster_layer_names;
    std::vector<SimilarityMatrix> similarities;
    std::vector<EpochRecord> history;
    bool saved_checkpoint = false;           // false: criterion never fired, final model carried
    double best_val_accuracy = 0.0;
};

namespace detail {

inline GrowlPattern layer_pattern(const DenseLayer& l, const TrainConfig& cfg) {
    return growl_spike(cfg.growl_beta1, cfg.growl_beta2, l.w.rows());
}

inline double growl_value(const ParamStore& p, const TrainConfig& cfg) {
    double total = 0.0;
    for (const auto* l : p.regularized_layers())
        total += growl_penalty_layer(l->w, layer_pattern(*l, cfg));
    return total;
}

inline ObjectiveVector objectives_on(const ParamStore& p, const DataSplit& split,
                                     const TrainConfig& cfg) {
    const auto logits = forward_mdmtn(p, split.inputs);
    const auto losses = task_losses(logits, split.labels);
    ObjectiveVector L;
    L.push_back(growl_value(p, cfg));
    L.insert(L.end(), losses.begin(), losses.end());
    return L;
}

/// Apply the per-epoch GrOWL step to one layer under the eta2 cap: prox
/// first (newly zeroed rows are kept zero smallest-norm-first while the cap
/// allows, the rest keep their shrunk values), then thresholding unless it
/// would push the layer past the cap.
inline void growl_epoch_step(DenseLayer& layer, const TrainConfig& cfg, double step) {
    const auto pre_norms = row_norms(layer.w);
    Matrix proxed = prox_growl(layer.w, layer_pattern(layer, cfg), step);

    const std::size_t rows = layer.w.rows();
    const auto cap = std::size_t(std::floor(cfg.eta_max * double(rows) + 1e-12));
    std::size_t already_zero = 0;
    for (std::size_t r = 0; r < rows; ++r)
        if (pre_norms[r] == 0.0) ++already_zero;

    std::vector<std::size_t> newly_zeroed;
    for (std::size_t r = 0; r < rows; ++r)
        if (pre_norms[r] != 0.0 && proxed.row_is_zero(r)) newly_zeroed.push_back(r);
    std::sort(newly_zeroed.begin(), newly_zeroed.end(),
              [&](std::size_t a, std::size_t b) { return pre_norms[a] < pre_norms[b]; });
    std::size_t budget = cap > already_zero ? cap - already_zero : 0;
    for (std::size_t i = 0; i < newly_zeroed.size(); ++i) {
        if (i < budget) continue;
        // cap reached: skip the zeroing, the row keeps its pre-prox values
        const std::size_t r = newly_zeroed[i];
        for (std::size_t c = 0; c < layer.w.cols(); ++c) proxed(r, c) = layer.w(r, c);
    }
    layer.w = std::move(proxed);

    auto [thresholded, zeroed] = threshold_rows(layer.w, cfg.tau);
    std::size_t zero_after = 0;
    for (std::size_t r = 0; r < rows; ++r)
        if (thresholded.row_is_zero(r)) ++zero_after;
    if (zero_after <= cap) layer.w = std::move(thresholded);
}

struct OptimizerSlot {
    AdamState adam;
    SgdState sgd;
    std::string kind;

    static OptimizerSlot make(const TrainConfig& cfg, std::size_t n) {
        OptimizerSlot s;
        s.kind = cfg.optimizer;
        if (s.kind == "adam")
            s.adam = AdamState::make(n);
        else
            s.sgd = SgdState::make(n, cfg.sgd_momentum);
        return s;
    }

    void step(std::vector<double>& x, const std::vector<double>& g, double lr) {
        if (kind == "adam")
            adam_step(x, g, adam, lr);
        else
            sgd_step(x, g, sgd, lr);
    }
};

struct EpochLoop {
    ParamStore* params;
    const Dataset* data;
    const TrainConfig* cfg;
    const ScalarizationConfig* scal;
    OptimizerSlot* opt;
    std::mt19937_64* shuffle_rng;
    // phase-2 support mask and clusters (null in phase 1)
    const std::vector<std::vector<bool>>* frozen_rows = nullptr;

    ALState* state;
    double lr;

    /// One epoch of minibatch steps over (params, t); returns the constraint
    /// stack evaluated on the full training split afterwards.
    std::vector<double> run() {
        const std::size_t n = data->train.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), *shuffle_rng);

        for (std::size_t start = 0; start < n; start += cfg->batch_size) {
            const std::size_t stop = std::min(n, start + cfg->batch_size);
            TaskBatch batch;
            batch.inputs = Matrix(stop - start, data->feature_dim);
            batch.labels.assign(data->tasks(), {});
            for (std::size_t bi = 0; bi < stop - start; ++bi) {
                const std::size_t src = order[start + bi];
                for (int c = 0; c < data->feature_dim; ++c)
                    batch.inputs(bi, c) = data->train.inputs(src, c);
                for (int task = 0; task < data->tasks(); ++task)
                    batch.labels[task].push_back(data->train.labels[task][src]);
            }

            ForwardTrace trace;
            forward_mdmtn(*params, batch.inputs, &trace);
            const double l0 = growl_value(*params, *cfg);
            auto back = backward(*params, batch, trace, l0, *scal, *state, cfg->form());

            if (frozen_rows) mask_gradient(back.grad);

            auto flat = params->to_flat();
            auto gflat = back.grad.to_flat();
            flat.push_back(state->t);
            gflat.push_back(back.dt);
            opt->step(flat, gflat, lr);
            state->t = flat.back();
            flat.pop_back();
            params->from_flat(flat);

            if (frozen_rows) reapply_mask();
        }
        return wc_constraints(objectives_on(*params, data->train, *cfg), state->t, *scal);
    }

    void mask_gradient(Gradient& g) const {
        std::size_t reg_index = 0;
        for (auto& l : g.layers) {
            if (!l.growl) continue;
            const auto& mask = (*frozen_rows)[reg_index++];
            for (std::size_t r = 0; r < l.w.rows(); ++r)
                if (mask[r]) l.w.zero_row(r);
        }
    }

    void reapply_mask() {
        std::size_t reg_index = 0;
        for (auto* l : params->regularized_layers()) {
            const auto& mask = (*frozen_rows)[reg_index++];
            for (std::size_t r = 0; r < l->w.rows(); ++r)
                if (mask[r]) l->w.zero_row(r);
        }
    }
};

}  // namespace detail

/// Phase 1 of the training algorithm. `scal` fixes the preference vector,
/// reference point and disturbance for the whole run.
inline Phase1Result train_phase1(ParamStore model, const Dataset& data, const TrainConfig& cfg,
                                 const ScalarizationConfig& scal) {
    cfg.validate();
    scal.validate(std::size_t(data.tasks()) + 1);
    data.train.validate();
    data.val.validate();
    const bool growl_on = scal.preference.k[0] > 0.0;

    Phase1Result result;
    result.history.reserve(std::size_t(cfg.m1) * cfg.epochs_per_iter);

    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 1));
    auto opt = detail::OptimizerSlot::make(cfg, model.flat_size() + 1);
    ALState state = ALState::make(std::size_t(data.tasks()) + 1, cfg.mu0);
    MultiplierSchedule schedule{cfg.mu_factor};
    double lr = cfg.lr1;
    double best_acc = -std::numeric_limits<double>::infinity();

    for (int iteration = 1; iteration <= cfg.m1; ++iteration) {
        state.t = initial_t(detail::objectives_on(model, data.train, cfg), scal);
        std::vector<double> h_end;
        for (int epoch = 1; epoch <= cfg.epochs_per_iter; ++epoch) {
            detail::EpochLoop loop{&model, &data, &cfg, &scal, &opt, &shuffle_rng,
                                   nullptr, &state, lr};
            h_end = loop.run();

            if (growl_on) {
                const double prox_step = cfg.prox_step > 0.0 ? cfg.prox_step : lr;
                for (auto* layer : model.regularized_layers())
                    detail::growl_epoch_step(*layer, cfg, prox_step);
                h_end = wc_constraints(detail::objectives_on(model, data.train, cfg), state.t,
                                       scal);
            }

            const auto [acc, avg] = evaluate(model, data.val);
            const auto metrics = compute_metrics(model);
            EpochRecord rec;
            rec.phase = 1;
            rec.iteration = iteration;
            rec.epoch = epoch;
            rec.objectives = detail::objectives_on(model, data.train, cfg);
            rec.t = state.t;
            rec.max_h = *std::max_element(h_end.begin(), h_end.end());
            rec.mu = state.mu;
            rec.sr = metrics.sr;
            rec.val_accuracy = acc;
            result.history.push_back(rec);

            const bool sparsity_ok = !growl_on || metrics.sr >= cfg.eta_min;
            if (avg > best_acc && sparsity_ok) {
                best_acc = avg;
                result.model = model;
                result.saved_checkpoint = true;
                result.best_val_accuracy = avg;
            }
        }
        state = al_update(h_end, state, schedule);
        lr *= cfg.lr1_decay;
    }

    if (!result.saved_checkpoint) result.model = model;  // carry the final model, flagged

    if (growl_on) {
        for (const auto* layer : result.model.regularized_layers()) {
            if (layer->w.rows() > 0) {
                bool any_nonzero = false;
                for (std::size_t r = 0; r < layer->w.rows() && !any_nonzero; ++r)
                    any_nonzero = !layer->w.row_is_zero(r);
                if (!any_nonzero)
                    throw NumericError("all rows pruned in layer " + layer->name +
                                       "; eta_max misconfigured");
            }
            auto sim = row_similarity(layer->w);
            result.clusters.push_back(affinity_propagation(
                sim, cfg.cluster_preference, cfg.cluster_damping,
                std::size_t(cfg.cluster_max_iter), 15, layer->w.rows()));
            result.cluster_layer_names.push_back(layer->name);
            result.similarities.push_back(std::move(sim));
        }
    }
    return result;
}

struct TrainOutcome {
    ParamStore model;
    MetricsRecord metrics;          // on the test split
    std::vector<EpochRecord> history;
    Phase1Result phase1;
    ALState final_state;
};

/// Phase 2: retrain the surviving connectivities with cluster-mean tying
/// after every epoch. Pruned rows never return.
inline TrainOutcome train_phase2(Phase1Result phase1, const Dataset& data,
                                 const TrainConfig& cfg, const ScalarizationConfig& scal) {
    cfg.validate();
    TrainOutcome out;
    out.model = phase1.model;
    out.history = phase1.history;

    const auto reg_layers = out.model.regularized_layers();
    if (!phase1.clusters.empty())
        require(phase1.clusters.size() == reg_layers.size(),
                "train_phase2: cluster set count != regularized layer count");
    std::vector<std::vector<bool>> frozen;
    for (std::size_t i = 0; i < reg_layers.size(); ++i) {
        std::vector<bool> mask(reg_layers[i]->w.rows(), false);
        for (std::size_t r = 0; r < mask.size(); ++r) mask[r] = reg_layers[i]->w.row_is_zero(r);
        if (!phase1.clusters.empty())
            require(phase1.clusters[i].labels.size() == mask.size(),
                    "train_phase2: cluster labels do not match layer shape");
        frozen.push_back(std::move(mask));
    }

    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 2));
    auto opt = detail::OptimizerSlot::make(cfg, out.model.flat_size() + 1);
    ALState state = ALState::make(std::size_t(data.tasks()) + 1, cfg.mu0);
    MultiplierSchedule schedule{cfg.mu_factor};
    double lr = cfg.lr2;

    auto tie_all = [&]() {
        if (phase1.clusters.empty()) return;
        std::size_t reg_index = 0;
        for (auto* layer : out.model.regularized_layers()) {
            layer->w = tie_clusters(layer->w, phase1.clusters[reg_index]);
            ++reg_index;
        }
    };

    for (int iteration = 1; iteration <= cfg.m2; ++iteration) {
        state.t = initial_t(detail::objectives_on(out.model, data.train, cfg), scal);
        std::vector<double> h_end;
        for (int epoch = 1; epoch <= cfg.epochs_per_iter; ++epoch) {
            detail::EpochLoop loop{&out.model, &data, &cfg, &scal, &opt, &shuffle_rng,
                                   &frozen, &state, lr};
            h_end = loop.run();
            tie_all();
            h_end = wc_constraints(detail::objectives_on(out.model, data.train, cfg), state.t,
                                   scal);

            const auto [acc, avg] = evaluate(out.model, data.val);
            EpochRecord rec;
            rec.phase = 2;
            rec.iteration = iteration;
            rec.epoch = epoch;
            rec.objectives = detail::objectives_on(out.model, data.train, cfg);
            rec.t = state.t;
            rec.max_h = *std::max_element(h_end.begin(), h_end.end());
            rec.mu = state.mu;
            rec.sr = compute_metrics(out.model).sr;
            rec.val_accuracy = acc;
            out.history.push_back(rec);
        }
        state = al_update(h_end, state, schedule);
        lr *= cfg.lr2_decay;
    }

    out.metrics = compute_metrics(out.model);
    const auto [acc, avg] = evaluate(out.model, data.test);
    out.metrics.task_accuracy = acc;
    out.metrics.average_accuracy = avg;
    if (!out.history.empty()) out.metrics.max_constraint = out.history.back().max_h;
    out.final_state = state;
    out.phase1 = std::move(phase1);
    return out;
}

/// Both phases end to end.
inline TrainOutcome run_training(ParamStore model, const Dataset& data, const TrainConfig& cfg,
                                 const ScalarizationConfig& scal) {
    auto phase1 = train_phase1(std::move(model), data, cfg, scal);
    return train_phase2(std::move(phase1), data, cfg, scal);
}

}  // namespace pforge
