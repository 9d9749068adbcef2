// Command implementations behind the pareto-forge binary: solve, sweep,
// filter, metrics, report. Configs are JSON files mirroring the library's
// config structs; every config is schema-validated (unknown keys rejected)
// before any artifact is written. Exit codes: 0 ok, 2 usage/config error,
// 3 numeric failure, 4 I/O failure.

#pragma once

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pareto_forge/archive.hpp"
#include "pareto_forge/bench.hpp"
#include "pareto_forge/common.hpp"
#include "pareto_forge/io.hpp"
#include "pareto_forge/net.hpp"
#include "pareto_forge/trainer.hpp"

namespace pforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::optional<std::string> out_dir;
    std::optional<int> jobs;
};

inline int jobs_default() {
    if (const char* env = std::getenv("PARETO_FORGE_JOBS")) {
        try {
            const int j = std::stoi(env);
            if (j >= 1) return j;
        } catch (const std::exception&) {
        }
    }
    return 1;
}

inline void check_keys(const json& j, const std::string& section,
                       const std::vector<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown field '" + key + "' in " + section);
    }
}

inline json load_config(const std::string& path) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const IoError& e) {
        throw ConfigError(std::string("cannot read config: ") + e.what());
    }
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// config sections

inline ALSolveOptions parse_solver(const json& j) {
    check_keys(j, "solver",
               {"mu0", "mu_factor", "mu_max", "outer_iterations", "inner_max_iters",
                "inner_tolerance", "feasibility_tolerance", "al_form"});
    ALSolveOptions o;
    o.mu0 = j.value("mu0", o.mu0);
    o.mu_factor = j.value("mu_factor", o.mu_factor);
    o.mu_max = j.value("mu_max", o.mu_max);
    o.outer_iterations = j.value("outer_iterations", o.outer_iterations);
    o.inner_max_iters = j.value("inner_max_iters", o.inner_max_iters);
    o.inner_tolerance = j.value("inner_tolerance", o.inner_tolerance);
    o.feasibility_tolerance = j.value("feasibility_tolerance", o.feasibility_tolerance);
    const std::string form = j.value("al_form", "inequality");
    if (form == "paper_literal")
        o.form = ALForm::paper_literal;
    else if (form == "inequality")
        o.form = ALForm::inequality;
    else
        throw ConfigError("solver.al_form must be 'inequality' or 'paper_literal'");
    o.validate();
    return o;
}

inline DatasetConfig parse_dataset(const json& j) {
    check_keys(j, "dataset",
               {"feature_dim", "classes_task1", "classes_task2", "samples", "seed", "separation",
                "noise", "train_fraction", "val_fraction"});
    DatasetConfig d;
    d.feature_dim = j.value("feature_dim", d.feature_dim);
    d.classes_task1 = j.value("classes_task1", d.classes_task1);
    d.classes_task2 = j.value("classes_task2", d.classes_task2);
    d.samples = j.value("samples", d.samples);
    d.seed = j.value("seed", d.seed);
    d.separation = j.value("separation", d.separation);
    d.noise = j.value("noise", d.noise);
    d.train_fraction = j.value("train_fraction", d.train_fraction);
    d.val_fraction = j.value("val_fraction", d.val_fraction);
    d.validate();
    return d;
}

inline TrainConfig parse_train(const json& j) {
    check_keys(j, "train",
               {"m1", "m2", "epochs_per_iter", "batch_size", "lr1", "lr1_decay", "lr2",
                "lr2_decay", "mu0", "mu_factor", "eta_min", "eta_max", "tau", "growl_beta1",
                "growl_beta2", "prox_step", "cluster_preference", "cluster_damping",
                "cluster_max_iter", "optimizer", "sgd_momentum", "al_form", "seed"});
    TrainConfig t;
    t.m1 = j.value("m1", t.m1);
    t.m2 = j.value("m2", t.m2);
    t.epochs_per_iter = j.value("epochs_per_iter", t.epochs_per_iter);
    t.batch_size = j.value("batch_size", t.batch_size);
    t.lr1 = j.value("lr1", t.lr1);
    t.lr1_decay = j.value("lr1_decay", t.lr1_decay);
    t.lr2 = j.value("lr2", t.lr2);
    t.lr2_decay = j.value("lr2_decay", t.lr2_decay);
    t.mu0 = j.value("mu0", t.mu0);
    t.mu_factor = j.value("mu_factor", t.mu_factor);
    t.eta_min = j.value("eta_min", t.eta_min);
    t.eta_max = j.value("eta_max", t.eta_max);
    t.tau = j.value("tau", t.tau);
    t.growl_beta1 = j.value("growl_beta1", t.growl_beta1);
    t.growl_beta2 = j.value("growl_beta2", t.growl_beta2);
    t.prox_step = j.value("prox_step", t.prox_step);
    t.cluster_preference = j.value("cluster_preference", t.cluster_preference);
    t.cluster_damping = j.value("cluster_damping", t.cluster_damping);
    t.cluster_max_iter = j.value("cluster_max_iter", t.cluster_max_iter);
    t.optimizer = j.value("optimizer", t.optimizer);
    t.sgd_momentum = j.value("sgd_momentum", t.sgd_momentum);
    t.al_form = j.value("al_form", t.al_form);
    t.seed = j.value("seed", t.seed);
    t.validate();
    return t;
}

inline MDMTNSpec parse_model(const json& j, const DatasetConfig& data) {
    check_keys(j, "model", {"architecture", "shared_widths", "monitor_widths", "output_widths"});
    const std::string arch = j.value("architecture", "mdmtn");
    if (arch != "mdmtn" && arch != "hps")
        throw ConfigError("model.architecture must be 'mdmtn' or 'hps'");
    MDMTNSpec spec;
    spec.input_dim = data.feature_dim;
    spec.shared_widths = j.value("shared_widths", std::vector<int>{64, 32});
    const std::vector<int> classes{data.classes_task1, data.classes_task2};
    if (j.contains("output_widths")) {
        spec.output_widths = j.at("output_widths").get<std::vector<std::vector<int>>>();
    } else {
        for (int c : classes) spec.output_widths.push_back({c});
    }
    if (spec.output_widths.size() != classes.size())
        throw ConfigError("model.output_widths must have one stack per task");
    for (std::size_t task = 0; task < classes.size(); ++task) {
        if (spec.output_widths[task].empty() || spec.output_widths[task].back() != classes[task])
            throw ConfigError("model.output_widths: stack " + std::to_string(task) +
                              " must end at the task's class count");
    }
    if (arch == "mdmtn") {
        if (j.contains("monitor_widths")) {
            spec.monitor_widths = j.at("monitor_widths").get<std::vector<std::vector<int>>>();
        } else {
            const int d = spec.shared_widths.back();
            spec.monitor_widths.assign(classes.size(), {d, d});
        }
    } else if (j.contains("monitor_widths")) {
        throw ConfigError("model.monitor_widths is not allowed for the hps architecture");
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    return spec;
}

inline PreferenceVector parse_preference(const json& cfg, std::size_t expected) {
    if (!cfg.contains("preference")) throw ConfigError("missing field 'preference'");
    std::vector<double> k;
    try {
        k = cfg.at("preference").get<std::vector<double>>();
    } catch (const json::exception&) {
        throw ConfigError("field 'preference' must be an array of numbers");
    }
    if (k.size() != expected)
        throw ConfigError("field 'preference' must have " + std::to_string(expected) +
                          " entries");
    try {
        return PreferenceVector::make(k);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("field 'preference': ") + e.what());
    }
}

inline ReferencePoint parse_reference(const json& cfg, std::size_t expected,
                                      std::vector<double> fallback) {
    std::vector<double> a = std::move(fallback);
    if (cfg.contains("reference")) {
        try {
            a = cfg.at("reference").get<std::vector<double>>();
        } catch (const json::exception&) {
            throw ConfigError("field 'reference' must be an array of numbers");
        }
    }
    if (a.size() != expected)
        throw ConfigError("field 'reference' must have " + std::to_string(expected) + " entries");
    return ReferencePoint{std::move(a)};
}

// ---------------------------------------------------------------------------
// solve

struct SolveArtifacts {
    fs::path metrics_json;
    fs::path run_log_csv;
    fs::path checkpoint;  // checkpoint.bin for models, solution.json for analytic solves
};

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

inline SolveArtifacts run_solve(const json& cfg, const Overrides& over) {
    check_keys(cfg, "solve config",
               {"problem", "preference", "reference", "epsilon_disturbance", "seed", "out_dir",
                "solver", "dataset", "model", "train"});
    const std::string problem_name = cfg.value("problem", "");
    if (problem_name.empty()) throw ConfigError("missing field 'problem'");
    std::string out_dir = over.out_dir.value_or(cfg.value("out_dir", ""));
    if (out_dir.empty()) throw ConfigError("missing field 'out_dir'");

    SolveArtifacts art;
    art.metrics_json = fs::path(out_dir) / "metrics.json";
    art.run_log_csv = fs::path(out_dir) / "run_log.csv";

    if (problem_name == "synthetic") {
        DatasetConfig dcfg = parse_dataset(cfg.value("dataset", json::object()));
        TrainConfig tcfg = parse_train(cfg.value("train", json::object()));
        const MDMTNSpec spec = parse_model(cfg.value("model", json::object()), dcfg);
        if (over.seed) tcfg.seed = *over.seed;
        else if (cfg.contains("seed")) tcfg.seed = cfg.at("seed").get<std::uint64_t>();

        ScalarizationConfig scal;
        scal.epsilon_disturbance = cfg.value("epsilon_disturbance", 1e-4);
        scal.preference = parse_preference(cfg, 3);
        scal.reference = parse_reference(cfg, 3, {0.0, 0.0, 0.0});
        scal.validate(3);

        const Dataset data = make_dataset(dcfg);
        const std::size_t probe_rows = std::min<std::size_t>(256, data.train.size());
        Matrix probe(probe_rows, data.feature_dim);
        for (std::size_t r = 0; r < probe_rows; ++r)
            for (int c = 0; c < data.feature_dim; ++c) probe(r, c) = data.train.inputs(r, c);
        ParamStore model = lsuv_init(spec, probe, mix_seed(tcfg.seed, 100));

        auto outcome = run_training(std::move(model), data, tcfg, scal);

        ensure_dir(out_dir);
        art.checkpoint = fs::path(out_dir) / "checkpoint.bin";
        write_text_file(art.checkpoint.string(), checkpoint_bytes(outcome.model, outcome.metrics));
        write_text_file(art.run_log_csv.string(), history_to_csv(outcome.history));
        json metrics = outcome.metrics.to_json();
        metrics["objectives"] = outcome.history.back().objectives;
        metrics["preference"] = scal.preference.k;
        metrics["saved_checkpoint"] = outcome.phase1.saved_checkpoint;
        write_text_file(art.metrics_json.string(), metrics.dump(2) + "\n");
        for (std::size_t i = 0; i < outcome.phase1.similarities.size(); ++i) {
            const auto path = fs::path(out_dir) /
                              ("similarity_" + outcome.phase1.cluster_layer_names[i] + ".csv");
            write_text_file(path.string(), similarity_to_csv(outcome.phase1.similarities[i]));
        }
        return art;
    }

    // analytic solve
    const AnalyticMOP problem = analytic_problem(problem_name);
    ALSolveOptions options = parse_solver(cfg.value("solver", json::object()));
    std::uint64_t seed = cfg.value("seed", std::uint64_t(0));
    if (over.seed) seed = *over.seed;

    ScalarizationConfig scal;
    scal.epsilon_disturbance = cfg.value("epsilon_disturbance", 1e-4);
    scal.preference = parse_preference(cfg, std::size_t(problem.objectives));
    scal.reference = parse_reference(cfg, std::size_t(problem.objectives),
                                     std::vector<double>(problem.objectives, -0.05));
    scal.validate(std::size_t(problem.objectives));

    std::mt19937_64 rng(mix_seed(seed, 3));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x0(problem.dim);
    for (double& v : x0) v = 0.5 * normal(rng);
    x0 = problem.clip(std::move(x0));

    const auto res = chebyshev_solve(problem, scal, x0, options);

    ensure_dir(out_dir);
    art.checkpoint = fs::path(out_dir) / "solution.json";
    std::size_t zero_coords = 0;
    for (double v : res.x)
        if (std::abs(v) < 1e-8) ++zero_coords;
    json solution{{"x", res.x}, {"t", res.t}, {"lambda", res.lambda},
                  {"objectives", res.objectives}, {"max_H", res.max_h},
                  {"feasible", res.feasible}};
    write_text_file(art.checkpoint.string(), solution.dump(2) + "\n");
    json metrics{{"SR", double(zero_coords) / double(res.x.size())}, {"CR", 1.0}, {"PS", 1.0},
                 {"objectives", res.objectives}, {"max_H", res.max_h},
                 {"feasible", res.feasible}, {"preference", scal.preference.k}};
    write_text_file(art.metrics_json.string(), metrics.dump(2) + "\n");
    std::ostringstream log;
    log << "outer,t,max_H,mu,al_value";
    for (int i = 0; i < problem.objectives; ++i) log << ",f" << i;
    log << "\n";
    for (const auto& rec : res.history) {
        log << rec.outer << "," << format_double(rec.t) << "," << format_double(rec.max_h) << ","
            << format_double(rec.mu) << "," << format_double(rec.al_value);
        for (double f : rec.objectives) log << "," << format_double(f);
        log << "\n";
    }
    write_text_file(art.run_log_csv.string(), log.str());
    return art;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArtifacts {
    fs::path manifest_json;
    fs::path archive_json;
    fs::path front_csv;
    fs::path report_txt;
    std::size_t runs_executed = 0;
    std::size_t runs_reused = 0;
};

inline SweepArtifacts run_sweep(const json& cfg, const Overrides& over) {
    check_keys(cfg, "sweep config",
               {"problem", "plan", "reference", "epsilon_disturbance", "out_dir", "jobs",
                "solver", "dataset", "model", "train"});
    const std::string problem_name = cfg.value("problem", "");
    if (problem_name.empty()) throw ConfigError("missing field 'problem'");
    std::string out_dir = over.out_dir.value_or(cfg.value("out_dir", ""));
    if (out_dir.empty()) throw ConfigError("missing field 'out_dir'");
    int jobs = over.jobs.value_or(cfg.value("jobs", jobs_default()));
    if (jobs < 1) throw ConfigError("jobs must be >= 1");

    const json plan_json = cfg.value("plan", json::object());
    check_keys(plan_json, "plan", {"k0_grid", "samples_per_k0", "archive_epsilon", "seed"});
    SweepPlan plan;
    plan.k0_grid = plan_json.value("k0_grid", std::vector<double>{});
    plan.samples_per_k0 = plan_json.value("samples_per_k0", plan.samples_per_k0);
    plan.archive_epsilon = plan_json.value("archive_epsilon", plan.archive_epsilon);
    plan.seed = plan_json.value("seed", plan.seed);
    if (over.epsilon) plan.archive_epsilon = *over.epsilon;
    plan.validate();

    const bool synthetic = problem_name == "synthetic";
    const std::size_t objectives =
        synthetic ? 3 : std::size_t(analytic_problem(problem_name).objectives);

    const double eps_dist = cfg.value("epsilon_disturbance", 1e-4);
    ReferencePoint reference = parse_reference(
        cfg, objectives, synthetic ? std::vector<double>(objectives, 0.0)
                                   : std::vector<double>(objectives, -0.05));

    RunFn runner;
    Dataset data;
    MDMTNSpec spec;
    TrainConfig tcfg;
    AnalyticMOP problem;
    ALSolveOptions options;
    const fs::path ckpt_dir = fs::path(out_dir) / "checkpoints";
    if (synthetic) {
        DatasetConfig dcfg = parse_dataset(cfg.value("dataset", json::object()));
        tcfg = parse_train(cfg.value("train", json::object()));
        spec = parse_model(cfg.value("model", json::object()), dcfg);
        data = make_dataset(dcfg);
        runner = [&, eps_dist](const PreferenceVector& k, std::uint64_t run_seed, int index) {
            ScalarizationConfig scal;
            scal.epsilon_disturbance = eps_dist;
            scal.preference = k;
            scal.reference = reference;
            TrainConfig run_cfg = tcfg;
            run_cfg.seed = run_seed;
            const std::size_t probe_rows = std::min<std::size_t>(256, data.train.size());
            Matrix probe(probe_rows, data.feature_dim);
            for (std::size_t r = 0; r < probe_rows; ++r)
                for (int c = 0; c < data.feature_dim; ++c) probe(r, c) = data.train.inputs(r, c);
            ParamStore model = lsuv_init(spec, probe, mix_seed(run_seed, 100));
            auto outcome = run_training(std::move(model), data, run_cfg, scal);

            RunOutcome out;
            const auto logits = forward_mdmtn(outcome.model, data.test.inputs);
            const auto losses = task_losses(logits, data.test.labels);
            out.objectives.push_back(outcome.history.back().objectives[0]);
            out.objectives.insert(out.objectives.end(), losses.begin(), losses.end());
            out.metrics = outcome.metrics;
            const auto path = ckpt_dir / ("run_" + std::to_string(index) + ".bin");
            write_text_file(path.string(), checkpoint_bytes(outcome.model, outcome.metrics));
            out.checkpoint = path.string();
            return out;
        };
    } else {
        problem = analytic_problem(problem_name);
        options = parse_solver(cfg.value("solver", json::object()));
        runner = [&, eps_dist](const PreferenceVector& k, std::uint64_t run_seed, int) {
            ScalarizationConfig scal;
            scal.epsilon_disturbance = eps_dist;
            scal.preference = k;
            scal.reference = reference;
            std::mt19937_64 rng(mix_seed(run_seed, 3));
            std::normal_distribution<double> normal(0.0, 1.0);
            std::vector<double> x0(problem.dim);
            for (double& v : x0) v = 0.5 * normal(rng);
            const auto res = chebyshev_solve(problem, scal, problem.clip(std::move(x0)), options);
            if (!res.feasible)
                throw NumericError("solve did not reach feasibility (max_H=" +
                                   format_double(res.max_h) + ")");
            RunOutcome out;
            out.objectives = res.objectives;
            std::size_t zero_coords = 0;
            for (double v : res.x)
                if (std::abs(v) < 1e-8) ++zero_coords;
            out.metrics.sr = double(zero_coords) / double(res.x.size());
            out.metrics.max_constraint = res.max_h;
            return out;
        };
    }

    // resume from an existing manifest when the plan matches
    SweepArtifacts art;
    art.manifest_json = fs::path(out_dir) / "manifest.json";
    art.archive_json = fs::path(out_dir) / "archive.json";
    art.front_csv = fs::path(out_dir) / "front.csv";
    art.report_txt = fs::path(out_dir) / "report.txt";

    std::vector<RunOutcome> prior;
    const json plan_dump{{"k0_grid", plan.k0_grid}, {"samples_per_k0", plan.samples_per_k0},
                         {"archive_epsilon", plan.archive_epsilon}, {"seed", plan.seed},
                         {"problem", problem_name}};
    if (fs::exists(art.manifest_json)) {
        try {
            const json manifest = json::parse(read_text_file(art.manifest_json.string()));
            if (manifest.value("plan", json::object()) == plan_dump)
                for (const auto& r : manifest.value("runs", json::array()))
                    prior.push_back(RunOutcome::from_json(r));
        } catch (const std::exception&) {
            // unreadable manifest: redo everything
        }
    }

    ensure_dir(out_dir);
    if (synthetic) ensure_dir(ckpt_dir);
    auto result = sweep(plan, objectives, runner, jobs, prior);
    art.runs_reused = prior.size();
    art.runs_executed = result.runs.size() - std::min(prior.size(), result.runs.size());

    json runs = json::array();
    for (const auto& r : result.runs) runs.push_back(r.to_json());
    write_text_file(art.manifest_json.string(),
                    json{{"plan", plan_dump}, {"runs", runs}}.dump(2) + "\n");
    write_text_file(art.archive_json.string(), result.archive.to_json().dump(2) + "\n");
    if (!result.archive.empty()) {
        write_text_file(art.front_csv.string(), front_to_csv(result.archive));
        const AnalyticMOP* known = synthetic ? nullptr : &problem;
        write_text_file(art.report_txt.string(), front_report(result.archive, known).text);
    }
    return art;
}

// ---------------------------------------------------------------------------
// filter / metrics / report

inline void run_filter(const std::string& in_csv, const std::string& out_csv, double epsilon) {
    const auto points = points_from_csv(read_text_file(in_csv));
    const auto kept = eps_nondominance_filter(points, epsilon);
    std::vector<ObjectiveVector> filtered;
    for (std::size_t i : kept) filtered.push_back(points[i]);
    write_text_file(out_csv, points_to_csv(filtered));
}

inline json run_metrics(const std::string& checkpoint_path) {
    const auto [params, stored] = checkpoint_from_bytes(read_text_file(checkpoint_path));
    MetricsRecord fresh = compute_metrics(params);
    fresh.task_accuracy = stored.task_accuracy;
    fresh.average_accuracy = stored.average_accuracy;
    fresh.max_constraint = stored.max_constraint;
    return fresh.to_json();
}

inline void run_report(const std::string& archive_path, const std::string& out_dir,
                       const std::string& problem_name = "") {
    const auto archive = ParetoArchive::from_json(json::parse(read_text_file(archive_path)));
    if (archive.empty()) throw std::domain_error("report: archive has no entries");
    AnalyticMOP problem;
    const AnalyticMOP* known = nullptr;
    if (!problem_name.empty() && problem_name != "synthetic") {
        problem = analytic_problem(problem_name);
        known = &problem;
    }
    const auto rep = front_report(archive, known);
    ensure_dir(out_dir);
    write_text_file((fs::path(out_dir) / "report.txt").string(), rep.text);
    write_text_file((fs::path(out_dir) / "front.csv").string(), front_to_csv(archive));
}

}  // namespace pforge::cli
