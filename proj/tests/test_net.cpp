#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "oracles.hpp"
#include "pareto_forge/net.hpp"
#include "pareto_forge/optim.hpp"

using namespace pforge;

namespace {

MDMTNSpec small_mdmtn() {
    MDMTNSpec spec;
    spec.input_dim = 6;
    spec.shared_widths = {8, 5};
    spec.monitor_widths = {{5}, {5, 5}};
    spec.output_widths = {{3}, {4}};
    return spec;
}

MDMTNSpec small_hps() {
    MDMTNSpec spec;
    spec.input_dim = 6;
    spec.shared_widths = {8, 5};
    spec.output_widths = {{3}, {4}};
    return spec;
}

ParamStore random_params(const MDMTNSpec& spec, std::uint64_t seed) {
    ParamStore p = build_params(spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 0.5);
    auto flat = p.to_flat();
    for (double& v : flat) v = normal(rng);
    p.from_flat(flat);
    for (auto& a : p.alpha) a = {0.5, 0.5};
    return p;
}

Matrix random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = normal(rng);
    return m;
}

ScalarizationConfig scal3() {
    return ScalarizationConfig{1e-4, PreferenceVector::make({0.1, 0.5, 0.4}),
                               ReferencePoint{{-0.1, -0.1, -0.1}}};
}

}  // namespace

TEST_CASE("growl flags follow layer roles", "[net]") {
    const auto p = build_params(small_mdmtn());
    REQUIRE_FALSE(p.layers[0].growl);  // shared input layer
    REQUIRE(p.layers[0].role == Role::input);
    REQUIRE(p.layers[1].growl);  // shared hidden
    const auto& m0 = p.layers[2];  // task-0 monitor, single layer
    REQUIRE(m0.name == "monitor0.0");
    REQUIRE_FALSE(m0.growl);
    const auto& m1b = p.layers[4];  // task-1 monitor, second layer
    REQUIRE(m1b.name == "monitor1.1");
    REQUIRE(m1b.growl);
    for (const auto& l : p.layers)
        if (l.role == Role::output) REQUIRE_FALSE(l.growl);
    REQUIRE(p.alpha.size() == 2);
    REQUIRE(p.flat_size() == p.to_flat().size());
}

TEST_CASE("monitor depth and fusion dimension are enforced", "[net]") {
    auto spec = small_mdmtn();
    spec.monitor_widths[0] = {5, 5, 5};
    REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = small_mdmtn();
    spec.monitor_widths[0] = {4};
    REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("forward shapes", "[net]") {
    const auto p = random_params(small_mdmtn(), 1);
    const auto logits = forward_mdmtn(p, random_batch(4, 6, 2));
    REQUIRE(logits.size() == 2);
    REQUIRE(logits[0].rows() == 4);
    REQUIRE(logits[0].cols() == 3);
    REQUIRE(logits[1].cols() == 4);
}

TEST_CASE("forward rejects shape mismatches with the layer name", "[net]") {
    const auto p = random_params(small_mdmtn(), 1);
    try {
        forward_mdmtn(p, random_batch(4, 5, 2));
        FAIL("expected domain_error");
    } catch (const std::domain_error& e) {
        REQUIRE(std::string(e.what()).find("shared.0") != std::string::npos);
    }
}

TEST_CASE("fusion degeneracy: alpha (1,0) equals hard parameter sharing", "[net]") {
    const auto hps = random_params(small_hps(), 7);
    auto mdmtn = random_params(small_mdmtn(), 8);
    // copy the shared and output stacks from the HPS model
    for (auto& l : mdmtn.layers) {
        if (l.role == Role::monitor || (l.role == Role::input && l.task >= 0)) continue;
        for (const auto& src : hps.layers)
            if (src.name == l.name) {
                l.w = src.w;
                l.b = src.b;
            }
    }
    for (auto& a : mdmtn.alpha) a = {1.0, 0.0};
    const auto batch = random_batch(5, 6, 9);
    const auto a = forward_mdmtn(mdmtn, batch);
    const auto b = forward_hps(hps, batch);
    for (std::size_t task = 0; task < a.size(); ++task) REQUIRE(a[task] == b[task]);
}

TEST_CASE("fusion degeneracy: alpha (0,1) is the monitor-only path", "[net]") {
    auto p = random_params(small_mdmtn(), 11);
    for (auto& a : p.alpha) a = {0.0, 1.0};
    ForwardTrace trace;
    forward_mdmtn(p, random_batch(3, 6, 12), &trace);
    for (int task = 0; task < 2; ++task)
        REQUIRE(trace.fused[task] == trace.monitors[task].output);
}

TEST_CASE("forward_hps rejects monitored specs and is deterministic", "[net]") {
    const auto p = random_params(small_mdmtn(), 13);
    REQUIRE_THROWS_AS(forward_hps(p, random_batch(2, 6, 1)), std::invalid_argument);
    const auto q = random_params(small_hps(), 14);
    const auto batch = random_batch(1, 6, 15);
    REQUIRE(forward_hps(q, batch) == forward_hps(q, batch));
    REQUIRE(forward_hps(q, batch)[0].rows() == 1);
}

TEST_CASE("task losses", "[net]") {
    Matrix uniform(1, 5, 0.7);  // constant logits
    REQUIRE(task_losses({uniform}, {{2}})[0] == Catch::Approx(std::log(5.0)));

    Matrix confident(1, 3);
    confident(0, 1) = 50.0;
    REQUIRE(task_losses({confident}, {{1}})[0] == Catch::Approx(0.0).margin(1e-12));

    Matrix two(2, 3);
    two(0, 0) = 1.0;
    two(1, 2) = 2.0;
    Matrix first(1, 3), second(1, 3);
    first(0, 0) = 1.0;
    second(0, 2) = 2.0;
    const double mean = task_losses({two}, {{0, 1}})[0];
    const double l1 = task_losses({first}, {{0}})[0];
    const double l2 = task_losses({second}, {{1}})[0];
    REQUIRE(mean == Catch::Approx(0.5 * (l1 + l2)));

    REQUIRE_THROWS_AS(task_losses({uniform}, {{5}}), std::domain_error);
    REQUIRE_THROWS_AS(task_losses({uniform}, {{-1}}), std::domain_error);
}

TEST_CASE("backward reduces to the plain cross-entropy gradient", "[net]") {
    // one task dominant (k = (0,1)-ish via lambda), tiny mu: constraint weight
    // w_1 ~ 1 makes d L_A / d logits the bare softmax-minus-onehot
    MDMTNSpec spec;
    spec.input_dim = 2;
    spec.shared_widths = {2};
    spec.output_widths = {{2}};
    auto p = build_params(spec);
    auto flat = p.to_flat();
    std::mt19937_64 rng(17);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : flat) v = normal(rng);
    p.from_flat(flat);

    TaskBatch batch;
    batch.inputs = random_batch(1, 2, 18);
    batch.labels = {{1}};
    ForwardTrace trace;
    forward_mdmtn(p, batch.inputs, &trace);

    ScalarizationConfig cfg{0.0, PreferenceVector::make({0.0, 1.0}), ReferencePoint{{-1.0, -1.0}}};
    ALState state{0.0, {0.0, 1.0}, 1e-12, 0};
    const auto res = backward(p, batch, trace, 0.5, cfg, state);

    // hand-derived: dlogits = softmax - onehot; dW_out = fused^T dlogits
    const Matrix& z = trace.logits[0];
    const double zmax = std::max(z(0, 0), z(0, 1));
    const double e0 = std::exp(z(0, 0) - zmax), e1 = std::exp(z(0, 1) - zmax);
    const double p0 = e0 / (e0 + e1);
    const auto& fused = trace.fused[0];
    const auto& gout = res.grad.layers.back();
    for (std::size_t r = 0; r < 2; ++r) {
        REQUIRE(gout.w(r, 0) == Catch::Approx(fused(0, r) * p0).margin(1e-9));
        REQUIRE(gout.w(r, 1) == Catch::Approx(fused(0, r) * -p0).margin(1e-9));
    }
}

TEST_CASE("backward matches central finite differences", "[net][oracle]") {
    const auto spec = small_mdmtn();
    auto p = random_params(spec, 21);
    REQUIRE(p.flat_size() <= 500);

    TaskBatch batch;
    batch.inputs = random_batch(6, 6, 22);
    batch.labels = {{0, 1, 2, 0, 1, 2}, {3, 0, 1, 2, 3, 0}};

    const auto cfg = scal3();
    ALState state{0.4, {0.3, 0.8, 0.2}, 2.0, 0};
    const double l0_fixed = 0.9;

    ForwardTrace trace;
    forward_mdmtn(p, batch.inputs, &trace);
    const auto res = backward(p, batch, trace, l0_fixed, cfg, state);
    const auto grad_flat = res.grad.to_flat();

    auto objective = [&](const std::vector<double>& flat) {
        ParamStore q = p;
        q.from_flat(flat);
        const auto logits = forward_mdmtn(q, batch.inputs);
        const auto losses = task_losses(logits, batch.labels);
        ObjectiveVector L{l0_fixed};
        L.insert(L.end(), losses.begin(), losses.end());
        const auto h = wc_constraints(L, state.t, cfg);
        return al_loss(h, state);
    };

    const auto flat = p.to_flat();
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<std::size_t> coord(0, flat.size() - 1);
    int checked = 0;
    for (int i = 0; i < 120; ++i) {
        const std::size_t c = coord(rng);
        const double fd = oracle::central_difference(objective, flat, c, 1e-5);
        const double an = grad_flat[c];
        const double rel = std::abs(fd - an) / std::max({1e-6, std::abs(fd), std::abs(an)});
        REQUIRE(rel < 1e-4);
        ++checked;
    }
    REQUIRE(checked >= 100);

    // t derivative against finite differences too
    auto objective_t = [&](const std::vector<double>& tv) {
        ALState s2 = state;
        s2.t = tv[0];
        const auto logits = forward_mdmtn(p, batch.inputs);
        const auto losses = task_losses(logits, batch.labels);
        ObjectiveVector L{l0_fixed};
        L.insert(L.end(), losses.begin(), losses.end());
        return al_loss(wc_constraints(L, s2.t, cfg), s2);
    };
    const double fd_t = oracle::central_difference(objective_t, {state.t}, 0, 1e-6);
    REQUIRE(std::abs(fd_t - res.dt) / std::max(1.0, std::abs(fd_t)) < 1e-6);
}

TEST_CASE("t derivative is exactly one when constraints are inactive", "[net]") {
    const auto spec = small_hps();
    auto p = random_params(spec, 31);
    TaskBatch batch;
    batch.inputs = random_batch(2, 6, 32);
    batch.labels = {{0, 1}, {2, 3}};
    ForwardTrace trace;
    forward_mdmtn(p, batch.inputs, &trace);
    ScalarizationConfig cfg{0.0, PreferenceVector::make({0.2, 0.4, 0.4}),
                            ReferencePoint{{-0.1, -0.1, -0.1}}};
    ALState state{100.0, {0.0, 0.0, 0.0}, 1.0, 0};  // huge t: all H_i < 0
    const auto res = backward(p, batch, trace, 0.3, cfg, state);
    REQUIRE(res.dt == 1.0);
    for (double g : res.grad.to_flat()) REQUIRE(g == 0.0);
}

TEST_CASE("lsuv drives pre-activation variances to one", "[net]") {
    const auto spec = small_mdmtn();
    const auto probe = random_batch(64, 6, 41);
    const auto p = lsuv_init(spec, probe, 42);

    // recompute per-layer pre-activation variance in forward order
    auto variance_of = [](const Matrix& z) {
        double mean = 0;
        for (double v : z.data()) mean += v;
        mean /= double(z.data().size());
        double var = 0;
        for (double v : z.data()) var += (v - mean) * (v - mean);
        return var / double(z.data().size());
    };
    ForwardTrace trace;
    forward_mdmtn(p, probe, &trace);
    for (const auto& z : trace.shared.preacts) {
        REQUIRE(variance_of(z) >= 0.95);
        REQUIRE(variance_of(z) <= 1.05);
    }
    for (const auto& stack : trace.monitors)
        for (const auto& z : stack.preacts) {
            REQUIRE(variance_of(z) >= 0.95);
            REQUIRE(variance_of(z) <= 1.05);
        }
}

TEST_CASE("lsuv is deterministic and rejects degenerate probes", "[net]") {
    const auto spec = small_hps();
    const auto probe = random_batch(32, 6, 43);
    const auto a = lsuv_init(spec, probe, 7);
    const auto b = lsuv_init(spec, probe, 7);
    REQUIRE(a.to_flat() == b.to_flat());
    REQUIRE_THROWS_AS(lsuv_init(spec, Matrix(8, 6, 0.0), 7), std::domain_error);
}

TEST_CASE("lsuv weight scale behaves like 1/sqrt(fan_in)", "[net][oracle]") {
    MDMTNSpec spec;
    spec.input_dim = 32;
    spec.shared_widths = {32};
    spec.output_widths = {{2}};
    const auto probe = random_batch(256, 32, 44);  // unit-variance Gaussian probe
    const auto p = lsuv_init(spec, probe, 45);
    const auto& w = p.layers[0].w;
    double rms = 0;
    for (double v : w.data()) rms += v * v;
    rms = std::sqrt(rms / double(w.size()));
    const double expected = 1.0 / std::sqrt(32.0);
    REQUIRE(rms == Catch::Approx(expected).epsilon(0.4));
}

TEST_CASE("sgd with zero gradient keeps parameters", "[net]") {
    std::vector<double> params{1.0, -2.0};
    auto state = SgdState::make(2, 0.0);
    sgd_step(params, {0.0, 0.0}, state, 0.1);
    REQUIRE(params == std::vector<double>{1.0, -2.0});
    REQUIRE_THROWS_AS(sgd_step(params, {0.0, 0.0}, state, 0.0), std::invalid_argument);
}

TEST_CASE("adam first step has the closed form", "[net]") {
    std::vector<double> params{0.0, 0.0};
    auto state = AdamState::make(2);
    const std::vector<double> g{0.3, -2.0};
    adam_step(params, g, state, 0.01);
    for (std::size_t i = 0; i < 2; ++i)
        REQUIRE(params[i] == Catch::Approx(-0.01 * g[i] / (std::abs(g[i]) + 1e-8)));
    REQUIRE_THROWS_AS(adam_step(params, g, state, -1.0), std::invalid_argument);
}

TEST_CASE("checkpoint bytes round trip exactly", "[net]") {
    const auto p = random_params(small_mdmtn(), 51);
    MetricsRecord metrics;
    metrics.sr = 0.25;
    metrics.task_accuracy = {0.9, 0.7};
    metrics.average_accuracy = 0.8;
    const auto bytes = checkpoint_bytes(p, metrics);
    const auto [q, m2] = checkpoint_from_bytes(bytes);
    REQUIRE(q.to_flat() == p.to_flat());
    REQUIRE(q.layers.size() == p.layers.size());
    for (std::size_t i = 0; i < q.layers.size(); ++i) {
        REQUIRE(q.layers[i].growl == p.layers[i].growl);
        REQUIRE(q.layers[i].name == p.layers[i].name);
    }
    REQUIRE(m2.sr == 0.25);
    REQUIRE(m2.task_accuracy == metrics.task_accuracy);

    REQUIRE_THROWS_AS(checkpoint_from_bytes(bytes.substr(0, 20)), IoError);
    REQUIRE_THROWS_AS(checkpoint_from_bytes("garbage"), IoError);
}
