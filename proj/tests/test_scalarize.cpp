#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pareto_forge/dominance.hpp"
#include "pareto_forge/scalarize.hpp"

using namespace pforge;

namespace {

ScalarizationConfig cfg2(double eps, std::vector<double> k, std::vector<double> a) {
    return ScalarizationConfig{eps, PreferenceVector::make(std::move(k)),
                               ReferencePoint{std::move(a)}};
}

}  // namespace

TEST_CASE("wc_constraints plain form", "[scalarize]") {
    const auto h = wc_constraints({2.0, 4.0}, 1.0, cfg2(0.0, {0.5, 0.5}, {0.0, 0.0}));
    REQUIRE(h[0] == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(h[1] == Catch::Approx(1.0));
}

TEST_CASE("wc_constraints with disturbance", "[scalarize]") {
    const auto h = wc_constraints({2.0, 4.0}, 1.0, cfg2(0.1, {0.5, 0.5}, {0.0, 0.0}));
    REQUIRE(h[0] == Catch::Approx(0.3));
    REQUIRE(h[1] == Catch::Approx(1.3));
}

TEST_CASE("default disturbance is 1e-4", "[scalarize]") {
    REQUIRE(ScalarizationConfig{}.epsilon_disturbance == 1e-4);
}

TEST_CASE("reference violation names the offending index", "[scalarize]") {
    const auto cfg = cfg2(0.0, {0.5, 0.5}, {0.0, 3.0});  // a_1 = 3 >= L_1
    try {
        wc_constraints({2.0, 3.0}, 0.0, cfg);
        FAIL("expected domain_error");
    } catch (const std::domain_error& e) {
        REQUIRE(std::string(e.what()).find("objective 1") != std::string::npos);
    }
}

TEST_CASE("zero disturbance reduces to plain weighted Chebyshev", "[scalarize][property]") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(0.1, 5.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = 2 + trial % 3;
        ObjectiveVector L(m);
        std::vector<double> k(m), a(m);
        double ksum = 0;
        for (std::size_t i = 0; i < m; ++i) {
            L[i] = unif(rng);
            a[i] = L[i] - unif(rng);
            k[i] = unif(rng);
            ksum += k[i];
        }
        for (std::size_t i = 0; i + 1 < m; ++i) k[i] /= ksum;
        k[m - 1] = 1.0;
        for (std::size_t i = 0; i + 1 < m; ++i) k[m - 1] -= k[i];
        const double t = unif(rng);
        const auto h = wc_constraints(L, t, cfg2(0.0, k, a));
        for (std::size_t i = 0; i < m; ++i)
            REQUIRE(h[i] == Catch::Approx(k[i] * (L[i] - a[i]) - t).margin(1e-12));
    }
}

TEST_CASE("al_loss with zero residual returns t", "[scalarize]") {
    ALState s{3.0, {3.0, 7.0}, 5.0, 0};
    REQUIRE(al_loss({0.0, 0.0}, s, ALForm::inequality) == Catch::Approx(3.0));
    REQUIRE(al_loss({0.0, 0.0}, s, ALForm::paper_literal) == Catch::Approx(3.0));
}

TEST_CASE("al_loss literal form", "[scalarize]") {
    ALState s{0.0, {1.0, 1.0}, 2.0, 0};
    REQUIRE(al_loss({1.0, -1.0}, s, ALForm::paper_literal) == Catch::Approx(2.0));
}

TEST_CASE("al_loss inactive constraints approach t", "[scalarize]") {
    ALState s{1.75, {0.0, 0.0, 0.0}, 4.0, 0};
    REQUIRE(al_loss({-10.0, -3.0, -0.5}, s) == 1.75);
}

TEST_CASE("al_update clamps multipliers and scales mu", "[scalarize]") {
    ALState s{0.0, {0.1, 0.2}, 1.0, 4};
    const auto next = al_update({-0.5, 0.3}, s, MultiplierSchedule{});
    REQUIRE(next.lambda[0] == 0.0);
    REQUIRE(next.lambda[1] == Catch::Approx(0.5));
    REQUIRE(next.mu == Catch::Approx(0.5));
    REQUIRE(next.iteration == 5);
}

TEST_CASE("mu halving matches the training profile", "[scalarize]") {
    ALState s{0.0, {0.0}, 1e-4, 0};
    REQUIRE(al_update({0.0}, s, MultiplierSchedule{}).mu == Catch::Approx(5e-5));
}

TEST_CASE("identity schedule keeps mu, still updates lambda", "[scalarize]") {
    ALState s{0.0, {0.2}, 2.0, 0};
    const auto next = al_update({0.4}, s, MultiplierSchedule{1.0});
    REQUIRE(next.mu == 2.0);
    REQUIRE(next.lambda[0] == Catch::Approx(1.0));
}

TEST_CASE("constraint weights and t derivative", "[scalarize]") {
    ALState s{0.0, {1.0, 0.0}, 2.0, 0};
    const auto w = al_constraint_weights({0.5, -3.0}, s);
    REQUIRE(w[0] == Catch::Approx(2.0));
    REQUIRE(w[1] == 0.0);
    REQUIRE(al_t_derivative(w) == Catch::Approx(-1.0));
}

TEST_CASE("preference vector invariants", "[scalarize]") {
    REQUIRE_THROWS_AS(PreferenceVector::make({0.5, 0.6}), std::invalid_argument);
    REQUIRE_THROWS_AS(PreferenceVector::make({-0.1, 1.1}), std::invalid_argument);
    REQUIRE_NOTHROW(PreferenceVector::make({0.0, 0.4, 0.6}));
}

// Finite-set analogue of the scalarization optimality theorem: any minimizer
// of the Chebyshev value over a finite set is weakly Pareto optimal in the
// set; with a positive disturbance it is Pareto optimal.
TEST_CASE("finite-set scalarization optimality", "[scalarize][property]") {
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t m = 2 + trial % 2;
        const std::size_t n = 2 + std::size_t(unif(rng) * 30);
        std::vector<ObjectiveVector> pts(n, ObjectiveVector(m));
        for (auto& p : pts)
            for (auto& v : p) v = unif(rng);
        std::vector<double> k(m);
        double ksum = 0;
        for (auto& v : k) {
            v = 0.05 + unif(rng);
            ksum += v;
        }
        for (std::size_t i = 0; i + 1 < m; ++i) k[i] /= ksum;
        k[m - 1] = 1.0;
        for (std::size_t i = 0; i + 1 < m; ++i) k[m - 1] -= k[i];
        std::vector<double> a(m, -0.1);

        for (double eps : {0.0, 1e-3}) {
            const auto cfg = cfg2(eps, k, a);
            std::size_t arg = 0;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                const double v = chebyshev_value(pts[i], cfg);
                if (v < best) {
                    best = v;
                    arg = i;
                }
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (j == arg) continue;
                bool strictly_better_everywhere = true;
                for (std::size_t i = 0; i < m; ++i)
                    strictly_better_everywhere =
                        strictly_better_everywhere && pts[j][i] < pts[arg][i];
                REQUIRE_FALSE(strictly_better_everywhere);  // weak Pareto optimality
                if (eps > 0.0) REQUIRE_FALSE(dominates(pts[j], pts[arg]));
            }
        }
    }
}

// Finite-set version of the weighted-sum limitation: on a concave front the
// Chebyshev scalarization selects interior points no weighted sum selects.
TEST_CASE("chebyshev reaches concave-front interior, weighted sum does not", "[scalarize]") {
    std::vector<ObjectiveVector> front;
    for (int i = 0; i <= 100; ++i) {
        const double x = double(i) / 100.0;
        front.push_back({x, 1.0 - x * x});
    }
    std::vector<bool> chebyshev_hit(front.size(), false), wsum_hit(front.size(), false);
    for (int j = 1; j <= 11; ++j) {
        const double w = double(j) / 12.0;
        const auto cfg = cfg2(1e-4, {w, 1.0 - w}, {-0.05, -0.05});
        std::size_t arg_c = 0, arg_w = 0;
        double best_c = std::numeric_limits<double>::infinity(), best_w = best_c;
        for (std::size_t i = 0; i < front.size(); ++i) {
            const double vc = chebyshev_value(front[i], cfg);
            const double vw = w * front[i][0] + (1.0 - w) * front[i][1];
            if (vc < best_c) {
                best_c = vc;
                arg_c = i;
            }
            if (vw < best_w) {
                best_w = vw;
                arg_w = i;
            }
        }
        chebyshev_hit[arg_c] = true;
        wsum_hit[arg_w] = true;
    }
    int interior_c = 0, interior_w = 0;
    for (std::size_t i = 1; i + 1 < front.size(); ++i) {
        interior_c += chebyshev_hit[i] && front[i][0] > 0.05 && front[i][0] < 0.95;
        interior_w += wsum_hit[i] && front[i][0] > 0.05 && front[i][0] < 0.95;
    }
    REQUIRE(interior_c >= 5);
    REQUIRE(interior_w == 0);
}

TEST_CASE("initial t makes plain constraints inactive or tight", "[scalarize]") {
    const auto cfg = cfg2(0.0, {0.3, 0.7}, {0.0, 0.0});
    const ObjectiveVector L{2.0, 1.0};
    const double t0 = initial_t(L, cfg);
    const auto h = wc_constraints(L, t0, cfg);
    for (double hi : h) REQUIRE(hi <= 1e-12);
    REQUIRE(*std::max_element(h.begin(), h.end()) == Catch::Approx(0.0).margin(1e-12));
}
