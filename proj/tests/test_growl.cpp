#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>

#include "oracles.hpp"
#include "pareto_forge/growl.hpp"
#include "pareto_forge/net.hpp"

using namespace pforge;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
    return m;
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& v : m.data()) v = normal(rng);
    return m;
}

}  // namespace

TEST_CASE("growl_spike shape", "[growl]") {
    REQUIRE(growl_spike(1.0, 0.5, 3).theta == std::vector<double>{1.5, 0.5, 0.5});
    REQUIRE(growl_spike(0.7, 0.3, 1).theta == std::vector<double>{1.0});
    REQUIRE_NOTHROW(GrowlPattern::make(growl_spike(2.0, 0.25, 6).theta));
    REQUIRE_THROWS_AS(growl_spike(0.0, 1.0, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(growl_spike(1.0, -1.0, 2), std::invalid_argument);
}

TEST_CASE("pattern invariants", "[growl]") {
    REQUIRE_THROWS_AS(GrowlPattern::make({0.0, 0.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(GrowlPattern::make({1.0, 2.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(GrowlPattern::make({1.0, -0.5}), std::invalid_argument);
}

TEST_CASE("layer penalty sorts row norms descending", "[growl]") {
    const auto w = from_rows({{3, 0}, {0, 4}});
    REQUIRE(growl_penalty_layer(w, GrowlPattern::make({1.0, 0.5})) == Catch::Approx(5.5));
    REQUIRE(growl_penalty_layer(w, GrowlPattern::make({1.0, 0.0})) == Catch::Approx(4.0));
    // constant pattern reduces to group lasso
    REQUIRE(growl_penalty_layer(w, GrowlPattern::make({2.0, 2.0})) == Catch::Approx(14.0));
    REQUIRE_THROWS_AS(growl_penalty_layer(w, GrowlPattern::make({1.0})), std::domain_error);
}

TEST_CASE("growl_total additivity", "[growl]") {
    REQUIRE(growl_total({}) == 0.0);
    const auto w = from_rows({{3, 0}, {0, 4}});
    const auto pattern = GrowlPattern::make({1.0, 0.5});
    REQUIRE(growl_total({{&w, &pattern}}) == Catch::Approx(growl_penalty_layer(w, pattern)));
    REQUIRE(growl_total({{&w, &pattern}, {&w, &pattern}}) ==
            Catch::Approx(2.0 * growl_penalty_layer(w, pattern)));
}

TEST_CASE("penalty invariances", "[growl][property]") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 40; ++trial) {
        auto w = random_matrix(rng, 6, 5);
        const auto pattern = growl_spike(1.0, 0.3, 6);
        const double base = growl_penalty_layer(w, pattern);

        // positive homogeneity
        std::uniform_real_distribution<double> cd(0.1, 4.0);
        const double c = cd(rng);
        Matrix scaled = w;
        for (double& v : scaled.data()) v *= c;
        REQUIRE(growl_penalty_layer(scaled, pattern) == Catch::Approx(c * base));

        // row permutation invariance
        Matrix perm(w.rows(), w.cols());
        std::vector<std::size_t> order(w.rows());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t r = 0; r < w.rows(); ++r)
            for (std::size_t c2 = 0; c2 < w.cols(); ++c2) perm(r, c2) = w(order[r], c2);
        REQUIRE(growl_penalty_layer(perm, pattern) == Catch::Approx(base));

        // right-multiplication by an orthogonal matrix preserves row norms
        const Matrix q = orthonormal_matrix(5, 5, rng);
        REQUIRE(growl_penalty_layer(matmul(w, q), pattern) == Catch::Approx(base));
    }
}

TEST_CASE("prox vanishing step is the identity", "[growl]") {
    std::mt19937_64 rng(9);
    const auto w = random_matrix(rng, 4, 3);
    const auto out = prox_growl(w, growl_spike(1.0, 0.5, 4), 1e-12);
    for (std::size_t i = 0; i < w.data().size(); ++i)
        REQUIRE(std::abs(out.data()[i] - w.data()[i]) <= 1e-9);
}

TEST_CASE("prox single row soft-thresholds the norm", "[growl]") {
    const auto w = from_rows({{3.0, 4.0}});  // norm 5
    const auto out = prox_growl(w, GrowlPattern::make({2.0}), 1.0);
    REQUIRE(out.row_norm(0) == Catch::Approx(3.0));
    REQUIRE(out(0, 0) == Catch::Approx(3.0 * 3.0 / 5.0));
    REQUIRE(out(0, 1) == Catch::Approx(4.0 * 3.0 / 5.0));
}

TEST_CASE("prox errors", "[growl]") {
    const auto w = from_rows({{1.0, 0.0}});
    REQUIRE_THROWS_AS(prox_growl(w, GrowlPattern::make({1.0}), 0.0), std::domain_error);
    REQUIRE_THROWS_AS(prox_growl(w, GrowlPattern::make({1.0, 0.5}), 1.0), std::domain_error);
}

TEST_CASE("prox zero rows stay zero", "[growl]") {
    auto w = from_rows({{2.0, 1.0}, {0.0, 0.0}, {0.5, 0.5}});
    const auto out = prox_growl(w, growl_spike(0.5, 0.25, 3), 0.1);
    REQUIRE(out.row_is_zero(1));
}

TEST_CASE("prox matches the exhaustive brute-force minimizer", "[growl][oracle]") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> bd(0.0, 3.0);
    std::uniform_real_distribution<double> beta(0.05, 1.5);
    std::uniform_int_distribution<int> nd(1, 6);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = nd(rng);
        std::vector<double> b(n);
        for (double& v : b) v = bd(rng);
        std::vector<double> weights = growl_spike(beta(rng), beta(rng), n).theta;
        const double step = beta(rng);
        for (double& v : weights) v *= step;
        const auto z = owl_prox_norms(b, weights);
        const auto z_oracle = oracle::prox_enumeration_oracle(b, weights);
        for (int i = 0; i < n; ++i) REQUIRE(z[i] == Catch::Approx(z_oracle[i]).margin(1e-9));
    }
}

TEST_CASE("prox matches the projected-subgradient minimizer on a random layer", "[growl][oracle]") {
    std::mt19937_64 rng(27);
    const auto w = random_matrix(rng, 8, 4);
    const auto pattern = growl_spike(0.6, 0.3, 8);
    const double step = 0.4;
    std::vector<double> weights(pattern.theta);
    for (double& v : weights) v *= step;
    const auto b = row_norms(w);
    const auto z = owl_prox_norms(b, weights);
    const auto z_sub = oracle::prox_subgradient_oracle(b, weights);
    REQUIRE(oracle::owl_objective(z, b, weights) <=
            oracle::owl_objective(z_sub, b, weights) + 1e-12);
    // the matrix prox realizes exactly these row norms
    const auto out = prox_growl(w, pattern, step);
    for (std::size_t r = 0; r < w.rows(); ++r)
        REQUIRE(out.row_norm(r) == Catch::Approx(z[r]).margin(1e-12));
}

TEST_CASE("prox is nonexpansive on row-norm vectors", "[growl][property]") {
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> bd(0.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 5;
        std::vector<double> b1(n), b2(n);
        for (int i = 0; i < n; ++i) {
            b1[i] = bd(rng);
            b2[i] = bd(rng);
        }
        std::vector<double> weights = growl_spike(0.8, 0.4, n).theta;
        const auto z1 = owl_prox_norms(b1, weights);
        const auto z2 = owl_prox_norms(b2, weights);
        double dz = 0, db = 0;
        for (int i = 0; i < n; ++i) {
            dz += (z1[i] - z2[i]) * (z1[i] - z2[i]);
            db += (b1[i] - b2[i]) * (b1[i] - b2[i]);
        }
        REQUIRE(dz <= db + 1e-12);
    }
}

TEST_CASE("prox output stays in the nonincreasing cone", "[growl][property]") {
    std::mt19937_64 rng(39);
    std::uniform_real_distribution<double> bd(0.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 7;
        std::vector<double> b(n);
        for (double& v : b) v = bd(rng);
        const auto z = owl_prox_norms(b, growl_spike(0.8, 0.4, n).theta);
        const auto order = descending_order(b);
        for (int i = 0; i + 1 < n; ++i) REQUIRE(z[order[i]] >= z[order[i + 1]] - 1e-12);
        for (double v : z) REQUIRE(v >= 0.0);
    }
}

TEST_CASE("threshold_rows", "[growl]") {
    const auto w = from_rows({{0.03, 0.04}, {1.2, 1.6}});  // norms 0.05, 2
    const auto [out, zeroed] = threshold_rows(w, 0.1);
    REQUIRE(zeroed == std::vector<std::size_t>{0});
    REQUIRE(out.row_is_zero(0));
    REQUIRE_FALSE(out.row_is_zero(1));

    const auto [same, none] = threshold_rows(w, 0.0);
    REQUIRE(none.empty());
    REQUIRE(same == w);

    const auto [all, both] = threshold_rows(w, 1e9);
    REQUIRE(both.size() == 2);
    REQUIRE(layer_sparsity(all) == 1.0);
}

TEST_CASE("layer_sparsity", "[growl]") {
    auto w = from_rows({{1, 0}, {0, 0}, {0, 0}, {2, 2}});
    REQUIRE(layer_sparsity(w) == Catch::Approx(0.5));
    REQUIRE(layer_sparsity(from_rows({{1, 1}})) == 0.0);
    REQUIRE(layer_sparsity(from_rows({{0, 0}})) == 1.0);
}

TEST_CASE("conv reshape", "[growl]") {
    Tensor4 t(3, 3, 2, 4);
    std::mt19937_64 rng(43);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : t.data()) v = normal(rng);
    const auto m = reshape_conv(t);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 36);
    // element multiset preserved
    auto a = t.data();
    auto b = m.data();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    REQUIRE(a == b);
    // row p collects exactly the entries with previous-channel index p
    double frob_t = 0, frob_m = 0;
    for (double v : t.data()) frob_t += v * v;
    for (double v : m.data()) frob_m += v * v;
    REQUIRE(frob_m == Catch::Approx(frob_t));
    REQUIRE(m(1, (2 * 3 + 1) * 4 + 3) == t(2, 1, 1, 3));
}

TEST_CASE("conv reshape with 1x1 kernels is the plain matrix", "[growl]") {
    Tensor4 t(1, 1, 3, 2);
    int v = 0;
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t n = 0; n < 2; ++n) t(0, 0, p, n) = ++v;
    const auto m = reshape_conv(t);
    REQUIRE(m.rows() == 3);
    REQUIRE(m.cols() == 2);
    REQUIRE(m(0, 0) == 1);
    REQUIRE(m(2, 1) == 6);
}

TEST_CASE("conv reshape rejects wrong rank", "[growl]") {
    REQUIRE_THROWS_AS(tensor4_from_flat({1, 2, 3, 4, 5, 6}, {2, 3}), std::domain_error);
    REQUIRE_THROWS_AS(tensor4_from_flat({1, 2}, {2, 1, 1, 1, 1}), std::domain_error);
}
