#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "topocaps/errors.hpp"
#include "topocaps/topography.hpp"

using namespace topocaps;
using namespace topocaps::topo;

namespace {

TopographyConfig basic(int C, int D, Variant v, int L, int K) {
    TopographyConfig cfg;
    cfg.layout = {C, D};
    cfg.variant = v;
    cfg.L = L;
    cfg.K = K;
    cfg.validate();
    return cfg;
}

double sum_t(const Vec& z, const std::vector<Vec>& u_window, double mu,
             const TopographyConfig& cfg) {
    const Vec t = construct_t(z, u_window, mu, cfg);
    return std::accumulate(t.begin(), t.end(), 0.0);
}

}  // namespace

TEST_CASE("roll_capsules basics") {
    const CapsuleLayout layout{1, 3};
    CHECK(roll_capsules({1, 2, 3}, layout, 1) == Vec{3, 1, 2});
    CHECK(roll_capsules({1, 2, 3}, layout, 0) == Vec{1, 2, 3});
    CHECK(roll_capsules({1, 2, 3}, layout, 3) == Vec{1, 2, 3});
    CHECK(roll_capsules({1, 2, 3}, layout, -1) == Vec{2, 3, 1});
    // two capsules roll independently
    const CapsuleLayout two{2, 2};
    CHECK(roll_capsules({1, 2, 3, 4}, two, 1) == Vec{2, 1, 4, 3});
    CHECK_THROWS_AS(roll_capsules({1, 2, 3}, two, 1), DimensionError);
}

TEST_CASE("roll group law") {
    Rng rng(3);
    const CapsuleLayout layout{3, 5};
    Vec v(15);
    for (auto& x : v) x = rng.normal();
    for (int a = -4; a <= 4; ++a)
        for (int b = -4; b <= 4; ++b) {
            const Vec lhs = roll_capsules(roll_capsules(v, layout, a), layout, b);
            const Vec rhs = roll_capsules(v, layout, a + b);
            for (std::size_t i = 0; i < v.size(); ++i)
                CHECK(lhs[i] == doctest::Approx(rhs[i]));
        }
}

TEST_CASE("partial_roll") {
    const CapsuleLayout layout{1, 2};
    const Vec half = partial_roll({2, 4}, layout, 0.5);
    CHECK(half[0] == doctest::Approx(3.0));
    CHECK(half[1] == doctest::Approx(3.0));

    // alpha = 1 is exactly Roll_1
    const CapsuleLayout l3{1, 3};
    CHECK(partial_roll({1, 2, 3}, l3, 1.0) == roll_capsules({1, 2, 3}, l3, 1));

    // constants are fixed points
    const Vec c = partial_roll({5, 5, 5}, l3, 0.3);
    for (double x : c) CHECK(x == doctest::Approx(5.0));

    CHECK_THROWS_AS(partial_roll({1, 2}, layout, 0.0), ConfigError);
    CHECK_THROWS_AS(partial_roll({1, 2}, layout, 1.5), ConfigError);
}

TEST_CASE("neighborhood_sum with the identity kernel") {
    const Vec u_sq{0.5, 1.5, 2.0, 0.25};
    CHECK(neighborhood_sum({u_sq}, basic(2, 2, Variant::shifting, 0, 1)) == u_sq);
}

TEST_CASE("neighborhood_sum full-capsule sum with K = D") {
    TopographyConfig cfg;
    cfg.layout = {1, 5};
    cfg.variant = Variant::shifting;
    cfg.L = 0;
    cfg.K = 5;
    cfg.validate();
    const Vec u_sq{1, 2, 3, 4, 5};
    const Vec out = neighborhood_sum({u_sq}, cfg);
    for (double v : out) CHECK(v == doctest::Approx(15.0));
}

TEST_CASE("shifting variant hand case") {
    const TopographyConfig cfg = basic(1, 3, Variant::shifting, 1, 1);
    const Vec out = neighborhood_sum({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, cfg);
    CHECK(out[0] == doctest::Approx(0.0));
    CHECK(out[1] == doctest::Approx(3.0));
    CHECK(out[2] == doctest::Approx(0.0));
}

TEST_CASE("stationary variant drops the roll") {
    const TopographyConfig cfg = basic(1, 3, Variant::stationary, 1, 1);
    const Vec out = neighborhood_sum({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, cfg);
    CHECK(out == Vec{1, 1, 1});
}

TEST_CASE("causal truncation keeps only past and present") {
    TopographyConfig cfg = basic(1, 3, Variant::shifting, 1, 1);
    cfg.causal = true;
    REQUIRE(cfg.window_len() == 2);
    // window: u^2_{l-1}, u^2_l; delta in {-1, 0}
    const Vec out = neighborhood_sum({{1, 0, 0}, {0, 1, 0}}, cfg);
    // past frame drifts one index forward, landing on the present peak
    CHECK(out == Vec{0, 2, 0});
}

TEST_CASE("torus2d box sum") {
    TopographyConfig cfg;
    cfg.layout = {1, 16};
    cfg.variant = Variant::torus2d;
    cfg.torus_h = 4;
    cfg.torus_w = 4;
    cfg.K = 3;
    cfg.validate();
    Vec u_sq(16, 0.0);
    u_sq[0] = 1.0;  // grid position (0, 0)
    const Vec out = neighborhood_sum({u_sq}, cfg);
    double total = 0.0;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            const bool near = (r <= 1 || r == 3) && (c <= 1 || c == 3);
            CHECK(out[r * 4 + c] == doctest::Approx(near ? 1.0 : 0.0));
            total += out[r * 4 + c];
        }
    CHECK(total == doctest::Approx(9.0));  // 3x3 kernel of ones
}

TEST_CASE("linear-padded boundary reads padded coordinates without wraparound") {
    TopographyConfig cfg;
    cfg.layout = {1, 3};
    cfg.variant = Variant::shifting;
    cfg.L = 1;
    cfg.K = 1;
    cfg.boundary = Boundary::linear_padded;
    cfg.validate();
    REQUIRE(cfg.u_capsule_dim() == 5);
    // padded u^2 layout: [pad, a, b, c, pad]; output j reads padded index
    // j + L + delta, with out-of-range reads contributing zero
    const Vec past{9, 0, 0, 0, 0};     // delta = -1 reads index j
    const Vec present{0, 0, 5, 0, 0};  // delta = 0 reads j+1
    const Vec future{0, 0, 0, 0, 7};   // delta = +1 reads j+2
    const Vec out = neighborhood_sum({past, present, future}, cfg);
    CHECK(out[0] == doctest::Approx(past[0] + present[1] + future[2]));
    CHECK(out[1] == doctest::Approx(past[1] + present[2] + future[3]));
    CHECK(out[2] == doctest::Approx(past[2] + present[3] + future[4]));
}

TEST_CASE("neighborhood_sum input validation") {
    const TopographyConfig cfg = basic(1, 3, Variant::shifting, 1, 1);
    CHECK_THROWS_AS(neighborhood_sum({{1, 0, 0}, {0, 1, 0}}, cfg), DimensionError);
    CHECK_THROWS_AS(neighborhood_sum({{1, 0, 0}, {0, -1, 0}, {0, 0, 1}}, cfg), DomainError);
}

TEST_CASE("neighborhood_sum is linear and capsule-permutation equivariant") {
    Rng rng(17);
    const TopographyConfig cfg = basic(3, 4, Variant::shifting, 2, 3);
    auto rand_window = [&] {
        std::vector<Vec> w(cfg.window_len(), Vec(cfg.u_dim()));
        for (auto& u : w)
            for (auto& v : u) v = rng.uniform();
        return w;
    };
    const auto a = rand_window(), b = rand_window();
    std::vector<Vec> combo = a;
    for (std::size_t f = 0; f < combo.size(); ++f)
        for (std::size_t i = 0; i < combo[f].size(); ++i)
            combo[f][i] = 2.0 * a[f][i] + 0.5 * b[f][i];
    const Vec oa = neighborhood_sum(a, cfg), ob = neighborhood_sum(b, cfg);
    const Vec oc = neighborhood_sum(combo, cfg);
    for (std::size_t i = 0; i < oc.size(); ++i)
        CHECK(oc[i] == doctest::Approx(2.0 * oa[i] + 0.5 * ob[i]));

    // swap capsules 0 and 2 in every window frame; outputs swap identically
    auto swap_caps = [&](Vec v) {
        const int D = cfg.layout.capsule_dim;
        for (int j = 0; j < D; ++j) std::swap(v[j], v[2 * D + j]);
        return v;
    };
    std::vector<Vec> swapped = a;
    for (auto& u : swapped) u = swap_caps(u);
    const Vec os = neighborhood_sum(swapped, cfg);
    const Vec expected = swap_caps(oa);
    for (std::size_t i = 0; i < os.size(); ++i) CHECK(os[i] == doctest::Approx(expected[i]));
}

TEST_CASE("stationary variant commutes with a uniform roll") {
    Rng rng(23);
    const TopographyConfig cfg = basic(2, 5, Variant::stationary, 1, 3);
    std::vector<Vec> window(cfg.window_len(), Vec(cfg.u_dim()));
    for (auto& u : window)
        for (auto& v : u) v = rng.uniform();
    std::vector<Vec> rolled = window;
    for (auto& u : rolled) u = roll_capsules(u, cfg.layout, 2);
    const Vec lhs = neighborhood_sum(rolled, cfg);
    const Vec rhs = roll_capsules(neighborhood_sum(window, cfg), cfg.layout, 2);
    for (std::size_t i = 0; i < lhs.size(); ++i) CHECK(lhs[i] == doctest::Approx(rhs[i]));
}

TEST_CASE("construct_t point examples") {
    TopographyConfig cfg = basic(1, 1, Variant::shifting, 0, 1);
    cfg.epsilon = 0.0;
    CHECK(construct_t({1.0}, {{1.0}}, 0.0, cfg)[0] == doctest::Approx(1.0));
    CHECK(construct_t({3.0}, {{2.0}}, 1.0, cfg)[0] == doctest::Approx(1.0));
    // variant none passes z through
    TopographyConfig none = cfg;
    none.variant = Variant::none;
    CHECK(construct_t({42.0}, {}, 5.0, none)[0] == doctest::Approx(42.0));
}

TEST_CASE("construct_t with unit u, K=1, L=0, mu=0 is the identity") {
    TopographyConfig cfg = basic(2, 3, Variant::shifting, 0, 1);
    cfg.epsilon = 0.0;
    Rng rng(5);
    Vec z(6);
    for (auto& v : z) v = rng.normal();
    const Vec t = construct_t(z, {Vec(6, 1.0)}, 0.0, cfg);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(t[i] == doctest::Approx(z[i]));
}

TEST_CASE("construct_t gradients match finite differences") {
    for (const bool padded : {false, true}) {
        TopographyConfig cfg = basic(2, 4, Variant::shifting, 1, 3);
        if (padded) {
            cfg.boundary = Boundary::linear_padded;
            cfg.validate();
        }
        Rng rng(271 + padded);
        Vec z(cfg.layout.n());
        for (auto& v : z) v = rng.normal();
        std::vector<Vec> window(cfg.window_len(), Vec(cfg.u_dim()));
        for (auto& u : window)
            for (auto& v : u) v = rng.normal() + 2.0;
        double mu = 0.7;

        Vec grad_t(z.size(), 1.0);
        Vec grad_z(z.size(), 0.0);
        std::vector<Vec> grad_u(window.size(), Vec(cfg.u_dim(), 0.0));
        double grad_mu = 0.0;
        construct_t_backward(grad_t, z, window, mu, cfg, grad_z, grad_u, grad_mu);

        const double h = 1e-6;
        auto fd = [&](double& x) {
            const double saved = x;
            x = saved + h;
            const double up = sum_t(z, window, mu, cfg);
            x = saved - h;
            const double dn = sum_t(z, window, mu, cfg);
            x = saved;
            return (up - dn) / (2 * h);
        };
        auto close = [](double got, double want) {
            const double denom = std::max({std::abs(got), std::abs(want), 1e-8});
            return std::abs(got - want) / denom < 1e-4;
        };
        for (std::size_t i = 0; i < z.size(); ++i) CHECK(close(grad_z[i], fd(z[i])));
        for (std::size_t f = 0; f < window.size(); ++f)
            for (std::size_t i = 0; i < window[f].size(); ++i)
                CHECK(close(grad_u[f][i], fd(window[f][i])));
        CHECK(close(grad_mu, fd(mu)));
    }
}

TEST_CASE("sample_tpot classic scaling gives Student-t moments") {
    TopographyConfig cfg;
    cfg.layout = {4, 5};  // D = nu: each unit's neighborhood is its capsule
    cfg.variant = Variant::shifting;
    cfg.L = 0;
    cfg.K = 5;
    cfg.nu = 5;
    cfg.validate();
    const Tensor samples = sample_tpot(cfg, 200000, 9, true);
    double mean = 0.0, var = 0.0;
    const std::size_t n = samples.data.size();
    for (double v : samples.data) mean += v;
    mean /= static_cast<double>(n);
    for (double v : samples.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n - 1);
    CHECK(std::abs(mean) < 0.02);
    CHECK(var == doctest::Approx(5.0 / 3.0).epsilon(0.05));
}

TEST_CASE("sample_tpot rejects variant none") {
    TopographyConfig cfg = basic(1, 1, Variant::none, 0, 1);
    CHECK_THROWS_AS(sample_tpot(cfg, 10, 1, true), ConfigError);
}

TEST_CASE("config validation") {
    TopographyConfig cfg = basic(2, 4, Variant::shifting, 1, 3);
    cfg.K = 2;  // even kernels are rejected unless they span the whole capsule
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.K = 4;  // K == capsule_dim with cyclic boundary: full coverage, allowed
    CHECK_NOTHROW(cfg.validate());
    cfg.boundary = Boundary::linear_padded;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.boundary = Boundary::cyclic;

    // A full-capsule even kernel sums every entry of each frame's capsule,
    // regardless of the output index.
    TopographyConfig full = basic(1, 4, Variant::shifting, 0, 4);
    const Vec s = neighborhood_sum({Vec{1, 2, 3, 10}}, full);
    for (double v : s) CHECK(v == doctest::Approx(16.0));
    TopographyConfig torus;
    torus.layout = {1, 16};
    torus.variant = Variant::torus2d;
    torus.K = 3;
    torus.torus_h = 5;  // 5 * 16 does not tile 16 latent units
    torus.torus_w = 16;
    CHECK_THROWS_AS(torus.validate(), ConfigError);
}
