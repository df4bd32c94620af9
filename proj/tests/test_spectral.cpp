#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "rampinn/error.hpp"
#include "rampinn/spectral.hpp"
#include "rampinn/synthgen.hpp"

using namespace rampinn;

namespace {
std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}
}  // namespace

TEST_CASE("grid spans the unit interval") {
    WavenumberGrid g(1000);
    CHECK(g.size() == 1000);
    CHECK(g[0] == 0.0);
    CHECK(g[999] == 1.0);
    CHECK(g.spacing() == doctest::Approx(1.0 / 999.0));
    WavenumberGrid copy = g;
    CHECK(copy.points().data() == g.points().data());
}

TEST_CASE("normalize") {
    WavenumberGrid g(3);
    auto n = normalize(Spectrum(g, {0.0, 2.0, 4.0}));
    CHECK(n[0] == 0.0);
    CHECK(n[1] == 0.5);
    CHECK(n[2] == 1.0);
    CHECK(n.is_normalized());
    auto ones = normalize(Spectrum(g, {1.0, 1.0, 1.0}));
    for (double v : ones.values()) CHECK(v == 1.0);
    CHECK_THROWS_AS(normalize(Spectrum(g, {0.0, 0.0, 0.0})), Error);
    CHECK_THROWS_AS(normalize(Spectrum(g, {-1.0, -2.0, -0.5})), Error);

    auto twice = normalize(n);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(twice[i] - n[i]) <= 1e-15);

    GenConfig cfg;
    cfg.seed = 11;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto s = generate_sample(cfg, i);
        CHECK(*std::max_element(s.triple.cars.values().begin(), s.triple.cars.values().end()) == 1.0);
    }
}

TEST_CASE("spectrum construction validates values") {
    WavenumberGrid g(4);
    CHECK_THROWS_AS(Spectrum(g, {1.0, 2.0}), Error);
    CHECK_THROWS_AS(Spectrum(g, {1.0, std::nan(""), 0.0, 0.0}), Error);
}

TEST_CASE("fft small cases") {
    const std::vector<double> impulse{1, 0, 0, 0};
    for (const auto& v : fft_forward(impulse)) CHECK(std::abs(v - Complex(1.0, 0.0)) < 1e-15);
    const std::vector<double> dc{1, 1, 1, 1};
    const auto X = fft_forward(dc);
    CHECK(std::abs(X[0] - Complex(4.0, 0.0)) < 1e-15);
    for (std::size_t k = 1; k < 4; ++k) CHECK(std::abs(X[k]) < 1e-15);
}

TEST_CASE("fft agrees with the direct DFT") {
    for (std::size_t n : {1u, 2u, 3u, 8u, 12u, 17u, 64u, 100u, 1000u}) {
        CAPTURE(n);
        const auto re = random_vector(n, n);
        const auto im = random_vector(n, n + 1000);
        std::vector<Complex> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = {re[i], im[i]};
        const auto fast = fft_forward(std::span<const Complex>(x));
        const auto slow = testing::direct_dft(x);
        double err = 0.0;
        for (std::size_t k = 0; k < n; ++k) err = std::max(err, std::abs(fast[k] - slow[k]));
        CHECK(err < 1e-9 * static_cast<double>(n));
    }
}

TEST_CASE("fft round trip") {
    const auto x = random_vector(1000, 5);
    const auto back = fft_inverse(fft_forward(x));
    double err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) err = std::max(err, std::abs(back[i] - Complex(x[i], 0.0)));
    CHECK(err < 1e-10);
}

TEST_CASE("parseval") {
    for (std::size_t n : {8u, 1000u, 1001u}) {
        const auto x = random_vector(n, 40 + n);
        const auto X = fft_forward(x);
        double time = 0.0, freq = 0.0;
        for (double v : x) time += v * v;
        for (const auto& v : X) freq += std::norm(v);
        freq /= static_cast<double>(n);
        CHECK(std::abs(time - freq) <= 1e-9 * time);
    }
}

TEST_CASE("linear interpolation and resampling") {
    const std::vector<double> xs{0.0, 1.0, 3.0};
    const std::vector<double> ys{0.0, 2.0, 0.0};
    const std::vector<double> q{-1.0, 0.5, 2.0, 5.0};
    const auto v = interpolate_linear(xs, ys, q);
    CHECK(v[0] == 0.0);
    CHECK(v[1] == doctest::Approx(1.0));
    CHECK(v[2] == doctest::Approx(1.0));
    CHECK(v[3] == 0.0);
    const std::vector<double> bad{0.0, 0.0, 1.0};
    CHECK_THROWS_AS(interpolate_linear(bad, ys, q), Error);

    // A smooth spectrum survives 900 -> 1000 -> 900.
    std::vector<double> s(900);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double t = static_cast<double>(i) / 899.0;
        s[i] = 0.5 + 0.4 * std::sin(2.0 * std::numbers::pi * 3.0 * t) * std::exp(-t);
    }
    const auto up = resample_uniform(s, 1000);
    CHECK(up.front() == s.front());
    CHECK(up.back() == s.back());
    const auto down = resample_uniform(up, 900);
    double err = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) err = std::max(err, std::abs(down[i] - s[i]));
    CHECK(err < 1e-3);
}

TEST_CASE("axis map") {
    AxisMap m{500.0, 2500.0};
    CHECK(m.to_unit(500.0) == 0.0);
    CHECK(m.to_unit(3000.0) == 1.0);
    CHECK(m.to_physical(0.5) == 1750.0);
}
