#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rampinn/error.hpp"
#include "rampinn/metrics.hpp"
#include "rampinn/synthgen.hpp"

using namespace rampinn;

TEST_CASE("mse and psnr") {
    const std::vector<double> a{0.1, 0.5, 0.9}, b{0.2, 0.6, 1.0};
    CHECK(mse(a, a) == 0.0);
    CHECK(std::isinf(psnr(a, a)));
    CHECK(mse(a, b) == doctest::Approx(0.01));
    CHECK(psnr(a, b) == doctest::Approx(20.0));
    CHECK(psnr_from_mse(0.0006) == doctest::Approx(32.218).epsilon(1e-4));
    const std::vector<double> shorter{0.0};
    CHECK_THROWS_AS(mse(a, shorter), Error);
}

TEST_CASE("pearson") {
    const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1}, flat{1, 1, 1, 1};
    CHECK(pearson(a, b) == doctest::Approx(1.0));
    CHECK(pearson(a, c) == doctest::Approx(-1.0));
    CHECK(std::isnan(pearson(a, flat)));
}

TEST_CASE("savitzky golay") {
    std::vector<double> cubic(60);
    for (std::size_t i = 0; i < cubic.size(); ++i) {
        const double x = static_cast<double>(i) / 10.0;
        cubic[i] = 0.5 - x + 0.3 * x * x - 0.02 * x * x * x;
    }
    const auto sm = savitzky_golay(cubic, 11, 3);
    for (std::size_t i = 5; i + 5 < cubic.size(); ++i) CHECK(sm[i] == doctest::Approx(cubic[i]).epsilon(1e-9));
    const auto id = savitzky_golay(cubic, 1, 0);
    CHECK(id == cubic);
    CHECK_THROWS_AS(savitzky_golay(cubic, 10, 3), Error);
    CHECK_THROWS_AS(savitzky_golay(cubic, 5, 5), Error);
    CHECK_THROWS_AS(savitzky_golay(std::vector<double>(5, 0.0), 11, 3), Error);

    int reduced = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> d;
        std::vector<double> noise(400);
        for (auto& v : noise) v = d(rng);
        const auto out = savitzky_golay(noise, 11, 3);
        double vin = 0.0, vout = 0.0;
        for (std::size_t i = 5; i + 5 < noise.size(); ++i) {
            vin += noise[i] * noise[i];
            vout += out[i] * out[i];
        }
        if (vin >= 2.0 * vout) ++reduced;
    }
    CHECK(reduced == 100);
}

TEST_CASE("find_peaks basics") {
    PeakParams raw;
    raw.smooth_window = 1;
    SUBCASE("triangle") {
        std::vector<double> s(101, 0.0);
        for (int i = 0; i <= 100; ++i) s[static_cast<std::size_t>(i)] = std::max(0.0, 1.0 - std::abs(i - 40) / 10.0);
        const auto p = find_peaks(s, raw);
        REQUIRE(p.size() == 1);
        CHECK(p[0].index == 40);
        CHECK(p[0].prominence == doctest::Approx(1.0));
        CHECK(p[0].amplitude == doctest::Approx(1.0));
        CHECK(p[0].position == doctest::Approx(0.4));
    }
    SUBCASE("plateau midpoint") {
        std::vector<double> s{0, 0.2, 1, 1, 1, 1, 0.1, 0};
        const auto p = find_peaks(s, raw);
        REQUIRE(p.size() == 1);
        CHECK(p[0].index == 3);
    }
    SUBCASE("close equal peaks keep the lower index") {
        std::vector<double> s(1000, 0.0);
        s[500] = 1.0;
        s[505] = 1.0;
        const auto p = find_peaks(s, raw);
        REQUIRE(p.size() == 1);
        CHECK(p[0].index == 500);
    }
    SUBCASE("height and prominence thresholds") {
        std::vector<double> s(200, 0.0);
        s[50] = 1.0;
        s[120] = 0.5;
        s[121] = 0.44;
        s[122] = 0.45;  // local max with prominence 0.01
        PeakParams p = raw;
        p.min_height = 0.6;
        CHECK(find_peaks(s, p).size() == 1);
        p.min_height = 0.0;
        const auto all = find_peaks(s, p);
        CHECK(all.size() == 2);
    }
    SUBCASE("edges are not peaks") {
        std::vector<double> s{1.0, 0.5, 0.0, 0.5, 1.0};
        CHECK(find_peaks(s, raw).empty());
    }
}

TEST_CASE("prominence uses the lower of the two bounding saddles") {
    const std::vector<double> s{0, 3, 1, 2, 0.5, 4, 0};
    const std::vector<std::size_t> idx{1, 3, 5};
    const auto p = peak_prominences(s, idx);
    CHECK(p[0] == doctest::Approx(2.5));
    CHECK(p[1] == doctest::Approx(1.0));
    CHECK(p[2] == doctest::Approx(4.0));
}

TEST_CASE("detector finds separated generated peaks") {
    GenConfig cfg;
    cfg.min_peaks = cfg.max_peaks = 10;
    const WavenumberGrid grid(1000);
    const PeakParams params;
    int missed = 0, checked = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng = sample_rng(seed, 0);
        const auto draw = sample_resonant(rng, grid, cfg);
        const auto raman = normalize(Spectrum(grid, draw.chi.im));
        const auto detected = find_peaks(raman, params);
        const double peak_im = *std::max_element(draw.chi.im.begin(), draw.chi.im.end());
        for (std::size_t k = 0; k < draw.peaks.size(); ++k) {
            const auto& pk = draw.peaks[k];
            bool isolated = pk.center > 0.02 && pk.center < 0.98;
            for (std::size_t j = 0; j < draw.peaks.size(); ++j) {
                if (j != k && std::abs(draw.peaks[j].center - pk.center) <= 2.0 * params.min_separation +
                                                                                     3.0 * (pk.width + draw.peaks[j].width)) {
                    isolated = false;
                }
            }
            // Normalized apex height of this line alone.
            if (!isolated || pk.amplitude / pk.width / peak_im < 0.1) continue;
            ++checked;
            const bool found = std::any_of(detected.begin(), detected.end(), [&](const Peak& d) {
                return std::abs(d.position - pk.center) <= params.tolerance;
            });
            if (!found) ++missed;
        }
    }
    CHECK(checked > 50);
    CHECK(missed == 0);
}

TEST_CASE("translation equivariance on interior peaks") {
    std::vector<double> s(500, 0.0);
    for (std::size_t i = 0; i < 500; ++i) {
        const double x = static_cast<double>(i);
        s[i] = std::exp(-0.5 * std::pow((x - 150) / 4, 2)) + 0.6 * std::exp(-0.5 * std::pow((x - 300) / 6, 2));
    }
    const auto a = find_peaks(s);
    std::vector<double> shifted(500);
    for (std::size_t i = 0; i < 500; ++i) shifted[(i + 37) % 500] = s[i];
    const auto b = find_peaks(shifted);
    REQUIRE(a.size() == 2);
    REQUIRE(b.size() == 2);
    for (std::size_t k = 0; k < 2; ++k) CHECK(b[k].position - a[k].position == doctest::Approx(37.0 / 499.0));
}

TEST_CASE("matching") {
    const std::vector<double> pos{0.1, 0.3, 0.5};
    const auto peaks = testing::as_peaks(pos);
    SUBCASE("identical lists") {
        const auto r = match_peaks(peaks, peaks, 0.01);
        CHECK(r.tp == 3);
        CHECK(r.precision == 1.0);
        CHECK(r.recall == 1.0);
        CHECK(r.f1 == 1.0);
        CHECK(r.mle == 0.0);
        CHECK(r.rie_mean == 0.0);
        CHECK(r.rie_median == 0.0);
    }
    SUBCASE("empty prediction") {
        const auto r = match_peaks({}, peaks, 0.01);
        CHECK(r.recall == 0.0);
        CHECK(r.f1 == 0.0);
        CHECK(std::isnan(r.precision));
        CHECK(std::isnan(r.mle));
        CHECK(std::isnan(r.rie_mean));
    }
    SUBCASE("both empty") {
        const auto r = match_peaks({}, {}, 0.01);
        CHECK(std::isnan(r.f1));
    }
    SUBCASE("ambiguous pair resolves to the minimum-distance assignment") {
        const std::vector<double> pred{0.500, 0.507, 0.513}, truth{0.504, 0.511};
        const auto r = match_peaks(testing::as_peaks(pred), testing::as_peaks(truth), 0.01);
        const auto best = testing::brute_force_match(pred, truth, 0.01);
        CHECK(r.tp == best.count);
        CHECK(r.mle * static_cast<double>(r.tp) == doctest::Approx(best.total_distance));
    }
    SUBCASE("chained conflict where nearest-first would lose a match") {
        const std::vector<double> pred{0.500, 0.509}, truth{0.505, 0.4995};
        const auto r = match_peaks(testing::as_peaks(pred), testing::as_peaks(truth), 0.006);
        CHECK(r.tp == 2);
    }
    SUBCASE("never matches beyond tolerance") {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> u(0.0, 0.1);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> p(5), t(5);
            for (auto& v : p) v = u(rng);
            for (auto& v : t) v = u(rng);
            const auto r = match_peaks(testing::as_peaks(p), testing::as_peaks(t), 0.01);
            for (const auto& [a, b] : r.matches) CHECK(std::abs(a.position - b.position) <= 0.01);
            if (!std::isnan(r.f1)) {
                CHECK(r.f1 >= 0.0);
                CHECK(r.f1 <= 1.0);
            }
        }
    }
    SUBCASE("relative intensity error") {
        auto p = testing::as_peaks(std::vector<double>{0.2});
        auto t = testing::as_peaks(std::vector<double>{0.2});
        p[0].amplitude = 0.6;
        t[0].amplitude = 0.5;
        CHECK(match_peaks(p, t, 0.01).rie_mean == doctest::Approx(0.2));
        t[0].amplitude = 0.0;
        CHECK(match_peaks(p, t, 0.01, 1e-8).rie_mean == doctest::Approx(0.6 / 1e-8));
    }
}

TEST_CASE("aggregate") {
    CHECK_THROWS_AS(aggregate(std::vector<PeakMatchReport>{}), Error);
    const auto peaks = testing::as_peaks(std::vector<double>{0.1, 0.6});
    const auto one = match_peaks(peaks, peaks, 0.01);
    const auto single = aggregate(std::vector<PeakMatchReport>{one});
    CHECK(single.f1.mean == 1.0);
    CHECK(single.f1.std == 0.0);

    PeakMatchReport a, b;
    a.tp = 1;
    b.fp = 1;
    b.fn = 1;
    const auto s = aggregate(std::vector<PeakMatchReport>{a, b});
    CHECK(s.micro_precision == 0.5);
    CHECK(s.micro_recall == 0.5);
    CHECK(s.micro_f1 == 0.5);
    CHECK(std::isnan(s.mle.mean));

    // Identical counts everywhere: micro equals macro.
    const auto same = aggregate(std::vector<PeakMatchReport>{one, one, one});
    CHECK(same.micro_f1 == doctest::Approx(same.f1.mean));
}

TEST_CASE("evaluation is invariant to a common scale") {
    GenConfig cfg;
    cfg.seed = 12;
    const auto s = generate_sample(cfg, 0);
    const auto truth = s.triple.raman.vector();
    std::vector<double> pred(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) pred[i] = std::max(0.0, truth[i] + 0.02 * std::sin(0.05 * i));
    const auto e1 = evaluate_spectrum(normalized_values(pred), normalized_values(truth));
    std::vector<double> p3(pred), t3(truth);
    for (auto& v : p3) v *= 3.7;
    for (auto& v : t3) v *= 3.7;
    const auto e2 = evaluate_spectrum(normalized_values(p3), normalized_values(t3));
    CHECK(e1.mse == doctest::Approx(e2.mse).epsilon(1e-12));
    CHECK(e1.peaks.tp == e2.peaks.tp);
    CHECK(e1.peaks.fp == e2.peaks.fp);

    const auto self = evaluate_spectrum(truth, truth);
    CHECK(self.mse == 0.0);
    CHECK(self.peaks.f1 == 1.0);
}
