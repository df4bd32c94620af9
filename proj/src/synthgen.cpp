#include "rampinn/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "rampinn/error.hpp"

namespace rampinn {

namespace {

constexpr int kMaxBackgroundAttempts = 16;
constexpr double kDegenerateSpan = 1e-12;

// Artifact bump ranges (Gaussian sigma and height on the normalized scale).
constexpr double kArtifactWidthMin = 0.002;
constexpr double kArtifactWidthMax = 0.01;
constexpr double kArtifactHeightMin = 0.05;
constexpr double kArtifactHeightMax = 0.5;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

double normal(Rng& rng, double mean, double stddev) { return std::normal_distribution<double>(mean, stddev)(rng); }

double logistic(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
}

}  // namespace

double NrbModel::evaluate(double w) const {
    if (kind == Kind::DoubleSigmoid) {
        return logistic(steep1 * (w - center1)) * logistic(-steep2 * (w - center2));
    }
    double acc = 0.0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it) acc = acc * w + *it;
    return acc;
}

void GenConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
    if (grid_length < 2) fail("grid_length must be >= 2");
    if (min_peaks < 1 || max_peaks < min_peaks) fail("peak count range must satisfy 1 <= min <= max");
    if (!(amplitude_min > 0.0) || amplitude_max < amplitude_min) fail("amplitude range invalid");
    if (!(width_min > 0.0) || width_max < width_min) fail("width range invalid");
    if (noise_min < 0.0 || noise_max < noise_min) fail("noise range invalid");
    if (!(sigmoid_probability >= 0.0 && sigmoid_probability <= 1.0)) fail("sigmoid_probability must be in [0,1]");
    if (max_poly_degree < 1) fail("max_poly_degree must be >= 1");
    if (injected_artifact_peaks < 0) fail("injected_artifact_peaks must be >= 0");
}

ComplexSpectrum evaluate_resonant(const WavenumberGrid& grid, const std::vector<LorentzianPeak>& peaks) {
    std::vector<double> re(grid.size(), 0.0), im(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        Complex sum{};
        for (const auto& p : peaks) sum += p.at(grid[i]);
        re[i] = sum.real();
        im[i] = sum.imag();
    }
    return ComplexSpectrum(grid, std::move(re), std::move(im));
}

ResonantDraw sample_resonant(Rng& rng, const WavenumberGrid& grid, const GenConfig& cfg) {
    const int n = std::uniform_int_distribution<int>(cfg.min_peaks, cfg.max_peaks)(rng);
    std::vector<LorentzianPeak> peaks(static_cast<std::size_t>(n));
    for (auto& p : peaks) {
        p.amplitude = uniform(rng, cfg.amplitude_min, cfg.amplitude_max);
        p.center = uniform(rng, 0.0, 1.0);
        p.width = uniform(rng, cfg.width_min, cfg.width_max);
    }
    auto chi = evaluate_resonant(grid, peaks);
    double peak_abs = 0.0;
    for (std::size_t i = 0; i < chi.size(); ++i) peak_abs = std::max(peak_abs, std::hypot(chi.re[i], chi.im[i]));
    const double scale = 1.0 / peak_abs;
    for (std::size_t i = 0; i < chi.size(); ++i) {
        chi.re[i] *= scale;
        chi.im[i] *= scale;
    }
    for (auto& p : peaks) p.amplitude *= scale;
    return ResonantDraw{std::move(chi), std::move(peaks), scale};
}

Spectrum evaluate_nrb(const NrbModel& model, const WavenumberGrid& grid) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = model.evaluate(grid[i]);
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double min = *lo;
    const double span = *hi - *lo;
    if (!std::isfinite(span) || span <= kDegenerateSpan) {
        throw Error(ErrorKind::DegenerateBackground, "background curve is constant on the grid");
    }
    if (model.kind == NrbModel::Kind::Polynomial) {
        for (auto& x : v) x = (x - min) / span;
    }
    return Spectrum(grid, std::move(v));
}

NrbDraw sample_nrb(Rng& rng, const WavenumberGrid& grid, const GenConfig& cfg) {
    for (int attempt = 0; attempt < kMaxBackgroundAttempts; ++attempt) {
        NrbModel model;
        const bool sigmoid = std::bernoulli_distribution(cfg.sigmoid_probability)(rng);
        if (sigmoid) {
            model.kind = NrbModel::Kind::DoubleSigmoid;
            model.steep1 = normal(rng, 10.0, 5.0);
            model.steep2 = normal(rng, 10.0, 5.0);
            model.center1 = normal(rng, 0.2, 0.3);
            model.center2 = normal(rng, 0.7, 0.3);
        } else {
            model.kind = NrbModel::Kind::Polynomial;
            // Constant, linear and cubic terms ~ U(-10,10); quadratic, quartic
            // and any higher-degree extensions ~ U(-1,1).
            model.coefficients.resize(static_cast<std::size_t>(cfg.max_poly_degree) + 1);
            for (std::size_t k = 0; k < model.coefficients.size(); ++k) {
                const bool wide = k == 0 || k == 1 || k == 3;
                model.coefficients[k] = wide ? uniform(rng, -10.0, 10.0) : uniform(rng, -1.0, 1.0);
            }
        }
        try {
            return NrbDraw{evaluate_nrb(model, grid), std::move(model)};
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateBackground) throw;
        }
    }
    throw Error(ErrorKind::DegenerateBackground,
                "no usable background after " + std::to_string(kMaxBackgroundAttempts) + " draws");
}

SpectrumTriple assemble_cars(const ComplexSpectrum& chi, const Spectrum& nrb, Rng& rng, double noise_min,
                             double noise_max) {
    require_same_length(chi.size(), nrb.size(), "susceptibility vs background");
    const std::size_t n = chi.size();
    std::vector<double> cars(n), background(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double re = chi.re[i] + nrb[i];
        cars[i] = re * re + chi.im[i] * chi.im[i];
        background[i] = nrb[i] * nrb[i];
    }
    const double raw_peak = *std::max_element(cars.begin(), cars.end());
    if (!(raw_peak > 0.0)) throw Error(ErrorKind::AllZeroSignal, "CARS intensity is identically zero");

    const double sigma = noise_max > noise_min ? uniform(rng, noise_min, noise_max) : noise_min;
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double jitter = sigma > 0.0 ? sigma * noise(rng) : 0.0;
        cars[i] = std::max(cars[i] / raw_peak + jitter, 0.0);
    }
    const double noisy_peak = *std::max_element(cars.begin(), cars.end());
    const double total_scale = 1.0 / (raw_peak * noisy_peak);
    for (std::size_t i = 0; i < n; ++i) {
        cars[i] /= noisy_peak;
        background[i] *= total_scale;
    }

    SpectrumTriple t;
    t.cars = Spectrum(chi.grid, std::move(cars), true);
    // No resonance at all leaves an all-zero Raman target.
    const bool resonant = std::any_of(chi.im.begin(), chi.im.end(), [](double v) { return v > 0.0; });
    t.raman = resonant ? normalize(Spectrum(chi.grid, chi.im)) : Spectrum(chi.grid, std::vector<double>(n, 0.0));
    t.nrb = Spectrum(chi.grid, std::move(background));
    return t;
}

SpectrumTriple inject_artifacts(const SpectrumTriple& triple, Rng& rng, int k) {
    if (k < 0) throw Error(ErrorKind::InvalidArgument, "artifact count must be >= 0");
    if (k == 0) return triple;
    const auto& grid = triple.cars.grid();
    std::vector<double> cars = triple.cars.vector();
    for (int j = 0; j < k; ++j) {
        const double center = uniform(rng, 0.0, 1.0);
        const double width = uniform(rng, kArtifactWidthMin, kArtifactWidthMax);
        const double height = uniform(rng, kArtifactHeightMin, kArtifactHeightMax);
        for (std::size_t i = 0; i < cars.size(); ++i) {
            const double d = (grid[i] - center) / width;
            cars[i] += height * std::exp(-0.5 * d * d);
        }
    }
    SpectrumTriple out = triple;
    out.cars = normalize(Spectrum(grid, std::move(cars)));
    return out;
}

Rng sample_rng(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return Rng(seq);
}

Sample generate_sample(const GenConfig& cfg, std::uint64_t index) {
    Rng rng = sample_rng(cfg.seed, index);
    const WavenumberGrid grid(cfg.grid_length);
    auto resonant = sample_resonant(rng, grid, cfg);
    auto background = sample_nrb(rng, grid, cfg);
    auto triple = assemble_cars(resonant.chi, background.curve, rng, cfg.noise_min, cfg.noise_max);
    triple = inject_artifacts(triple, rng, cfg.injected_artifact_peaks);

    Sample s;
    s.triple = std::move(triple);
    s.meta.seed = cfg.seed;
    s.meta.index = index;
    s.meta.n_peaks = static_cast<int>(resonant.peaks.size());
    s.meta.nrb_kind = background.model.kind_name();
    s.meta.n_artifacts = cfg.injected_artifact_peaks;
    s.peaks = std::move(resonant.peaks);
    return s;
}

std::vector<Sample> generate_dataset(const GenConfig& cfg, unsigned threads) {
    cfg.validate();
    std::vector<Sample> out(cfg.n_samples);
    if (cfg.n_samples == 0) return out;
    threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(std::min<std::size_t>(cfg.n_samples, 64)));
    if (threads == 1) {
        for (std::size_t i = 0; i < cfg.n_samples; ++i) out[i] = generate_sample(cfg, i);
        return out;
    }
    std::vector<std::exception_ptr> errors(threads);
    {
        std::vector<std::jthread> workers;
        for (unsigned t = 0; t < threads; ++t) {
            workers.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < cfg.n_samples; i += threads) out[i] = generate_sample(cfg, i);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

}  // namespace rampinn
