#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rampinn/spectral.hpp"

namespace rampinn {

using Rng = std::mt19937_64;

/// One Lorentzian resonance A / (center - w - i*width).
struct LorentzianPeak {
    double amplitude = 1.0;
    double center = 0.5;
    double width = 0.01;

    Complex at(double w) const noexcept { return amplitude / Complex(center - w, -width); }
};

struct NrbModel {
    enum class Kind { DoubleSigmoid, Polynomial };

    Kind kind = Kind::DoubleSigmoid;
    // Double sigmoid: 1/(1+exp(-steep1 (w-center1))) * 1/(1+exp(steep2 (w-center2))).
    double steep1 = 10.0;
    double steep2 = 10.0;
    double center1 = 0.2;
    double center2 = 0.7;
    // Polynomial coefficients, constant term first.
    std::vector<double> coefficients;

    double evaluate(double w) const;
    const char* kind_name() const noexcept { return kind == Kind::DoubleSigmoid ? "sigmoid" : "poly"; }
};

struct GenConfig {
    std::uint64_t seed = 0;
    std::size_t n_samples = 2000;
    std::size_t grid_length = kDefaultGridLength;
    int min_peaks = 1;
    int max_peaks = 25;
    double amplitude_min = 0.01;
    double amplitude_max = 1.0;
    double width_min = 0.001;
    double width_max = 0.02;
    double noise_min = 0.0005;
    double noise_max = 0.003;
    double sigmoid_probability = 0.5;
    int max_poly_degree = 4;
    int injected_artifact_peaks = 0;

    /// Throws InvalidArgument on degenerate or out-of-range settings.
    void validate() const;
};

struct ResonantDraw {
    ComplexSpectrum chi;
    std::vector<LorentzianPeak> peaks;
    /// Factor applied to every amplitude so that max |chi| == 1.
    double scale = 1.0;
};

struct NrbDraw {
    Spectrum curve;
    NrbModel model;
};

struct SampleMeta {
    std::uint64_t seed = 0;
    std::uint64_t index = 0;
    int n_peaks = 0;
    std::string nrb_kind;
    int n_artifacts = 0;
};

struct Sample {
    SpectrumTriple triple;
    SampleMeta meta;
    /// Peaks after amplitude scaling; not serialized.
    std::vector<LorentzianPeak> peaks;
};

/// Sum of Lorentzians evaluated analytically, scaled to max |chi| == 1.
ResonantDraw sample_resonant(Rng& rng, const WavenumberGrid& grid, const GenConfig& cfg = {});
ComplexSpectrum evaluate_resonant(const WavenumberGrid& grid, const std::vector<LorentzianPeak>& peaks);

/// Evaluate an NRB model on the grid. Polynomials are min-max scaled to
/// [0, 1]; a curve constant to 1e-12 throws DegenerateBackground.
Spectrum evaluate_nrb(const NrbModel& model, const WavenumberGrid& grid);
NrbDraw sample_nrb(Rng& rng, const WavenumberGrid& grid, const GenConfig& cfg);

/// CARS = |chi + nrb|^2 plus per-point Gaussian noise with a per-sample
/// sigma ~ U(noise_min, noise_max), clipped at zero and normalized to peak 1.
/// The stored NRB is nrb^2 under the same scaling; raman = normalize(Im chi).
SpectrumTriple assemble_cars(const ComplexSpectrum& chi, const Spectrum& nrb, Rng& rng, double noise_min,
                             double noise_max);

/// Adds k Gaussian bumps to the CARS input only and re-normalizes.
SpectrumTriple inject_artifacts(const SpectrumTriple& triple, Rng& rng, int k);

/// Independent stream for sample `index` of a dataset seeded with `seed`.
Rng sample_rng(std::uint64_t seed, std::uint64_t index);

Sample generate_sample(const GenConfig& cfg, std::uint64_t index);

/// Samples are generated from per-index streams, so the result does not
/// depend on the thread count.
std::vector<Sample> generate_dataset(const GenConfig& cfg, unsigned threads = 1);

}  // namespace rampinn
