#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace rampinn {

using Complex = std::complex<double>;

inline constexpr std::size_t kDefaultGridLength = 1000;

/// Normalized wavenumber axis: `length` points x_i = i/(length-1) on [0, 1].
///
/// The point array is shared between copies and never mutated after
/// construction, so grids are cheap to pass by value.
class WavenumberGrid {
public:
    explicit WavenumberGrid(std::size_t length = kDefaultGridLength);

    std::size_t size() const noexcept { return points_->size(); }
    double operator[](std::size_t i) const noexcept { return (*points_)[i]; }
    std::span<const double> points() const noexcept { return *points_; }
    double spacing() const noexcept { return 1.0 / static_cast<double>(size() - 1); }

    friend bool operator==(const WavenumberGrid& a, const WavenumberGrid& b) noexcept {
        return a.size() == b.size();
    }

private:
    std::shared_ptr<const std::vector<double>> points_;
};

/// Affine map from a physical axis (e.g. cm^-1) onto the unit interval.
/// normalized = (physical - offset) / scale; scale may be negative for
/// descending axes.
struct AxisMap {
    double offset = 0.0;
    double scale = 1.0;

    double to_unit(double physical) const noexcept { return (physical - offset) / scale; }
    double to_physical(double unit) const noexcept { return offset + unit * scale; }
};

/// Real-valued spectrum on a grid. Values are finite; a spectrum produced by
/// normalize() carries the normalized flag (max == 1, min >= 0).
class Spectrum {
public:
    Spectrum() = default;
    Spectrum(WavenumberGrid grid, std::vector<double> values, bool normalized = false);

    const WavenumberGrid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    bool is_normalized() const noexcept { return normalized_; }

private:
    WavenumberGrid grid_{2};
    std::vector<double> values_;
    bool normalized_ = false;
};

struct ComplexSpectrum {
    WavenumberGrid grid;
    std::vector<double> re;
    std::vector<double> im;

    ComplexSpectrum(WavenumberGrid g, std::vector<double> real, std::vector<double> imag);
    std::size_t size() const noexcept { return re.size(); }
};

/// One paired sample: CARS input with its Raman and NRB ground truth.
struct SpectrumTriple {
    Spectrum cars;
    Spectrum raman;
    Spectrum nrb;
};

/// values / max(values). Throws AllZeroSignal when there is no positive peak.
Spectrum normalize(const Spectrum& s);
std::vector<double> normalized_values(std::span<const double> values);

/// Unnormalized forward DFT. Any length >= 1 (Bluestein for non powers of two).
std::vector<Complex> fft_forward(std::span<const double> x);
std::vector<Complex> fft_forward(std::span<const Complex> x);
/// Inverse DFT including the 1/N factor.
std::vector<Complex> fft_inverse(std::span<const Complex> X);

/// Linear interpolation of samples (xs, ys) at query points; xs strictly
/// increasing, queries outside the range clamp to the end values.
std::vector<double> interpolate_linear(std::span<const double> xs, std::span<const double> ys,
                                       std::span<const double> queries);

/// Resample values living on an evenly spaced [0,1] axis to `length` points,
/// endpoints mapped to endpoints.
std::vector<double> resample_uniform(std::span<const double> values, std::size_t length);

void require_same_length(std::size_t a, std::size_t b, const char* what);

}  // namespace rampinn
