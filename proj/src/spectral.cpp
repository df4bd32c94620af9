#include "rampinn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <unordered_map>

#include "rampinn/error.hpp"

namespace rampinn {

namespace {

std::shared_ptr<const std::vector<double>> make_points(std::size_t length) {
    if (length < 2) {
        throw Error(ErrorKind::InvalidArgument, "grid length must be >= 2, got " + std::to_string(length));
    }
    std::vector<double> pts(length);
    const double denom = static_cast<double>(length - 1);
    for (std::size_t i = 0; i < length; ++i) pts[i] = static_cast<double>(i) / denom;
    pts.back() = 1.0;
    return std::make_shared<const std::vector<double>>(std::move(pts));
}

void require_finite(std::span<const double> v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) throw Error(ErrorKind::InvalidArgument, std::string(what) + " contains non-finite values");
    }
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::size_t next_power_of_two(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
}

// In-place iterative radix-2 transform; the backward direction is unscaled.
class Radix2 {
public:
    explicit Radix2(std::size_t n) : n_(n), twiddle_(n / 2), rev_(n) {
        for (std::size_t k = 0; k < n / 2; ++k) {
            const double a = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
            twiddle_[k] = Complex(std::cos(a), std::sin(a));
        }
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1U) << (bits - 1 - b);
            rev_[i] = r;
        }
    }

    void run(std::vector<Complex>& a, bool inverse) const {
        for (std::size_t i = 0; i < n_; ++i) {
            if (i < rev_[i]) std::swap(a[i], a[rev_[i]]);
        }
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t half = len / 2;
            const std::size_t step = n_ / len;
            for (std::size_t i = 0; i < n_; i += len) {
                for (std::size_t j = 0; j < half; ++j) {
                    Complex w = twiddle_[j * step];
                    if (inverse) w = std::conj(w);
                    const Complex u = a[i + j];
                    const Complex v = a[i + j + half] * w;
                    a[i + j] = u + v;
                    a[i + j + half] = u - v;
                }
            }
        }
    }

private:
    std::size_t n_;
    std::vector<Complex> twiddle_;
    std::vector<std::size_t> rev_;
};

// Bluestein chirp-z for arbitrary n, built on a power-of-two convolution.
class Plan {
public:
    explicit Plan(std::size_t n) : n_(n), m_(is_power_of_two(n) ? n : next_power_of_two(2 * n - 1)), radix_(m_) {
        if (is_power_of_two(n)) return;
        chirp_.resize(n);
        const std::size_t two_n = 2 * n;
        for (std::size_t k = 0; k < n; ++k) {
            // k^2 mod 2n keeps the angle argument small for large k.
            const std::size_t k2 = (k * k) % two_n;
            const double a = std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
            chirp_[k] = Complex(std::cos(a), -std::sin(a));
        }
        kernel_.assign(m_, Complex{});
        kernel_[0] = std::conj(chirp_[0]);
        for (std::size_t k = 1; k < n; ++k) {
            kernel_[k] = std::conj(chirp_[k]);
            kernel_[m_ - k] = std::conj(chirp_[k]);
        }
        radix_.run(kernel_, false);
    }

    std::vector<Complex> transform(std::span<const Complex> x, bool inverse) const {
        if (is_power_of_two(n_)) {
            std::vector<Complex> a(x.begin(), x.end());
            radix_.run(a, inverse);
            return a;
        }
        // Inverse through conjugation: IDFT(x) * N == conj(DFT(conj(x))).
        std::vector<Complex> a(m_, Complex{});
        for (std::size_t k = 0; k < n_; ++k) a[k] = (inverse ? std::conj(x[k]) : x[k]) * chirp_[k];
        radix_.run(a, false);
        for (std::size_t k = 0; k < m_; ++k) a[k] *= kernel_[k];
        radix_.run(a, true);
        std::vector<Complex> out(n_);
        const double inv_m = 1.0 / static_cast<double>(m_);
        for (std::size_t k = 0; k < n_; ++k) {
            const Complex v = a[k] * inv_m * chirp_[k];
            out[k] = inverse ? std::conj(v) : v;
        }
        return out;
    }

private:
    std::size_t n_;
    std::size_t m_;
    Radix2 radix_;
    std::vector<Complex> chirp_;
    std::vector<Complex> kernel_;
};

const Plan& plan_for(std::size_t n) {
    thread_local std::unordered_map<std::size_t, std::unique_ptr<Plan>> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<Plan>(n)).first;
    return *it->second;
}

}  // namespace

WavenumberGrid::WavenumberGrid(std::size_t length) : points_(make_points(length)) {}

Spectrum::Spectrum(WavenumberGrid grid, std::vector<double> values, bool normalized)
    : grid_(std::move(grid)), values_(std::move(values)), normalized_(normalized) {
    require_same_length(grid_.size(), values_.size(), "spectrum values vs grid");
    require_finite(values_, "spectrum");
}

ComplexSpectrum::ComplexSpectrum(WavenumberGrid g, std::vector<double> real, std::vector<double> imag)
    : grid(std::move(g)), re(std::move(real)), im(std::move(imag)) {
    require_same_length(grid.size(), re.size(), "real part vs grid");
    require_same_length(grid.size(), im.size(), "imaginary part vs grid");
    require_finite(re, "real part");
    require_finite(im, "imaginary part");
}

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        throw Error(ErrorKind::LengthMismatch,
                    std::string(what) + ": " + std::to_string(a) + " != " + std::to_string(b));
    }
}

std::vector<double> normalized_values(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorKind::AllZeroSignal, "empty signal");
    const double peak = *std::max_element(values.begin(), values.end());
    if (!(peak > 0.0)) throw Error(ErrorKind::AllZeroSignal, "signal has no positive maximum");
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] / peak;
    return out;
}

Spectrum normalize(const Spectrum& s) {
    auto v = normalized_values(s.values());
    const bool nonneg = std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
    return Spectrum(s.grid(), std::move(v), nonneg);
}

std::vector<Complex> fft_forward(std::span<const double> x) {
    std::vector<Complex> c(x.begin(), x.end());
    return fft_forward(std::span<const Complex>(c));
}

std::vector<Complex> fft_forward(std::span<const Complex> x) {
    if (x.empty()) throw Error(ErrorKind::LengthMismatch, "fft of empty input");
    return plan_for(x.size()).transform(x, false);
}

std::vector<Complex> fft_inverse(std::span<const Complex> X) {
    if (X.empty()) throw Error(ErrorKind::LengthMismatch, "inverse fft of empty input");
    auto out = plan_for(X.size()).transform(X, true);
    const double inv_n = 1.0 / static_cast<double>(X.size());
    for (auto& v : out) v *= inv_n;
    return out;
}

std::vector<double> interpolate_linear(std::span<const double> xs, std::span<const double> ys,
                                       std::span<const double> queries) {
    require_same_length(xs.size(), ys.size(), "interpolation abscissae vs ordinates");
    if (xs.size() < 2) throw Error(ErrorKind::InvalidArgument, "interpolation needs at least two samples");
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(xs[i] > xs[i - 1])) {
            throw Error(ErrorKind::InvalidArgument, "interpolation abscissae must increase strictly (index " +
                                                        std::to_string(i) + ")");
        }
    }
    std::vector<double> out(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const double t = queries[q];
        if (t <= xs.front()) {
            out[q] = ys.front();
            continue;
        }
        if (t >= xs.back()) {
            out[q] = ys.back();
            continue;
        }
        const auto it = std::upper_bound(xs.begin(), xs.end(), t);
        const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
        const std::size_t lo = hi - 1;
        const double w = (t - xs[lo]) / (xs[hi] - xs[lo]);
        out[q] = ys[lo] + w * (ys[hi] - ys[lo]);
    }
    return out;
}

std::vector<double> resample_uniform(std::span<const double> values, std::size_t length) {
    if (values.size() == length) return {values.begin(), values.end()};
    const WavenumberGrid src(values.size());
    const WavenumberGrid dst(length);
    return interpolate_linear(src.points(), values, dst.points());
}

}  // namespace rampinn
