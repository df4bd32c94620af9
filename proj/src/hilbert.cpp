#include "rampinn/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rampinn/error.hpp"

namespace rampinn {

HilbertFilter::HilbertFilter(std::size_t length) : multiplier_(length, Complex{}) {
    if (length < 2) throw Error(ErrorKind::LengthMismatch, "Hilbert filter needs length >= 2");
    multiplier_[0] = 1.0;
    const std::size_t half = length / 2;
    for (std::size_t k = 1; k < (length + 1) / 2; ++k) multiplier_[k] = 2.0;
    if (length % 2 == 0) multiplier_[half] = 1.0;
}

std::vector<Complex> HilbertFilter::analytic(std::span<const double> r) const {
    require_same_length(r.size(), size(), "signal vs Hilbert filter");
    auto spec = fft_forward(r);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= multiplier_[k];
    return fft_inverse(spec);
}

std::vector<double> HilbertFilter::transform(std::span<const double> r) const {
    const auto z = analytic(r);
    std::vector<double> out(z.size());
    std::transform(z.begin(), z.end(), out.begin(), [](const Complex& c) { return c.imag(); });
    return out;
}

std::vector<double> HilbertFilter::adjoint(std::span<const double> g) const {
    auto out = transform(g);
    for (auto& v : out) v = -v;
    return out;
}

ComplexSpectrum analytic_signal(const Spectrum& r) {
    const auto z = analytic_signal(r.values());
    std::vector<double> re(z.size()), im(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        re[i] = z[i].real();
        im[i] = z[i].imag();
    }
    return ComplexSpectrum(r.grid(), std::move(re), std::move(im));
}

std::vector<Complex> analytic_signal(std::span<const double> r) {
    if (r.size() < 2) throw Error(ErrorKind::LengthMismatch, "analytic signal needs length >= 2");
    return HilbertFilter(r.size()).analytic(r);
}

std::vector<double> hilbert_transform(std::span<const double> r) {
    if (r.size() < 2) throw Error(ErrorKind::LengthMismatch, "Hilbert transform needs length >= 2");
    return HilbertFilter(r.size()).transform(r);
}

std::vector<double> hilbert_adjoint(std::span<const double> g) {
    if (g.size() < 2) throw Error(ErrorKind::LengthMismatch, "Hilbert adjoint needs length >= 2");
    return HilbertFilter(g.size()).adjoint(g);
}

Spectrum kk_target(const Spectrum& x, const Spectrum& nrb_hat) {
    require_same_length(x.size(), nrb_hat.size(), "kk_target input vs background");
    std::vector<double> residual(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) residual[i] = x[i] - nrb_hat[i];
    return Spectrum(x.grid(), hilbert_transform(residual));
}

Spectrum classical_kk_retrieve(const Spectrum& cars, const Spectrum& nrb_ref, double epsilon) {
    require_same_length(cars.size(), nrb_ref.size(), "CARS vs NRB reference");
    if (!(epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
    const std::size_t n = cars.size();
    const auto non_positive = static_cast<std::size_t>(
        std::count_if(nrb_ref.values().begin(), nrb_ref.values().end(), [](double v) { return v <= 0.0; }));
    if (2 * non_positive > n) {
        throw Error(ErrorKind::NonPositiveReference,
                    std::to_string(non_positive) + " of " + std::to_string(n) + " reference points are <= 0");
    }

    std::vector<double> ratio(n), log_amplitude(n);
    for (std::size_t i = 0; i < n; ++i) {
        ratio[i] = cars[i] / std::max(nrb_ref[i], epsilon);
        log_amplitude[i] = 0.5 * std::log(std::max(ratio[i], epsilon));
    }
    const auto phase = hilbert_transform(log_amplitude);
    std::vector<double> raman(n);
    for (std::size_t i = 0; i < n; ++i) raman[i] = std::sqrt(std::max(ratio[i], 0.0)) * std::sin(phase[i]);

    // S == 1 everywhere gives a zero phase and no Raman content.
    if (std::all_of(raman.begin(), raman.end(), [](double v) { return std::abs(v) < 1e-300; })) {
        return Spectrum(cars.grid(), std::vector<double>(n, 0.0));
    }
    return normalize(Spectrum(cars.grid(), std::move(raman)));
}

}  // namespace rampinn
