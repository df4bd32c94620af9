#pragma once

#include <span>
#include <vector>

#include "rampinn/spectral.hpp"

namespace rampinn {

/// Frequency-domain multiplier of the analytic-signal construction:
/// H[0] = 1, H[k] = 2 for 0 < k < N/2, H[N/2] = 1 for even N, zero above.
class HilbertFilter {
public:
    explicit HilbertFilter(std::size_t length);

    std::size_t size() const noexcept { return multiplier_.size(); }
    std::span<const Complex> multiplier() const noexcept { return multiplier_; }

    /// z = IFFT(FFT(r) * H).
    std::vector<Complex> analytic(std::span<const double> r) const;
    /// Im(z): the discrete Hilbert transform of r.
    std::vector<double> transform(std::span<const double> r) const;
    /// Transpose of transform(). The operator is an antisymmetric circulant,
    /// so this is -transform(g).
    std::vector<double> adjoint(std::span<const double> g) const;

private:
    std::vector<Complex> multiplier_;
};

ComplexSpectrum analytic_signal(const Spectrum& r);
std::vector<Complex> analytic_signal(std::span<const double> r);
std::vector<double> hilbert_transform(std::span<const double> r);
std::vector<double> hilbert_adjoint(std::span<const double> g);

/// Im(analytic(x - nrb_hat)): the Raman estimate implied by a background estimate.
Spectrum kk_target(const Spectrum& x, const Spectrum& nrb_hat);

inline constexpr double kDefaultKkEpsilon = 1e-6;

/// Classical phase retrieval with a measured background reference.
///
/// S = cars / max(nrb_ref, eps), phase = H(0.5 ln max(S, eps)), and the
/// returned estimate is normalize(sqrt(S) sin(phase)). Throws
/// NonPositiveReference when more than half of the reference is <= 0.
Spectrum classical_kk_retrieve(const Spectrum& cars, const Spectrum& nrb_ref,
                               double epsilon = kDefaultKkEpsilon);

}  // namespace rampinn
