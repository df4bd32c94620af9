#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "rampinn/spectral.hpp"

namespace rampinn {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

double mse(std::span<const double> pred, std::span<const double> truth);
double mse(const Spectrum& pred, const Spectrum& truth);
/// 10 log10(1 / MSE) with unit peak; +inf for identical inputs.
double psnr(std::span<const double> pred, std::span<const double> truth);
double psnr(const Spectrum& pred, const Spectrum& truth);
double psnr_from_mse(double mse_value);
double pearson(std::span<const double> a, std::span<const double> b);

struct PeakParams {
    double tolerance = 0.01;        // tau, normalized axis units
    double min_prominence = 0.02;   // p_min
    double min_height = 0.0;        // h_min
    double min_separation = 0.01;   // delta, fraction of the signal length
    int smooth_window = 11;         // 1 disables smoothing
    int smooth_polyorder = 3;
    double intensity_floor = 1e-8;  // epsilon in the relative intensity error

    void validate() const;
};

struct Peak {
    std::size_t index = 0;
    double position = 0.0;
    double amplitude = 0.0;
    double prominence = 0.0;
};

/// Least-squares local polynomial smoothing; the signal is mirrored about its
/// end samples. window must be odd, > polyorder and <= length.
std::vector<double> savitzky_golay(std::span<const double> s, int window, int polyorder);
Spectrum savitzky_golay(const Spectrum& s, int window, int polyorder);

/// Topographic prominence of each index in `peaks`.
std::vector<double> peak_prominences(std::span<const double> s, std::span<const std::size_t> peaks);

/// Strict local maxima (plateau midpoints), filtered by height, prominence and
/// then greedy minimum separation. Smoothing per params is applied first and
/// amplitudes are read from the smoothed signal.
std::vector<Peak> find_peaks(std::span<const double> s, const PeakParams& params = {});
std::vector<Peak> find_peaks(const Spectrum& s, const PeakParams& params = {});

struct PeakMatchReport {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    std::vector<std::pair<Peak, Peak>> matches;  // (predicted, true)
    std::vector<double> relative_errors;         // r_j per match
    double precision = kUndefined;
    double recall = kUndefined;
    double f1 = kUndefined;
    double mle = kUndefined;
    double rie_mean = kUndefined;
    double rie_median = kUndefined;
};

/// One-to-one matching within tau: the largest matching, and among those the
/// smallest total |position difference| (solved as an assignment problem).
PeakMatchReport match_peaks(std::span<const Peak> pred, std::span<const Peak> truth, double tolerance,
                            double intensity_floor = 1e-8);

struct MeanStd {
    double mean = kUndefined;
    double std = kUndefined;
    std::size_t count = 0;
};

/// NaN-ignoring mean and population standard deviation.
MeanStd mean_std(std::span<const double> values);
double median(std::vector<double> values);

struct PeakSummary {
    MeanStd precision, recall, f1, mle, rie_mean, rie_median;
    std::size_t tp = 0, fp = 0, fn = 0;
    double micro_precision = kUndefined;
    double micro_recall = kUndefined;
    double micro_f1 = kUndefined;
    double pooled_rie_mean = kUndefined;
    double pooled_rie_median = kUndefined;
};

PeakSummary aggregate(std::span<const PeakMatchReport> reports);

/// Per-spectrum evaluation: MSE/PSNR plus detection on both signals with
/// identical smoothing.
struct SpectrumEvaluation {
    double mse = 0.0;
    double psnr = 0.0;
    PeakMatchReport peaks;
};

SpectrumEvaluation evaluate_spectrum(std::span<const double> pred, std::span<const double> truth,
                                     const PeakParams& params = {});

}  // namespace rampinn
