#include "rampinn/metrics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "rampinn/error.hpp"

namespace rampinn {

double mse(std::span<const double> pred, std::span<const double> truth) {
    require_same_length(pred.size(), truth.size(), "prediction vs truth");
    if (pred.empty()) throw Error(ErrorKind::EmptyInput, "mse of empty spectra");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - truth[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

double mse(const Spectrum& pred, const Spectrum& truth) { return mse(pred.values(), truth.values()); }

double psnr_from_mse(double mse_value) {
    if (mse_value <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse_value);
}

double psnr(std::span<const double> pred, std::span<const double> truth) { return psnr_from_mse(mse(pred, truth)); }

double psnr(const Spectrum& pred, const Spectrum& truth) { return psnr(pred.values(), truth.values()); }

double pearson(std::span<const double> a, std::span<const double> b) {
    require_same_length(a.size(), b.size(), "pearson inputs");
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return kUndefined;
    return sab / std::sqrt(saa * sbb);
}

void PeakParams::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
    if (!(tolerance > 0.0 && tolerance <= 1.0)) fail("tolerance must be in (0,1]");
    if (!(min_separation > 0.0 && min_separation <= 1.0)) fail("min_separation must be in (0,1]");
    if (!(min_prominence >= 0.0 && min_prominence <= 1.0)) fail("min_prominence must be in [0,1]");
    if (!(min_height >= 0.0 && min_height <= 1.0)) fail("min_height must be in [0,1]");
    if (smooth_window != 1 && (smooth_window % 2 == 0 || smooth_window <= smooth_polyorder)) {
        throw Error(ErrorKind::BadWindow, "smooth_window must be odd and > smooth_polyorder");
    }
}

std::vector<double> savitzky_golay(std::span<const double> s, int window, int polyorder) {
    const auto n = static_cast<long>(s.size());
    if (window < 1 || window % 2 == 0 || polyorder < 0 || (window > 1 && window <= polyorder) || window > n) {
        throw Error(ErrorKind::BadWindow, "window=" + std::to_string(window) + " polyorder=" +
                                              std::to_string(polyorder) + " length=" + std::to_string(n));
    }
    if (window == 1) return {s.begin(), s.end()};

    const int half = window / 2;
    Eigen::MatrixXd design(window, polyorder + 1);
    for (int j = 0; j < window; ++j) {
        const double t = j - half;
        double p = 1.0;
        for (int k = 0; k <= polyorder; ++k) {
            design(j, k) = p;
            p *= t;
        }
    }
    // Row 0 of the pseudo-inverse evaluates the fitted polynomial at the centre.
    const Eigen::MatrixXd pinv = design.completeOrthogonalDecomposition().pseudoInverse();
    const Eigen::VectorXd coeffs = pinv.row(0).transpose();

    auto at = [&](long i) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
        return s[static_cast<std::size_t>(i)];
    };
    std::vector<double> out(s.size());
    for (long i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < window; ++j) acc += coeffs(j) * at(i + j - half);
        out[static_cast<std::size_t>(i)] = acc;
    }
    return out;
}

Spectrum savitzky_golay(const Spectrum& s, int window, int polyorder) {
    return Spectrum(s.grid(), savitzky_golay(s.values(), window, polyorder));
}

namespace {

std::vector<std::size_t> local_maxima(std::span<const double> x) {
    std::vector<std::size_t> peaks;
    const std::size_t n = x.size();
    if (n < 3) return peaks;
    std::size_t i = 1;
    while (i + 1 < n) {
        if (x[i - 1] < x[i]) {
            std::size_t ahead = i + 1;
            while (ahead + 1 < n && x[ahead] == x[i]) ++ahead;
            if (x[ahead] < x[i]) {
                peaks.push_back((i + ahead - 1) / 2);
                i = ahead;
                continue;
            }
        }
        ++i;
    }
    return peaks;
}

}  // namespace

std::vector<double> peak_prominences(std::span<const double> s, std::span<const std::size_t> peaks) {
    std::vector<double> out;
    out.reserve(peaks.size());
    for (const std::size_t p : peaks) {
        const double h = s[p];
        double left_min = h;
        for (std::size_t j = p + 1; j-- > 0;) {
            if (s[j] > h) break;
            left_min = std::min(left_min, s[j]);
        }
        double right_min = h;
        for (std::size_t j = p; j < s.size(); ++j) {
            if (s[j] > h) break;
            right_min = std::min(right_min, s[j]);
        }
        out.push_back(h - std::max(left_min, right_min));
    }
    return out;
}

std::vector<Peak> find_peaks(std::span<const double> s, const PeakParams& params) {
    params.validate();
    const std::vector<double> smooth = params.smooth_window > 1 && static_cast<std::size_t>(params.smooth_window) <= s.size()
                                           ? savitzky_golay(s, params.smooth_window, params.smooth_polyorder)
                                           : std::vector<double>(s.begin(), s.end());
    const std::size_t n = smooth.size();
    if (n < 3) return {};

    std::vector<std::size_t> candidates = local_maxima(smooth);
    std::erase_if(candidates, [&](std::size_t i) { return smooth[i] < params.min_height; });

    const auto prom = peak_prominences(smooth, candidates);
    std::vector<Peak> kept;
    const double denom = static_cast<double>(n - 1);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
        if (prom[k] < params.min_prominence) continue;
        const std::size_t i = candidates[k];
        kept.push_back(Peak{i, static_cast<double>(i) / denom, smooth[i], prom[k]});
    }

    // Greedy separation: strongest first, lower index on ties.
    const double distance = params.min_separation * static_cast<double>(n);
    std::vector<std::size_t> order(kept.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return kept[a].amplitude > kept[b].amplitude; });
    std::vector<bool> removed(kept.size(), false);
    for (const std::size_t a : order) {
        if (removed[a]) continue;
        for (std::size_t b = 0; b < kept.size(); ++b) {
            if (b == a || removed[b]) continue;
            const double gap = std::abs(static_cast<double>(kept[a].index) - static_cast<double>(kept[b].index));
            if (gap < distance) removed[b] = true;
        }
    }
    std::vector<Peak> out;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        if (!removed[k]) out.push_back(kept[k]);
    }
    return out;
}

std::vector<Peak> find_peaks(const Spectrum& s, const PeakParams& params) { return find_peaks(s.values(), params); }

double median(std::vector<double> values) {
    std::erase_if(values, [](double v) { return std::isnan(v); });
    if (values.empty()) return kUndefined;
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    return values.size() % 2 == 1 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

MeanStd mean_std(std::span<const double> values) {
    MeanStd r;
    double sum = 0.0;
    for (double v : values) {
        if (std::isnan(v)) continue;
        sum += v;
        ++r.count;
    }
    if (r.count == 0) return r;
    r.mean = sum / static_cast<double>(r.count);
    double sq = 0.0;
    for (double v : values) {
        if (!std::isnan(v)) sq += (v - r.mean) * (v - r.mean);
    }
    r.std = std::sqrt(sq / static_cast<double>(r.count));
    return r;
}

namespace {

void fill_rates(std::size_t tp, std::size_t fp, std::size_t fn, double& precision, double& recall, double& f1) {
    precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : kUndefined;
    recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : kUndefined;
    const std::size_t denom = 2 * tp + fp + fn;
    f1 = denom > 0 ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : kUndefined;
}

}  // namespace

namespace {

// Minimum-cost assignment of every row to a distinct column (rows <= cols).
// Returns the column chosen for each row.
std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
    const std::size_t n = cost.size();
    const std::size_t m = n ? cost[0].size() : 0;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
    std::vector<std::size_t> owner(m + 1, 0), way(m + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        owner[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(m + 1, inf);
        std::vector<bool> used(m + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = owner[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (owner[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<std::size_t> col(n, 0);
    for (std::size_t j = 1; j <= m; ++j) {
        if (owner[j] != 0) col[owner[j] - 1] = j - 1;
    }
    return col;
}

}  // namespace

PeakMatchReport match_peaks(std::span<const Peak> pred, std::span<const Peak> truth, double tolerance,
                            double intensity_floor) {
    // Largest one-to-one matching within tolerance, and among those the one
    // with the smallest summed distance. Pairs outside tolerance cost 0 and
    // admissible pairs cost distance - bonus, with the bonus larger than any
    // possible summed distance, so cardinality dominates.
    const bool flip = pred.size() > truth.size();
    const std::size_t rows = flip ? truth.size() : pred.size();
    const std::size_t cols = flip ? pred.size() : truth.size();
    const double bonus = 1.0 + 2.0 * tolerance * static_cast<double>(rows);
    std::vector<std::vector<double>> cost(rows, std::vector<double>(cols, 0.0));
    bool any_edge = false;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const std::size_t p = flip ? j : i, t = flip ? i : j;
            const double d = std::abs(pred[p].position - truth[t].position);
            if (d <= tolerance) {
                cost[i][j] = d - bonus;
                any_edge = true;
            }
        }
    }
    std::vector<std::pair<std::size_t, std::size_t>> chosen;  // (pred, true)
    if (any_edge) {
        const auto col = hungarian(cost);
        for (std::size_t i = 0; i < rows; ++i) {
            const std::size_t p = flip ? col[i] : i, t = flip ? i : col[i];
            if (std::abs(pred[p].position - truth[t].position) <= tolerance) chosen.emplace_back(p, t);
        }
    }

    PeakMatchReport r;
    for (const auto& [p, t] : chosen) r.matches.emplace_back(pred[p], truth[t]);
    std::sort(r.matches.begin(), r.matches.end(),
              [](const auto& a, const auto& b) { return a.second.position < b.second.position; });

    r.tp = r.matches.size();
    r.fp = pred.size() - r.tp;
    r.fn = truth.size() - r.tp;
    fill_rates(r.tp, r.fp, r.fn, r.precision, r.recall, r.f1);
    if (r.tp > 0) {
        double loc = 0.0;
        for (const auto& [p, t] : r.matches) {
            loc += std::abs(p.position - t.position);
            r.relative_errors.push_back(std::abs(p.amplitude - t.amplitude) /
                                        std::max(std::abs(t.amplitude), intensity_floor));
        }
        r.mle = loc / static_cast<double>(r.tp);
        r.rie_mean = mean_std(r.relative_errors).mean;
        r.rie_median = median(r.relative_errors);
    }
    return r;
}

PeakSummary aggregate(std::span<const PeakMatchReport> reports) {
    if (reports.empty()) throw Error(ErrorKind::EmptyInput, "aggregate of zero reports");
    PeakSummary s;
    auto column = [&](auto member) {
        std::vector<double> v;
        v.reserve(reports.size());
        for (const auto& r : reports) v.push_back(r.*member);
        return mean_std(v);
    };
    s.precision = column(&PeakMatchReport::precision);
    s.recall = column(&PeakMatchReport::recall);
    s.f1 = column(&PeakMatchReport::f1);
    s.mle = column(&PeakMatchReport::mle);
    s.rie_mean = column(&PeakMatchReport::rie_mean);
    s.rie_median = column(&PeakMatchReport::rie_median);

    std::vector<double> pooled;
    for (const auto& r : reports) {
        s.tp += r.tp;
        s.fp += r.fp;
        s.fn += r.fn;
        pooled.insert(pooled.end(), r.relative_errors.begin(), r.relative_errors.end());
    }
    fill_rates(s.tp, s.fp, s.fn, s.micro_precision, s.micro_recall, s.micro_f1);
    if (!pooled.empty()) {
        s.pooled_rie_mean = mean_std(pooled).mean;
        s.pooled_rie_median = median(pooled);
    }
    return s;
}

SpectrumEvaluation evaluate_spectrum(std::span<const double> pred, std::span<const double> truth,
                                     const PeakParams& params) {
    SpectrumEvaluation e;
    e.mse = mse(pred, truth);
    e.psnr = psnr_from_mse(e.mse);
    const auto pred_peaks = find_peaks(pred, params);
    const auto true_peaks = find_peaks(truth, params);
    e.peaks = match_peaks(pred_peaks, true_peaks, params.tolerance, params.intensity_floor);
    return e;
}

}  // namespace rampinn
