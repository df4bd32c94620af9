#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rampinn/metrics.hpp"
#include "rampinn/model.hpp"
#include "rampinn/spectral.hpp"
#include "rampinn/synthgen.hpp"

namespace rampinn {

namespace fs = std::filesystem;

/// 17 significant digits (round-trips every double); "nan", "inf" and "-inf"
/// for non-finite values.
std::string format_number(double v);

void to_json(nlohmann::json& j, const GenConfig& c);
void from_json(const nlohmann::json& j, GenConfig& c);
void to_json(nlohmann::json& j, const PeakParams& p);
void from_json(const nlohmann::json& j, PeakParams& p);

/// FNV-1a 64 over the file bytes, as 16 hex digits.
std::string file_digest(const fs::path& path);

void write_text(const fs::path& path, std::string_view text);
std::string read_text(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& path);

// ---- Dataset (JSON lines) ----

std::string dataset_line(const Sample& s);
void write_dataset(const fs::path& path, std::span<const Sample> samples);
/// Reads at most `limit` records (0 = all). Grid length is taken from the
/// first record; later records must match.
std::vector<Sample> read_dataset(const fs::path& path, std::size_t limit = 0);

// ---- External spectra ----

struct ExternalSpectrum {
    std::string name;
    std::vector<std::string> header;  // empty when the file has none
    char delimiter = ',';
    std::vector<double> axis;  // physical wavenumbers, strictly monotonic
    std::vector<double> cars;
    std::optional<std::vector<double>> truth;
    AxisMap map;  // first point -> 0, last point -> 1

    std::vector<double> unit_positions() const;
};

inline constexpr std::size_t kMinExternalRows = 16;

/// Two or three numeric columns (axis, CARS[, Raman truth]) separated by
/// comma, tab or semicolon. Lines starting with '#' are skipped.
ExternalSpectrum parse_external(std::string_view text, const std::string& name = "input");
ExternalSpectrum read_external(const fs::path& path);
void write_external(const fs::path& path, std::span<const double> axis, std::span<const double> cars,
                    std::span<const double> truth = {}, char delimiter = ',');

/// Values sampled at increasing unit positions (first 0, last 1) resampled
/// onto the uniform `length`-point grid. Positions already on that grid
/// (within 1e-12) are passed through untouched.
std::vector<double> to_uniform(std::span<const double> unit_positions, std::span<const double> values,
                               std::size_t length);
/// Inverse of to_uniform.
std::vector<double> from_uniform(std::span<const double> uniform_values, std::span<const double> unit_positions);

// ---- Reports ----

void write_history_csv(const fs::path& path, std::span<const EpochRecord> history);

struct MetricsRow {
    std::string id;
    double mse = 0.0;
    double psnr = 0.0;
    double pearson = kUndefined;
    PeakMatchReport peaks;
};

/// One row per spectrum followed by a blank line and a '#'-prefixed summary
/// block (macro mean/std and micro values).
void write_metrics_csv(const fs::path& path, std::span<const MetricsRow> rows,
                       const std::vector<std::string>& header_notes = {});

struct PlotSeries {
    std::string label;
    std::vector<double> values;
    std::string color;
};

/// Standalone line plot; every series shares `x`.
std::string render_svg(const std::string& title, std::span<const double> x, std::span<const PlotSeries> series,
                       const std::string& x_label = "normalized wavenumber");
void write_svg(const fs::path& path, const std::string& title, std::span<const double> x,
               std::span<const PlotSeries> series, const std::string& x_label = "normalized wavenumber");
/// Raw traces behind a plot: x followed by one column per series.
void write_traces_csv(const fs::path& path, std::span<const double> x, std::span<const PlotSeries> series,
                      const std::string& x_name = "x");

}  // namespace rampinn
