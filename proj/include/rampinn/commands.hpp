#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "rampinn/io.hpp"
#include "rampinn/metrics.hpp"
#include "rampinn/model.hpp"
#include "rampinn/synthgen.hpp"

namespace rampinn {

// Every command writes <out_dir>/resolved_config.json; feeding that file back
// through --config reproduces the run.

struct GenerateOptions {
    GenConfig gen;
    fs::path out_dir = "out";
    std::string file_name = "dataset.jsonl";
    unsigned threads = 1;
};

struct GenerateResult {
    fs::path dataset;
    fs::path manifest;
    std::size_t count = 0;
    std::string digest;
};

GenerateResult cmd_generate(const GenerateOptions& opt, std::ostream& log);

struct TrainOptions {
    RamPinnConfig model;
    fs::path dataset;
    fs::path out_dir = "out";
    std::size_t limit = 0;          // use the first `limit` samples (0 = all)
    long long labeled_count = -1;   // only the first k samples keep labels (-1 = all)
};

struct TrainOutcome {
    fs::path checkpoint;
    fs::path history;
    TrainResult result;
};

/// Writes checkpoint.bin (best validation state), history.csv and
/// train_summary.json. A non-finite gradient still writes the restored
/// state, then throws NonFiniteGradient naming the epoch.
TrainOutcome cmd_train(const TrainOptions& opt, std::ostream& log);

enum class EvalMethod { Model, Truth, ClassicalKk };

struct EvalOptions {
    EvalMethod method = EvalMethod::Model;
    fs::path checkpoint;
    fs::path dataset;
    fs::path out_dir = "out";
    std::size_t limit = 0;
    PeakParams peaks;
    int inject_peaks = 0;            // artifacts added to each CARS input
    std::uint64_t inject_seed = 0;
    std::size_t plots = 3;           // overlay plots for the first samples
    unsigned threads = 1;
};

struct EvalSummary {
    std::size_t count = 0;
    MeanStd mse, psnr, pearson;
    PeakSummary peaks;
    std::vector<MetricsRow> rows;
};

/// Writes metrics.csv, summary.json and overlay SVG/CSV traces.
EvalSummary cmd_eval(const EvalOptions& opt, std::ostream& log);

enum class SweepKind { LambdaKk, LambdaSmooth, Data };

struct AblateOptions {
    SweepKind kind = SweepKind::LambdaKk;
    std::vector<double> values;  // empty selects the defaults for `kind`
    std::vector<std::uint64_t> seeds{0, 1, 2};
    RamPinnConfig model;
    fs::path train_dataset;
    fs::path test_dataset;
    fs::path out_dir = "out";
    std::size_t train_limit = 0;
    std::size_t test_limit = 0;
    unsigned threads = 1;
};

struct AblateRow {
    double value = 0.0;
    std::vector<double> mse;  // per seed
    MeanStd stats;
};

/// lambda-kk: 10 points linspace(0, 1); lambda-smooth: {0, 1, 10};
/// data: labeled counts {0, 100, 250, 500, 750, 1000} capped at the set size.
std::vector<double> default_sweep(SweepKind kind, std::size_t train_size);

/// Trains one model per (value, seed) under <out_dir>/runs and writes
/// ablate.csv with the test MSE mean/std per value.
std::vector<AblateRow> cmd_ablate(const AblateOptions& opt, std::ostream& log);

struct ZeroShotOptions {
    fs::path checkpoint;
    std::vector<fs::path> inputs;
    fs::path out_dir = "out";
    PeakParams peaks;
};

struct ZeroShotRow {
    std::string name;
    std::size_t points = 0;
    bool has_truth = false;
    MetricsRow metrics;
};

/// Per input: <name>_prediction.csv, <name>.svg; zero_shot.csv collects the
/// metrics of every input that carries a truth column.
std::vector<ZeroShotRow> cmd_zero_shot(const ZeroShotOptions& opt, std::ostream& log);

/// Metrics of one predicted/true pair.
MetricsRow score(const std::string& id, std::span<const double> pred, std::span<const double> truth,
                 const PeakParams& peaks);

nlohmann::json to_json(const GenerateOptions& o);
nlohmann::json to_json(const TrainOptions& o);
nlohmann::json to_json(const EvalOptions& o);
nlohmann::json to_json(const AblateOptions& o);
nlohmann::json to_json(const ZeroShotOptions& o);
void from_json(const nlohmann::json& j, GenerateOptions& o);
void from_json(const nlohmann::json& j, TrainOptions& o);
void from_json(const nlohmann::json& j, EvalOptions& o);
void from_json(const nlohmann::json& j, AblateOptions& o);
void from_json(const nlohmann::json& j, ZeroShotOptions& o);

std::string to_string(EvalMethod m);
EvalMethod parse_eval_method(const std::string& s);
std::string to_string(SweepKind k);
SweepKind parse_sweep_kind(const std::string& s);

}  // namespace rampinn
