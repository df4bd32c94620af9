// rampinn command-line front end: generate, train, eval, ablate, zero-shot.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rampinn/commands.hpp"
#include "rampinn/error.hpp"

using namespace rampinn;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumerical = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class T>
void set_if(const std::optional<T>& v, T& target) {
    if (v) target = *v;
}

json load_config(const std::string& path, const std::string& command) {
    if (path.empty()) return json::object();
    json j = read_json(path);
    if (!j.is_object()) throw UsageError("--config " + path + ": expected a JSON object");
    if (j.contains("command") && j.at("command") != command) {
        throw UsageError("--config " + path + " is a '" + j.at("command").get<std::string>() + "' snapshot, not '" +
                         command + "'");
    }
    return j;
}

std::optional<std::uint64_t> env_seed() {
    const char* s = std::getenv("RAMPINN_SEED");
    if (!s || !*s) return std::nullopt;
    try {
        std::size_t pos = 0;
        const auto v = std::stoull(s, &pos);
        if (pos != std::string(s).size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError(std::string("RAMPINN_SEED is not an unsigned integer: ") + s);
    }
}

struct ModelFlags {
    std::optional<double> lambda_data, lambda_kk, lambda_smooth, width_mult, lr, clip_norm, val_fraction;
    std::optional<std::size_t> batch_size, max_epochs, patience, input_length;
    std::optional<std::uint64_t> seed;
    bool no_attention = false;

    void add(CLI::App* c) {
        c->add_option("--lambda-data", lambda_data, "weight of the supervised MSE term (0 = self-supervised)");
        c->add_option("--lambda-kk", lambda_kk, "weight of the Kramers-Kronig consistency term");
        c->add_option("--lambda-smooth", lambda_smooth, "weight of the NRB smoothness term");
        c->add_option("--width-mult", width_mult, "channel width multiplier");
        c->add_option("--lr", lr, "Adam learning rate");
        c->add_option("--clip-norm", clip_norm, "global gradient-norm clip");
        c->add_option("--val-fraction", val_fraction, "trailing fraction of the training set used for validation");
        c->add_option("--batch-size", batch_size, "mini-batch size");
        c->add_option("--max-epochs", max_epochs, "maximum number of epochs");
        c->add_option("--patience", patience, "early-stopping patience in epochs");
        c->add_option("--input-length", input_length, "model input length");
        c->add_option("--seed", seed, "initialization and shuffling seed");
        c->add_flag("--no-attention", no_attention, "drop the bottleneck self-attention");
    }

    void apply_to(RamPinnConfig& m) const {
        set_if(lambda_data, m.lambda_data);
        set_if(lambda_kk, m.lambda_kk);
        set_if(lambda_smooth, m.lambda_smooth);
        set_if(width_mult, m.width_multiplier);
        set_if(lr, m.lr);
        set_if(clip_norm, m.clip_norm);
        set_if(val_fraction, m.val_fraction);
        set_if(batch_size, m.batch_size);
        set_if(max_epochs, m.max_epochs);
        set_if(patience, m.patience);
        set_if(input_length, m.input_length);
        if (no_attention) m.use_attention = false;
    }
};

struct PeakFlags {
    std::optional<double> tau, prominence, height, separation;
    std::optional<int> window, polyorder;

    void add(CLI::App* c) {
        c->add_option("--tau", tau, "peak match tolerance (normalized axis)");
        c->add_option("--min-prominence", prominence, "minimum peak prominence");
        c->add_option("--min-height", height, "minimum peak height");
        c->add_option("--min-separation", separation, "minimum peak separation (fraction of length)");
        c->add_option("--smooth-window", window, "Savitzky-Golay window (1 disables)");
        c->add_option("--smooth-polyorder", polyorder, "Savitzky-Golay polynomial order");
    }

    void apply_to(PeakParams& p) const {
        set_if(tau, p.tolerance);
        set_if(prominence, p.min_prominence);
        set_if(height, p.min_height);
        set_if(separation, p.min_separation);
        set_if(window, p.smooth_window);
        set_if(polyorder, p.smooth_polyorder);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Raman spectrum recovery from CARS measurements"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "rampinn 1.0.0");

    std::string config;
    std::optional<unsigned> threads;
    auto common = [&](CLI::App* c, bool threaded) {
        c->add_option("--config", config, "JSON config (e.g. a resolved_config.json); flags override it")
            ->check(CLI::ExistingFile);
        if (threaded) {
            c->add_option("--threads", threads, "worker thread cap (1 gives byte-identical outputs)")
                ->check(CLI::PositiveNumber);
        }
    };

    // generate
    auto* gen = app.add_subcommand("generate", "write a synthetic CARS/Raman/NRB dataset as JSON lines");
    common(gen, true);
    std::optional<std::string> g_out, g_file;
    std::optional<std::size_t> g_n, g_len;
    std::optional<std::uint64_t> g_seed;
    std::optional<int> g_min_peaks, g_max_peaks, g_inject, g_poly;
    std::optional<double> g_noise_min, g_noise_max, g_sigmoid_p;
    gen->add_option("-o,--out-dir", g_out, "output directory");
    gen->add_option("--file-name", g_file, "dataset file name inside the output directory");
    gen->add_option("-n,--n", g_n, "number of samples");
    gen->add_option("--seed", g_seed, "dataset seed");
    gen->add_option("--grid-length", g_len, "points per spectrum");
    gen->add_option("--min-peaks", g_min_peaks, "minimum Lorentzians per sample");
    gen->add_option("--max-peaks", g_max_peaks, "maximum Lorentzians per sample");
    gen->add_option("--noise-min", g_noise_min, "lower bound of the per-sample noise sigma");
    gen->add_option("--noise-max", g_noise_max, "upper bound of the per-sample noise sigma");
    gen->add_option("--sigmoid-probability", g_sigmoid_p, "probability of a double-sigmoid background");
    gen->add_option("--max-poly-degree", g_poly, "maximum polynomial background degree");
    gen->add_option("--inject-peaks", g_inject, "Gaussian artifact peaks added to each CARS input");

    // train
    auto* tr = app.add_subcommand("train", "train a model on a generated dataset");
    common(tr, false);
    std::optional<std::string> t_data, t_out;
    std::optional<std::size_t> t_limit;
    std::optional<long long> t_labeled;
    ModelFlags t_model;
    tr->add_option("-d,--dataset", t_data, "training dataset (JSON lines)");
    tr->add_option("-o,--out-dir", t_out, "output directory");
    tr->add_option("--limit", t_limit, "use only the first N samples");
    tr->add_option("--labeled", t_labeled, "keep Raman labels for the first K samples only");
    t_model.add(tr);

    // eval
    auto* ev = app.add_subcommand("eval", "score predictions against a dataset");
    common(ev, true);
    std::optional<std::string> e_method, e_ckpt, e_data, e_out;
    std::optional<std::size_t> e_limit, e_plots;
    std::optional<int> e_inject;
    std::optional<std::uint64_t> e_inject_seed;
    bool e_classical = false;
    PeakFlags e_peaks;
    ev->add_option("--method", e_method, "model, truth or classical-kk")
        ->check(CLI::IsMember({"model", "truth", "classical-kk"}));
    ev->add_flag("--classical-kk", e_classical, "classical KK retrieval using the dataset NRB as reference");
    ev->add_option("-c,--checkpoint", e_ckpt, "model checkpoint");
    ev->add_option("-d,--dataset", e_data, "test dataset (JSON lines)");
    ev->add_option("-o,--out-dir", e_out, "output directory");
    ev->add_option("--limit", e_limit, "use only the first N samples");
    ev->add_option("--plots", e_plots, "number of overlay plots");
    ev->add_option("--inject-peaks", e_inject, "Gaussian artifact peaks added to each CARS input");
    ev->add_option("--inject-seed", e_inject_seed, "seed for injected artifacts");
    e_peaks.add(ev);

    // ablate
    auto* ab = app.add_subcommand("ablate", "sweep lambda_KK, lambda_smooth or the labeled-sample count");
    common(ab, true);
    std::optional<std::string> a_sweep, a_train, a_test, a_out;
    std::optional<std::vector<double>> a_values;
    std::optional<std::vector<std::uint64_t>> a_seeds;
    std::optional<std::size_t> a_train_limit, a_test_limit;
    ModelFlags a_model;
    ab->add_option("--sweep", a_sweep, "lambda-kk, lambda-smooth or data")
        ->check(CLI::IsMember({"lambda-kk", "lambda-smooth", "data"}));
    ab->add_option("--values", a_values, "sweep values (defaults depend on the sweep)");
    ab->add_option("--seeds", a_seeds, "model seeds per value");
    ab->add_option("--train", a_train, "training dataset");
    ab->add_option("--test", a_test, "test dataset");
    ab->add_option("-o,--out-dir", a_out, "output directory");
    ab->add_option("--train-limit", a_train_limit, "use only the first N training samples");
    ab->add_option("--test-limit", a_test_limit, "use only the first N test samples");
    a_model.add(ab);

    // zero-shot
    auto* zs = app.add_subcommand("zero-shot", "apply a checkpoint to external spectrum files");
    common(zs, false);
    std::optional<std::string> z_ckpt, z_out;
    std::vector<std::string> z_inputs;
    PeakFlags z_peaks;
    zs->add_option("-c,--checkpoint", z_ckpt, "model checkpoint");
    zs->add_option("-o,--out-dir", z_out, "output directory");
    zs->add_option("inputs", z_inputs, "CSV/TSV files: wavenumber, CARS[, Raman truth]");
    z_peaks.add(zs);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        const auto seed_env = env_seed();
        auto need = [](bool ok, const char* what) {
            if (!ok) throw UsageError(what);
        };

        if (gen->parsed()) {
            GenerateOptions o = load_config(config, "generate").get<GenerateOptions>();
            set_if(seed_env, o.gen.seed);
            set_if(g_n, o.gen.n_samples);
            set_if(g_seed, o.gen.seed);
            set_if(g_len, o.gen.grid_length);
            set_if(g_min_peaks, o.gen.min_peaks);
            set_if(g_max_peaks, o.gen.max_peaks);
            set_if(g_noise_min, o.gen.noise_min);
            set_if(g_noise_max, o.gen.noise_max);
            set_if(g_sigmoid_p, o.gen.sigmoid_probability);
            set_if(g_poly, o.gen.max_poly_degree);
            set_if(g_inject, o.gen.injected_artifact_peaks);
            if (g_out) o.out_dir = *g_out;
            set_if(g_file, o.file_name);
            set_if(threads, o.threads);
            cmd_generate(o, std::cerr);
        } else if (tr->parsed()) {
            TrainOptions o = load_config(config, "train").get<TrainOptions>();
            set_if(seed_env, o.model.seed);
            t_model.apply_to(o.model);
            set_if(t_model.seed, o.model.seed);
            if (t_data) o.dataset = *t_data;
            if (t_out) o.out_dir = *t_out;
            set_if(t_limit, o.limit);
            set_if(t_labeled, o.labeled_count);
            need(!o.dataset.empty(), "train: --dataset is required");
            cmd_train(o, std::cerr);
        } else if (ev->parsed()) {
            EvalOptions o = load_config(config, "eval").get<EvalOptions>();
            set_if(seed_env, o.inject_seed);
            if (e_method) o.method = parse_eval_method(*e_method);
            if (e_classical) o.method = EvalMethod::ClassicalKk;
            if (e_ckpt) o.checkpoint = *e_ckpt;
            if (e_data) o.dataset = *e_data;
            if (e_out) o.out_dir = *e_out;
            set_if(e_limit, o.limit);
            set_if(e_plots, o.plots);
            set_if(e_inject, o.inject_peaks);
            set_if(e_inject_seed, o.inject_seed);
            e_peaks.apply_to(o.peaks);
            set_if(threads, o.threads);
            need(!o.dataset.empty(), "eval: --dataset is required");
            need(o.method != EvalMethod::Model || !o.checkpoint.empty(), "eval: --checkpoint is required for --method model");
            cmd_eval(o, std::cerr);
        } else if (ab->parsed()) {
            AblateOptions o = load_config(config, "ablate").get<AblateOptions>();
            if (seed_env) o.seeds = {*seed_env};
            if (a_sweep) o.kind = parse_sweep_kind(*a_sweep);
            set_if(a_values, o.values);
            set_if(a_seeds, o.seeds);
            a_model.apply_to(o.model);
            if (a_train) o.train_dataset = *a_train;
            if (a_test) o.test_dataset = *a_test;
            if (a_out) o.out_dir = *a_out;
            set_if(a_train_limit, o.train_limit);
            set_if(a_test_limit, o.test_limit);
            set_if(threads, o.threads);
            need(!o.train_dataset.empty() && !o.test_dataset.empty(), "ablate: --train and --test are required");
            cmd_ablate(o, std::cerr);
        } else if (zs->parsed()) {
            ZeroShotOptions o = load_config(config, "zero-shot").get<ZeroShotOptions>();
            if (z_ckpt) o.checkpoint = *z_ckpt;
            if (z_out) o.out_dir = *z_out;
            if (!z_inputs.empty()) o.inputs.assign(z_inputs.begin(), z_inputs.end());
            z_peaks.apply_to(o.peaks);
            need(!o.checkpoint.empty(), "zero-shot: --checkpoint is required");
            need(!o.inputs.empty(), "zero-shot: at least one input file is required");
            cmd_zero_shot(o, std::cerr);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::NonFiniteGradient ? kNumerical : kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kOk;
}
