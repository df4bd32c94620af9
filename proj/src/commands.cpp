#include "rampinn/commands.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <thread>

#include "rampinn/error.hpp"
#include "rampinn/hilbert.hpp"
#include "rampinn/nn/checkpoint.hpp"

namespace rampinn {

using nlohmann::json;

namespace {

constexpr const char* kConfigFile = "resolved_config.json";

void snapshot(const fs::path& out_dir, const json& j) { write_json(out_dir / kConfigFile, j); }

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + ec.message());
}

std::vector<double> resized(std::span<const double> v, std::size_t length) {
    return v.size() == length ? std::vector<double>(v.begin(), v.end()) : resample_uniform(v, length);
}

/// Normalized copy; an all-zero signal is returned unchanged.
std::vector<double> safe_normalized(std::span<const double> v) {
    const double m = v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
    if (!(m > 0.0)) return {v.begin(), v.end()};
    return normalized_values(v);
}

template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < n; i += threads) fn(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string value_tag(double v) {
    auto s = format_number(v);
    std::replace(s.begin(), s.end(), '.', 'p');
    std::replace(s.begin(), s.end(), '-', 'm');
    return s;
}

}  // namespace

MetricsRow score(const std::string& id, std::span<const double> pred, std::span<const double> truth,
                 const PeakParams& peaks) {
    const auto ev = evaluate_spectrum(pred, truth, peaks);
    MetricsRow r;
    r.id = id;
    r.mse = ev.mse;
    r.psnr = ev.psnr;
    r.pearson = pearson(pred, truth);
    r.peaks = ev.peaks;
    return r;
}

// ---- generate ----

GenerateResult cmd_generate(const GenerateOptions& opt, std::ostream& log) {
    opt.gen.validate();
    GenerateResult res;
    res.dataset = opt.out_dir / opt.file_name;
    res.manifest = opt.out_dir / (fs::path(opt.file_name).stem().string() + ".manifest.json");
    if (opt.gen.n_samples == 0) log << "warning: --n 0, writing an empty dataset\n";
    const auto samples = generate_dataset(opt.gen, opt.threads);
    ensure_dir(opt.out_dir);
    write_dataset(res.dataset, samples);
    res.count = samples.size();
    res.digest = file_digest(res.dataset);

    std::map<std::string, std::size_t> kinds;
    for (const auto& s : samples) ++kinds[s.meta.nrb_kind];
    json manifest{{"format", "rampinn-jsonl"},
                  {"version", 1},
                  {"file", opt.file_name},
                  {"seed", opt.gen.seed},
                  {"count", res.count},
                  {"grid_length", opt.gen.grid_length},
                  {"injected_artifact_peaks", opt.gen.injected_artifact_peaks},
                  {"nrb_kinds", kinds},
                  {"fnv1a64", res.digest},
                  {"generator", opt.gen}};
    write_json(res.manifest, manifest);
    snapshot(opt.out_dir, to_json(opt));
    log << "wrote " << res.count << " samples to " << res.dataset.string() << " (fnv1a64 " << res.digest << ")\n";
    return res;
}

// ---- train ----

TrainOutcome cmd_train(const TrainOptions& opt, std::ostream& log) {
    RamPinnConfig cfg = opt.model;
    if (opt.labeled_count == 0 && cfg.lambda_data != 0.0) {
        log << "no labeled samples: running the self-supervised path (lambda_data = 0)\n";
        cfg.lambda_data = 0.0;
    }
    cfg.validate();
    const auto samples = read_dataset(opt.dataset, opt.limit);
    if (samples.empty()) throw Error(ErrorKind::EmptyInput, "dataset " + opt.dataset.string() + " has no samples");
    const std::size_t L = cfg.input_length;
    if (samples.front().triple.cars.size() != L) {
        log << "resampling dataset length " << samples.front().triple.cars.size() << " to model length " << L << "\n";
    }

    const bool use_labels = cfg.lambda_data != 0.0;
    const std::size_t n_labeled =
        !use_labels ? 0 : (opt.labeled_count < 0 ? samples.size() : std::min<std::size_t>(opt.labeled_count, samples.size()));
    TrainSet data;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto c = resized(samples[i].triple.cars.values(), L);
        data.cars.emplace_back(c.begin(), c.end());
        if (i < n_labeled) {
            const auto r = resized(samples[i].triple.raman.values(), L);
            data.raman.emplace_back(r.begin(), r.end());
            data.labeled.push_back(1);
        } else {
            data.raman.emplace_back();
            data.labeled.push_back(0);
        }
    }

    RamPinnNet<float> net(cfg);
    log << "training on " << data.size() << " samples (" << n_labeled << " labeled), " << net.parameter_count()
        << " parameters\n";
    const auto result = train(net, data, [&](const EpochRecord& r) {
        log << "epoch " << r.epoch << " data " << format_number(r.data) << " kk " << format_number(r.kk) << " smooth "
            << format_number(r.smooth) << " train " << format_number(r.total_train) << " val "
            << format_number(r.total_val) << "\n";
    });

    TrainOutcome out;
    out.result = result;
    out.checkpoint = opt.out_dir / "checkpoint.bin";
    out.history = opt.out_dir / "history.csv";
    ensure_dir(opt.out_dir);
    nn::save_checkpoint(out.checkpoint, net.to_checkpoint());
    write_history_csv(out.history, result.history);
    write_json(opt.out_dir / "train_summary.json", json{{"samples", data.size()},
                                                        {"labeled", n_labeled},
                                                        {"parameters", net.parameter_count()},
                                                        {"epochs_run", result.history.size()},
                                                        {"best_epoch", result.best_epoch},
                                                        {"best_val", result.best_val},
                                                        {"aborted", result.aborted},
                                                        {"abort_epoch", result.abort_epoch}});
    snapshot(opt.out_dir, to_json(opt));
    log << "best epoch " << result.best_epoch << " val " << format_number(result.best_val) << "; wrote "
        << out.checkpoint.string() << "\n";
    if (result.aborted) {
        throw Error(ErrorKind::NonFiniteGradient, "epoch " + std::to_string(result.abort_epoch) + ": " +
                                                      result.abort_message + " (best state saved to " +
                                                      out.checkpoint.string() + ")");
    }
    return out;
}

// ---- eval ----

EvalSummary cmd_eval(const EvalOptions& opt, std::ostream& log) {
    opt.peaks.validate();
    auto samples = read_dataset(opt.dataset, opt.limit);
    if (samples.empty()) throw Error(ErrorKind::EmptyInput, "dataset " + opt.dataset.string() + " has no samples");
    if (opt.inject_peaks < 0) throw Error(ErrorKind::InvalidArgument, "inject_peaks must be >= 0");
    if (opt.inject_peaks > 0) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            Rng rng = sample_rng(opt.inject_seed ^ 0x6a09e667f3bcc909ULL, i);
            samples[i].triple = inject_artifacts(samples[i].triple, rng, opt.inject_peaks);
            samples[i].meta.n_artifacts += opt.inject_peaks;
        }
    }

    std::vector<std::vector<double>> pred_raman(samples.size()), pred_nrb;
    switch (opt.method) {
        case EvalMethod::Truth:
            for (std::size_t i = 0; i < samples.size(); ++i) pred_raman[i] = samples[i].triple.raman.vector();
            break;
        case EvalMethod::ClassicalKk:
            for (std::size_t i = 0; i < samples.size(); ++i) {
                pred_raman[i] = classical_kk_retrieve(samples[i].triple.cars, samples[i].triple.nrb).vector();
            }
            break;
        case EvalMethod::Model: {
            auto net = RamPinnNet<float>::from_checkpoint(nn::load_checkpoint(opt.checkpoint));
            std::vector<Spectrum> cars;
            for (const auto& s : samples) cars.push_back(s.triple.cars);
            const auto preds = predict_batch(net, cars);
            pred_nrb.resize(samples.size());
            for (std::size_t i = 0; i < samples.size(); ++i) {
                pred_raman[i] = preds[i].raman.vector();
                pred_nrb[i] = preds[i].nrb.vector();
            }
            break;
        }
    }

    EvalSummary sum;
    sum.count = samples.size();
    sum.rows.resize(samples.size());
    parallel_for(samples.size(), opt.threads, [&](std::size_t i) {
        sum.rows[i] = score(std::to_string(samples[i].meta.index), pred_raman[i], samples[i].triple.raman.values(),
                            opt.peaks);
    });

    std::vector<double> mses, psnrs, pears;
    std::vector<PeakMatchReport> reports;
    for (const auto& r : sum.rows) {
        mses.push_back(r.mse);
        psnrs.push_back(std::isfinite(r.psnr) ? r.psnr : kUndefined);
        pears.push_back(r.pearson);
        reports.push_back(r.peaks);
    }
    sum.mse = mean_std(mses);
    sum.psnr = mean_std(psnrs);
    sum.pearson = mean_std(pears);
    sum.peaks = aggregate(reports);

    std::vector<std::string> notes{"method " + to_string(opt.method), "dataset " + opt.dataset.string(),
                                   "samples " + std::to_string(sum.count)};
    if (opt.method == EvalMethod::Model) notes.push_back("checkpoint " + opt.checkpoint.string());
    if (opt.inject_peaks > 0) notes.push_back("injected artifact peaks " + std::to_string(opt.inject_peaks));
    notes.push_back("psnr of identical spectra is inf and is excluded from the psnr mean");
    write_metrics_csv(opt.out_dir / "metrics.csv", sum.rows, notes);

    auto ms = [](const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}, {"count", m.count}}; };
    const auto& p = sum.peaks;
    write_json(opt.out_dir / "summary.json",
               json{{"method", to_string(opt.method)},
                    {"count", sum.count},
                    {"mse", ms(sum.mse)},
                    {"psnr", ms(sum.psnr)},
                    {"pearson", ms(sum.pearson)},
                    {"macro", {{"precision", ms(p.precision)},
                               {"recall", ms(p.recall)},
                               {"f1", ms(p.f1)},
                               {"mle", ms(p.mle)},
                               {"rie_mean", ms(p.rie_mean)},
                               {"rie_median", ms(p.rie_median)}}},
                    {"micro", {{"tp", p.tp}, {"fp", p.fp}, {"fn", p.fn},
                               {"precision", p.micro_precision},
                               {"recall", p.micro_recall},
                               {"f1", p.micro_f1},
                               {"pooled_rie_mean", p.pooled_rie_mean},
                               {"pooled_rie_median", p.pooled_rie_median}}}});

    const std::size_t n_plots = std::min(opt.plots, samples.size());
    for (std::size_t i = 0; i < n_plots; ++i) {
        const auto& t = samples[i].triple;
        std::vector<PlotSeries> series{{"cars", t.cars.vector(), "#7f7f7f"},
                                       {"raman_true", t.raman.vector(), "#1f77b4"},
                                       {"raman_pred", pred_raman[i], "#d62728"}};
        if (!pred_nrb.empty()) series.push_back({"nrb_pred", pred_nrb[i], "#2ca02c"});
        const auto stem = "overlay_" + std::to_string(samples[i].meta.index);
        const auto x = t.cars.grid().points();
        write_svg(opt.out_dir / (stem + ".svg"), "sample " + std::to_string(samples[i].meta.index), x, series);
        write_traces_csv(opt.out_dir / (stem + ".csv"), x, series);
    }
    snapshot(opt.out_dir, to_json(opt));
    log << to_string(opt.method) << ": " << sum.count << " spectra, mse " << format_number(sum.mse.mean) << " +- "
        << format_number(sum.mse.std) << ", micro f1 " << format_number(p.micro_f1) << "\n";
    return sum;
}

// ---- ablate ----

std::vector<double> default_sweep(SweepKind kind, std::size_t train_size) {
    switch (kind) {
        case SweepKind::LambdaKk: {
            std::vector<double> v(10);
            for (std::size_t i = 0; i < 10; ++i) v[i] = static_cast<double>(i) / 9.0;
            return v;
        }
        case SweepKind::LambdaSmooth: return {0.0, 1.0, 10.0};
        case SweepKind::Data: {
            std::vector<double> v;
            for (double k : {0.0, 100.0, 250.0, 500.0, 750.0, 1000.0}) {
                if (k < static_cast<double>(train_size)) v.push_back(k);
            }
            v.push_back(static_cast<double>(train_size));
            v.erase(std::unique(v.begin(), v.end()), v.end());
            return v;
        }
    }
    return {};
}

std::vector<AblateRow> cmd_ablate(const AblateOptions& opt, std::ostream& log) {
    if (opt.seeds.empty()) throw Error(ErrorKind::InvalidArgument, "ablate needs at least one seed");
    std::size_t train_size = opt.train_limit;
    if (opt.kind == SweepKind::Data && train_size == 0) train_size = read_dataset(opt.train_dataset).size();
    const auto values = opt.values.empty() ? default_sweep(opt.kind, train_size) : opt.values;
    for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "sweep values must be finite and >= 0");
    }

    std::vector<AblateRow> rows;
    for (double v : values) {
        AblateRow row;
        row.value = v;
        for (auto seed : opt.seeds) {
            TrainOptions t;
            t.model = opt.model;
            t.model.seed = seed;
            t.dataset = opt.train_dataset;
            t.limit = opt.train_limit;
            switch (opt.kind) {
                case SweepKind::LambdaKk: t.model.lambda_kk = v; break;
                case SweepKind::LambdaSmooth: t.model.lambda_smooth = v; break;
                case SweepKind::Data: t.labeled_count = static_cast<long long>(std::llround(v)); break;
            }
            t.out_dir = opt.out_dir / "runs" / (to_string(opt.kind) + "_" + value_tag(v) + "_seed" + std::to_string(seed));
            log << "== " << to_string(opt.kind) << " = " << format_number(v) << ", seed " << seed << "\n";
            try {
                cmd_train(t, log);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NonFiniteGradient) throw;
                log << "warning: " << e.what() << "; evaluating the restored state\n";
            }
            EvalOptions ev;
            ev.checkpoint = t.out_dir / "checkpoint.bin";
            ev.dataset = opt.test_dataset;
            ev.limit = opt.test_limit;
            ev.out_dir = t.out_dir / "eval";
            ev.plots = 0;
            ev.threads = opt.threads;
            row.mse.push_back(cmd_eval(ev, log).mse.mean);
        }
        row.stats = mean_std(row.mse);
        rows.push_back(row);
    }

    std::string csv = to_string(opt.kind) + ",mse_mean,mse_std";
    for (auto s : opt.seeds) csv += ",mse_seed" + std::to_string(s);
    csv += '\n';
    for (const auto& r : rows) {
        csv += format_number(r.value) + ',' + format_number(r.stats.mean) + ',' + format_number(r.stats.std);
        for (double m : r.mse) csv += ',' + format_number(m);
        csv += '\n';
    }
    write_text(opt.out_dir / "ablate.csv", csv);
    snapshot(opt.out_dir, to_json(opt));
    return rows;
}

// ---- zero-shot ----

std::vector<ZeroShotRow> cmd_zero_shot(const ZeroShotOptions& opt, std::ostream& log) {
    opt.peaks.validate();
    if (opt.inputs.empty()) throw Error(ErrorKind::EmptyInput, "zero-shot needs at least one input file");
    auto net = RamPinnNet<float>::from_checkpoint(nn::load_checkpoint(opt.checkpoint));
    const std::size_t L = net.config().input_length;

    std::vector<ZeroShotRow> out;
    std::vector<MetricsRow> metric_rows;
    std::vector<std::string> notes{
        "checkpoint " + opt.checkpoint.string(),
        "a single checkpoint selected by validation loss is applied to every input; no per-input model selection"};
    std::map<std::string, int> seen;
    for (const auto& path : opt.inputs) {
        const auto ext = read_external(path);
        std::string name = ext.name;
        if (seen[name]++) name += "_" + std::to_string(seen[ext.name]);
        const auto u = ext.unit_positions();
        const auto cars_u = to_uniform(u, ext.cars, L);
        const auto pred = predict(net, Spectrum(WavenumberGrid(L), cars_u));
        const auto raman = safe_normalized(from_uniform(pred.raman.values(), u));
        const auto nrb = safe_normalized(from_uniform(pred.nrb.values(), u));

        ZeroShotRow row;
        row.name = name;
        row.points = ext.axis.size();
        row.has_truth = ext.truth.has_value();
        std::vector<PlotSeries> series{{"cars", ext.cars, "#7f7f7f"},
                                       {"raman_pred", raman, "#d62728"},
                                       {"nrb_pred", nrb, "#2ca02c"}};
        if (row.has_truth) {
            const auto truth = safe_normalized(*ext.truth);
            series.push_back({"raman_true", truth, "#1f77b4"});
            row.metrics = score(name, raman, truth, opt.peaks);
            metric_rows.push_back(row.metrics);
            log << name << ": mse " << format_number(row.metrics.mse) << ", f1 " << format_number(row.metrics.peaks.f1)
                << "\n";
        } else {
            notes.push_back(name + ": no truth column, metrics omitted");
            log << "notice: " << name << " has no truth column; prediction written, metrics omitted\n";
        }
        write_traces_csv(opt.out_dir / (name + "_prediction.csv"), ext.axis, series, "wavenumber");
        write_svg(opt.out_dir / (name + ".svg"), name, ext.axis, series, "wavenumber");
        out.push_back(std::move(row));
    }
    write_metrics_csv(opt.out_dir / "zero_shot.csv", metric_rows, notes);
    snapshot(opt.out_dir, to_json(opt));
    return out;
}

// ---- names and config snapshots ----

std::string to_string(EvalMethod m) {
    switch (m) {
        case EvalMethod::Model: return "model";
        case EvalMethod::Truth: return "truth";
        case EvalMethod::ClassicalKk: return "classical-kk";
    }
    return "model";
}

EvalMethod parse_eval_method(const std::string& s) {
    if (s == "model") return EvalMethod::Model;
    if (s == "truth") return EvalMethod::Truth;
    if (s == "classical-kk") return EvalMethod::ClassicalKk;
    throw Error(ErrorKind::InvalidArgument, "unknown eval method '" + s + "' (model, truth, classical-kk)");
}

std::string to_string(SweepKind k) {
    switch (k) {
        case SweepKind::LambdaKk: return "lambda-kk";
        case SweepKind::LambdaSmooth: return "lambda-smooth";
        case SweepKind::Data: return "data";
    }
    return "lambda-kk";
}

SweepKind parse_sweep_kind(const std::string& s) {
    if (s == "lambda-kk") return SweepKind::LambdaKk;
    if (s == "lambda-smooth") return SweepKind::LambdaSmooth;
    if (s == "data") return SweepKind::Data;
    throw Error(ErrorKind::InvalidArgument, "unknown sweep '" + s + "' (lambda-kk, lambda-smooth, data)");
}

json to_json(const GenerateOptions& o) {
    return json{{"command", "generate"}, {"gen", o.gen}, {"out_dir", o.out_dir.string()},
                {"file_name", o.file_name}, {"threads", o.threads}};
}

json to_json(const TrainOptions& o) {
    return json{{"command", "train"},   {"model", o.model},  {"dataset", o.dataset.string()},
                {"out_dir", o.out_dir.string()}, {"limit", o.limit}, {"labeled_count", o.labeled_count}};
}

json to_json(const EvalOptions& o) {
    return json{{"command", "eval"},
                {"method", to_string(o.method)},
                {"checkpoint", o.checkpoint.string()},
                {"dataset", o.dataset.string()},
                {"out_dir", o.out_dir.string()},
                {"limit", o.limit},
                {"peaks", o.peaks},
                {"inject_peaks", o.inject_peaks},
                {"inject_seed", o.inject_seed},
                {"plots", o.plots},
                {"threads", o.threads}};
}

json to_json(const AblateOptions& o) {
    return json{{"command", "ablate"},
                {"sweep", to_string(o.kind)},
                {"values", o.values},
                {"seeds", o.seeds},
                {"model", o.model},
                {"train_dataset", o.train_dataset.string()},
                {"test_dataset", o.test_dataset.string()},
                {"out_dir", o.out_dir.string()},
                {"train_limit", o.train_limit},
                {"test_limit", o.test_limit},
                {"threads", o.threads}};
}

json to_json(const ZeroShotOptions& o) {
    std::vector<std::string> inputs;
    for (const auto& p : o.inputs) inputs.push_back(p.string());
    return json{{"command", "zero-shot"}, {"checkpoint", o.checkpoint.string()}, {"inputs", inputs},
                {"out_dir", o.out_dir.string()}, {"peaks", o.peaks}};
}

namespace {

fs::path path_value(const json& j, const char* key, const fs::path& def) {
    return j.contains(key) ? fs::path(j.at(key).get<std::string>()) : def;
}

}  // namespace

void from_json(const json& j, GenerateOptions& o) {
    if (j.contains("gen")) o.gen = j.at("gen").get<GenConfig>();
    o.out_dir = path_value(j, "out_dir", o.out_dir);
    o.file_name = j.value("file_name", o.file_name);
    o.threads = j.value("threads", o.threads);
}

void from_json(const json& j, TrainOptions& o) {
    if (j.contains("model")) o.model = j.at("model").get<RamPinnConfig>();
    o.dataset = path_value(j, "dataset", o.dataset);
    o.out_dir = path_value(j, "out_dir", o.out_dir);
    o.limit = j.value("limit", o.limit);
    o.labeled_count = j.value("labeled_count", o.labeled_count);
}

void from_json(const json& j, EvalOptions& o) {
    if (j.contains("method")) o.method = parse_eval_method(j.at("method").get<std::string>());
    o.checkpoint = path_value(j, "checkpoint", o.checkpoint);
    o.dataset = path_value(j, "dataset", o.dataset);
    o.out_dir = path_value(j, "out_dir", o.out_dir);
    o.limit = j.value("limit", o.limit);
    if (j.contains("peaks")) o.peaks = j.at("peaks").get<PeakParams>();
    o.inject_peaks = j.value("inject_peaks", o.inject_peaks);
    o.inject_seed = j.value("inject_seed", o.inject_seed);
    o.plots = j.value("plots", o.plots);
    o.threads = j.value("threads", o.threads);
}

void from_json(const json& j, AblateOptions& o) {
    if (j.contains("sweep")) o.kind = parse_sweep_kind(j.at("sweep").get<std::string>());
    o.values = j.value("values", o.values);
    o.seeds = j.value("seeds", o.seeds);
    if (j.contains("model")) o.model = j.at("model").get<RamPinnConfig>();
    o.train_dataset = path_value(j, "train_dataset", o.train_dataset);
    o.test_dataset = path_value(j, "test_dataset", o.test_dataset);
    o.out_dir = path_value(j, "out_dir", o.out_dir);
    o.train_limit = j.value("train_limit", o.train_limit);
    o.test_limit = j.value("test_limit", o.test_limit);
    o.threads = j.value("threads", o.threads);
}

void from_json(const json& j, ZeroShotOptions& o) {
    o.checkpoint = path_value(j, "checkpoint", o.checkpoint);
    if (j.contains("inputs")) {
        o.inputs.clear();
        for (const auto& s : j.at("inputs")) o.inputs.emplace_back(s.get<std::string>());
    }
    o.out_dir = path_value(j, "out_dir", o.out_dir);
    if (j.contains("peaks")) o.peaks = j.at("peaks").get<PeakParams>();
}

}  // namespace rampinn
