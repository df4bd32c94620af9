#include "rampinn/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "rampinn/error.hpp"

namespace rampinn {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void to_json(json& j, const GenConfig& c) {
    j = json{{"seed", c.seed},
             {"n_samples", c.n_samples},
             {"grid_length", c.grid_length},
             {"min_peaks", c.min_peaks},
             {"max_peaks", c.max_peaks},
             {"amplitude_min", c.amplitude_min},
             {"amplitude_max", c.amplitude_max},
             {"width_min", c.width_min},
             {"width_max", c.width_max},
             {"noise_min", c.noise_min},
             {"noise_max", c.noise_max},
             {"sigmoid_probability", c.sigmoid_probability},
             {"max_poly_degree", c.max_poly_degree},
             {"injected_artifact_peaks", c.injected_artifact_peaks}};
}

void from_json(const json& j, GenConfig& c) {
    const GenConfig d;
    c.seed = j.value("seed", d.seed);
    c.n_samples = j.value("n_samples", d.n_samples);
    c.grid_length = j.value("grid_length", d.grid_length);
    c.min_peaks = j.value("min_peaks", d.min_peaks);
    c.max_peaks = j.value("max_peaks", d.max_peaks);
    c.amplitude_min = j.value("amplitude_min", d.amplitude_min);
    c.amplitude_max = j.value("amplitude_max", d.amplitude_max);
    c.width_min = j.value("width_min", d.width_min);
    c.width_max = j.value("width_max", d.width_max);
    c.noise_min = j.value("noise_min", d.noise_min);
    c.noise_max = j.value("noise_max", d.noise_max);
    c.sigmoid_probability = j.value("sigmoid_probability", d.sigmoid_probability);
    c.max_poly_degree = j.value("max_poly_degree", d.max_poly_degree);
    c.injected_artifact_peaks = j.value("injected_artifact_peaks", d.injected_artifact_peaks);
}

void to_json(json& j, const PeakParams& p) {
    j = json{{"tolerance", p.tolerance},
             {"min_prominence", p.min_prominence},
             {"min_height", p.min_height},
             {"min_separation", p.min_separation},
             {"smooth_window", p.smooth_window},
             {"smooth_polyorder", p.smooth_polyorder},
             {"intensity_floor", p.intensity_floor}};
}

void from_json(const json& j, PeakParams& p) {
    const PeakParams d;
    p.tolerance = j.value("tolerance", d.tolerance);
    p.min_prominence = j.value("min_prominence", d.min_prominence);
    p.min_height = j.value("min_height", d.min_height);
    p.min_separation = j.value("min_separation", d.min_separation);
    p.smooth_window = j.value("smooth_window", d.smooth_window);
    p.smooth_polyorder = j.value("smooth_polyorder", d.smooth_polyorder);
    p.intensity_floor = j.value("intensity_floor", d.intensity_floor);
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw Error(ErrorKind::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

void append_array(std::string& s, std::span<const double> v) {
    s += '[';
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += format_number(v[i]);
    }
    s += ']';
}

std::vector<double> number_array(const json& j, const char* key, std::size_t line_no) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_array()) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": missing array \"" + key + "\"");
    }
    std::vector<double> v;
    v.reserve(it->size());
    for (const auto& x : *it) {
        if (!x.is_number()) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": non-numeric entry in \"" + key + "\"");
        v.push_back(x.get<double>());
    }
    return v;
}

}  // namespace

void write_text(const fs::path& path, std::string_view text) {
    auto out = open_out(path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    finish(out, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
    }
}

std::string dataset_line(const Sample& s) {
    std::string line;
    line.reserve(24 * 3 * s.triple.cars.size() + 128);
    line += "{\"cars\":";
    append_array(line, s.triple.cars.values());
    line += ",\"raman\":";
    append_array(line, s.triple.raman.values());
    line += ",\"nrb\":";
    append_array(line, s.triple.nrb.values());
    const json meta{{"seed", s.meta.seed},
                    {"index", s.meta.index},
                    {"n_peaks", s.meta.n_peaks},
                    {"nrb_kind", s.meta.nrb_kind},
                    {"artifacts", s.meta.n_artifacts}};
    line += ",\"meta\":";
    line += meta.dump();
    line += '}';
    return line;
}

void write_dataset(const fs::path& path, std::span<const Sample> samples) {
    auto out = open_out(path);
    for (const auto& s : samples) {
        const auto line = dataset_line(s);
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
        out.put('\n');
    }
    finish(out, path);
}

std::vector<Sample> read_dataset(const fs::path& path, std::size_t limit) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open dataset " + path.string());
    std::vector<Sample> out;
    std::optional<WavenumberGrid> grid;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (limit && out.size() == limit) break;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::Parse, path.string() + " line " + std::to_string(line_no) + ": " + e.what());
        }
        auto cars = number_array(j, "cars", line_no);
        auto raman = number_array(j, "raman", line_no);
        auto nrb = number_array(j, "nrb", line_no);
        if (cars.size() < 2 || raman.size() != cars.size() || nrb.size() != cars.size()) {
            throw Error(ErrorKind::LengthMismatch, path.string() + " line " + std::to_string(line_no) +
                                                       ": cars/raman/nrb lengths differ or are < 2");
        }
        if (!grid) grid.emplace(cars.size());
        if (grid->size() != cars.size()) {
            throw Error(ErrorKind::LengthMismatch, path.string() + " line " + std::to_string(line_no) + ": length " +
                                                       std::to_string(cars.size()) + ", expected " +
                                                       std::to_string(grid->size()));
        }
        Sample s;
        s.triple = SpectrumTriple{Spectrum(*grid, std::move(cars)), Spectrum(*grid, std::move(raman)),
                                  Spectrum(*grid, std::move(nrb))};
        if (const auto m = j.find("meta"); m != j.end() && m->is_object()) {
            s.meta.seed = m->value("seed", std::uint64_t{0});
            s.meta.index = m->value("index", std::uint64_t{0});
            s.meta.n_peaks = m->value("n_peaks", 0);
            s.meta.nrb_kind = m->value("nrb_kind", std::string{});
            s.meta.n_artifacts = m->value("artifacts", 0);
        }
        out.push_back(std::move(s));
    }
    return out;
}

// ---- External spectra ----

std::vector<double> ExternalSpectrum::unit_positions() const {
    std::vector<double> u(axis.size());
    for (std::size_t i = 0; i < axis.size(); ++i) u[i] = map.to_unit(axis[i]);
    u.front() = 0.0;
    u.back() = 1.0;
    return u;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto p = line.find(delim, start);
        out.push_back(trim(line.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start)));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

char detect_delimiter(std::string_view line) {
    char best = 0;
    std::ptrdiff_t best_count = 0;
    for (char d : {',', '\t', ';'}) {
        const auto c = std::count(line.begin(), line.end(), d);
        if (c > best_count) {
            best = d;
            best_count = c;
        }
    }
    return best;
}

}  // namespace

ExternalSpectrum parse_external(std::string_view text, const std::string& name) {
    ExternalSpectrum out;
    out.name = name;
    auto fail = [&](std::size_t row, const std::string& msg) -> void {
        throw Error(ErrorKind::Parse, name + " row " + std::to_string(row) + ": " + msg);
    };
    std::size_t columns = 0;
    std::vector<double> truth;
    std::size_t line_no = 0, pos = 0;
    bool first = true;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (first) {
            out.delimiter = detect_delimiter(line);
            if (!out.delimiter) fail(line_no, "no comma, tab or semicolon delimiter found");
        }
        const auto fields = split(line, out.delimiter);
        std::vector<double> values;
        bool numeric = true;
        for (const auto f : fields) {
            const auto v = parse_number(f);
            if (!v) {
                numeric = false;
                break;
            }
            values.push_back(*v);
        }
        if (first) {
            first = false;
            columns = fields.size();
            if (columns < 2 || columns > 3) fail(line_no, "expected 2 or 3 columns, found " + std::to_string(columns));
            if (!numeric) {
                for (const auto f : fields) out.header.emplace_back(f);
                continue;
            }
        }
        if (fields.size() != columns) {
            fail(line_no, "expected " + std::to_string(columns) + " columns, found " + std::to_string(fields.size()));
        }
        if (!numeric) fail(line_no, "non-numeric value");
        for (double v : values) {
            if (!std::isfinite(v)) fail(line_no, "non-finite value");
        }
        if (out.axis.size() >= 2) {
            const bool up = out.axis[1] > out.axis[0];
            const double prev = out.axis.back();
            if (up ? !(values[0] > prev) : !(values[0] < prev)) fail(line_no, "wavenumbers are not strictly monotonic");
        } else if (out.axis.size() == 1 && values[0] == out.axis[0]) {
            fail(line_no, "wavenumbers are not strictly monotonic");
        }
        out.axis.push_back(values[0]);
        out.cars.push_back(values[1]);
        if (columns == 3) truth.push_back(values[2]);
    }
    if (out.axis.size() < kMinExternalRows) {
        throw Error(ErrorKind::Parse, name + ": " + std::to_string(out.axis.size()) + " data rows, at least " +
                                          std::to_string(kMinExternalRows) + " required");
    }
    if (columns == 3) out.truth = std::move(truth);
    out.map = AxisMap{out.axis.front(), out.axis.back() - out.axis.front()};
    return out;
}

ExternalSpectrum read_external(const fs::path& path) {
    return parse_external(read_text(path), path.stem().string());
}

void write_external(const fs::path& path, std::span<const double> axis, std::span<const double> cars,
                    std::span<const double> truth, char delimiter) {
    require_same_length(axis.size(), cars.size(), "external cars column");
    if (!truth.empty()) require_same_length(axis.size(), truth.size(), "external truth column");
    std::string s = "wavenumber";
    s += delimiter;
    s += "cars";
    if (!truth.empty()) {
        s += delimiter;
        s += "raman";
    }
    s += '\n';
    for (std::size_t i = 0; i < axis.size(); ++i) {
        s += format_number(axis[i]);
        s += delimiter;
        s += format_number(cars[i]);
        if (!truth.empty()) {
            s += delimiter;
            s += format_number(truth[i]);
        }
        s += '\n';
    }
    write_text(path, s);
}

namespace {

bool on_uniform_grid(std::span<const double> u, std::size_t length) {
    if (u.size() != length) return false;
    const WavenumberGrid g(length);
    for (std::size_t i = 0; i < length; ++i) {
        if (std::abs(u[i] - g[i]) > 1e-12) return false;
    }
    return true;
}

}  // namespace

std::vector<double> to_uniform(std::span<const double> unit_positions, std::span<const double> values,
                               std::size_t length) {
    require_same_length(unit_positions.size(), values.size(), "to_uniform");
    if (on_uniform_grid(unit_positions, length)) return {values.begin(), values.end()};
    const WavenumberGrid g(length);
    return interpolate_linear(unit_positions, values, g.points());
}

std::vector<double> from_uniform(std::span<const double> uniform_values, std::span<const double> unit_positions) {
    if (on_uniform_grid(unit_positions, uniform_values.size())) return {uniform_values.begin(), uniform_values.end()};
    const WavenumberGrid g(uniform_values.size());
    return interpolate_linear(g.points(), uniform_values, unit_positions);
}

// ---- Reports ----

void write_history_csv(const fs::path& path, std::span<const EpochRecord> history) {
    std::string s = "epoch,L_data,L_KK,L_smooth,L_total_train,L_total_val\n";
    for (const auto& r : history) {
        s += std::to_string(r.epoch) + ',' + format_number(r.data) + ',' + format_number(r.kk) + ',' +
             format_number(r.smooth) + ',' + format_number(r.total_train) + ',' + format_number(r.total_val) + '\n';
    }
    write_text(path, s);
}

void write_metrics_csv(const fs::path& path, std::span<const MetricsRow> rows, const std::vector<std::string>& notes) {
    std::string s;
    for (const auto& n : notes) s += "# " + n + '\n';
    s += "id,mse,psnr,pearson,tp,fp,fn,precision,recall,f1,mle,rie_mean,rie_median\n";
    std::vector<PeakMatchReport> reports;
    std::vector<double> mses, psnrs, pearsons;
    for (const auto& r : rows) {
        const auto& p = r.peaks;
        s += r.id + ',' + format_number(r.mse) + ',' + format_number(r.psnr) + ',' + format_number(r.pearson) + ',' +
             std::to_string(p.tp) + ',' + std::to_string(p.fp) + ',' + std::to_string(p.fn) + ',' +
             format_number(p.precision) + ',' + format_number(p.recall) + ',' + format_number(p.f1) + ',' +
             format_number(p.mle) + ',' + format_number(p.rie_mean) + ',' + format_number(p.rie_median) + '\n';
        reports.push_back(p);
        mses.push_back(r.mse);
        psnrs.push_back(std::isfinite(r.psnr) ? r.psnr : kUndefined);
        pearsons.push_back(r.pearson);
    }
    if (!rows.empty()) {
        const auto sum = aggregate(reports);
        auto ms = [](const MeanStd& m) { return format_number(m.mean) + ',' + format_number(m.std); };
        s += "\n# summary,mean,std\n";
        s += "# mse," + ms(mean_std(mses)) + '\n';
        s += "# psnr," + ms(mean_std(psnrs)) + '\n';
        s += "# pearson," + ms(mean_std(pearsons)) + '\n';
        s += "# macro_precision," + ms(sum.precision) + '\n';
        s += "# macro_recall," + ms(sum.recall) + '\n';
        s += "# macro_f1," + ms(sum.f1) + '\n';
        s += "# macro_mle," + ms(sum.mle) + '\n';
        s += "# macro_rie_mean," + ms(sum.rie_mean) + '\n';
        s += "# macro_rie_median," + ms(sum.rie_median) + '\n';
        s += "# micro_tp_fp_fn," + std::to_string(sum.tp) + ',' + std::to_string(sum.fp) + ',' + std::to_string(sum.fn) + '\n';
        s += "# micro_precision," + format_number(sum.micro_precision) + '\n';
        s += "# micro_recall," + format_number(sum.micro_recall) + '\n';
        s += "# micro_f1," + format_number(sum.micro_f1) + '\n';
        s += "# pooled_rie_mean," + format_number(sum.pooled_rie_mean) + '\n';
        s += "# pooled_rie_median," + format_number(sum.pooled_rie_median) + '\n';
    }
    write_text(path, s);
}

namespace {

std::string xml_escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '&': o += "&amp;"; break;
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

std::string fixed(double v, int digits = 2) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace

std::string render_svg(const std::string& title, std::span<const double> x, std::span<const PlotSeries> series,
                       const std::string& x_label) {
    constexpr double W = 800, H = 400, left = 60, right = 150, top = 40, bottom = 50;
    const double pw = W - left - right, ph = H - top - bottom;
    double xmin = x.empty() ? 0.0 : x.front(), xmax = x.empty() ? 1.0 : x.back();
    if (xmin > xmax) std::swap(xmin, xmax);
    double ymin = 0.0, ymax = 1.0;
    for (const auto& s : series) {
        for (double v : s.values) {
            if (!std::isfinite(v)) continue;
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (xmax == xmin) xmax = xmin + 1.0;
    auto px = [&](double v) { return left + (v - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return top + (ymax - v) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
       << xml_escape(title) << "</text>\n";
    os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double xv = xmin + (xmax - xmin) * t / 4.0, yv = ymin + (ymax - ymin) * t / 4.0;
        os << "<text x=\"" << fixed(px(xv)) << "\" y=\"" << H - bottom + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fixed(xv, 3) << "</text>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << fixed(py(yv) + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fixed(yv, 2) << "</text>\n";
    }
    os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(x_label) << "</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
        const std::size_t n = std::min(x.size(), s.values.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(s.values[i])) continue;
            os << fixed(px(x[i])) << ',' << fixed(py(s.values[i])) << ' ';
        }
        os << "\"/>\n";
        const double ly = top + 16 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << W - right + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - right + 30 << "\" y2=\"" << ly
           << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - right + 35 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">"
           << xml_escape(s.label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_svg(const fs::path& path, const std::string& title, std::span<const double> x,
               std::span<const PlotSeries> series, const std::string& x_label) {
    write_text(path, render_svg(title, x, series, x_label));
}

void write_traces_csv(const fs::path& path, std::span<const double> x, std::span<const PlotSeries> series,
                      const std::string& x_name) {
    std::string s = x_name;
    for (const auto& c : series) s += ',' + c.label;
    s += '\n';
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += format_number(x[i]);
        for (const auto& c : series) s += ',' + (i < c.values.size() ? format_number(c.values[i]) : std::string{});
        s += '\n';
    }
    write_text(path, s);
}

}  // namespace rampinn
