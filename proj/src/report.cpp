#include "vdll/report.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace vdll {

const char* const kEpochCsvHeader =
    "t_s,truth_x_m,truth_y_m,truth_z_m,est_x_m,est_y_m,est_z_m,err_e_m,err_n_m,err_u_m,valid_svs,locked_svs,"
    "raim_stat,raim_thresh,raim_detected,excluded_svs,flags";

const char* const kChannelCsvHeader = "t_s,sv_id,cn0_dbhz,valid,locked,code_error_m,residual_m,sigma_m,status";

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return fmt::format("{:.12g}", v);
}

double parse_num(const std::string& s) {
    if (s.empty()) return kNaN;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    return in;
}

void finish_write(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("I/O error writing " + path.string());
}

void expect_header(std::istream& in, const char* header, const std::filesystem::path& path) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header) throw std::runtime_error(path.string() + ": unexpected header");
}

EntryStatus status_from_string(const std::string& s) {
    for (auto st : {EntryStatus::ok, EntryStatus::blocked, EntryStatus::weak_signal, EntryStatus::out_of_pull_in,
                    EntryStatus::reacquiring, EntryStatus::excluded, EntryStatus::unresolved}) {
        if (s == to_string(st)) return st;
    }
    throw std::invalid_argument("unknown channel status '" + s + "'");
}

}  // namespace

void write_epoch_csv(const std::vector<EpochRecord>& records, std::ostream& out) {
    out << kEpochCsvHeader << '\n';
    for (const auto& r : records) {
        std::string excluded;
        for (int sv : r.excluded) excluded += (excluded.empty() ? "" : ";") + std::to_string(sv);
        out << fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", num(r.t), num(r.truth.x),
                           num(r.truth.y), num(r.truth.z), num(r.estimate.x), num(r.estimate.y), num(r.estimate.z),
                           num(r.error.east), num(r.error.north), num(r.error.up), r.valid_svs, r.locked_svs,
                           num(r.raim_stat), num(r.raim_thresh), r.raim_detected ? 1 : 0, excluded,
                           flags_to_string(r.flags));
    }
}

void write_epoch_csv(const std::vector<EpochRecord>& records, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_epoch_csv(records, out);
    finish_write(out, path);
}

std::vector<EpochRecord> read_epoch_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    expect_header(in, kEpochCsvHeader, path);
    std::vector<EpochRecord> records;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 17) throw std::runtime_error(fmt::format("{}:{}: expected 17 columns", path.string(), line_no));
        EpochRecord r;
        r.t = parse_num(f[0]);
        r.truth = {parse_num(f[1]), parse_num(f[2]), parse_num(f[3])};
        r.estimate = {parse_num(f[4]), parse_num(f[5]), parse_num(f[6])};
        r.error = {parse_num(f[7]), parse_num(f[8]), parse_num(f[9])};
        r.valid_svs = std::stoi(f[10]);
        r.locked_svs = std::stoi(f[11]);
        r.raim_stat = parse_num(f[12]);
        r.raim_thresh = parse_num(f[13]);
        r.raim_detected = f[14] == "1";
        for (const auto& id : split(f[15], ';')) {
            if (!id.empty()) r.excluded.insert(std::stoi(id));
        }
        r.flags = flags_from_string(f[16]);
        records.push_back(std::move(r));
    }
    return records;
}

void write_channel_csv(const std::vector<EpochRecord>& records, std::ostream& out) {
    out << kChannelCsvHeader << '\n';
    for (const auto& r : records) {
        for (const auto& c : r.channels) {
            out << fmt::format("{},{},{},{},{},{},{},{},{}\n", num(r.t), c.sv_id, num(c.cn0), c.valid ? 1 : 0,
                               c.locked ? 1 : 0, num(c.code_error), num(c.residual), num(c.sigma),
                               to_string(c.status));
        }
    }
}

void write_channel_csv(const std::vector<EpochRecord>& records, const std::filesystem::path& path) {
    auto out = open_out(path);
    write_channel_csv(records, out);
    finish_write(out, path);
}

std::vector<EpochRecord> read_channel_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    expect_header(in, kChannelCsvHeader, path);
    std::vector<EpochRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 9) throw std::runtime_error(path.string() + ": expected 9 columns");
        const double t = parse_num(f[0]);
        if (records.empty() || records.back().t != t) {
            records.emplace_back();
            records.back().t = t;
        }
        ChannelSample c;
        c.sv_id = std::stoi(f[1]);
        c.cn0 = parse_num(f[2]);
        c.valid = f[3] == "1";
        c.locked = f[4] == "1";
        c.code_error = parse_num(f[5]);
        c.residual = parse_num(f[6]);
        c.sigma = parse_num(f[7]);
        c.status = status_from_string(f[8]);
        records.back().channels.push_back(c);
    }
    return records;
}

std::string summary_json(const RunSummary& s) {
    nlohmann::ordered_json j;
    j["rmse_east"] = s.rmse_east;
    j["rmse_north"] = s.rmse_north;
    j["rmse_up"] = s.rmse_up;
    j["rmse_3d"] = s.rmse_3d;
    j["max_error_3d"] = s.max_error_3d;
    j["epochs_total"] = s.epochs_total;
    j["epochs_predict_only"] = s.epochs_predict_only;
    j["detections"] = s.detections;
    j["exclusions"] = s.exclusions;
    j["false_alarms"] = s.false_alarms;
    j["seed"] = s.seed;
    j["filter"] = s.filter;
    j["tracking_mode"] = s.tracking_mode;
    j["channel_model"] = s.channel_model;
    j["config_digest"] = s.config_digest;
    j["tool_version"] = s.tool_version;
    return j.dump(2) + "\n";
}

void write_summary_json(const RunSummary& summary, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << summary_json(summary);
    finish_write(out, path);
}

std::string montecarlo_json(const MonteCarloResult& result) {
    nlohmann::ordered_json j;
    j["runs_total"] = result.runs.size();
    j["failures"] = result.failures;
    nlohmann::ordered_json agg;
    for (const auto& [name, fs] : result.aggregate) {
        agg[name] = {{"median", fs.median}, {"mean", fs.mean}, {"std", fs.std}};
    }
    j["aggregate"] = agg;
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (const auto& r : result.runs) {
        if (r.summary) {
            runs.push_back(nlohmann::ordered_json::parse(summary_json(*r.summary)));
        } else {
            runs.push_back({{"seed", r.seed}, {"error", r.error}});
        }
    }
    j["runs"] = runs;
    return j.dump(2) + "\n";
}

void write_montecarlo_json(const MonteCarloResult& result, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << montecarlo_json(result);
    finish_write(out, path);
}

PlotSeries plot_series_from_string(const std::string& name) {
    if (name == "error_enu") return PlotSeries::error_enu;
    if (name == "raim_statistic") return PlotSeries::raim_statistic;
    if (name == "cn0") return PlotSeries::cn0;
    throw std::invalid_argument("unknown plot series '" + name + "' (error_enu|raim_statistic|cn0)");
}

namespace {

struct Line {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> points;  // NaN y breaks the line
};

constexpr double kWidth = 960, kHeight = 480;
constexpr double kLeft = 80, kRight = 150, kTop = 40, kBottom = 50;

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
                                    "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::vector<Line> build_lines(const std::vector<EpochRecord>& records, PlotSeries series, std::string& y_label) {
    std::vector<Line> lines;
    switch (series) {
    case PlotSeries::error_enu: {
        y_label = "position error (m)";
        lines = {{"east", kPalette[0], {}}, {"north", kPalette[1], {}}, {"up", kPalette[2], {}}};
        for (const auto& r : records) {
            lines[0].points.emplace_back(r.t, r.error.east);
            lines[1].points.emplace_back(r.t, r.error.north);
            lines[2].points.emplace_back(r.t, r.error.up);
        }
        break;
    }
    case PlotSeries::raim_statistic: {
        y_label = "RAIM test statistic";
        lines = {{"statistic", kPalette[0], {}}, {"threshold", kPalette[3], {}}};
        for (const auto& r : records) {
            lines[0].points.emplace_back(r.t, r.raim_stat);
            lines[1].points.emplace_back(r.t, r.raim_thresh);
        }
        break;
    }
    case PlotSeries::cn0: {
        y_label = "C/N0 (dB-Hz)";
        std::map<int, std::size_t> index;
        for (const auto& r : records) {
            for (const auto& c : r.channels) index.emplace(c.sv_id, 0);
        }
        std::size_t i = 0;
        for (auto& [sv, slot] : index) {
            slot = i;
            lines.push_back({"SV " + std::to_string(sv), kPalette[i % std::size(kPalette)], {}});
            ++i;
        }
        for (const auto& r : records) {
            std::vector<bool> seen(lines.size(), false);
            for (const auto& c : r.channels) {
                const std::size_t slot = index.at(c.sv_id);
                seen[slot] = true;
                lines[slot].points.emplace_back(r.t, std::isfinite(c.cn0) ? c.cn0 : kNaN);
            }
            for (std::size_t s = 0; s < lines.size(); ++s) {
                if (!seen[s]) lines[s].points.emplace_back(r.t, kNaN);
            }
        }
        break;
    }
    }
    return lines;
}

}  // namespace

std::string render_svg_plot(const std::vector<EpochRecord>& records, PlotSeries series) {
    if (records.size() < 2) throw std::invalid_argument("render_svg_plot: need at least two records");

    std::string y_label;
    const std::vector<Line> lines = build_lines(records, series, y_label);

    const double t0 = records.front().t, t1 = records.back().t;
    double y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
    for (const auto& l : lines) {
        for (const auto& [t, y] : l.points) {
            if (!std::isfinite(y)) continue;
            y_min = std::min(y_min, y);
            y_max = std::max(y_max, y);
        }
    }
    if (!std::isfinite(y_min)) y_min = 0.0, y_max = 1.0;
    if (y_max - y_min < 1e-12) y_min -= 1.0, y_max += 1.0;
    const double pad = 0.05 * (y_max - y_min);
    y_min -= pad;
    y_max += pad;

    const double plot_w = kWidth - kLeft - kRight, plot_h = kHeight - kTop - kBottom;
    const double t_span = t1 > t0 ? t1 - t0 : 1.0;
    auto sx = [&](double t) { return kLeft + (t - t0) / t_span * plot_w; };
    auto sy = [&](double y) { return kTop + (y_max - y) / (y_max - y_min) * plot_h; };

    std::string svg;
    svg += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        kWidth, kHeight, kWidth, kHeight);
    svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{:.0f}\" height=\"{:.0f}\" fill=\"white\"/>\n", kWidth, kHeight);

    // Outage spans.
    for (std::size_t i = 0; i < records.size();) {
        if (!records[i].has(kFlagOutage)) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j + 1 < records.size() && records[j + 1].has(kFlagOutage)) ++j;
        const double end_t = j + 1 < records.size() ? records[j + 1].t : records[j].t;
        svg += fmt::format(
            "<rect class=\"outage\" x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"#dddddd\"/>\n",
            sx(records[i].t), kTop, sx(end_t) - sx(records[i].t), plot_h);
        i = j + 1;
    }

    // Axes, ticks, labels.
    svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" "
                       "stroke=\"black\"/>\n",
                       kLeft, kTop, plot_w, plot_h);
    constexpr int kTicks = 6;
    for (int i = 0; i <= kTicks; ++i) {
        const double t = t0 + t_span * i / kTicks;
        const double y = y_min + (y_max - y_min) * i / kTicks;
        svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"black\"/>"
                           "<text x=\"{0:.2f}\" y=\"{3:.2f}\" text-anchor=\"middle\">{4:.4g}</text>\n",
                           sx(t), kTop + plot_h, kTop + plot_h + 5, kTop + plot_h + 18, t);
        svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"black\"/>"
                           "<text x=\"{3:.2f}\" y=\"{4:.2f}\" text-anchor=\"end\">{5:.4g}</text>\n",
                           kLeft - 5, sy(y), kLeft, kLeft - 8, sy(y) + 4, y);
    }
    svg += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">time (s)</text>\n",
                       kLeft + plot_w / 2, kHeight - 10);
    svg += fmt::format("<text x=\"20\" y=\"{0:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 20 {0:.2f})\">{1}"
                       "</text>\n",
                       kTop + plot_h / 2, y_label);

    // Series.
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const Line& l = lines[li];
        std::string pts;
        auto flush = [&]() {
            if (!pts.empty()) {
                svg += fmt::format("<polyline class=\"series\" data-series=\"{}\" fill=\"none\" stroke=\"{}\" "
                                   "stroke-width=\"1\" points=\"{}\"/>\n",
                                   l.label, l.color, pts);
            }
            pts.clear();
        };
        for (const auto& [t, y] : l.points) {
            if (!std::isfinite(y)) {
                flush();
                continue;
            }
            if (!pts.empty()) pts += ' ';
            pts += fmt::format("{:.2f},{:.2f}", sx(t), sy(y));
        }
        flush();
        const double ly = kTop + 15.0 * static_cast<double>(li) + 10.0;
        svg += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"{3}\" "
                           "stroke-width=\"2\"/><text x=\"{4:.2f}\" y=\"{5:.2f}\">{6}</text>\n",
                           kLeft + plot_w + 10, ly, kLeft + plot_w + 30, l.color, kLeft + plot_w + 35, ly + 4,
                           l.label);
    }

    // RAIM detections as ticks along the top edge.
    for (const auto& r : records) {
        if (!r.raim_detected) continue;
        svg += fmt::format("<line class=\"detection\" x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" "
                           "stroke=\"#d62728\"/>\n",
                           sx(r.t), kTop, kTop + 8);
    }

    svg += "</svg>\n";
    return svg;
}

void emit_svg_plot(const std::vector<EpochRecord>& records, PlotSeries series, const std::filesystem::path& path) {
    const std::string svg = render_svg_plot(records, series);
    auto out = open_out(path);
    out << svg;
    finish_write(out, path);
}

}  // namespace vdll
