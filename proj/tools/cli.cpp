#include "cli.hpp"

#include "vdll/config.hpp"
#include "vdll/harness.hpp"
#include "vdll/report.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <map>
#include <optional>
#include <ostream>

namespace vdll {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Overrides {
    std::string filter;
    std::string raim;
    std::string fde;
    std::string channel;
    std::string tracking;
    std::optional<std::uint64_t> seed;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--filter", o.filter, "Navigation filter (overrides config)")
        ->check(CLI::IsMember({"ekf", "ukf"}));
    cmd->add_option("--raim", o.raim, "RAIM on|off (off also disables FDE)")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--fde", o.fde, "FDE on|off")->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--channel", o.channel, "Fading model (overrides config)")
        ->check(CLI::IsMember({"none", "rayleigh", "rician"}));
    cmd->add_option("--tracking", o.tracking, "Tracking architecture (overrides config)")
        ->check(CLI::IsMember({"vector", "scalar"}));
}

ScenarioConfig apply_overrides(ScenarioConfig cfg, const Overrides& o) {
    if (!o.filter.empty()) cfg.filter.type = o.filter == "ukf" ? FilterType::ukf : FilterType::ekf;
    if (!o.channel.empty()) {
        cfg.channel.model = o.channel == "rician"     ? FadingModel::rician
                            : o.channel == "rayleigh" ? FadingModel::rayleigh
                                                      : FadingModel::none;
    }
    if (!o.tracking.empty()) cfg.tracking.mode = o.tracking == "scalar" ? TrackingMode::scalar : TrackingMode::vector;
    if (o.raim == "on") cfg.integrity.raim_enabled = true;
    if (o.raim == "off") cfg.integrity.raim_enabled = cfg.integrity.fde_enabled = false;
    if (o.fde == "on") cfg.integrity.fde_enabled = true;
    if (o.fde == "off") cfg.integrity.fde_enabled = false;
    if (o.seed) cfg.seed = *o.seed;
    try {
        validate(cfg);
    } catch (const ConfigError& e) {
        throw UsageError(std::string("invalid flag combination: ") + e.what());
    }
    return cfg;
}

void print_summary(std::ostream& out, const RunSummary& s) {
    out << fmt::format("filter={} tracking={}{} channel={} seed={}\n", s.filter, s.tracking_mode,
                       s.tracking_mode == "scalar" ? " (first-order DLL baseline)" : "", s.channel_model, s.seed);
    out << fmt::format("rmse east={:.3f} north={:.3f} up={:.3f} 3d={:.3f} m, max 3d={:.3f} m\n", s.rmse_east,
                       s.rmse_north, s.rmse_up, s.rmse_3d, s.max_error_3d);
    out << fmt::format("epochs={} predict_only={} detections={} exclusions={} false_alarms={}\n", s.epochs_total,
                       s.epochs_predict_only, s.detections, s.exclusions, s.false_alarms);
}

int run_command(const std::string& config_path, const Overrides& o, const std::string& out_dir, std::ostream& out) {
    const ScenarioConfig cfg = apply_overrides(load_config_file(config_path), o);
    const RunResult result = run_scenario(cfg);
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path dir(out_dir);
    write_epoch_csv(result.records, dir / "epochs.csv");
    write_channel_csv(result.records, dir / "channels.csv");
    write_summary_json(result.summary, dir / "summary.json");
    print_summary(out, result.summary);
    out << "wrote " << (dir / "epochs.csv").string() << ", " << (dir / "channels.csv").string() << ", "
        << (dir / "summary.json").string() << "\n";
    return kExitOk;
}

int montecarlo_command(const std::string& config_path, const Overrides& o, std::size_t runs, unsigned jobs,
                       const std::string& out_dir, std::ostream& out) {
    const ScenarioConfig cfg = apply_overrides(load_config_file(config_path), o);
    const MonteCarloResult mc = monte_carlo(cfg, runs, cfg.seed, jobs);
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "montecarlo.json";
    write_montecarlo_json(mc, path);
    out << fmt::format("runs={} failures={} base_seed={}\n", mc.runs.size(), mc.failures, cfg.seed);
    for (const auto& [name, fs] : mc.aggregate) {
        out << fmt::format("{:<13} median={:.3f} mean={:.3f} std={:.3f}\n", name, fs.median, fs.mean, fs.std);
    }
    for (const auto& r : mc.runs) {
        if (!r.summary) out << fmt::format("seed {} failed: {}\n", r.seed, r.error);
    }
    out << "wrote " << path.string() << "\n";
    return mc.failures == mc.runs.size() ? kExitRuntime : kExitOk;
}

int plot_command(const std::string& input, const std::string& series_name, const std::string& output,
                 std::ostream& out) {
    const PlotSeries series = plot_series_from_string(series_name);
    std::vector<EpochRecord> records;
    if (series == PlotSeries::cn0) {
        records = read_channel_csv(input);
        for (auto& r : records) {
            for (const auto& c : r.channels) {
                if (c.status == EntryStatus::blocked) r.flags |= kFlagOutage;
            }
        }
    } else {
        records = read_epoch_csv(input);
    }
    emit_svg_plot(records, series, output);
    out << "wrote " << output << "\n";
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Vector-DLL GPS receiver simulator over fading LMS channels", "vdllsim"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    Overrides run_over;
    auto* run = app.add_subcommand("run", "Run one scenario and write epochs.csv, channels.csv, summary.json");
    run->add_option("--config", config_path, "Scenario JSON")->required();
    add_override_flags(run, run_over);
    run->add_option("--seed", run_over.seed, "Seed (overrides config)");
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();

    std::string mc_config, mc_out = "out";
    Overrides mc_over;
    std::size_t mc_runs = 0;
    unsigned mc_jobs = 1;
    auto* mc = app.add_subcommand("montecarlo", "Seeded batch of runs, seed = base + i");
    mc->add_option("--config", mc_config, "Scenario JSON")->required();
    mc->add_option("--runs", mc_runs, "Number of runs")->required()->check(CLI::PositiveNumber);
    mc->add_option("--seed", mc_over.seed, "Base seed (defaults to the config seed)");
    mc->add_option("--out", mc_out, "Output directory")->capture_default_str();
    mc->add_option("--jobs", mc_jobs, "Parallel runs")->check(CLI::PositiveNumber)->capture_default_str();
    add_override_flags(mc, mc_over);

    std::string plot_input, plot_series, plot_out;
    auto* plot = app.add_subcommand("plot", "Render an SVG time series from epochs.csv or channels.csv");
    plot->add_option("--input", plot_input, "epochs.csv (error_enu, raim_statistic) or channels.csv (cn0)")
        ->required();
    plot->add_option("--series", plot_series, "error_enu|raim_statistic|cn0")
        ->required()
        ->check(CLI::IsMember({"error_enu", "raim_statistic", "cn0"}));
    plot->add_option("--out", plot_out, "Output SVG file")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();  // program name

    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    try {
        if (*run) return run_command(config_path, run_over, out_dir, out);
        if (*mc) return montecarlo_command(mc_config, mc_over, mc_runs, mc_jobs, mc_out, out);
        if (*plot) return plot_command(plot_input, plot_series, plot_out, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error: " << config_path << mc_config << ": " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace vdll
