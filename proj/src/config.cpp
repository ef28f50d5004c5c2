#include "vdll/config.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace vdll {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

// Walks one JSON object, remembering which keys were read so leftovers can
// be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<document>" : path_, "expected an object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    double number(const std::string& key, double fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError(join(path_, key), "expected a number");
        const double d = v->get<double>();
        if (!std::isfinite(d)) throw ConfigError(join(path_, key), "must be finite");
        return d;
    }

    long long integer(const std::string& key, long long fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) throw ConfigError(join(path_, key), "expected an integer");
        return v->get<long long>();
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_number_unsigned()) throw ConfigError(join(path_, key), "expected a non-negative integer");
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ConfigError(join(path_, key), "expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError(join(path_, key), "expected a string");
        return v->get<std::string>();
    }

    // Nullptr when absent.
    const json* raw(const std::string& key) { return take(key); }

    std::string path_of(const std::string& key) const { return join(path_, key); }

    void finish() const {
        for (const auto& [key, _] : obj_.items()) {
            if (seen_.count(key) == 0) throw ConfigError(join(path_, key), "unknown key");
        }
    }

private:
    const json* take(const std::string& key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError(field, what);
}

template <typename Enum, std::size_t N>
Enum parse_enum(const std::string& field, const std::string& text,
                const std::pair<const char*, Enum> (&options)[N]) {
    for (const auto& [name, value] : options) {
        if (text == name) return value;
    }
    std::string allowed;
    for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : "|") + std::string(name);
    throw ConfigError(field, "must be one of " + allowed + ", got \"" + text + "\"");
}

constexpr std::pair<const char*, FadingModel> kFadingNames[] = {
    {"none", FadingModel::none}, {"rayleigh", FadingModel::rayleigh}, {"rician", FadingModel::rician}};
constexpr std::pair<const char*, FilterType> kFilterNames[] = {{"ekf", FilterType::ekf}, {"ukf", FilterType::ukf}};
constexpr std::pair<const char*, TrackingMode> kTrackingNames[] = {
    {"vector", TrackingMode::vector}, {"scalar", TrackingMode::scalar}};
constexpr std::pair<const char*, TrajectoryMode> kTrajectoryNames[] = {
    {"waypoints", TrajectoryMode::waypoints},
    {"static", TrajectoryMode::static_position},
    {"circular", TrajectoryMode::circular}};
constexpr std::pair<const char*, FaultShape> kShapeNames[] = {{"step", FaultShape::step}, {"ramp", FaultShape::ramp}};

template <typename Enum, std::size_t N>
const char* enum_name(Enum value, const std::pair<const char*, Enum> (&options)[N]) {
    for (const auto& [name, v] : options) {
        if (v == value) return name;
    }
    return "unknown";
}

EnuVector parse_enu_triplet(const json& v, const std::string& field) {
    require(v.is_array() && v.size() == 3, field, "expected [east, north, up]");
    for (const auto& c : v) require(c.is_number(), field, "expected numeric components");
    return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
}

void parse_constellation(ObjectReader r, ConstellationConfig& c) {
    c.planes = static_cast<int>(r.integer("planes", c.planes));
    c.sats_per_plane = static_cast<int>(r.integer("sats_per_plane", c.sats_per_plane));
    c.inclination = deg2rad(r.number("inclination_deg", rad2deg(c.inclination)));
    c.orbit_radius = r.number("orbit_radius_m", c.orbit_radius);
    c.raan_offset = deg2rad(r.number("raan_offset_deg", rad2deg(c.raan_offset)));
    c.phase_offset = deg2rad(r.number("phase_offset_deg", rad2deg(c.phase_offset)));
    c.elevation_mask = deg2rad(r.number("elevation_mask_deg", rad2deg(c.elevation_mask)));
    r.finish();
}

void parse_trajectory(ObjectReader r, TrajectoryConfig& t) {
    t.mode = parse_enum(r.path_of("mode"), r.string("mode", enum_name(t.mode, kTrajectoryNames)), kTrajectoryNames);
    t.initial_position.latitude = deg2rad(r.number("lat_deg", rad2deg(t.initial_position.latitude)));
    t.initial_position.longitude = deg2rad(r.number("lon_deg", rad2deg(t.initial_position.longitude)));
    t.initial_position.height = r.number("height_m", t.initial_position.height);
    t.speed = r.number("speed_mps", t.speed);
    t.loop = r.boolean("loop", t.loop);
    t.radius = r.number("radius_m", t.radius);
    t.period = r.number("period_s", t.period);
    t.clock_bias = r.number("clock_bias_m", t.clock_bias);
    t.clock_drift = r.number("clock_drift_mps", t.clock_drift);
    if (const json* wps = r.raw("waypoints_enu_m")) {
        const std::string field = r.path_of("waypoints_enu_m");
        require(wps->is_array(), field, "expected a list of [east, north, up]");
        t.waypoints.clear();
        for (std::size_t i = 0; i < wps->size(); ++i) {
            t.waypoints.push_back(parse_enu_triplet((*wps)[i], field + "[" + std::to_string(i) + "]"));
        }
    }
    r.finish();
}

void parse_channel(ObjectReader r, ChannelParams& c) {
    c.model = parse_enum(r.path_of("model"), r.string("model", enum_name(c.model, kFadingNames)), kFadingNames);
    c.k_factor_db = r.number("k_db", c.k_factor_db);
    c.fade_correlation_time = r.number("fade_tau_s", c.fade_correlation_time);
    c.multipath_sigma = r.number("multipath_sigma_m", c.multipath_sigma);
    c.multipath_correlation_time = r.number("multipath_tau_s", c.multipath_correlation_time);
    c.cn0_nominal = r.number("cn0_nominal_dbhz", c.cn0_nominal);
    c.lock_threshold = r.number("lock_threshold_dbhz", c.lock_threshold);
    c.envelope_to_cn0 = r.boolean("envelope_to_cn0", c.envelope_to_cn0);
    c.multipath_to_range = r.boolean("multipath_to_range", c.multipath_to_range);
    r.finish();
}

void parse_tracking(ObjectReader r, TrackingParams& t) {
    t.mode = parse_enum(r.path_of("mode"), r.string("mode", enum_name(t.mode, kTrackingNames)), kTrackingNames);
    t.correlator_spacing_chips = r.number("correlator_spacing_chips", t.correlator_spacing_chips);
    t.coherent_integration_s = r.number("coherent_integration_s", t.coherent_integration_s);
    t.loop_bandwidth_hz = r.number("loop_bandwidth_hz", t.loop_bandwidth_hz);
    t.reacq_delay_s = r.number("reacq_delay_s", t.reacq_delay_s);
    t.pull_in_chips = r.number("pull_in_chips", t.pull_in_chips);
    t.noiseless = r.boolean("noiseless", t.noiseless);
    r.finish();
}

void parse_filter(ObjectReader r, FilterConfig& f) {
    f.type = parse_enum(r.path_of("type"), r.string("type", enum_name(f.type, kFilterNames)), kFilterNames);
    if (const json* u = r.raw("ukf")) {
        ObjectReader ur(*u, r.path_of("ukf"));
        f.ukf.alpha = ur.number("alpha", f.ukf.alpha);
        f.ukf.beta = ur.number("beta", f.ukf.beta);
        f.ukf.kappa = ur.number("kappa", f.ukf.kappa);
        ur.finish();
    }
    if (const json* p = r.raw("process")) {
        ObjectReader pr(*p, r.path_of("process"));
        f.process.accel_psd = pr.number("accel_psd", f.process.accel_psd);
        f.process.clock_bias_psd = pr.number("clock_bias_psd", f.process.clock_bias_psd);
        f.process.clock_drift_psd = pr.number("clock_drift_psd", f.process.clock_drift_psd);
        pr.finish();
    }
    if (const json* i = r.raw("init")) {
        ObjectReader ir(*i, r.path_of("init"));
        f.init.pos_sigma_m = ir.number("pos_sigma_m", f.init.pos_sigma_m);
        f.init.vel_sigma_mps = ir.number("vel_sigma_mps", f.init.vel_sigma_mps);
        f.init.clk_sigma_m = ir.number("clk_sigma_m", f.init.clk_sigma_m);
        f.init.drift_sigma_mps = ir.number("drift_sigma_mps", f.init.drift_sigma_mps);
        f.init.perturb = ir.boolean("perturb", f.init.perturb);
        ir.finish();
    }
    r.finish();
}

void parse_integrity(ObjectReader r, IntegrityConfig& c) {
    c.raim_enabled = r.boolean("raim", c.raim_enabled);
    c.fde_enabled = r.boolean("fde", c.fde_enabled);
    c.false_alarm_prob = r.number("pfa", c.false_alarm_prob);
    r.finish();
}

void parse_events(ObjectReader r, EventSchedule& ev) {
    if (const json* outages = r.raw("outages")) {
        const std::string base = r.path_of("outages");
        require(outages->is_array(), base, "expected a list");
        ev.outages.clear();
        for (std::size_t i = 0; i < outages->size(); ++i) {
            const std::string path = base + "[" + std::to_string(i) + "]";
            ObjectReader w((*outages)[i], path);
            OutageWindow o;
            o.t_start = w.number("t_start_s", 0.0);
            o.t_end = w.number("t_end_s", 0.0);
            const json* ids = w.raw("sv_ids");
            require(ids && ids->is_array(), path + ".sv_ids", "expected a list of sv ids");
            for (const auto& id : *ids) {
                require(id.is_number_integer(), path + ".sv_ids", "expected integer sv ids");
                o.sv_ids.insert(id.get<int>());
            }
            w.finish();
            ev.outages.push_back(std::move(o));
        }
    }
    if (const json* faults = r.raw("faults")) {
        const std::string base = r.path_of("faults");
        require(faults->is_array(), base, "expected a list");
        ev.faults.clear();
        for (std::size_t i = 0; i < faults->size(); ++i) {
            const std::string path = base + "[" + std::to_string(i) + "]";
            ObjectReader w((*faults)[i], path);
            FaultWindow f;
            f.t_start = w.number("t_start_s", 0.0);
            f.t_end = w.number("t_end_s", 0.0);
            f.sv_id = static_cast<int>(w.integer("sv_id", 0));
            f.bias = w.number("bias_m", 0.0);
            f.shape = parse_enum(path + ".shape", w.string("shape", "step"), kShapeNames);
            f.slope = w.number("slope_mps", 0.0);
            w.finish();
            ev.faults.push_back(f);
        }
    }
    r.finish();
}

void validate_window(double t_start, double t_end, double duration, const std::string& path) {
    require(t_start < t_end, path + ".t_start_s", "must be before t_end_s");
    require(t_start >= 0.0 && t_end <= duration, path, "window must lie within [0, duration_s]");
}

void validate_sv(int sv, int count, const std::string& field) {
    require(sv >= 1 && sv <= count, field, "sv id " + std::to_string(sv) + " is not in the constellation");
}

}  // namespace

std::size_t ScenarioConfig::epoch_count() const {
    return static_cast<std::size_t>(std::floor(duration / epoch_interval + 1e-9));
}

void validate(const ScenarioConfig& c) {
    require(c.duration > 0.0, "duration_s", "must be > 0");
    require(c.epoch_interval > 0.0 && c.epoch_interval <= c.duration, "dt_s", "must satisfy 0 < dt_s <= duration_s");

    const auto& k = c.constellation;
    require(k.planes >= 1, "constellation.planes", "must be >= 1");
    require(k.sats_per_plane >= 1, "constellation.sats_per_plane", "must be >= 1");
    require(k.orbit_radius > 6.5e6, "constellation.orbit_radius_m", "must be > 6.5e6");
    require(k.elevation_mask >= 0.0 && k.elevation_mask < kPi / 2, "constellation.elevation_mask_deg",
            "must be in [0, 90)");
    require(k.inclination >= 0.0 && k.inclination <= kPi, "constellation.inclination_deg", "must be in [0, 180]");

    const auto& t = c.trajectory;
    require(std::abs(t.initial_position.latitude) <= kPi / 2, "trajectory.lat_deg", "must be in [-90, 90]");
    require(t.initial_position.longitude > -kPi - 1e-12 && t.initial_position.longitude <= kPi + 1e-12,
            "trajectory.lon_deg", "must be in (-180, 180]");
    require(t.speed >= 0.0, "trajectory.speed_mps", "must be >= 0");
    if (t.mode == TrajectoryMode::waypoints) {
        require(t.waypoints.size() >= 2, "trajectory.waypoints_enu_m", "waypoint mode needs at least two waypoints");
        auto path = t.waypoints;
        if (t.loop) path.push_back(path.front());
        for (std::size_t i = 1; i < path.size(); ++i) {
            require((path[i] - path[i - 1]).norm() > 0.0, "trajectory.waypoints_enu_m",
                    "consecutive waypoints must be distinct");
        }
    }
    if (t.mode == TrajectoryMode::circular) {
        require(t.radius > 0.0, "trajectory.radius_m", "must be > 0 in circular mode");
        require(t.period > 0.0, "trajectory.period_s", "must be > 0 in circular mode");
    }

    const auto& ch = c.channel;
    require(ch.fade_correlation_time > 0.0, "channel.fade_tau_s", "must be > 0");
    require(ch.multipath_correlation_time > 0.0, "channel.multipath_tau_s", "must be > 0");
    require(ch.multipath_sigma >= 0.0, "channel.multipath_sigma_m", "must be >= 0");
    require(ch.lock_threshold < ch.cn0_nominal, "channel.lock_threshold_dbhz", "must be below cn0_nominal_dbhz");

    const auto& tr = c.tracking;
    require(tr.correlator_spacing_chips > 0.0, "tracking.correlator_spacing_chips", "must be > 0");
    require(tr.coherent_integration_s > 0.0, "tracking.coherent_integration_s", "must be > 0");
    require(tr.loop_bandwidth_hz > 0.0, "tracking.loop_bandwidth_hz", "must be > 0");
    require(tr.reacq_delay_s >= 0.0, "tracking.reacq_delay_s", "must be >= 0");
    require(tr.pull_in_chips > 0.0, "tracking.pull_in_chips", "must be > 0");

    const auto& f = c.filter;
    require(kStateDim + f.ukf.lambda(kStateDim) > 0.0, "filter.ukf", "alpha/kappa must give n + lambda > 0");
    require(f.ukf.alpha > 0.0, "filter.ukf.alpha", "must be > 0");
    require(f.process.accel_psd >= 0.0, "filter.process.accel_psd", "must be >= 0");
    require(f.process.clock_bias_psd >= 0.0, "filter.process.clock_bias_psd", "must be >= 0");
    require(f.process.clock_drift_psd >= 0.0, "filter.process.clock_drift_psd", "must be >= 0");
    require(f.init.pos_sigma_m >= 0.0, "filter.init.pos_sigma_m", "must be >= 0");
    require(f.init.vel_sigma_mps >= 0.0, "filter.init.vel_sigma_mps", "must be >= 0");
    require(f.init.clk_sigma_m >= 0.0, "filter.init.clk_sigma_m", "must be >= 0");
    require(f.init.drift_sigma_mps >= 0.0, "filter.init.drift_sigma_mps", "must be >= 0");

    const auto& in = c.integrity;
    require(in.false_alarm_prob > 0.0 && in.false_alarm_prob < 1.0, "integrity.pfa", "must be in (0, 1)");
    require(!in.fde_enabled || in.raim_enabled, "integrity.fde", "FDE requires RAIM");

    const int sv_count = k.planes * k.sats_per_plane;
    for (std::size_t i = 0; i < c.events.outages.size(); ++i) {
        const std::string path = "events.outages[" + std::to_string(i) + "]";
        const auto& o = c.events.outages[i];
        validate_window(o.t_start, o.t_end, c.duration, path);
        require(!o.sv_ids.empty(), path + ".sv_ids", "must name at least one sv");
        for (int sv : o.sv_ids) validate_sv(sv, sv_count, path + ".sv_ids");
    }
    for (std::size_t i = 0; i < c.events.faults.size(); ++i) {
        const std::string path = "events.faults[" + std::to_string(i) + "]";
        const auto& fw = c.events.faults[i];
        validate_window(fw.t_start, fw.t_end, c.duration, path);
        validate_sv(fw.sv_id, sv_count, path + ".sv_id");
    }
}

ScenarioConfig load_config(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("parse error: ") + e.what());
    }

    ScenarioConfig cfg;
    ObjectReader r(doc, "");
    cfg.duration = r.number("duration_s", cfg.duration);
    cfg.epoch_interval = r.number("dt_s", cfg.epoch_interval);
    cfg.seed = r.unsigned_integer("seed", cfg.seed);
    if (const json* v = r.raw("constellation")) parse_constellation(ObjectReader(*v, "constellation"), cfg.constellation);
    if (const json* v = r.raw("trajectory")) parse_trajectory(ObjectReader(*v, "trajectory"), cfg.trajectory);
    if (const json* v = r.raw("channel")) parse_channel(ObjectReader(*v, "channel"), cfg.channel);
    if (const json* v = r.raw("tracking")) parse_tracking(ObjectReader(*v, "tracking"), cfg.tracking);
    if (const json* v = r.raw("filter")) parse_filter(ObjectReader(*v, "filter"), cfg.filter);
    if (const json* v = r.raw("integrity")) parse_integrity(ObjectReader(*v, "integrity"), cfg.integrity);
    if (const json* v = r.raw("events")) parse_events(ObjectReader(*v, "events"), cfg.events);
    r.finish();

    validate(cfg);
    return cfg;
}

ScenarioConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_config(buf.str());
}

std::string to_json(const ScenarioConfig& c) {
    json j;
    j["duration_s"] = c.duration;
    j["dt_s"] = c.epoch_interval;
    j["seed"] = c.seed;

    const auto& k = c.constellation;
    j["constellation"] = {{"planes", k.planes},
                          {"sats_per_plane", k.sats_per_plane},
                          {"inclination_deg", rad2deg(k.inclination)},
                          {"orbit_radius_m", k.orbit_radius},
                          {"raan_offset_deg", rad2deg(k.raan_offset)},
                          {"phase_offset_deg", rad2deg(k.phase_offset)},
                          {"elevation_mask_deg", rad2deg(k.elevation_mask)}};

    const auto& t = c.trajectory;
    json wps = json::array();
    for (const auto& w : t.waypoints) wps.push_back({w.east, w.north, w.up});
    j["trajectory"] = {{"mode", enum_name(t.mode, kTrajectoryNames)},
                       {"lat_deg", rad2deg(t.initial_position.latitude)},
                       {"lon_deg", rad2deg(t.initial_position.longitude)},
                       {"height_m", t.initial_position.height},
                       {"speed_mps", t.speed},
                       {"loop", t.loop},
                       {"radius_m", t.radius},
                       {"period_s", t.period},
                       {"clock_bias_m", t.clock_bias},
                       {"clock_drift_mps", t.clock_drift},
                       {"waypoints_enu_m", wps}};

    const auto& ch = c.channel;
    j["channel"] = {{"model", enum_name(ch.model, kFadingNames)},
                    {"k_db", ch.k_factor_db},
                    {"fade_tau_s", ch.fade_correlation_time},
                    {"multipath_sigma_m", ch.multipath_sigma},
                    {"multipath_tau_s", ch.multipath_correlation_time},
                    {"cn0_nominal_dbhz", ch.cn0_nominal},
                    {"lock_threshold_dbhz", ch.lock_threshold},
                    {"envelope_to_cn0", ch.envelope_to_cn0},
                    {"multipath_to_range", ch.multipath_to_range}};

    const auto& tr = c.tracking;
    j["tracking"] = {{"mode", enum_name(tr.mode, kTrackingNames)},
                     {"correlator_spacing_chips", tr.correlator_spacing_chips},
                     {"coherent_integration_s", tr.coherent_integration_s},
                     {"loop_bandwidth_hz", tr.loop_bandwidth_hz},
                     {"reacq_delay_s", tr.reacq_delay_s},
                     {"pull_in_chips", tr.pull_in_chips},
                     {"noiseless", tr.noiseless}};

    const auto& f = c.filter;
    j["filter"] = {{"type", enum_name(f.type, kFilterNames)},
                   {"ukf", {{"alpha", f.ukf.alpha}, {"beta", f.ukf.beta}, {"kappa", f.ukf.kappa}}},
                   {"process",
                    {{"accel_psd", f.process.accel_psd},
                     {"clock_bias_psd", f.process.clock_bias_psd},
                     {"clock_drift_psd", f.process.clock_drift_psd}}},
                   {"init",
                    {{"pos_sigma_m", f.init.pos_sigma_m},
                     {"vel_sigma_mps", f.init.vel_sigma_mps},
                     {"clk_sigma_m", f.init.clk_sigma_m},
                     {"drift_sigma_mps", f.init.drift_sigma_mps},
                     {"perturb", f.init.perturb}}}};

    j["integrity"] = {{"raim", c.integrity.raim_enabled},
                      {"fde", c.integrity.fde_enabled},
                      {"pfa", c.integrity.false_alarm_prob}};

    json outages = json::array();
    for (const auto& o : c.events.outages) {
        outages.push_back({{"t_start_s", o.t_start}, {"t_end_s", o.t_end}, {"sv_ids", o.sv_ids}});
    }
    json faults = json::array();
    for (const auto& fw : c.events.faults) {
        faults.push_back({{"t_start_s", fw.t_start},
                          {"t_end_s", fw.t_end},
                          {"sv_id", fw.sv_id},
                          {"bias_m", fw.bias},
                          {"shape", enum_name(fw.shape, kShapeNames)},
                          {"slope_mps", fw.slope}});
    }
    j["events"] = {{"outages", outages}, {"faults", faults}};
    return j.dump();
}

std::string config_digest(const ScenarioConfig& cfg) {
    const std::string text = to_json(cfg);
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("config_digest: SHA-256 failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

const char* to_string(FilterType t) { return enum_name(t, kFilterNames); }
const char* to_string(FadingModel m) { return enum_name(m, kFadingNames); }
const char* to_string(TrackingMode m) { return enum_name(m, kTrackingNames); }

}  // namespace vdll
