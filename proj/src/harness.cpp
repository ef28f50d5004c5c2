#include "vdll/harness.hpp"

#include "vdll/channel.hpp"
#include "vdll/estimation.hpp"
#include "vdll/integrity.hpp"
#include "vdll/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace vdll {

namespace {

constexpr std::pair<EpochFlag, const char*> kFlagNames[] = {
    {kFlagPredictOnly, "predict_only"}, {kFlagPsdRepair, "psd_repair"}, {kFlagUnresolved, "unresolved"},
    {kFlagOutage, "outage"},           {kFlagFault, "fault"},          {kFlagFilterError, "filter_error"},
};

// Constellation slots are dense: sv_id n lives at index n - 1.
struct LinkState {
    RngStream rng;
    ChannelRealization channel;
    TrackerChannel tracker;
    bool tracking = false;
};

std::vector<SatelliteState> satellites_with_ids(const std::vector<SatelliteState>& sats, const MeasurementSet& z) {
    std::vector<SatelliteState> out;
    for (const auto& e : z.entries) {
        if (e.valid) out.push_back(sats[static_cast<std::size_t>(e.sv_id - 1)]);
    }
    return out;
}

}  // namespace

std::string flags_to_string(unsigned flags) {
    std::string out;
    for (const auto& [bit, name] : kFlagNames) {
        if ((flags & bit) == 0) continue;
        if (!out.empty()) out += ';';
        out += name;
    }
    return out;
}

unsigned flags_from_string(const std::string& text) {
    unsigned flags = 0;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ';')) {
        if (token.empty()) continue;
        bool found = false;
        for (const auto& [bit, name] : kFlagNames) {
            if (token == name) {
                flags |= bit;
                found = true;
            }
        }
        if (!found) throw std::invalid_argument("unknown epoch flag '" + token + "'");
    }
    return flags;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
    const GeodeticCoord& ref = cfg.trajectory.initial_position;
    const double dt = cfg.epoch_interval;
    const std::size_t epochs = cfg.epoch_count();
    const bool vector_mode = cfg.tracking.mode == TrackingMode::vector;
    const double multipath_variance =
        cfg.channel.multipath_to_range ? cfg.channel.multipath_sigma * cfg.channel.multipath_sigma : 0.0;

    std::vector<LinkState> links;
    for (const auto& sv : propagate_constellation(cfg.constellation, 0.0)) {
        LinkState link{RngStream::for_stream(cfg.seed, static_cast<std::uint64_t>(sv.sv_id)), {}, {}, false};
        link.channel = init_channel(sv.sv_id, cfg.channel, link.rng);
        links.push_back(std::move(link));
    }

    RngStream init_rng = RngStream::for_stream(cfg.seed, 0);
    NavigationFilter filter(cfg.filter, initialize_filter(cfg.filter.init, truth_state(cfg.trajectory, 0.0), init_rng));

    RunResult result;
    result.records.reserve(epochs);

    for (std::size_t k = 0; k < epochs; ++k) {
        const double t = static_cast<double>(k) * dt;
        try {
            EpochRecord rec;
            rec.t = t;

            // (1) truth, (2) constellation and visibility
            const NavState truth = truth_state(cfg.trajectory, t);
            const auto sats = propagate_constellation(cfg.constellation, t);
            const GeodeticCoord rx_geo = ecef_to_geodetic(truth.position);
            const auto visible = visible_satellites(sats, truth.position, rx_geo, cfg.constellation.elevation_mask);

            // (3) channel evolution for every link, visible or not
            if (k > 0) {
                for (auto& link : links) step_channel(link.channel, cfg.channel, dt, link.rng);
            }

            // (4) outages and faults
            const ActiveEvents events = active_events(cfg.events, t);
            for (auto& link : links) {
                link.channel = apply_condition(link.channel, events.outaged.count(link.channel.sv_id) != 0);
            }
            if (!events.outaged.empty()) rec.flags |= kFlagOutage;
            if (!events.faults.empty()) rec.flags |= kFlagFault;

            // (5) filter predict
            if (k > 0) filter.predict(dt);
            const StateVector prior = filter.state().x;

            // (6) tracking against the filter prediction
            for (auto& link : links) {
                if (!std::binary_search(visible.begin(), visible.end(), link.channel.sv_id)) link.tracking = false;
            }
            std::vector<MeasurementEntry> entries;
            entries.reserve(visible.size());
            for (int id : visible) {
                LinkState& link = links[static_cast<std::size_t>(id - 1)];
                const SatelliteState& sv = sats[static_cast<std::size_t>(id - 1)];
                if (!link.tracking) {
                    link.tracker = TrackerChannel{};
                    link.tracker.sv_id = id;
                    link.tracker.mode = cfg.tracking.mode;
                    link.tracking = true;
                }
                const double predicted = (sv.position.vec() - prior.segment<3>(kPosX)).norm() + prior(kClockBias);
                const double true_range = true_pseudorange(truth, sv, link.channel, events.fault_bias(id));
                entries.push_back(vector_mode
                                      ? vector_channel_step(link.tracker, true_range, predicted, link.channel,
                                                            cfg.channel.lock_threshold, cfg.tracking,
                                                            multipath_variance, link.rng)
                                      : scalar_channel_step(link.tracker, true_range, predicted, link.channel,
                                                            cfg.channel.lock_threshold, dt, cfg.tracking,
                                                            multipath_variance, link.rng));
            }
            const MeasurementSet z = assemble_measurements(t, std::move(entries));

            // (7) integrity gate
            const auto used = satellites_with_ids(sats, z);
            RaimVerdict verdict;
            if (!used.empty()) verdict = integrity_check(z, measurement_model(prior, used), cfg.integrity);
            const MeasurementSet gated = gate_measurements(z, verdict);

            // (8) measurement update
            bool updated = false;
            try {
                const UpdateResult upd = filter.update(gated, sats);
                updated = upd.applied;
                if (upd.psd_repaired) rec.flags |= kFlagPsdRepair;
            } catch (const NumericalError&) {
                rec.flags |= kFlagFilterError;
            }
            if (!updated) rec.flags |= kFlagPredictOnly;
            if (verdict.unresolved) rec.flags |= kFlagUnresolved;

            // (9) record
            const NavState est = filter.nav_state();
            rec.truth = truth.position;
            rec.estimate = est.position;
            rec.error = ecef_to_enu(est.position, ref) - ecef_to_enu(truth.position, ref);
            rec.valid_svs = static_cast<int>(gated.valid_count());
            rec.raim_stat = verdict.statistic;
            rec.raim_thresh = verdict.threshold;
            rec.raim_detected = verdict.detected;
            rec.excluded = verdict.excluded;
            for (const auto& e : gated.entries) {
                const LinkState& link = links[static_cast<std::size_t>(e.sv_id - 1)];
                ChannelSample cs;
                cs.sv_id = e.sv_id;
                cs.cn0 = link.channel.cn0_instant;
                cs.valid = e.valid;
                cs.locked = link.tracker.locked;
                cs.code_error = e.code_error;
                cs.status = e.status;
                if (e.valid) {
                    cs.residual = e.residual;
                    cs.sigma = std::sqrt(e.variance);
                }
                rec.channels.push_back(cs);
                if (link.tracker.locked) ++rec.locked_svs;
            }
            result.records.push_back(std::move(rec));
        } catch (const RunError&) {
            throw;
        } catch (const std::exception& e) {
            throw RunError(k, e.what());
        }
    }

    result.summary = compute_summary(result.records);
    result.summary.seed = cfg.seed;
    result.summary.config_digest = config_digest(cfg);
    result.summary.filter = to_string(cfg.filter.type);
    result.summary.tracking_mode = to_string(cfg.tracking.mode);
    result.summary.channel_model = to_string(cfg.channel.model);
    return result;
}

RunSummary compute_summary(const std::vector<EpochRecord>& records) {
    if (records.empty()) throw std::invalid_argument("compute_summary: no epoch records");
    RunSummary s;
    double se = 0.0, sn = 0.0, su = 0.0;
    for (const auto& r : records) {
        se += r.error.east * r.error.east;
        sn += r.error.north * r.error.north;
        su += r.error.up * r.error.up;
        s.max_error_3d = std::max(s.max_error_3d, r.error_3d());
        if (r.has(kFlagPredictOnly)) ++s.epochs_predict_only;
        if (r.raim_detected) {
            ++s.detections;
            if (!r.has(kFlagFault)) ++s.false_alarms;
        }
        if (!r.excluded.empty()) ++s.exclusions;
    }
    const double n = static_cast<double>(records.size());
    s.rmse_east = std::sqrt(se / n);
    s.rmse_north = std::sqrt(sn / n);
    s.rmse_up = std::sqrt(su / n);
    s.rmse_3d = std::sqrt((se + sn + su) / n);
    s.epochs_total = records.size();
    return s;
}

double median(std::vector<double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

std::map<std::string, FieldStats> aggregate_summaries(const std::vector<RunSummary>& summaries) {
    const std::pair<const char*, double RunSummary::*> fields[] = {
        {"rmse_east", &RunSummary::rmse_east}, {"rmse_north", &RunSummary::rmse_north},
        {"rmse_up", &RunSummary::rmse_up},     {"rmse_3d", &RunSummary::rmse_3d},
        {"max_error_3d", &RunSummary::max_error_3d},
    };
    std::map<std::string, FieldStats> out;
    if (summaries.empty()) return out;
    for (const auto& [name, member] : fields) {
        std::vector<double> v;
        for (const auto& s : summaries) v.push_back(s.*member);
        // Sorted before summing so the reduction is order-independent bit for bit.
        std::sort(v.begin(), v.end());
        FieldStats fs;
        fs.median = median(v);
        fs.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - fs.mean) * (x - fs.mean);
            fs.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
        }
        out[name] = fs;
    }
    return out;
}

MonteCarloResult monte_carlo(const ScenarioConfig& cfg, std::size_t runs, std::uint64_t base_seed, unsigned jobs) {
    if (runs == 0) throw std::invalid_argument("monte_carlo: runs must be >= 1");
    MonteCarloResult result;
    result.runs.resize(runs);

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t i = next++; i < runs; i = next++) {
            RunOutcome& out = result.runs[i];
            out.seed = base_seed + i;
            ScenarioConfig run_cfg = cfg;
            run_cfg.seed = out.seed;
            try {
                out.summary = run_scenario(run_cfg).summary;
            } catch (const std::exception& e) {
                out.error = e.what();
            }
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(runs)));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    std::vector<RunSummary> ok;
    for (const auto& r : result.runs) {
        if (r.summary) ok.push_back(*r.summary);
        else ++result.failures;
    }
    result.aggregate = aggregate_summaries(ok);
    return result;
}

}  // namespace vdll
