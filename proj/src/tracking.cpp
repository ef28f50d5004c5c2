#include "vdll/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vdll {

namespace {

constexpr double kTimerEpsilon = 1e-9;

// Reason a link cannot produce a discriminator output this epoch, or ok.
EntryStatus link_status(const ChannelRealization& link, double lock_threshold) {
    if (link.condition == LinkCondition::blocked) return EntryStatus::blocked;
    if (!(link.cn0_instant >= lock_threshold)) return EntryStatus::weak_signal;
    return EntryStatus::ok;
}

double thermal_noise(double sigma, const TrackingParams& params, RngStream& rng) {
    if (params.noiseless) return 0.0;
    return sigma * rng.normal();
}

}  // namespace

const char* to_string(EntryStatus status) {
    switch (status) {
    case EntryStatus::ok: return "ok";
    case EntryStatus::blocked: return "blocked";
    case EntryStatus::weak_signal: return "weak_signal";
    case EntryStatus::out_of_pull_in: return "out_of_pull_in";
    case EntryStatus::reacquiring: return "reacquiring";
    case EntryStatus::excluded: return "excluded";
    case EntryStatus::unresolved: return "unresolved";
    }
    return "unknown";
}

std::vector<MeasurementEntry> MeasurementSet::valid_entries() const {
    std::vector<MeasurementEntry> out;
    std::copy_if(entries.begin(), entries.end(), std::back_inserter(out), [](const auto& e) { return e.valid; });
    return out;
}

std::size_t MeasurementSet::valid_count() const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [](const auto& e) { return e.valid; }));
}

double true_pseudorange(const NavState& truth, const SatelliteState& sv, const ChannelRealization& chan,
                        double fault_bias) {
    const double range = (sv.position - truth.position).norm();
    return range + truth.clock_bias + chan.multipath_bias + fault_bias;
}

double discriminator_noise_sigma(double cn0_dbhz, const TrackingParams& params) {
    const double cn0_linear = std::pow(10.0, cn0_dbhz / 10.0);
    return kChipLength *
           std::sqrt(params.correlator_spacing_chips / (4.0 * params.coherent_integration_s * cn0_linear));
}

MeasurementEntry vector_channel_step(TrackerChannel& chan, double true_range, double predicted_range,
                                     const ChannelRealization& link, double lock_threshold,
                                     const TrackingParams& params, double extra_variance, RngStream& rng) {
    MeasurementEntry entry;
    entry.sv_id = chan.sv_id;
    entry.predicted_pseudorange = predicted_range;
    entry.code_error = true_range - predicted_range;
    chan.cn0_estimate = link.cn0_instant;

    entry.status = link_status(link, lock_threshold);
    if (entry.status == EntryStatus::ok && std::abs(entry.code_error) > params.pull_in_m()) {
        entry.status = EntryStatus::out_of_pull_in;
    }
    if (entry.status != EntryStatus::ok) {
        chan.locked = false;
        return entry;
    }

    const double sigma = discriminator_noise_sigma(link.cn0_instant, params);
    entry.residual = entry.code_error + thermal_noise(sigma, params, rng);
    entry.variance = sigma * sigma + extra_variance;
    entry.valid = true;
    chan.locked = true;
    return entry;
}

MeasurementEntry scalar_channel_step(TrackerChannel& chan, double true_range, double predicted_range,
                                     const ChannelRealization& link, double lock_threshold, double dt,
                                     const TrackingParams& params, double extra_variance, RngStream& rng) {
    MeasurementEntry entry;
    entry.sv_id = chan.sv_id;
    entry.predicted_pseudorange = predicted_range;
    chan.cn0_estimate = link.cn0_instant;

    const EntryStatus status = link_status(link, lock_threshold);
    const double sigma = status == EntryStatus::ok ? discriminator_noise_sigma(link.cn0_instant, params) : 0.0;

    auto finish_valid = [&]() {
        entry.code_error = true_range - chan.code_phase_estimate;
        entry.residual = chan.code_phase_estimate - predicted_range;
        entry.variance = sigma * sigma + extra_variance;
        entry.valid = true;
        entry.status = EntryStatus::ok;
        chan.locked = true;
        return entry;
    };
    auto finish_invalid = [&](EntryStatus why) {
        entry.code_error = true_range - chan.code_phase_estimate;
        entry.status = why;
        chan.locked = false;
        return entry;
    };

    if (chan.reacquisition_timer > 0.0) {
        chan.reacquisition_timer = std::max(0.0, chan.reacquisition_timer - dt);
        if (chan.reacquisition_timer > kTimerEpsilon) return finish_invalid(EntryStatus::reacquiring);
        chan.reacquisition_timer = 0.0;
        chan.acquired = false;  // delay served; next usable epoch reacquires
    }

    if (!chan.acquired) {
        if (status != EntryStatus::ok) return finish_invalid(status);
        chan.code_phase_estimate = true_range + thermal_noise(sigma, params, rng);
        chan.acquired = true;
        return finish_valid();
    }

    // Coasting: no rate aiding, the estimate simply holds.
    if (status != EntryStatus::ok) return finish_invalid(status);

    const double error = true_range - chan.code_phase_estimate;
    if (std::abs(error) > params.pull_in_m()) {
        chan.reacquisition_timer = params.reacq_delay_s;
        return finish_invalid(EntryStatus::out_of_pull_in);
    }

    const double gain = 4.0 * params.loop_bandwidth_hz * dt;
    chan.code_phase_estimate += gain * (error + thermal_noise(sigma, params, rng));
    return finish_valid();
}

MeasurementSet assemble_measurements(double t, std::vector<MeasurementEntry> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.sv_id < b.sv_id; });
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0 && entries[i].sv_id == entries[i - 1].sv_id) {
            throw MeasurementSetError("duplicate measurement for sv " + std::to_string(entries[i].sv_id));
        }
        if (entries[i].valid && !(entries[i].variance > 0.0)) {
            throw MeasurementSetError("non-positive variance for sv " + std::to_string(entries[i].sv_id));
        }
    }
    return MeasurementSet{t, std::move(entries)};
}

}  // namespace vdll
