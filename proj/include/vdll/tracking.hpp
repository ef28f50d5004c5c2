#pragma once

#include "vdll/channel.hpp"
#include "vdll/nav_state.hpp"
#include "vdll/rng.hpp"
#include "vdll/scenario.hpp"

#include <stdexcept>
#include <vector>

namespace vdll {

inline constexpr double kSpeedOfLight = 299'792'458.0;
inline constexpr double kCaChipRate = 1.023e6;
inline constexpr double kChipLength = kSpeedOfLight / kCaChipRate;  // ~293.05 m

enum class TrackingMode { vector, scalar };

struct TrackingParams {
    TrackingMode mode = TrackingMode::vector;
    double correlator_spacing_chips = 0.5;
    double coherent_integration_s = 0.02;
    double loop_bandwidth_hz = 1.0;
    double reacq_delay_s = 2.0;
    double pull_in_chips = 1.0;
    // Disables the thermal noise draw; reported variances are unchanged.
    bool noiseless = false;

    double pull_in_m() const { return pull_in_chips * kChipLength; }
};

struct TrackerChannel {
    int sv_id = 0;
    TrackingMode mode = TrackingMode::vector;
    double code_phase_estimate = 0.0;  // scalar mode only, meters
    bool acquired = false;             // scalar mode: estimate has been initialized
    bool locked = false;
    double cn0_estimate = 0.0;
    double reacquisition_timer = 0.0;
};

enum class EntryStatus {
    ok,
    blocked,        // link condition blocked
    weak_signal,    // C/N0 below the lock threshold
    out_of_pull_in, // code error beyond the discriminator range
    reacquiring,    // scalar loop waiting out its reacquisition delay
    excluded,       // removed by FDE
    unresolved,     // epoch dropped after an unresolved RAIM detection
};

const char* to_string(EntryStatus status);

struct MeasurementEntry {
    int sv_id = 0;
    double residual = 0.0;  // pseudorange observation minus filter prediction, meters
    double variance = 0.0;
    bool valid = false;
    double predicted_pseudorange = 0.0;
    // Diagnostics, not consumed by the filter.
    double code_error = 0.0;  // true minus tracked/predicted pseudorange
    EntryStatus status = EntryStatus::ok;
};

class MeasurementSetError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct MeasurementSet {
    double t = 0.0;
    std::vector<MeasurementEntry> entries;  // sorted by sv_id, unique

    std::vector<MeasurementEntry> valid_entries() const;
    std::size_t valid_count() const;
};

/// Geometric range + receiver clock (meters) + multipath + injected fault.
double true_pseudorange(const NavState& truth, const SatelliteState& sv, const ChannelRealization& chan,
                        double fault_bias);

/// DLL thermal-noise standard deviation, meters.
double discriminator_noise_sigma(double cn0_dbhz, const TrackingParams& params = {});

/// Vector-loop channel: the prediction comes from the navigation filter and
/// the channel holds no code state of its own. `extra_variance` is added to the
/// reported variance (multipath allowance).
/// Draw order: one normal for thermal noise, only when the entry is valid.
MeasurementEntry vector_channel_step(TrackerChannel& chan, double true_range, double predicted_range,
                                     const ChannelRealization& link, double lock_threshold,
                                     const TrackingParams& params, double extra_variance, RngStream& rng);

/// Independent first-order DLL baseline. The filter receives the tracked code
/// estimate as its pseudorange.
MeasurementEntry scalar_channel_step(TrackerChannel& chan, double true_range, double predicted_range,
                                     const ChannelRealization& link, double lock_threshold, double dt,
                                     const TrackingParams& params, double extra_variance, RngStream& rng);

/// Sorts by sv_id; throws MeasurementSetError on duplicates or on a valid
/// entry with non-positive variance.
MeasurementSet assemble_measurements(double t, std::vector<MeasurementEntry> entries);

}  // namespace vdll
