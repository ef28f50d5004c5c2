#pragma once

#include "vdll/frames.hpp"
#include "vdll/nav_state.hpp"

#include <set>
#include <utility>
#include <vector>

namespace vdll {

inline constexpr double kEarthMu = 3.986004418e14;  // m^3/s^2

struct ConstellationConfig {
    int planes = 6;
    int sats_per_plane = 4;
    double inclination = deg2rad(55.0);
    double orbit_radius = 26'559'700.0;
    double raan_offset = 0.0;
    // Extra along-track phase added per plane (Walker-style stagger).
    double phase_offset = deg2rad(15.0);
    double elevation_mask = deg2rad(10.0);

    double angular_rate() const;
    double period() const;
};

struct SatelliteState {
    int sv_id = 0;
    EcefVector position;
    EcefVector velocity;
};

/// Circular-orbit constellation at time t. sv_id = plane * sats_per_plane + slot + 1.
std::vector<SatelliteState> propagate_constellation(const ConstellationConfig& cfg, double t);

enum class TrajectoryMode { waypoints, static_position, circular };

struct TrajectoryConfig {
    GeodeticCoord initial_position{deg2rad(40.0), deg2rad(-86.0), 200.0};
    TrajectoryMode mode = TrajectoryMode::static_position;
    // ENU offsets from initial_position; the path starts at the first one.
    std::vector<EnuVector> waypoints;
    double speed = 0.0;
    // Waypoint mode: after the last waypoint, return to the first and repeat.
    bool loop = false;
    // Circular mode.
    double radius = 0.0;
    double period = 0.0;
    // Receiver clock truth (bias grows with drift).
    double clock_bias = 0.0;
    double clock_drift = 0.0;
};

/// Truth at time t. Waypoint mode moves at constant speed along the
/// polyline and parks at the last vertex unless `loop` is set.
NavState truth_state(const TrajectoryConfig& cfg, double t);

std::vector<int> visible_satellites(const std::vector<SatelliteState>& sats, const EcefVector& rx,
                                    const GeodeticCoord& ref, double mask);

struct OutageWindow {
    double t_start = 0.0;
    double t_end = 0.0;
    std::set<int> sv_ids;
};

enum class FaultShape { step, ramp };

struct FaultWindow {
    double t_start = 0.0;
    double t_end = 0.0;
    int sv_id = 0;
    double bias = 0.0;   // step size; for ramps, a saturation magnitude (0 = unbounded)
    FaultShape shape = FaultShape::step;
    double slope = 0.0;  // m/s, ramps only
};

struct EventSchedule {
    std::vector<OutageWindow> outages;
    std::vector<FaultWindow> faults;
};

struct ActiveEvents {
    std::set<int> outaged;
    std::vector<std::pair<int, double>> faults;  // (sv_id, bias_m)

    double fault_bias(int sv_id) const;
};

/// Windows are half-open: [t_start, t_end).
ActiveEvents active_events(const EventSchedule& schedule, double t);

}  // namespace vdll
