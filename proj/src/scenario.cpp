#include "vdll/scenario.hpp"

#include <algorithm>
#include <cmath>

namespace vdll {

double ConstellationConfig::angular_rate() const {
    return std::sqrt(kEarthMu / (orbit_radius * orbit_radius * orbit_radius));
}

double ConstellationConfig::period() const { return 2.0 * kPi / angular_rate(); }

std::vector<SatelliteState> propagate_constellation(const ConstellationConfig& cfg, double t) {
    const double omega = cfg.angular_rate();
    const double r = cfg.orbit_radius;
    const double ci = std::cos(cfg.inclination), si = std::sin(cfg.inclination);

    std::vector<SatelliteState> sats;
    sats.reserve(static_cast<std::size_t>(cfg.planes * cfg.sats_per_plane));
    for (int p = 0; p < cfg.planes; ++p) {
        const double raan = cfg.raan_offset + 2.0 * kPi * p / cfg.planes;
        const double co = std::cos(raan), so = std::sin(raan);
        for (int s = 0; s < cfg.sats_per_plane; ++s) {
            const double u = 2.0 * kPi * s / cfg.sats_per_plane + p * cfg.phase_offset + omega * t;
            const double cu = std::cos(u), su = std::sin(u);
            // In-plane unit vectors rotated by inclination then RAAN.
            SatelliteState sv;
            sv.sv_id = p * cfg.sats_per_plane + s + 1;
            sv.position = {r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * su * si};
            sv.velocity = {r * omega * (-co * su - so * cu * ci), r * omega * (-so * su + co * cu * ci),
                           r * omega * cu * si};
            sats.push_back(sv);
        }
    }
    return sats;
}

namespace {

NavState from_enu(const TrajectoryConfig& cfg, const EnuVector& pos, const EnuVector& vel, double t) {
    NavState s;
    s.position = enu_to_ecef(pos, cfg.initial_position);
    s.velocity = enu_delta_to_ecef(vel, cfg.initial_position);
    s.clock_bias = cfg.clock_bias + cfg.clock_drift * t;
    s.clock_drift = cfg.clock_drift;
    return s;
}

EnuVector lerp(const EnuVector& a, const EnuVector& b, double u) {
    return {a.east + u * (b.east - a.east), a.north + u * (b.north - a.north), a.up + u * (b.up - a.up)};
}

NavState waypoint_state(const TrajectoryConfig& cfg, double t) {
    std::vector<EnuVector> path = cfg.waypoints;
    if (cfg.loop) path.push_back(path.front());

    std::vector<double> lengths;
    double total = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        lengths.push_back((path[i] - path[i - 1]).norm());
        total += lengths.back();
    }

    const EnuVector zero{};
    if (cfg.speed <= 0.0 || total <= 0.0) return from_enu(cfg, path.front(), zero, t);

    double distance = cfg.speed * t;
    if (cfg.loop) {
        distance = std::fmod(distance, total);
    } else if (distance >= total) {
        return from_enu(cfg, path.back(), zero, t);
    }

    for (std::size_t i = 0; i < lengths.size(); ++i) {
        if (distance < lengths[i] || i + 1 == lengths.size()) {
            const double u = std::min(distance / lengths[i], 1.0);
            const EnuVector dir = path[i + 1] - path[i];
            const double k = cfg.speed / lengths[i];
            return from_enu(cfg, lerp(path[i], path[i + 1], u), {k * dir.east, k * dir.north, k * dir.up}, t);
        }
        distance -= lengths[i];
    }
    return from_enu(cfg, path.back(), zero, t);
}

NavState circular_state(const TrajectoryConfig& cfg, double t) {
    const double rate = 2.0 * kPi / cfg.period;
    const double theta = rate * std::fmod(t, cfg.period);
    const double r = cfg.radius;
    // Circle in the horizontal plane that passes through the initial point at t = 0.
    const EnuVector pos{r * std::sin(theta), r * (1.0 - std::cos(theta)), 0.0};
    const EnuVector vel{r * rate * std::cos(theta), r * rate * std::sin(theta), 0.0};
    return from_enu(cfg, pos, vel, t);
}

}  // namespace

NavState truth_state(const TrajectoryConfig& cfg, double t) {
    switch (cfg.mode) {
    case TrajectoryMode::waypoints:
        return waypoint_state(cfg, t);
    case TrajectoryMode::circular:
        return circular_state(cfg, t);
    case TrajectoryMode::static_position:
        break;
    }
    return from_enu(cfg, EnuVector{}, EnuVector{}, t);
}

std::vector<int> visible_satellites(const std::vector<SatelliteState>& sats, const EcefVector& rx,
                                    const GeodeticCoord& ref, double mask) {
    std::vector<int> ids;
    for (const auto& sv : sats) {
        if (elevation_azimuth(rx, sv.position, ref).elevation > mask) ids.push_back(sv.sv_id);
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

double ActiveEvents::fault_bias(int sv_id) const {
    double total = 0.0;
    for (const auto& [id, bias] : faults) {
        if (id == sv_id) total += bias;
    }
    return total;
}

ActiveEvents active_events(const EventSchedule& schedule, double t) {
    ActiveEvents out;
    for (const auto& w : schedule.outages) {
        if (t >= w.t_start && t < w.t_end) out.outaged.insert(w.sv_ids.begin(), w.sv_ids.end());
    }
    for (const auto& f : schedule.faults) {
        if (!(t >= f.t_start && t < f.t_end)) continue;
        double bias = f.bias;
        if (f.shape == FaultShape::ramp) {
            bias = f.slope * (t - f.t_start);
            const double cap = std::abs(f.bias);
            if (cap > 0.0) bias = std::clamp(bias, -cap, cap);
        }
        out.faults.emplace_back(f.sv_id, bias);
    }
    return out;
}

}  // namespace vdll
