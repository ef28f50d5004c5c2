#include "vdll/frames.hpp"

#include <algorithm>
#include <cmath>

namespace vdll {

namespace {

constexpr int kMaxLatitudeIterations = 20;
constexpr double kLatitudeTolerance = 1e-12;

double normalize_longitude(double lon) {
    lon = std::remainder(lon, 2.0 * kPi);
    if (lon <= -kPi) lon += 2.0 * kPi;
    return lon;
}

}  // namespace

EcefVector geodetic_to_ecef(const GeodeticCoord& g) {
    const double slat = std::sin(g.latitude);
    const double clat = std::cos(g.latitude);
    const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * slat * slat);
    return {(n + g.height) * clat * std::cos(g.longitude),
            (n + g.height) * clat * std::sin(g.longitude),
            (n * (1.0 - kWgs84E2) + g.height) * slat};
}

GeodeticCoord ecef_to_geodetic(const EcefVector& p) {
    const double rho = std::hypot(p.x, p.y);
    if (rho == 0.0 && p.z == 0.0) {
        throw NumericalError("ecef_to_geodetic: point at Earth center");
    }

    GeodeticCoord g;
    g.longitude = normalize_longitude(std::atan2(p.y, p.x));

    double lat = std::atan2(p.z, rho * (1.0 - kWgs84E2));
    bool converged = false;
    for (int i = 0; i < kMaxLatitudeIterations; ++i) {
        const double slat = std::sin(lat);
        const double n = kWgs84A / std::sqrt(1.0 - kWgs84E2 * slat * slat);
        const double next = std::atan2(p.z + kWgs84E2 * n * slat, rho);
        const double delta = std::abs(next - lat);
        lat = next;
        if (delta < kLatitudeTolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NumericalError("ecef_to_geodetic: latitude iteration did not converge");
    }

    // Height form that stays well conditioned at both the equator and the poles.
    const double slat = std::sin(lat);
    const double clat = std::cos(lat);
    g.latitude = lat;
    g.height = rho * clat + p.z * slat - kWgs84A * std::sqrt(1.0 - kWgs84E2 * slat * slat);
    return g;
}

Eigen::Matrix3d enu_rotation(const GeodeticCoord& ref) {
    const double sl = std::sin(ref.latitude), cl = std::cos(ref.latitude);
    const double so = std::sin(ref.longitude), co = std::cos(ref.longitude);
    Eigen::Matrix3d r;
    r << -so, co, 0.0,
         -sl * co, -sl * so, cl,
         cl * co, cl * so, sl;
    return r;
}

EnuVector ecef_delta_to_enu(const EcefVector& delta, const GeodeticCoord& ref) {
    const Eigen::Vector3d v = enu_rotation(ref) * delta.vec();
    return {v.x(), v.y(), v.z()};
}

EcefVector enu_delta_to_ecef(const EnuVector& delta, const GeodeticCoord& ref) {
    return EcefVector(Eigen::Vector3d(enu_rotation(ref).transpose() * delta.vec()));
}

EnuVector ecef_to_enu(const EcefVector& p, const GeodeticCoord& ref) {
    return ecef_delta_to_enu(p - geodetic_to_ecef(ref), ref);
}

EcefVector enu_to_ecef(const EnuVector& enu, const GeodeticCoord& ref) {
    return geodetic_to_ecef(ref) + enu_delta_to_ecef(enu, ref);
}

LookAngles elevation_azimuth(const EcefVector& rx, const EcefVector& sv, const GeodeticCoord& ref) {
    const EnuVector los = ecef_delta_to_enu(unit_los(rx, sv), ref);
    LookAngles out;
    out.elevation = std::asin(std::clamp(los.up, -1.0, 1.0));
    const double horizontal = std::hypot(los.east, los.north);
    if (horizontal < 1e-12) {
        out.azimuth = 0.0;
        return out;
    }
    double az = std::atan2(los.east, los.north);
    if (az < 0.0) az += 2.0 * kPi;
    if (az >= 2.0 * kPi) az = 0.0;
    out.azimuth = az;
    return out;
}

EcefVector unit_los(const EcefVector& rx, const EcefVector& sv) {
    const Eigen::Vector3d d = sv.vec() - rx.vec();
    const double range = d.norm();
    if (range == 0.0) {
        throw NumericalError("unit_los: receiver and satellite coincide");
    }
    return EcefVector(Eigen::Vector3d(d / range));
}

}  // namespace vdll
