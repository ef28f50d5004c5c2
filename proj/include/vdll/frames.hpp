#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace vdll {

// WGS-84 ellipsoid.
inline constexpr double kWgs84A = 6378137.0;
inline constexpr double kWgs84F = 1.0 / 298.257223563;
inline constexpr double kWgs84B = kWgs84A * (1.0 - kWgs84F);
inline constexpr double kWgs84E2 = kWgs84F * (2.0 - kWgs84F);

inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Raised when a numerical routine cannot produce a meaningful answer
/// (non-convergence, degenerate geometry, singular matrices).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Latitude and longitude in radians, height in meters above the ellipsoid.
/// Longitude is kept in (-pi, pi].
struct GeodeticCoord {
    double latitude = 0.0;
    double longitude = 0.0;
    double height = 0.0;
};

struct EcefVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    EcefVector() = default;
    EcefVector(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
    explicit EcefVector(const Eigen::Vector3d& v) : x(v.x()), y(v.y()), z(v.z()) {}

    Eigen::Vector3d vec() const { return {x, y, z}; }
    double norm() const { return vec().norm(); }

    friend EcefVector operator+(const EcefVector& a, const EcefVector& b) {
        return {a.x + b.x, a.y + b.y, a.z + b.z};
    }
    friend EcefVector operator-(const EcefVector& a, const EcefVector& b) {
        return {a.x - b.x, a.y - b.y, a.z - b.z};
    }
    friend EcefVector operator*(double s, const EcefVector& a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const EcefVector&, const EcefVector&) = default;
};

struct EnuVector {
    double east = 0.0;
    double north = 0.0;
    double up = 0.0;

    Eigen::Vector3d vec() const { return {east, north, up}; }
    double norm() const { return vec().norm(); }

    friend EnuVector operator-(const EnuVector& a, const EnuVector& b) {
        return {a.east - b.east, a.north - b.north, a.up - b.up};
    }
};

struct LookAngles {
    double elevation = 0.0;
    double azimuth = 0.0;  // [0, 2pi), 0 at exact zenith
};

EcefVector geodetic_to_ecef(const GeodeticCoord& g);

// Throws NumericalError for the origin or when the latitude iteration does
// not settle within 20 steps.
GeodeticCoord ecef_to_geodetic(const EcefVector& p);

/// Rows are the local east, north and up unit vectors expressed in ECEF.
Eigen::Matrix3d enu_rotation(const GeodeticCoord& ref);

EnuVector ecef_to_enu(const EcefVector& p, const GeodeticCoord& ref);
EcefVector enu_to_ecef(const EnuVector& enu, const GeodeticCoord& ref);

/// Rotates an ECEF difference vector (velocity, displacement) into ENU.
EnuVector ecef_delta_to_enu(const EcefVector& delta, const GeodeticCoord& ref);
EcefVector enu_delta_to_ecef(const EnuVector& delta, const GeodeticCoord& ref);

LookAngles elevation_azimuth(const EcefVector& rx, const EcefVector& sv, const GeodeticCoord& ref);

// Throws NumericalError when the points coincide.
EcefVector unit_los(const EcefVector& rx, const EcefVector& sv);

}  // namespace vdll
