#pragma once

#include "vdll/frames.hpp"

#include <Eigen/Dense>

namespace vdll {

inline constexpr int kStateDim = 8;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;

// Layout of the navigation state vector.
enum StateIndex : int {
    kPosX = 0, kPosY, kPosZ,
    kVelX, kVelY, kVelZ,
    kClockBias, kClockDrift,
};

/// Receiver position/velocity in ECEF plus clock terms, all carried in
/// meters (bias) and meters per second (drift).
struct NavState {
    EcefVector position;
    EcefVector velocity;
    double clock_bias = 0.0;
    double clock_drift = 0.0;

    StateVector to_vector() const {
        StateVector x;
        x << position.x, position.y, position.z, velocity.x, velocity.y, velocity.z, clock_bias, clock_drift;
        return x;
    }

    static NavState from_vector(const StateVector& x) {
        NavState s;
        s.position = {x(kPosX), x(kPosY), x(kPosZ)};
        s.velocity = {x(kVelX), x(kVelY), x(kVelZ)};
        s.clock_bias = x(kClockBias);
        s.clock_drift = x(kClockDrift);
        return s;
    }
};

}  // namespace vdll
