#pragma once

// Shared fixtures and reference computations for the test programs.

#include "vdll/estimation.hpp"
#include "vdll/frames.hpp"
#include "vdll/scenario.hpp"
#include "vdll/tracking.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace vdll::test {

inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& gen, double scale = 1.0) {
    std::normal_distribution<double> nd;
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = nd(gen);
    return scale * (A * A.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n));
}

inline double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

// Plain textbook Kalman update with an explicit inverse.
inline void textbook_update(const Eigen::VectorXd& x, const Eigen::MatrixXd& P, const Eigen::VectorXd& y,
                            const Eigen::MatrixXd& H, const Eigen::MatrixXd& R, Eigen::VectorXd& x_out,
                            Eigen::MatrixXd& P_out) {
    const Eigen::MatrixXd S = H * P * H.transpose() + R;
    const Eigen::MatrixXd K = P * H.transpose() * S.inverse();
    x_out = x + K * y;
    P_out = (Eigen::MatrixXd::Identity(P.rows(), P.cols()) - K * H) * P;
}

// Same update carried out in long double, for use as a reference when the
// posterior is much tighter than the prior.
inline void textbook_update_extended(const Eigen::VectorXd& x, const Eigen::MatrixXd& P, const Eigen::VectorXd& y,
                                     const Eigen::MatrixXd& H, const Eigen::MatrixXd& R, Eigen::VectorXd& x_out,
                                     Eigen::MatrixXd& P_out) {
    using ML = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    const ML Pl = P.cast<long double>(), Hl = H.cast<long double>();
    const ML S = Hl * Pl * Hl.transpose() + R.cast<long double>();
    const ML K = Pl * Hl.transpose() * S.inverse();
    const VL xl = x.cast<long double>() + K * y.cast<long double>();
    const ML Pn = (ML::Identity(P.rows(), P.cols()) - K * Hl) * Pl;
    x_out = xl.cast<double>();
    P_out = Pn.cast<double>();
}

// Satellites spread in azimuth at three elevation bands, 22,000 km away.
inline std::vector<SatelliteState> ring_of_satellites(const EcefVector& rx, int count) {
    const GeodeticCoord g = ecef_to_geodetic(rx);
    std::vector<SatelliteState> sats;
    for (int i = 0; i < count; ++i) {
        const double az = 2 * kPi * i / count, el = deg2rad(20.0 + 25.0 * (i % 3));
        const EnuVector dir{std::cos(el) * std::sin(az), std::cos(el) * std::cos(az), std::sin(el)};
        SatelliteState s;
        s.sv_id = i + 1;
        s.position = rx + 2.2e7 * enu_delta_to_ecef(dir, g);
        sats.push_back(s);
    }
    return sats;
}

inline EcefVector mid_latitude_site() { return geodetic_to_ecef({deg2rad(40.0), deg2rad(-86.0), 200.0}); }

// Residual set with white noise of the given sigma and an optional bias on one sv.
inline MeasurementSet noisy_residuals(const std::vector<SatelliteState>& sats, double sigma, std::mt19937_64& gen,
                                      int faulty_sv = 0, double bias = 0.0) {
    std::normal_distribution<double> nd;
    std::vector<MeasurementEntry> entries;
    for (const auto& sv : sats) {
        MeasurementEntry e;
        e.sv_id = sv.sv_id;
        e.valid = true;
        e.variance = sigma * sigma;
        e.residual = sigma * nd(gen) + (sv.sv_id == faulty_sv ? bias : 0.0);
        entries.push_back(e);
    }
    return assemble_measurements(0.0, entries);
}

// Chi-square CDF by composite Simpson integration of the density after the
// substitution x = u^2, which removes the dof = 1 singularity at zero.
inline double numeric_chi_square_cdf(int dof, double x) {
    const double a = 0.5 * dof;
    const double log_norm = -a * std::log(2.0) - std::lgamma(a);
    const auto f = [&](double u) {
        if (u == 0.0) return dof == 1 ? 2.0 * std::exp(log_norm) : 0.0;
        return 2.0 * std::exp((2.0 * a - 1.0) * std::log(u) - 0.5 * u * u + log_norm);
    };
    const double upper = std::sqrt(x);
    const int n = 20000;
    const double h = upper / n;
    double s = f(0.0) + f(upper);
    for (int i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f(i * h);
    return s * h / 3.0;
}

inline double numeric_chi_square_quantile(int dof, double p) {
    double lo = 0.0, hi = 10.0;
    while (numeric_chi_square_cdf(dof, hi) < p) hi *= 2.0;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (numeric_chi_square_cdf(dof, mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace vdll::test
