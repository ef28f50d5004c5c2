#pragma once

#include "vdll/estimation.hpp"
#include "vdll/tracking.hpp"

#include <Eigen/Dense>
#include <limits>
#include <set>

namespace vdll {

struct IntegrityConfig {
    bool raim_enabled = true;
    bool fde_enabled = true;
    double false_alarm_prob = 0.01;  // per test
};

/// Regularized lower incomplete gamma P(a, x) for a = dof / 2 with integer
/// dof in [1, 64].
double chi_square_cdf(int dof, double x);

/// x with chi_square_cdf(dof, x) = p. Requires 1 <= dof <= 64 and 0 < p < 1.
double chi_square_quantile(int dof, double p);

struct ResidualTest {
    double statistic = std::numeric_limits<double>::quiet_NaN();
    int dof = 0;
    bool available = false;
};

/// Weighted least-squares residual sum of squares of y against the columns
/// of G, W = diag(1/variances). Unavailable when G is rank deficient or there
/// is no redundancy.
ResidualTest weighted_residual_statistic(const Eigen::MatrixXd& G, const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& variances);

/// Snapshot residual test on the valid entries of z, using the position and
/// clock columns of the measurement Jacobian. Needs at least five entries.
ResidualTest ls_residual_statistic(const MeasurementSet& z, const MeasurementModel& mm);

enum class RaimCapability { unavailable, detect_only, detect_and_exclude };

const char* to_string(RaimCapability c);

struct RaimVerdict {
    bool ran = false;
    double statistic = std::numeric_limits<double>::quiet_NaN();
    double threshold = std::numeric_limits<double>::quiet_NaN();
    int degrees_of_freedom = 0;
    bool detected = false;
    std::set<int> excluded;
    RaimCapability capability = RaimCapability::unavailable;
    // Detection that no single exclusion could clear.
    bool unresolved = false;
};

RaimVerdict raim_detect(const MeasurementSet& z, const MeasurementModel& mm, const IntegrityConfig& cfg);

/// Single-fault exclusion by leave-one-out re-testing. Returns the detection
/// verdict unchanged when nothing was detected.
RaimVerdict fde_exclude(const MeasurementSet& z, const MeasurementModel& mm, const IntegrityConfig& cfg);

/// Full per-epoch integrity step as configured (off, RAIM only, RAIM + FDE).
/// Any detection that ends without an exclusion is marked unresolved.
RaimVerdict integrity_check(const MeasurementSet& z, const MeasurementModel& mm, const IntegrityConfig& cfg);

/// Invalidates excluded entries; an unresolved verdict invalidates everything.
MeasurementSet gate_measurements(const MeasurementSet& z, const RaimVerdict& verdict);

}  // namespace vdll
