#pragma once

#include "vdll/frames.hpp"
#include "vdll/nav_state.hpp"
#include "vdll/rng.hpp"
#include "vdll/scenario.hpp"
#include "vdll/tracking.hpp"

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

namespace vdll {

/// Continuous-time white-noise spectral densities driving the process model.
struct ProcessNoise {
    double accel_psd = 1.0;        // m^2/s^3 per axis
    double clock_bias_psd = 0.1;   // m^2/s
    double clock_drift_psd = 0.1;  // m^2/s^3
};

struct ProcessModel {
    StateMatrix transition = StateMatrix::Identity();
    StateMatrix noise = StateMatrix::Zero();
};

ProcessModel make_process_model(double dt, const ProcessNoise& psd);

struct FilterState {
    StateVector x = StateVector::Zero();
    StateMatrix P = StateMatrix::Identity();
};

FilterState kf_predict(const FilterState& state, const ProcessModel& model);

/// Linearized pseudorange model at a state: rows follow `sv_ids`.
struct MeasurementModel {
    std::vector<int> sv_ids;
    Eigen::VectorXd predicted;  // h(x)
    Eigen::MatrixXd jacobian;   // H, m x 8

    // Row for an sv_id; throws std::out_of_range if absent.
    Eigen::Index row_of(int sv_id) const;
};

/// h_i(x) = |p_sv - p| + clock_bias.
Eigen::VectorXd pseudorange_model(const StateVector& x, std::span<const SatelliteState> sats);

MeasurementModel measurement_model(const StateVector& x, std::span<const SatelliteState> sats);

struct UpdateResult {
    FilterState posterior;
    Eigen::VectorXd innovations;
    bool applied = false;       // false when there was nothing to fuse or S was singular
    bool singular = false;
    bool psd_repaired = false;
};

/// Kalman update with a fixed linear observation matrix and diagonal R,
/// Joseph-form covariance. Empty innovation leaves the prior untouched.
UpdateResult linear_update(const FilterState& prior, const Eigen::VectorXd& innovation, const Eigen::MatrixXd& H,
                           const Eigen::VectorXd& r_diag);

/// EKF update. The tracking residual (observed minus predicted pseudorange)
/// is the innovation; only valid entries are fused.
UpdateResult ekf_update(const FilterState& prior, const MeasurementSet& z, const MeasurementModel& mm);

struct UkfParams {
    double alpha = 1e-3;
    double beta = 2.0;
    double kappa = 0.0;

    double lambda(int n) const { return alpha * alpha * (n + kappa) - n; }
};

struct SigmaPointSet {
    Eigen::MatrixXd points;  // n x (2n+1), column 0 is the mean
    Eigen::VectorXd weights_mean;
    Eigen::VectorXd weights_cov;
};

class CholeskyError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Scaled symmetric sigma points from the lower Cholesky factor of (n+lambda)P.
/// Throws CholeskyError when P is not positive definite, std::invalid_argument
/// when n + lambda <= 0.
SigmaPointSet sigma_points(const Eigen::VectorXd& x, const Eigen::MatrixXd& P, const UkfParams& params);

struct UnscentedResult {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
    Eigen::MatrixXd cross_cov;  // state x output
};

using VectorFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

UnscentedResult unscented_transform(const SigmaPointSet& points, const VectorFunction& f,
                                    const Eigen::MatrixXd& noise_cov);

/// UKF measurement update against an absolute observation z with diagonal R.
/// On a Cholesky failure the prior covariance gets one diagonal jitter of
/// 1e-9 trace(P)/n; a second failure throws NumericalError.
UpdateResult unscented_update(const FilterState& prior, const VectorFunction& h, const Eigen::VectorXd& z,
                              const Eigen::VectorXd& r_diag, const UkfParams& params);

/// UKF update from tracking residuals: the absolute observation is rebuilt as
/// h(x-) + residual for each valid entry.
UpdateResult ukf_update(const FilterState& prior, const MeasurementSet& z, std::span<const SatelliteState> sats,
                        const UkfParams& params);

struct InitialError {
    double pos_sigma_m = 10.0;
    double vel_sigma_mps = 1.0;
    double clk_sigma_m = 100.0;
    double drift_sigma_mps = 1.0;
    // When false the estimate starts exactly at truth; P0 is unchanged.
    bool perturb = true;
};

/// x0 = truth + N(0, diag(sigma^2)) drawn in state order; P0 = diag(sigma^2).
FilterState initialize_filter(const InitialError& init, const NavState& truth, RngStream& rng);

enum class FilterType { ekf, ukf };

struct FilterConfig {
    FilterType type = FilterType::ekf;
    UkfParams ukf;
    ProcessNoise process;
    InitialError init;
};

/// Owns x and P for one run and dispatches updates to the EKF or UKF.
class NavigationFilter {
public:
    NavigationFilter(const FilterConfig& config, FilterState initial);

    void predict(double dt);
    UpdateResult update(const MeasurementSet& z, std::span<const SatelliteState> sats);

    const FilterState& state() const { return state_; }
    NavState nav_state() const { return NavState::from_vector(state_.x); }
    FilterType type() const { return config_.type; }

private:
    FilterConfig config_;
    FilterState state_;
};

/// Symmetric within tolerance and smallest eigenvalue >= -1e-9 trace(P).
bool covariance_healthy(const Eigen::MatrixXd& P, double symmetry_tol = 1e-9);

}  // namespace vdll
