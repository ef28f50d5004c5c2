#include "vdll/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vdll {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

template <typename M>
void symmetrize(M& P) {
    P = 0.5 * (P + P.transpose()).eval();
}

const SatelliteState& find_satellite(std::span<const SatelliteState> sats, int sv_id) {
    auto it = std::find_if(sats.begin(), sats.end(), [&](const auto& s) { return s.sv_id == sv_id; });
    if (it == sats.end()) throw std::out_of_range("no satellite state for sv " + std::to_string(sv_id));
    return *it;
}

// Satellites for the valid entries of z, in entry order.
std::vector<SatelliteState> satellites_for(const MeasurementSet& z, std::span<const SatelliteState> sats) {
    std::vector<SatelliteState> out;
    for (const auto& e : z.entries) {
        if (e.valid) out.push_back(find_satellite(sats, e.sv_id));
    }
    return out;
}

}  // namespace

ProcessModel make_process_model(double dt, const ProcessNoise& psd) {
    ProcessModel m;
    const double dt2 = dt * dt, dt3 = dt2 * dt;
    for (int axis = 0; axis < 3; ++axis) {
        const int p = kPosX + axis, v = kVelX + axis;
        m.transition(p, v) = dt;
        m.noise(p, p) = psd.accel_psd * dt3 / 3.0;
        m.noise(p, v) = m.noise(v, p) = psd.accel_psd * dt2 / 2.0;
        m.noise(v, v) = psd.accel_psd * dt;
    }
    m.transition(kClockBias, kClockDrift) = dt;
    m.noise(kClockBias, kClockBias) = psd.clock_bias_psd * dt + psd.clock_drift_psd * dt3 / 3.0;
    m.noise(kClockBias, kClockDrift) = m.noise(kClockDrift, kClockBias) = psd.clock_drift_psd * dt2 / 2.0;
    m.noise(kClockDrift, kClockDrift) = psd.clock_drift_psd * dt;
    return m;
}

FilterState kf_predict(const FilterState& state, const ProcessModel& model) {
    FilterState out;
    out.x = model.transition * state.x;
    out.P = model.transition * state.P * model.transition.transpose() + model.noise;
    symmetrize(out.P);
    return out;
}

Index MeasurementModel::row_of(int sv_id) const {
    auto it = std::find(sv_ids.begin(), sv_ids.end(), sv_id);
    if (it == sv_ids.end()) throw std::out_of_range("measurement model has no row for sv " + std::to_string(sv_id));
    return static_cast<Index>(it - sv_ids.begin());
}

VectorXd pseudorange_model(const StateVector& x, std::span<const SatelliteState> sats) {
    const Eigen::Vector3d p = x.segment<3>(kPosX);
    VectorXd h(static_cast<Index>(sats.size()));
    for (std::size_t i = 0; i < sats.size(); ++i) {
        h(static_cast<Index>(i)) = (sats[i].position.vec() - p).norm() + x(kClockBias);
    }
    return h;
}

MeasurementModel measurement_model(const StateVector& x, std::span<const SatelliteState> sats) {
    const EcefVector p{x(kPosX), x(kPosY), x(kPosZ)};
    const auto m = static_cast<Index>(sats.size());
    MeasurementModel mm;
    mm.predicted = pseudorange_model(x, sats);
    mm.jacobian = MatrixXd::Zero(m, kStateDim);
    for (Index i = 0; i < m; ++i) {
        const auto& sv = sats[static_cast<std::size_t>(i)];
        const Eigen::Vector3d u = unit_los(p, sv.position).vec();
        mm.jacobian.block<1, 3>(i, kPosX) = -u.transpose();
        mm.jacobian(i, kClockBias) = 1.0;
        mm.sv_ids.push_back(sv.sv_id);
    }
    return mm;
}

UpdateResult linear_update(const FilterState& prior, const VectorXd& innovation, const MatrixXd& H,
                           const VectorXd& r_diag) {
    UpdateResult res;
    res.posterior = prior;
    res.innovations = innovation;
    if (innovation.size() == 0) return res;

    const MatrixXd R = r_diag.asDiagonal();
    const MatrixXd PHt = prior.P * H.transpose();
    const MatrixXd S = H * PHt + R;
    const Eigen::LLT<MatrixXd> llt(S);
    if (llt.info() != Eigen::Success) {
        res.singular = true;
        return res;
    }
    const MatrixXd K = llt.solve(PHt.transpose()).transpose();

    res.posterior.x = prior.x + K * innovation;
    const StateMatrix IKH = StateMatrix::Identity() - K * H;
    res.posterior.P = IKH * prior.P * IKH.transpose() + K * R * K.transpose();
    symmetrize(res.posterior.P);
    res.applied = true;
    return res;
}

UpdateResult ekf_update(const FilterState& prior, const MeasurementSet& z, const MeasurementModel& mm) {
    const auto valid = z.valid_entries();
    const auto m = static_cast<Index>(valid.size());
    VectorXd y(m), r(m);
    MatrixXd H(m, kStateDim);
    for (Index i = 0; i < m; ++i) {
        const auto& e = valid[static_cast<std::size_t>(i)];
        y(i) = e.residual;
        r(i) = e.variance;
        H.row(i) = mm.jacobian.row(mm.row_of(e.sv_id));
    }
    return linear_update(prior, y, H, r);
}

SigmaPointSet sigma_points(const VectorXd& x, const MatrixXd& P, const UkfParams& params) {
    const auto n = static_cast<int>(x.size());
    const double lambda = params.lambda(n);
    const double scale = n + lambda;
    if (!(scale > 0.0)) throw std::invalid_argument("sigma_points: n + lambda must be positive");

    const Eigen::LLT<MatrixXd> llt(scale * P);
    if (llt.info() != Eigen::Success) throw CholeskyError("sigma_points: covariance is not positive definite");
    const MatrixXd L = llt.matrixL();

    SigmaPointSet set;
    set.points.resize(n, 2 * n + 1);
    set.points.col(0) = x;
    for (int i = 0; i < n; ++i) {
        set.points.col(1 + i) = x + L.col(i);
        set.points.col(1 + n + i) = x - L.col(i);
    }
    set.weights_mean = VectorXd::Constant(2 * n + 1, 0.5 / scale);
    set.weights_cov = set.weights_mean;
    set.weights_mean(0) = lambda / scale;
    set.weights_cov(0) = lambda / scale + (1.0 - params.alpha * params.alpha + params.beta);
    return set;
}

UnscentedResult unscented_transform(const SigmaPointSet& set, const VectorFunction& f, const MatrixXd& noise_cov) {
    const Index count = set.points.cols();
    const VectorXd& center = set.points.col(0);

    std::vector<VectorXd> images;
    images.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) images.push_back(f(set.points.col(i)));
    const Index dim = images.front().size();

    // Accumulate relative to the central image: the mean weight on point 0 is
    // large and negative for small alpha, so raw sums would cancel badly.
    VectorXd offset = VectorXd::Zero(dim);
    for (Index i = 1; i < count; ++i) offset += set.weights_mean(i) * (images[i] - images[0]);

    UnscentedResult out;
    out.mean = images[0] + offset;
    out.cov = noise_cov;
    out.cross_cov = MatrixXd::Zero(set.points.rows(), dim);
    for (Index i = 0; i < count; ++i) {
        const VectorXd dy = (images[i] - images[0]) - offset;
        out.cov.noalias() += set.weights_cov(i) * dy * dy.transpose();
        out.cross_cov.noalias() += set.weights_cov(i) * (set.points.col(i) - center) * dy.transpose();
    }
    symmetrize(out.cov);
    return out;
}

UpdateResult unscented_update(const FilterState& prior, const VectorFunction& h, const VectorXd& z,
                              const VectorXd& r_diag, const UkfParams& params) {
    UpdateResult res;
    res.posterior = prior;
    if (z.size() == 0) {
        res.innovations = VectorXd(0);
        return res;
    }

    MatrixXd P = prior.P;
    SigmaPointSet set;
    try {
        set = sigma_points(prior.x, P, params);
    } catch (const CholeskyError&) {
        const double n = static_cast<double>(prior.x.size());
        const double jitter = std::max(1e-9 * P.trace() / n, 1e-12);
        P.diagonal().array() += jitter;
        res.psd_repaired = true;
        try {
            set = sigma_points(prior.x, P, params);
        } catch (const CholeskyError&) {
            throw NumericalError("ukf_update: covariance not positive definite after jitter repair");
        }
    }

    const MatrixXd R = r_diag.asDiagonal();
    const UnscentedResult ut = unscented_transform(set, h, R);
    const Eigen::LLT<MatrixXd> llt(ut.cov);
    if (llt.info() != Eigen::Success) {
        res.singular = true;
        res.innovations = z - ut.mean;
        return res;
    }
    const MatrixXd K = llt.solve(ut.cross_cov.transpose()).transpose();

    res.innovations = z - ut.mean;
    res.posterior.x = prior.x + K * res.innovations;
    res.posterior.P = P - K * ut.cov * K.transpose();
    symmetrize(res.posterior.P);
    res.applied = true;
    return res;
}

UpdateResult ukf_update(const FilterState& prior, const MeasurementSet& z, std::span<const SatelliteState> sats,
                        const UkfParams& params) {
    const std::vector<SatelliteState> used = satellites_for(z, sats);
    const auto valid = z.valid_entries();
    const VectorXd h_prior = pseudorange_model(prior.x, used);
    VectorXd observed(h_prior.size()), r(h_prior.size());
    for (Index i = 0; i < h_prior.size(); ++i) {
        const auto& e = valid[static_cast<std::size_t>(i)];
        observed(i) = h_prior(i) + e.residual;
        r(i) = e.variance;
    }
    const VectorFunction h = [&used](const VectorXd& x) { return pseudorange_model(StateVector(x), used); };
    return unscented_update(prior, h, observed, r, params);
}

FilterState initialize_filter(const InitialError& init, const NavState& truth, RngStream& rng) {
    StateVector sigma;
    sigma << init.pos_sigma_m, init.pos_sigma_m, init.pos_sigma_m, init.vel_sigma_mps, init.vel_sigma_mps,
        init.vel_sigma_mps, init.clk_sigma_m, init.drift_sigma_mps;
    FilterState s;
    s.x = truth.to_vector();
    if (init.perturb) {
        for (int i = 0; i < kStateDim; ++i) s.x(i) += sigma(i) * rng.normal();
    }
    s.P = sigma.array().square().matrix().asDiagonal();
    return s;
}

NavigationFilter::NavigationFilter(const FilterConfig& config, FilterState initial)
    : config_(config), state_(std::move(initial)) {}

void NavigationFilter::predict(double dt) {
    state_ = kf_predict(state_, make_process_model(dt, config_.process));
}

UpdateResult NavigationFilter::update(const MeasurementSet& z, std::span<const SatelliteState> sats) {
    UpdateResult res;
    if (z.valid_count() == 0) {
        res.posterior = state_;
        return res;
    }
    if (config_.type == FilterType::ukf) {
        res = ukf_update(state_, z, sats, config_.ukf);
    } else {
        const auto used = satellites_for(z, sats);
        res = ekf_update(state_, z, measurement_model(state_.x, used));
    }
    if (res.applied) state_ = res.posterior;
    return res;
}

bool covariance_healthy(const MatrixXd& P, double symmetry_tol) {
    const double scale = std::max(P.cwiseAbs().maxCoeff(), 1e-300);
    if ((P - P.transpose()).cwiseAbs().maxCoeff() > symmetry_tol * scale) return false;
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (P + P.transpose()));
    return eig.eigenvalues().minCoeff() >= -1e-9 * std::abs(P.trace());
}

}  // namespace vdll
