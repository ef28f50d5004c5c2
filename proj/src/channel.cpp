#include "vdll/channel.hpp"

#include <cmath>

namespace vdll {

namespace {

struct FadingMoments {
    double los_mean;
    double scatter_sigma;  // per-component standard deviation
};

FadingMoments fading_moments(const ChannelParams& params) {
    const double k = params.k_linear();
    // Unit total power: m^2 + 2 sigma^2 = 1.
    return {std::sqrt(k / (k + 1.0)), std::sqrt(0.5 / (k + 1.0))};
}

double ar1_coefficient(double dt, double tau) { return std::exp(-dt / tau); }

void refresh_cn0(ChannelRealization& state, const ChannelParams& params) {
    state.cn0_instant = params.envelope_to_cn0 ? cn0_instant(params.cn0_nominal, state.envelope)
                                               : params.cn0_nominal;
}

}  // namespace

double ChannelParams::k_linear() const {
    switch (model) {
    case FadingModel::rician:
        return std::pow(10.0, k_factor_db / 10.0);
    case FadingModel::rayleigh:
    case FadingModel::none:
        break;
    }
    return 0.0;
}

ChannelRealization init_channel(int sv_id, const ChannelParams& params, RngStream& rng) {
    ChannelRealization state;
    state.sv_id = sv_id;
    if (params.model != FadingModel::none) {
        const FadingMoments mo = fading_moments(params);
        state.inphase = mo.scatter_sigma * rng.normal();
        state.quadrature = mo.scatter_sigma * rng.normal();
        state.envelope = std::hypot(mo.los_mean + state.inphase, state.quadrature);
    }
    if (params.multipath_to_range && params.multipath_sigma > 0.0) {
        state.multipath_bias = params.multipath_sigma * rng.normal();
    }
    refresh_cn0(state, params);
    return state;
}

double step_envelope(ChannelRealization& state, const ChannelParams& params, double dt, RngStream& rng) {
    if (params.model == FadingModel::none) {
        state.inphase = state.quadrature = 0.0;
        state.envelope = 1.0;
        return state.envelope;
    }
    const FadingMoments mo = fading_moments(params);
    const double rho = ar1_coefficient(dt, params.fade_correlation_time);
    const double drive = std::sqrt(1.0 - rho * rho) * mo.scatter_sigma;
    state.inphase = rho * state.inphase + drive * rng.normal();
    state.quadrature = rho * state.quadrature + drive * rng.normal();
    state.envelope = std::hypot(mo.los_mean + state.inphase, state.quadrature);
    return state.envelope;
}

double cn0_instant(double cn0_nominal, double envelope) {
    if (envelope <= 0.0) return kUnusableCn0;
    return cn0_nominal + 20.0 * std::log10(envelope);
}

double step_multipath_bias(ChannelRealization& state, const ChannelParams& params, double dt, RngStream& rng) {
    if (!params.multipath_to_range || params.multipath_sigma <= 0.0) {
        state.multipath_bias = 0.0;
        return 0.0;
    }
    const double rho = ar1_coefficient(dt, params.multipath_correlation_time);
    state.multipath_bias =
        rho * state.multipath_bias + std::sqrt(1.0 - rho * rho) * params.multipath_sigma * rng.normal();
    return state.multipath_bias;
}

ChannelRealization apply_condition(ChannelRealization realization, bool outaged) {
    realization.condition = outaged ? LinkCondition::blocked : LinkCondition::los;
    return realization;
}

void step_channel(ChannelRealization& state, const ChannelParams& params, double dt, RngStream& rng) {
    step_envelope(state, params, dt, rng);
    step_multipath_bias(state, params, dt, rng);
    refresh_cn0(state, params);
}

}  // namespace vdll
