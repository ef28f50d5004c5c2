#pragma once

#include "vdll/rng.hpp"

#include <limits>

namespace vdll {

enum class FadingModel { none, rayleigh, rician };

/// Land-mobile-satellite link parameters. Times in seconds, C/N0 in dB-Hz.
struct ChannelParams {
    FadingModel model = FadingModel::none;
    double k_factor_db = 10.0;
    double fade_correlation_time = 1.0;
    double multipath_sigma = 0.0;
    double multipath_correlation_time = 2.0;
    double cn0_nominal = 45.0;
    double lock_threshold = 28.0;
    // The two pathways by which the link reaches the receiver; each can be
    // switched off independently.
    bool envelope_to_cn0 = true;
    bool multipath_to_range = true;

    // Rician K as a linear power ratio; 0 for Rayleigh.
    double k_linear() const;
};

enum class LinkCondition { los, blocked };

inline constexpr double kUnusableCn0 = -std::numeric_limits<double>::infinity();

struct ChannelRealization {
    int sv_id = 0;
    LinkCondition condition = LinkCondition::los;
    double inphase = 0.0;
    double quadrature = 0.0;
    double envelope = 1.0;
    double multipath_bias = 0.0;
    double cn0_instant = 45.0;

    bool usable(double lock_threshold) const {
        return condition == LinkCondition::los && cn0_instant >= lock_threshold;
    }
};

/// Draws a stationary starting state (scattered components, multipath bias)
/// so the very first epoch already follows the target statistics.
ChannelRealization init_channel(int sv_id, const ChannelParams& params, RngStream& rng);

/// AR(1) complex Gaussian scattered field plus fixed LOS mean; envelope = |m + s|.
/// Draw order: inphase, quadrature.
double step_envelope(ChannelRealization& state, const ChannelParams& params, double dt, RngStream& rng);

/// cn0_nominal + 20 log10(envelope); kUnusableCn0 for a zero envelope.
double cn0_instant(double cn0_nominal, double envelope);

/// First-order Gauss-Markov multipath range bias.
double step_multipath_bias(ChannelRealization& state, const ChannelParams& params, double dt, RngStream& rng);

ChannelRealization apply_condition(ChannelRealization realization, bool outaged);

/// One epoch of a link: envelope, multipath and the resulting C/N0, in that order.
void step_channel(ChannelRealization& state, const ChannelParams& params, double dt, RngStream& rng);

}  // namespace vdll
