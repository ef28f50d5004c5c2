#pragma once

#include <cstdint>
#include <random>

namespace vdll {

/// Seeded Gaussian/uniform source. Every satellite link owns one stream,
/// keyed by its sv_id; stream 0 is reserved for filter initialization.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    /// Stream seed = scenario seed XOR (golden-ratio constant * (stream_id + 1)).
    static RngStream for_stream(std::uint64_t scenario_seed, std::uint64_t stream_id) {
        return RngStream(scenario_seed ^ (0x9E3779B97F4A7C15ULL * (stream_id + 1)));
    }

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace vdll
