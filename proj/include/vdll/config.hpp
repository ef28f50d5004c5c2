#pragma once

#include "vdll/channel.hpp"
#include "vdll/estimation.hpp"
#include "vdll/integrity.hpp"
#include "vdll/scenario.hpp"
#include "vdll/tracking.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vdll {

/// Malformed document or a value that violates a constraint. The message
/// starts with the dotted path of the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct ScenarioConfig {
    double duration = 10.0;
    double epoch_interval = 0.1;
    std::uint64_t seed = 1;
    ConstellationConfig constellation;
    TrajectoryConfig trajectory;
    ChannelParams channel;
    TrackingParams tracking;
    FilterConfig filter;
    IntegrityConfig integrity;
    EventSchedule events;

    /// floor(duration / dt), guarded against 630 / 0.1 landing just below 6300.
    std::size_t epoch_count() const;
};

/// Parses and validates a JSON scenario document. Missing keys take their
/// defaults; unknown keys are errors.
ScenarioConfig load_config(std::string_view document);
ScenarioConfig load_config_file(const std::filesystem::path& path);

/// Re-checks every invariant (used after command-line overrides).
void validate(const ScenarioConfig& cfg);

/// Canonical JSON form of the effective configuration (sorted keys,
/// degrees at the boundary). load_config(to_json(c)) reproduces c.
std::string to_json(const ScenarioConfig& cfg);

/// SHA-256 hex digest of to_json(cfg).
std::string config_digest(const ScenarioConfig& cfg);

const char* to_string(FilterType t);
const char* to_string(FadingModel m);
const char* to_string(TrackingMode m);

}  // namespace vdll
