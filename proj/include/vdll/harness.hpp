#pragma once

#include "vdll/config.hpp"
#include "vdll/frames.hpp"
#include "vdll/tracking.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace vdll {

inline constexpr const char* kToolVersion = "0.1.0";

enum EpochFlag : unsigned {
    kFlagPredictOnly = 1u << 0,
    kFlagPsdRepair = 1u << 1,
    kFlagUnresolved = 1u << 2,
    kFlagOutage = 1u << 3,
    kFlagFault = 1u << 4,
    kFlagFilterError = 1u << 5,
};

/// Semicolon-joined flag tokens in bit order, e.g. "predict_only;outage".
std::string flags_to_string(unsigned flags);
unsigned flags_from_string(const std::string& text);

/// Per-satellite tracking diagnostics for one epoch (visible SVs only).
struct ChannelSample {
    int sv_id = 0;
    double cn0 = 0.0;
    bool valid = false;
    bool locked = false;
    double code_error = 0.0;  // true minus predicted (vector) or tracked (scalar) pseudorange
    // Fed to the filter; NaN when the entry is invalid.
    double residual = std::numeric_limits<double>::quiet_NaN();
    double sigma = std::numeric_limits<double>::quiet_NaN();
    EntryStatus status = EntryStatus::ok;
};

struct EpochRecord {
    double t = 0.0;
    EcefVector truth;
    EcefVector estimate;
    EnuVector error;  // ENU(estimate) - ENU(truth) at the run reference
    int valid_svs = 0;
    int locked_svs = 0;
    double raim_stat = std::numeric_limits<double>::quiet_NaN();
    double raim_thresh = std::numeric_limits<double>::quiet_NaN();
    bool raim_detected = false;
    std::set<int> excluded;
    unsigned flags = 0;
    std::vector<ChannelSample> channels;

    bool has(EpochFlag f) const { return (flags & f) != 0; }
    double error_3d() const { return error.norm(); }
};

struct RunSummary {
    double rmse_east = 0.0;
    double rmse_north = 0.0;
    double rmse_up = 0.0;
    double rmse_3d = 0.0;
    double max_error_3d = 0.0;
    std::size_t epochs_total = 0;
    std::size_t epochs_predict_only = 0;
    std::size_t detections = 0;
    std::size_t exclusions = 0;
    std::size_t false_alarms = 0;  // detections while no fault was scheduled
    std::uint64_t seed = 0;
    std::string config_digest;
    std::string filter;
    std::string tracking_mode;
    std::string channel_model;
    std::string tool_version = kToolVersion;
};

struct RunResult {
    std::vector<EpochRecord> records;
    RunSummary summary;
};

/// A module error surfaced during the epoch loop, tagged with where it happened.
class RunError : public std::runtime_error {
public:
    RunError(std::size_t epoch, const std::string& what)
        : std::runtime_error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    std::size_t epoch() const { return epoch_; }

private:
    std::size_t epoch_;
};

/// Runs the closed-loop receiver simulation epoch by epoch. Deterministic for
/// a given configuration (including its seed).
RunResult run_scenario(const ScenarioConfig& cfg);

/// RMSE per ENU axis, 3D RMSE and event counts. Throws std::invalid_argument
/// on an empty record list.
RunSummary compute_summary(const std::vector<EpochRecord>& records);

struct FieldStats {
    double median = 0.0;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for a single run
};

struct RunOutcome {
    std::uint64_t seed = 0;
    std::optional<RunSummary> summary;
    std::string error;
};

struct MonteCarloResult {
    std::vector<RunOutcome> runs;              // in seed order
    std::map<std::string, FieldStats> aggregate;  // keyed by RunSummary field name
    std::size_t failures = 0;
};

/// Run i uses seed base_seed + i. Up to `jobs` runs execute concurrently;
/// results do not depend on completion order.
MonteCarloResult monte_carlo(const ScenarioConfig& cfg, std::size_t runs, std::uint64_t base_seed,
                             unsigned jobs = 1);

/// Aggregation used by monte_carlo, exposed for reuse on arbitrary summaries.
std::map<std::string, FieldStats> aggregate_summaries(const std::vector<RunSummary>& summaries);

double median(std::vector<double> values);

}  // namespace vdll
