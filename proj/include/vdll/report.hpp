#pragma once

#include "vdll/harness.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace vdll {

/// Exact epochs.csv header, comma separated.
extern const char* const kEpochCsvHeader;
/// channels.csv header: one row per visible satellite per epoch.
extern const char* const kChannelCsvHeader;

void write_epoch_csv(const std::vector<EpochRecord>& records, std::ostream& out);
void write_epoch_csv(const std::vector<EpochRecord>& records, const std::filesystem::path& path);

/// Reads epochs.csv back. Channel samples are not part of this file.
std::vector<EpochRecord> read_epoch_csv(const std::filesystem::path& path);

void write_channel_csv(const std::vector<EpochRecord>& records, std::ostream& out);
void write_channel_csv(const std::vector<EpochRecord>& records, const std::filesystem::path& path);

/// Reads channels.csv into records carrying only t and channel samples.
std::vector<EpochRecord> read_channel_csv(const std::filesystem::path& path);

std::string summary_json(const RunSummary& summary);
void write_summary_json(const RunSummary& summary, const std::filesystem::path& path);

std::string montecarlo_json(const MonteCarloResult& result);
void write_montecarlo_json(const MonteCarloResult& result, const std::filesystem::path& path);

enum class PlotSeries { error_enu, raim_statistic, cn0 };

/// Throws std::invalid_argument for an unknown name.
PlotSeries plot_series_from_string(const std::string& name);

/// Self-contained SVG line chart over time. Outage epochs are shaded and
/// RAIM detections marked along the top edge. Needs at least two records.
std::string render_svg_plot(const std::vector<EpochRecord>& records, PlotSeries series);
void emit_svg_plot(const std::vector<EpochRecord>& records, PlotSeries series, const std::filesystem::path& path);

}  // namespace vdll
