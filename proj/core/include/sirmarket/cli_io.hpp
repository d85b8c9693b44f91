#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sirmarket/analysis.hpp"

namespace sirmarket {

enum class ScenarioSelector { myopic, depression, rational, all };
enum class OutputFormat { csv, json };

std::string_view to_string(ScenarioSelector s) noexcept;
std::string_view to_string(OutputFormat f) noexcept;
ScenarioSelector parse_scenario(std::string_view name);
OutputFormat parse_format(std::string_view name);
ScenarioSet scenarios_for(ScenarioSelector s) noexcept;

struct ScenarioConfig {
    EpidemicParams epidemic;
    SupplyCurve curve;
    double t_end = 300.0;
    double dt = 1e-2;
    ScenarioSelector scenario = ScenarioSelector::all;
    std::string out_dir = "out";
    std::vector<OutputFormat> formats{OutputFormat::csv};
    SweepSpec sweep;

    Grid grid() const { return Grid::make(0.0, t_end, dt); }

    /// Throws invalid_parameter naming the field and its bound.
    void validate() const;

    bool operator==(const ScenarioConfig&) const = default;
};

/// Parses either UTF-8 `key = value` lines (`#` starts a comment) or a single
/// JSON object; detection is by the first non-blank character. Keys:
///   beta gamma n1 n2 n3 endowment p0 kappa t_end dt scenario out_dir format
///   sweep.beta sweep.gamma sweep.n1 sweep.kappa   (comma-separated lists)
/// Unknown keys are rejected; syntax errors carry line and column.
ScenarioConfig parse_config(std::string_view text);

/// key = value form accepted by parse_config, numbers in shortest round-trip form.
std::string serialize_config(const ScenarioConfig& config);

ScenarioConfig load_config(const std::filesystem::path& path);

/// Shortest decimal string that reads back to the identical double.
std::string format_double(double v);

struct ManifestEntry {
    std::string path;
    std::string kind;
    std::size_t rows = 0;

    bool operator==(const ManifestEntry&) const = default;
};

/// Trajectory table. CSV columns exactly t,S,I,R,X,P,phase; the JSON mirror
/// is {"scenario": ..., "nodes": [{"t","S","I","R","X","P","phase"}, ...]}.
ManifestEntry write_timeseries(const MarketTrajectory& trajectory, OutputFormat format,
                               const std::filesystem::path& path);

struct TimeseriesRow {
    double t = 0, s = 0, i = 0, r = 0, x = 0, p = 0;
    std::string phase;

    bool operator==(const TimeseriesRow&) const = default;
};

std::vector<TimeseriesRow> read_timeseries_csv(const std::filesystem::path& path);

/// Whitespace-separated `t P I` columns for plotting tools.
ManifestEntry write_plot_data(const MarketTrajectory& trajectory, const std::filesystem::path& path);

ManifestEntry write_timeline_json(const EventTimeline& timeline, const PropositionReport& report,
                                  const std::filesystem::path& path);

/// One row per sweep point plus a JSON summary next to it.
ManifestEntry write_sweep_table(const std::vector<SweepResult>& rows, const std::filesystem::path& path);
ManifestEntry write_sweep_summary(const std::vector<SweepResult>& rows, const std::filesystem::path& path);

struct RunReport {
    ScenarioConfig config;
    EventTimeline timeline;
    PropositionReport verdicts;
    std::vector<ManifestEntry> manifest;
    std::string engine_version;
    double wall_seconds = 0;
};

/// The report is the only output carrying run-dependent data (wall clock).
void write_run_report(const RunReport& report, const std::filesystem::path& path);

std::string_view engine_version() noexcept;

}  // namespace sirmarket
