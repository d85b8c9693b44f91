#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sirmarket/epidemic.hpp"
#include "sirmarket/market.hpp"
#include "sirmarket/market_rational.hpp"

namespace sirmarket {

enum class Extremum { max, min };

struct PeakEstimate {
    double t = 0;
    double value = 0;
    std::size_t node = 0;
};

/// Parabolic refinement of the discrete extremum of a sampled series. The
/// returned time lies within one node spacing of the extremal node.
/// Throws boundary_extremum when the extremum sits on the first or last sample
/// and consistency_error for fewer than three samples.
PeakEstimate refine_peak(std::span<const double> times, std::span<const double> values, Extremum mode);

enum class Verdict { pass, fail, inconclusive };
std::string_view to_string(Verdict v) noexcept;

/// a < b at grid resolution: pass when b - a > resolution, fail when
/// a - b > resolution, inconclusive otherwise.
Verdict strictly_before(double a, double b, double resolution) noexcept;

/// Lead-lag chain t1 < t_P* < t2 < t_I*. The three plateau entries are only
/// set when a rational run is part of the timeline.
struct OrderingChecks {
    std::optional<Verdict> t1_before_tp;
    std::optional<Verdict> tp_before_t2;
    std::optional<Verdict> t2_before_ti;
    std::optional<Verdict> tp_before_ti;

    bool all_pass() const noexcept;
    bool any_fail() const noexcept;
    bool any_inconclusive() const noexcept;
};

struct EventTimeline {
    Scenario scenario = Scenario::myopic;  ///< myopic, or depression for the mirrored run
    bool boom = false;                     ///< false: no infection peak or no price extremum
    double resolution = 0;                 ///< grid step the verdicts were judged at
    double t_i_star = 0;
    double i_star = 0;
    double t_p_star_m = 0;  ///< price peak (trough for depression)
    double p_star_m = 0;
    std::optional<double> t1;
    std::optional<double> t2;
    std::optional<double> p_star_re;
    OrderingChecks ordering;
};

/// Extracts and refines every event time. `primary` is a myopic or depression
/// trajectory; `rational` (optional) must share its parameters and grid.
EventTimeline build_timeline(const MarketTrajectory& primary, const MarketTrajectory* rational,
                             const InfectionPeak& peak);

struct ClaimResult {
    std::string name;
    Verdict verdict = Verdict::inconclusive;
    double margin = 0;  ///< signed distance from the pass boundary; positive passes
    std::string detail;
};

struct PropositionReport {
    std::vector<ClaimResult> claims;

    bool all_pass() const noexcept;
    const ClaimResult* find(std::string_view name) const noexcept;
};

/// Machine-checks the lead-lag, long-run, unimodality, plateau, faster-rise,
/// lower-peak, and ordering claims on finished runs. Pure: inputs are not modified.
PropositionReport check_propositions(const MarketTrajectory& primary, const MarketTrajectory* rational,
                                     const EventTimeline& timeline);

/// Interior local maxima (or minima) further than rel_band * p0 from p0.
std::size_t count_interior_extrema(const MarketTrajectory& trajectory, Extremum mode, double rel_band = 1e-6);

/// First time the price reaches `level` (linear interpolation between
/// nodes); nullopt if never.
std::optional<double> first_crossing_time(const MarketTrajectory& trajectory, double level);

struct ScenarioSet {
    bool myopic = true;
    bool depression = false;
    bool rational = true;

    bool operator==(const ScenarioSet&) const = default;
};

/// All requested scenarios for one parameter point, with timeline and
/// proposition verdicts. Inconclusive ordering verdicts trigger a re-run at
/// dt/2, at most `max_refinements` times.
struct PointEvaluation {
    EpidemicParams params;
    SupplyCurve curve;
    Grid grid;
    int refinements = 0;
    InfectionPeak peak;
    std::optional<MarketTrajectory> myopic;
    std::optional<MarketTrajectory> depression;
    std::optional<MarketTrajectory> rational;
    std::optional<PlateauSolution> plateau;
    EventTimeline timeline;
    std::optional<EventTimeline> depression_timeline;
    PropositionReport report;
};

PointEvaluation evaluate_point(const EpidemicParams& params, const SupplyCurve& curve, const Grid& grid,
                               const ScenarioSet& scenarios, int max_refinements = 2);

/// Values per swept parameter; an empty list keeps the base value.
struct SweepSpec {
    std::vector<double> beta;
    std::vector<double> gamma;
    std::vector<double> n1;
    std::vector<double> kappa;

    bool empty() const noexcept { return beta.empty() && gamma.empty() && n1.empty() && kappa.empty(); }
    std::size_t size() const noexcept;
    bool operator==(const SweepSpec&) const = default;
};

enum class PointStatus { ok, no_boom, error };
std::string_view to_string(PointStatus s) noexcept;

struct SweepResult {
    std::size_t index = 0;
    EpidemicParams params;
    SupplyCurve curve;
    PointStatus status = PointStatus::ok;
    std::string error;
    double dt_used = 0;
    EventTimeline timeline;
    PropositionReport report;
    std::optional<double> plateau_width;
    std::optional<double> half_rise_myopic;
    std::optional<double> half_rise_rational;
};

/// Cartesian product in fixed order (beta outermost, then gamma, n1, kappa).
/// Points run on up to `workers` threads; output order is the grid order
/// regardless of scheduling. Per-point failures are recorded in the row.
std::vector<SweepResult> parameter_sweep(const EpidemicParams& base, const SupplyCurve& base_curve,
                                         const Grid& grid, const SweepSpec& spec, const ScenarioSet& scenarios,
                                         unsigned workers = 1);

struct SweepSummary {
    std::size_t points = 0;
    std::size_t ok = 0;
    std::size_t no_boom = 0;
    std::size_t errors = 0;
    std::size_t claims_passed = 0;
    std::size_t claims_failed = 0;
    std::size_t claims_inconclusive = 0;
};

SweepSummary summarize(const std::vector<SweepResult>& rows) noexcept;

/// Trend of the plateau width in gamma, judged among rows that differ only
/// in gamma. Returns the rows (by index) where the width fails to grow.
struct WidthTrend {
    std::size_t comparisons = 0;
    std::vector<std::size_t> violations;
};
WidthTrend plateau_width_trend(const std::vector<SweepResult>& rows);

/// The default comparative-statics neighborhood: beta x kappa, 3 x 3.
SweepSpec default_sweep();

}  // namespace sirmarket
