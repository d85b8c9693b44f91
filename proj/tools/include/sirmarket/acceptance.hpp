#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sirmarket/cli_io.hpp"

namespace sirmarket {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool pass = false;
    std::string detail;
};

struct VerifyArtifacts {
    std::vector<ManifestEntry> manifest;
    EventTimeline timeline;
    PropositionReport report;
};

/// Deterministic data set written by `verify`: trajectories, plot data,
/// timeline and the sweep (default_sweep() unless the config has one).
/// Everything here must be byte-stable.
VerifyArtifacts write_verify_artifacts(const ScenarioConfig& config, const std::filesystem::path& dir,
                                       unsigned workers);

/// The 13 acceptance criteria on the default parameters. Shared runs (default
/// evaluation, default sweep) are computed once and reused.
class AcceptanceSuite {
public:
    static constexpr int count = 13;

    explicit AcceptanceSuite(unsigned workers = 4, std::filesystem::path scratch = {});

    CriterionResult run(int id);
    std::vector<CriterionResult> run_all();

private:
    const PointEvaluation& defaults();
    const std::vector<SweepResult>& sweep();

    CriterionResult conservation();
    CriterionResult first_integrals();
    CriterionResult final_size();
    CriterionResult infection_peak_location();
    CriterionResult lead_lag();
    CriterionResult kernel_oracle();
    CriterionResult plateau_closure();
    CriterionResult faster_rise();
    CriterionResult lower_peak();
    CriterionResult ordering_chain();
    CriterionResult depression_mirror();
    CriterionResult event_convergence();
    CriterionResult determinism();

    unsigned workers_;
    std::filesystem::path scratch_;
    std::optional<PointEvaluation> defaults_;
    std::optional<std::vector<SweepResult>> sweep_;
};

/// "PASS  3 final size ... detail" style line.
std::string format_result(const CriterionResult& r);

}  // namespace sirmarket
