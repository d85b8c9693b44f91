#include "sirmarket/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>

#include "sirmarket/acceptance.hpp"

namespace sirmarket {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config;
    std::string scenario;
    std::string out;
    std::string format;
    std::optional<double> dt;
    std::optional<double> horizon;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    bool quiet = false;
};

void add_common(CLI::App* sub, Options& o) {
    sub->add_option("--config", o.config, "key=value or JSON configuration file");
    sub->add_option("--scenario", o.scenario, "myopic | depression | rational | all");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--dt", o.dt, "integration step");
    sub->add_option("--horizon", o.horizon, "end time t_end");
    sub->add_option("--format", o.format, "csv | json (comma list allowed)");
    sub->add_option("--workers", o.workers, "sweep worker threads");
    sub->add_flag("-q,--quiet", o.quiet, "no progress logs");
}

ScenarioConfig resolve(const Options& o) {
    ScenarioConfig cfg = o.config.empty() ? ScenarioConfig{} : load_config(o.config);
    if (!o.scenario.empty()) cfg.scenario = parse_scenario(o.scenario);
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (o.dt) cfg.dt = *o.dt;
    if (o.horizon) cfg.t_end = *o.horizon;
    if (!o.format.empty()) {
        cfg.formats.clear();
        std::string_view rest = o.format;
        for (;;) {
            const auto comma = rest.find(',');
            cfg.formats.push_back(parse_format(rest.substr(0, comma)));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
    }
    cfg.validate();
    return cfg;
}

const char* extension(OutputFormat f) { return f == OutputFormat::csv ? ".csv" : ".json"; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

PropositionReport only_prefixed(const PropositionReport& all, std::string_view prefix) {
    PropositionReport out;
    for (const auto& c : all.claims) {
        if (c.name.starts_with(prefix)) out.claims.push_back(c);
    }
    return out;
}

int simulate(const ScenarioConfig& cfg, const Options& o, std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ev = evaluate_point(cfg.epidemic, cfg.curve, cfg.grid(), scenarios_for(cfg.scenario));
    const fs::path dir = cfg.out_dir;
    const bool want_myopic = cfg.scenario == ScenarioSelector::myopic || cfg.scenario == ScenarioSelector::all;
    const bool want_rational = cfg.scenario == ScenarioSelector::rational || cfg.scenario == ScenarioSelector::all;

    std::vector<ManifestEntry> manifest;
    auto emit = [&](const char* name, const std::optional<MarketTrajectory>& run) {
        if (!run) return;
        for (auto f : cfg.formats) manifest.push_back(write_timeseries(*run, f, dir / (std::string(name) + extension(f))));
        manifest.push_back(write_plot_data(*run, dir / (std::string(name) + ".dat")));
    };
    if (want_myopic) emit("myopic", ev.myopic);
    if (want_rational) {
        emit("rational", ev.rational);
        if (!ev.rational && !o.quiet) err << "sirmarket: no boom at these parameters, rational run skipped\n";
    }
    emit("depression", ev.depression);

    manifest.push_back(write_timeline_json(ev.timeline, ev.report, dir / "timeline.json"));
    if (ev.myopic && ev.depression_timeline) {
        manifest.push_back(write_timeline_json(*ev.depression_timeline, only_prefixed(ev.report, "depression_"),
                                               dir / "timeline_depression.json"));
    }

    RunReport report{cfg, ev.timeline, ev.report, manifest, std::string(engine_version()), seconds_since(t0)};
    write_run_report(report, dir / "report.json");
    if (!o.quiet) {
        err << "sirmarket: simulate " << to_string(cfg.scenario) << " dt=" << ev.grid.dt() << " wrote "
            << manifest.size() << " files to " << dir.string() << '\n';
    }
    return exit_ok;
}

int sweep(const ScenarioConfig& cfg, const Options& o, std::ostream& err) {
    const SweepSpec spec = cfg.sweep.empty() ? default_sweep() : cfg.sweep;
    const auto rows = parameter_sweep(cfg.epidemic, cfg.curve, cfg.grid(), spec, scenarios_for(cfg.scenario),
                                      o.workers);
    const fs::path dir = cfg.out_dir;
    write_sweep_table(rows, dir / "sweep.csv");
    write_sweep_summary(rows, dir / "sweep_summary.json");
    for (const auto& r : rows) {
        if (r.status == PointStatus::error) err << "sirmarket: sweep point " << r.index << ": " << r.error << '\n';
    }
    if (!o.quiet) {
        const auto s = summarize(rows);
        err << "sirmarket: sweep " << s.points << " points, " << s.ok << " ok, " << s.no_boom << " no boom, "
            << s.errors << " errors -> " << dir.string() << '\n';
    }
    return exit_ok;
}

int verify(const ScenarioConfig& cfg, const Options& o, std::ostream& out, std::ostream& err) {
    const auto t0 = std::chrono::steady_clock::now();
    AcceptanceSuite suite(o.workers);
    bool all = true;
    std::string lines;
    for (int id = 1; id <= AcceptanceSuite::count; ++id) {
        const auto r = suite.run(id);
        all = all && r.pass;
        const auto line = format_result(r);
        out << line << '\n' << std::flush;
        lines += line + '\n';
    }

    const fs::path dir = cfg.out_dir;
    auto artifacts = write_verify_artifacts(cfg, dir, o.workers);
    {
        const auto path = dir / "acceptance.txt";
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        f << lines;
        if (!f) throw Error(ErrorCode::io_failure, "write failed for " + path.string());
        artifacts.manifest.push_back({path.string(), "acceptance-text", AcceptanceSuite::count});
    }
    RunReport report{cfg, artifacts.timeline, artifacts.report, artifacts.manifest, std::string(engine_version()),
                     seconds_since(t0)};
    write_run_report(report, dir / "report.json");
    if (!o.quiet) {
        err << "sirmarket: verify " << (all ? "passed" : "FAILED") << " in " << report.wall_seconds << " s, "
            << artifacts.manifest.size() << " files in " << dir.string() << '\n';
    }
    return all ? exit_ok : exit_failed;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Epidemic-driven asset market: simulate, sweep and verify", "sirmarket"};
    app.set_version_flag("--version", std::string(engine_version()));
    app.require_subcommand(1);
    Options o;
    auto* sim = app.add_subcommand("simulate", "run one scenario and write trajectories, timeline and report");
    auto* swp = app.add_subcommand("sweep", "comparative statics over a parameter grid");
    auto* ver = app.add_subcommand("verify", "run the acceptance suite on the default parameters");
    for (auto* sub : {sim, swp, ver}) add_common(sub, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        const auto cfg = resolve(o);
        if (sim->parsed()) return simulate(cfg, o, err);
        if (swp->parsed()) return sweep(cfg, o, err);
        return verify(cfg, o, out, err);
    } catch (const Error& e) {
        err << "sirmarket: " << to_string(e.code()) << ": " << e.what() << '\n';
        const bool usage = is_usage_error(e.code()) || e.code() == ErrorCode::io_failure;
        return usage ? exit_usage : exit_numerical;
    } catch (const std::exception& e) {
        err << "sirmarket: " << e.what() << '\n';
        return exit_numerical;
    }
}

}  // namespace sirmarket
