#include <gtest/gtest.h>

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "sirmarket/cli_io.hpp"

using namespace sirmarket;
namespace fs = std::filesystem;

namespace {

const Grid kGrid = Grid::make(0, 300, 1e-2);

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "sirmarket-tests" /
                     (std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

ErrorCode code_of(std::string_view text) {
    try {
        parse_config(text);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error for: " << text;
    return ErrorCode::io_failure;
}

}  // namespace

TEST(ParseConfig, EmptyIsDefaults) {
    const auto cfg = parse_config("");
    EXPECT_EQ(cfg, ScenarioConfig{});
    EXPECT_EQ(cfg.epidemic.beta, 5e-4);
    EXPECT_EQ(cfg.epidemic.gamma, 0.1);
    EXPECT_EQ(cfg.epidemic.n1, 999);
    EXPECT_EQ(cfg.epidemic.n2, 1);
    EXPECT_EQ(cfg.epidemic.n3, 0);
    EXPECT_EQ(cfg.epidemic.endowment, 1);
    EXPECT_EQ(cfg.curve.p0, 1);
    EXPECT_EQ(cfg.curve.kappa, 10);
    EXPECT_EQ(cfg.t_end, 300);
    EXPECT_EQ(cfg.dt, 1e-2);
    EXPECT_EQ(parse_config("  \n# only a comment\n\n"), ScenarioConfig{});
    EXPECT_EQ(parse_config("{}"), ScenarioConfig{});
}

TEST(ParseConfig, Override) {
    const auto cfg = parse_config("beta = 1e-3");
    ScenarioConfig expected;
    expected.epidemic.beta = 1e-3;
    EXPECT_EQ(cfg, expected);
}

TEST(ParseConfig, InvariantViolationNamesField) {
    try {
        parse_config("gamma = -0.1");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::invalid_parameter);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("gamma"), std::string::npos) << msg;
        EXPECT_NE(msg.find("> 0"), std::string::npos) << msg;
    }
    EXPECT_EQ(code_of("dt = 0"), ErrorCode::invalid_parameter);
    EXPECT_EQ(code_of("dt = 0.7"), ErrorCode::invalid_parameter);  // 300 / 0.7 is not integral
    EXPECT_EQ(code_of("kappa = 0"), ErrorCode::invalid_parameter);
    EXPECT_EQ(code_of("scenario = bull"), ErrorCode::invalid_parameter);
    EXPECT_EQ(code_of("format = xml"), ErrorCode::invalid_parameter);
    EXPECT_EQ(code_of("sweep.gamma = 0.1, -2"), ErrorCode::invalid_parameter);
}

TEST(ParseConfig, UnknownKey) {
    EXPECT_EQ(code_of("beta = 1e-3\nomega = 2"), ErrorCode::unknown_key);
    EXPECT_EQ(code_of("sweep.p0 = 1,2"), ErrorCode::unknown_key);
    EXPECT_EQ(code_of(R"({"beta": 1e-3, "Beta": 2})"), ErrorCode::unknown_key);
}

TEST(ParseConfig, SyntaxErrorsCarryPosition) {
    try {
        parse_config("beta = 1e-3\n  gamma 0.2\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::config_syntax);
        EXPECT_NE(std::string(e.what()).find("line 2, column 3"), std::string::npos) << e.what();
    }
    try {
        parse_config("beta = 1e-3\nn1 =   9x9\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::config_syntax);
        EXPECT_NE(std::string(e.what()).find("line 2, column 8"), std::string::npos) << e.what();
    }
    try {
        parse_config("{\n  \"beta\": 1e-3,\n  \"gamma\": \n}");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::config_syntax);
        EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    }
    EXPECT_EQ(code_of("= 3"), ErrorCode::config_syntax);
    EXPECT_EQ(code_of("[1, 2]"), ErrorCode::config_syntax);
    EXPECT_EQ(code_of(R"({"beta": true})"), ErrorCode::config_syntax);
}

TEST(ParseConfig, JsonAndKeyValueAgree) {
    const auto kv = parse_config(
        "beta = 1e-3 # faster\n"
        "gamma=0.2\n"
        "kappa = 20\n"
        "scenario = rational\n"
        "out_dir = results/a\n"
        "format = csv,json\n"
        "t_end = 150\n"
        "dt = 5e-3\n"
        "sweep.beta = 2.5e-4, 5e-4\n"
        "sweep.kappa = 5,10,20\n");
    const auto js = parse_config(R"({
        "beta": 1e-3, "gamma": 0.2, "kappa": 20, "scenario": "rational", "out_dir": "results/a",
        "format": ["csv", "json"], "t_end": 150, "dt": 5e-3,
        "sweep": {"beta": [2.5e-4, 5e-4], "kappa": [5, 10, 20]}
    })");
    EXPECT_EQ(kv, js);
    EXPECT_EQ(kv.scenario, ScenarioSelector::rational);
    EXPECT_EQ(kv.formats.size(), 2u);
    EXPECT_EQ(kv.sweep.kappa, (std::vector<double>{5, 10, 20}));
    EXPECT_EQ(kv.out_dir, "results/a");
    // flat JSON keys work too
    EXPECT_EQ(parse_config(R"({"sweep.kappa": "5,10,20"})").sweep.kappa, kv.sweep.kappa);
}

TEST(ParseConfig, ByteOrderMarkAndCrLf) {
    const auto cfg = parse_config("\xEF\xBB\xBF" "beta = 1e-3\r\ngamma = 0.2\r\n");
    EXPECT_EQ(cfg.epidemic.beta, 1e-3);
    EXPECT_EQ(cfg.epidemic.gamma, 0.2);
}

TEST(FormatDouble, ShortestRoundTrip) {
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(999), "999");
    EXPECT_EQ(format_double(5e-4), "5e-04");
    EXPECT_EQ(format_double(0.0625), "0.0625");
    std::mt19937_64 rng(11);
    for (int k = 0; k < 20000; ++k) {
        std::uint64_t bits = rng();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        if (!std::isfinite(v)) continue;
        const auto s = format_double(v);
        EXPECT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
    }
}

TEST(SerializeConfig, RoundTrip) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const ScenarioSelector selectors[] = {ScenarioSelector::myopic, ScenarioSelector::depression,
                                          ScenarioSelector::rational, ScenarioSelector::all};
    for (int k = 0; k < 300; ++k) {
        ScenarioConfig c;
        c.epidemic.beta = 1e-5 + u(rng) * 1e-2;
        c.epidemic.gamma = 1e-3 + u(rng);
        c.epidemic.n1 = 1 + 1e4 * u(rng);
        c.epidemic.n2 = u(rng) * 10;
        c.epidemic.n3 = u(rng) * 10;
        c.epidemic.endowment = 0.1 + u(rng);
        c.curve.p0 = 0.1 + u(rng) * 5;
        c.curve.kappa = 0.5 + u(rng) * 100;
        c.t_end = 100 + static_cast<int>(u(rng) * 400);
        c.dt = 1.0 / (1 << static_cast<int>(1 + u(rng) * 8));
        c.scenario = selectors[k % 4];
        c.out_dir = "out/run" + std::to_string(k);
        c.formats = k % 3 == 0 ? std::vector{OutputFormat::json} : std::vector{OutputFormat::csv, OutputFormat::json};
        if (k % 2) c.sweep.beta = {u(rng) * 1e-3, u(rng) * 1e-3};
        if (k % 5 == 0) c.sweep.gamma = {0.05, 0.1 + u(rng)};
        if (k % 7 == 0) c.sweep.n1 = {500, 999};
        if (k % 3 == 1) c.sweep.kappa = {5, 10, 20};
        ASSERT_NO_THROW(c.validate()) << serialize_config(c);
        EXPECT_EQ(parse_config(serialize_config(c)), c) << serialize_config(c);
    }
}

TEST(LoadConfig, MissingFile) {
    try {
        load_config("/nonexistent/sirmarket.cfg");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::io_failure);
        EXPECT_NE(std::string(e.what()).find("/nonexistent/sirmarket.cfg"), std::string::npos);
    }
}

TEST(Timeseries, ThreeNodes) {
    const auto traj = simulate_myopic(EpidemicParams{}, SupplyCurve{}, Grid::make(0, 0.02, 0.01));
    const auto dir = scratch("a");
    const auto entry = write_timeseries(traj, OutputFormat::csv, dir / "m.csv");
    EXPECT_EQ(entry.rows, 3u);
    const auto lines = lines_of(dir / "m.csv");
    ASSERT_EQ(lines.size(), 4u);
    EXPECT_EQ(lines[0], "t,S,I,R,X,P,phase");
    EXPECT_EQ(lines[1], "0,999,1,0,0,1,na");
}

TEST(Timeseries, CsvRoundTripIsBitExact) {
    const auto traj = re_price_path(EpidemicParams{}, SupplyCurve{}, kGrid);
    const auto dir = scratch("b");
    write_timeseries(traj, OutputFormat::csv, dir / "r.csv");
    const auto rows = read_timeseries_csv(dir / "r.csv");
    ASSERT_EQ(rows.size(), traj.nodes.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& n = traj.nodes[k];
        ASSERT_EQ(rows[k].t, n.t);
        ASSERT_EQ(rows[k].s, n.state.epidemic.s);
        ASSERT_EQ(rows[k].i, n.state.epidemic.i);
        ASSERT_EQ(rows[k].r, n.state.epidemic.r);
        ASSERT_EQ(rows[k].x, n.state.x);
        ASSERT_EQ(rows[k].p, n.state.p);
        ASSERT_EQ(rows[k].phase, to_string(n.phase));
    }
    int transitions = 0;
    for (std::size_t k = 1; k < rows.size(); ++k) transitions += rows[k].phase != rows[k - 1].phase;
    EXPECT_EQ(transitions, 2);
    EXPECT_EQ(rows.front().phase, "pre");
    EXPECT_EQ(rows.back().phase, "post");
}

TEST(Timeseries, JsonMirror) {
    const auto traj = re_price_path(EpidemicParams{}, SupplyCurve{}, Grid::make(0, 60, 1e-2));
    const auto dir = scratch("c");
    write_timeseries(traj, OutputFormat::json, dir / "r.json");
    const auto j = nlohmann::json::parse(slurp(dir / "r.json"));
    EXPECT_EQ(j["scenario"], "rational");
    ASSERT_EQ(j["nodes"].size(), traj.nodes.size());
    const auto& n = j["nodes"][1234];
    EXPECT_EQ(n["P"].get<double>(), traj.nodes[1234].state.p);
    EXPECT_EQ(n["X"].get<double>(), traj.nodes[1234].state.x);
    EXPECT_EQ(n["phase"], std::string(to_string(traj.nodes[1234].phase)));
    EXPECT_EQ(j["plateau"]["t1"].get<double>(), traj.plateau->t1);
}

TEST(Timeseries, UnwritablePath) {
    const auto traj = simulate_myopic(EpidemicParams{}, SupplyCurve{}, Grid::make(0, 1, 0.5));
    const auto dir = scratch("d");
    std::ofstream(dir / "file") << "x";
    try {
        write_timeseries(traj, OutputFormat::csv, dir / "file" / "m.csv");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::io_failure);
        EXPECT_NE(std::string(e.what()).find("m.csv"), std::string::npos);
    }
}

TEST(PlotData, Columns) {
    const auto traj = simulate_myopic(EpidemicParams{}, SupplyCurve{}, Grid::make(0, 1, 0.25));
    const auto dir = scratch("e");
    EXPECT_EQ(write_plot_data(traj, dir / "m.dat").rows, 5u);
    const auto lines = lines_of(dir / "m.dat");
    ASSERT_EQ(lines.size(), 6u);
    EXPECT_EQ(lines[1], "0 1 1");
    std::istringstream row(lines[3]);
    double t, p, i;
    row >> t >> p >> i;
    EXPECT_EQ(t, 0.5);
    EXPECT_EQ(p, traj.nodes[2].state.p);
    EXPECT_EQ(i, traj.nodes[2].state.epidemic.i);
}

TEST(TimelineJson, Keys) {
    const auto ev = evaluate_point(EpidemicParams{}, SupplyCurve{}, kGrid, ScenarioSet{});
    const auto dir = scratch("f");
    write_timeline_json(ev.timeline, ev.report, dir / "timeline.json");
    const auto j = nlohmann::json::parse(slurp(dir / "timeline.json"));
    for (const char* key : {"t_i_star", "t_p_star_m", "p_star_m", "t1", "t2", "p_star_re", "ordering_ok", "verdicts"}) {
        EXPECT_TRUE(j.contains(key)) << key;
    }
    EXPECT_EQ(j["t1"].get<double>(), *ev.timeline.t1);
    for (const char* key : {"t1_lt_tp", "tp_lt_t2", "t2_lt_ti", "tp_lt_ti"}) EXPECT_EQ(j["ordering_ok"][key], true);
    EXPECT_EQ(j["verdicts"]["prop2_plateau"]["verdict"], "pass");

    const auto m = evaluate_point(EpidemicParams{}, SupplyCurve{}, kGrid, ScenarioSet{true, false, false});
    write_timeline_json(m.timeline, m.report, dir / "myopic.json");
    const auto jm = nlohmann::json::parse(slurp(dir / "myopic.json"));
    EXPECT_TRUE(jm["t1"].is_null());
    EXPECT_TRUE(jm["ordering_ok"]["t1_lt_tp"].is_null());
    EXPECT_EQ(jm["ordering_ok"]["tp_lt_ti"], true);
}

TEST(SweepFiles, TableAndSummary) {
    SweepSpec spec = default_sweep();
    spec.gamma = {0.1, 1.2};  // 1.2 / beta > n1 everywhere
    const auto rows = parameter_sweep(EpidemicParams{}, SupplyCurve{}, kGrid, spec, ScenarioSet{}, 4);
    const auto dir = scratch("g");
    EXPECT_EQ(write_sweep_table(rows, dir / "sweep.csv").rows, 18u);
    const auto lines = lines_of(dir / "sweep.csv");
    ASSERT_EQ(lines.size(), 19u);
    EXPECT_EQ(lines[0].substr(0, 27), "index,beta,gamma,n1,kappa,s");
    EXPECT_NE(lines[1].find(",ok,"), std::string::npos);
    EXPECT_NE(lines[4].find(",no-boom,"), std::string::npos);
    write_sweep_summary(rows, dir / "summary.json");
    const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(j["points"], 18);
    EXPECT_EQ(j["ok"], 9);
    EXPECT_EQ(j["no_boom"], 9);
    EXPECT_EQ(j["plateau_width_vs_gamma"]["comparisons"], 0);
    EXPECT_EQ(j["per_claim"]["ordering_chain"]["pass"], 9);
}

TEST(RunReport, ManifestAndEcho) {
    const auto ev = evaluate_point(EpidemicParams{}, SupplyCurve{}, kGrid, ScenarioSet{});
    const auto dir = scratch("h");
    RunReport r;
    r.config.epidemic.beta = 7e-4;
    r.timeline = ev.timeline;
    r.verdicts = ev.report;
    r.manifest.push_back(write_timeseries(*ev.myopic, OutputFormat::csv, dir / "m.csv"));
    r.engine_version = std::string(engine_version());
    r.wall_seconds = 0.5;
    write_run_report(r, dir / "report.json");
    const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
    EXPECT_EQ(j["config"]["beta"], "7e-04");
    EXPECT_EQ(j["manifest"].size(), 1u);
    EXPECT_EQ(j["manifest"][0]["rows"], 30001);
    EXPECT_EQ(j["engine_version"], std::string(engine_version()));
    EXPECT_EQ(j["wall_seconds"], 0.5);
}

TEST(Selectors, Mapping) {
    EXPECT_EQ(scenarios_for(ScenarioSelector::myopic), (ScenarioSet{true, false, false}));
    EXPECT_EQ(scenarios_for(ScenarioSelector::depression), (ScenarioSet{false, true, false}));
    EXPECT_EQ(scenarios_for(ScenarioSelector::rational), (ScenarioSet{true, false, true}));
    EXPECT_EQ(scenarios_for(ScenarioSelector::all), (ScenarioSet{true, true, true}));
    for (auto s : {ScenarioSelector::myopic, ScenarioSelector::depression, ScenarioSelector::rational,
                   ScenarioSelector::all}) {
        EXPECT_EQ(parse_scenario(to_string(s)), s);
    }
}
