#include "sirmarket/cli_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#ifndef SIRMARKET_VERSION
#define SIRMARKET_VERSION "0.0.0"
#endif

namespace sirmarket {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string_view engine_version() noexcept { return SIRMARKET_VERSION; }

std::string_view to_string(ScenarioSelector s) noexcept {
    switch (s) {
        case ScenarioSelector::myopic: return "myopic";
        case ScenarioSelector::depression: return "depression";
        case ScenarioSelector::rational: return "rational";
        case ScenarioSelector::all: return "all";
    }
    return "?";
}

std::string_view to_string(OutputFormat f) noexcept { return f == OutputFormat::csv ? "csv" : "json"; }

ScenarioSelector parse_scenario(std::string_view name) {
    for (auto s : {ScenarioSelector::myopic, ScenarioSelector::depression, ScenarioSelector::rational,
                   ScenarioSelector::all}) {
        if (name == to_string(s)) return s;
    }
    throw Error(ErrorCode::invalid_parameter,
                "scenario must be one of myopic|depression|rational|all (got '" +
                    std::string(name) + "')");
}

OutputFormat parse_format(std::string_view name) {
    if (name == "csv") return OutputFormat::csv;
    if (name == "json") return OutputFormat::json;
    throw Error(ErrorCode::invalid_parameter,
                "format must be csv or json (got '" + std::string(name) + "')");
}

ScenarioSet scenarios_for(ScenarioSelector s) noexcept {
    switch (s) {
        case ScenarioSelector::myopic: return {true, false, false};
        case ScenarioSelector::depression: return {false, true, false};
        case ScenarioSelector::rational: return {true, false, true};
        case ScenarioSelector::all: return {true, true, true};
    }
    return {};
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& bound, double value) {
    std::ostringstream msg;
    msg << field << " must be " << bound << " (got " << value << ")";
    throw Error(ErrorCode::invalid_parameter, msg.str());
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct Location {
    std::size_t line = 0;
    std::size_t column = 0;

    std::string describe() const {
        if (line == 0) return "";
        return " at line " + std::to_string(line) + ", column " + std::to_string(column);
    }
};

double parse_number(std::string_view text, std::string_view key, const Location& where) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw Error(ErrorCode::config_syntax, "syntax error" + where.describe() + ": value of '" +
                                                  std::string(key) + "' is not a number: '" +
                                                  std::string(text) + "'");
    }
    return v;
}

std::vector<double> parse_list(std::string_view text, std::string_view key, const Location& where) {
    std::vector<double> out;
    text = trim(text);
    if (text.empty()) return out;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto piece = text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        out.push_back(parse_number(piece, key, where));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

void assign(ScenarioConfig& cfg, std::string_view key, std::string_view value, const Location& where) {
    auto number = [&] { return parse_number(value, key, where); };
    if (key == "beta") cfg.epidemic.beta = number();
    else if (key == "gamma") cfg.epidemic.gamma = number();
    else if (key == "n1") cfg.epidemic.n1 = number();
    else if (key == "n2") cfg.epidemic.n2 = number();
    else if (key == "n3") cfg.epidemic.n3 = number();
    else if (key == "endowment") cfg.epidemic.endowment = number();
    else if (key == "p0") cfg.curve.p0 = number();
    else if (key == "kappa") cfg.curve.kappa = number();
    else if (key == "t_end") cfg.t_end = number();
    else if (key == "dt") cfg.dt = number();
    else if (key == "scenario") cfg.scenario = parse_scenario(trim(value));
    else if (key == "out_dir") cfg.out_dir = std::string(trim(value));
    else if (key == "format") {
        cfg.formats.clear();
        std::string_view rest = trim(value);
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            cfg.formats.push_back(parse_format(trim(rest.substr(0, comma))));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
    } else if (key == "sweep.beta") cfg.sweep.beta = parse_list(value, key, where);
    else if (key == "sweep.gamma") cfg.sweep.gamma = parse_list(value, key, where);
    else if (key == "sweep.n1") cfg.sweep.n1 = parse_list(value, key, where);
    else if (key == "sweep.kappa") cfg.sweep.kappa = parse_list(value, key, where);
    else {
        throw Error(ErrorCode::unknown_key, "unknown key '" + std::string(key) + "'" + where.describe());
    }
}

void parse_key_values(std::string_view text, ScenarioConfig& cfg) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        ++line_no;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        const auto first = line.find_first_not_of(" \t");
        if (eq == std::string_view::npos) {
            throw Error(ErrorCode::config_syntax, "syntax error at line " + std::to_string(line_no) + ", column " +
                                                      std::to_string(first + 1) + ": expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) {
            throw Error(ErrorCode::config_syntax, "syntax error at line " + std::to_string(line_no) + ", column " +
                                                      std::to_string(eq + 1) + ": missing key before '='");
        }
        const auto value_col = line.find_first_not_of(" \t", eq + 1);
        const Location where{line_no, (value_col == std::string_view::npos ? eq + 1 : value_col) + 1};
        assign(cfg, key, line.substr(eq + 1), where);
    }
}

std::string json_scalar_text(const nlohmann::json& v, const std::string& key) {
    if (v.is_number()) return format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) {
        std::string out;
        for (const auto& item : v) {
            if (!out.empty()) out += ',';
            out += json_scalar_text(item, key);
        }
        return out;
    }
    throw Error(ErrorCode::config_syntax, "syntax error: value of '" + key + "' must be a number, string or list");
}

void parse_json_object(std::string_view text, ScenarioConfig& cfg) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // Translate the byte offset into line/column.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error(ErrorCode::config_syntax,
                    "syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw Error(ErrorCode::config_syntax, "syntax error: JSON configuration must be a single object");
    }
    for (const auto& [key, value] : doc.items()) {
        if (key == "sweep" && value.is_object()) {
            for (const auto& [param, list] : value.items()) {
                const std::string full = "sweep." + param;
                assign(cfg, full, json_scalar_text(list, full), {});
            }
            continue;
        }
        assign(cfg, key, json_scalar_text(value, key), {});
    }
}

}  // namespace

void ScenarioConfig::validate() const {
    epidemic.validate();
    curve.validate();
    if (!(std::isfinite(t_end) && t_end > 0)) invalid("t_end", "> 0", t_end);
    if (!(std::isfinite(dt) && dt > 0)) invalid("dt", "> 0", dt);
    if (dt > t_end) invalid("dt", "<= t_end", dt);
    (void)grid();
    if (out_dir.empty()) throw Error(ErrorCode::invalid_parameter, "out_dir must not be empty");
    if (formats.empty()) throw Error(ErrorCode::invalid_parameter, "format must not be empty");
    for (double v : sweep.beta) {
        if (!(std::isfinite(v) && v >= 0)) invalid("sweep.beta", ">= 0", v);
    }
    for (double v : sweep.gamma) {
        if (!(std::isfinite(v) && v > 0)) invalid("sweep.gamma", "> 0", v);
    }
    for (double v : sweep.n1) {
        if (!(std::isfinite(v) && v > 0)) invalid("sweep.n1", "> 0", v);
    }
    for (double v : sweep.kappa) {
        if (!(std::isfinite(v) && v > 0)) invalid("sweep.kappa", "> 0", v);
    }
}

ScenarioConfig parse_config(std::string_view text) {
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    ScenarioConfig cfg;
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string_view::npos && text[first] == '{') {
        parse_json_object(text, cfg);
    } else {
        parse_key_values(text, cfg);
    }
    cfg.validate();
    return cfg;
}

std::string serialize_config(const ScenarioConfig& cfg) {
    std::ostringstream os;
    auto line = [&os](std::string_view key, const std::string& value) { os << key << " = " << value << '\n'; };
    auto list = [](const std::vector<double>& values) {
        std::string out;
        for (double v : values) {
            if (!out.empty()) out += ',';
            out += format_double(v);
        }
        return out;
    };
    line("beta", format_double(cfg.epidemic.beta));
    line("gamma", format_double(cfg.epidemic.gamma));
    line("n1", format_double(cfg.epidemic.n1));
    line("n2", format_double(cfg.epidemic.n2));
    line("n3", format_double(cfg.epidemic.n3));
    line("endowment", format_double(cfg.epidemic.endowment));
    line("p0", format_double(cfg.curve.p0));
    line("kappa", format_double(cfg.curve.kappa));
    line("t_end", format_double(cfg.t_end));
    line("dt", format_double(cfg.dt));
    line("scenario", std::string(to_string(cfg.scenario)));
    line("out_dir", cfg.out_dir);
    std::string formats;
    for (auto f : cfg.formats) {
        if (!formats.empty()) formats += ',';
        formats += to_string(f);
    }
    line("format", formats);
    if (!cfg.sweep.beta.empty()) line("sweep.beta", list(cfg.sweep.beta));
    if (!cfg.sweep.gamma.empty()) line("sweep.gamma", list(cfg.sweep.gamma));
    if (!cfg.sweep.n1.empty()) line("sweep.n1", list(cfg.sweep.n1));
    if (!cfg.sweep.kappa.empty()) line("sweep.kappa", list(cfg.sweep.kappa));
    return os.str();
}

ScenarioConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_failure, "cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

namespace {

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_failure, "cannot open " + path.string() + " for writing");
    return out;
}

void finish(std::ofstream& out, const fs::path& path) {
    out.flush();
    if (!out) throw Error(ErrorCode::io_failure, "write failed for " + path.string());
}

ordered_json optional_number(const std::optional<double>& v) {
    return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json optional_pass(const std::optional<Verdict>& v) {
    return v ? ordered_json(*v == Verdict::pass) : ordered_json(nullptr);
}

ordered_json optional_verdict(const std::optional<Verdict>& v) {
    return v ? ordered_json(std::string(to_string(*v))) : ordered_json(nullptr);
}

ordered_json timeline_json(const EventTimeline& tl, const PropositionReport& report) {
    ordered_json j;
    j["scenario"] = std::string(to_string(tl.scenario));
    j["boom"] = tl.boom;
    j["resolution"] = tl.resolution;
    j["t_i_star"] = tl.boom ? ordered_json(tl.t_i_star) : ordered_json(nullptr);
    j["i_star"] = tl.boom ? ordered_json(tl.i_star) : ordered_json(nullptr);
    j["t_p_star_m"] = tl.boom ? ordered_json(tl.t_p_star_m) : ordered_json(nullptr);
    j["p_star_m"] = tl.boom ? ordered_json(tl.p_star_m) : ordered_json(nullptr);
    j["t1"] = optional_number(tl.t1);
    j["t2"] = optional_number(tl.t2);
    j["p_star_re"] = optional_number(tl.p_star_re);
    j["ordering_ok"] = {{"t1_lt_tp", optional_pass(tl.ordering.t1_before_tp)},
                        {"tp_lt_t2", optional_pass(tl.ordering.tp_before_t2)},
                        {"t2_lt_ti", optional_pass(tl.ordering.t2_before_ti)},
                        {"tp_lt_ti", optional_pass(tl.ordering.tp_before_ti)}};
    j["ordering"] = {{"t1_lt_tp", optional_verdict(tl.ordering.t1_before_tp)},
                     {"tp_lt_t2", optional_verdict(tl.ordering.tp_before_t2)},
                     {"t2_lt_ti", optional_verdict(tl.ordering.t2_before_ti)},
                     {"tp_lt_ti", optional_verdict(tl.ordering.tp_before_ti)}};
    ordered_json verdicts = ordered_json::object();
    for (const auto& c : report.claims) {
        verdicts[c.name] = {{"verdict", std::string(to_string(c.verdict))}, {"margin", c.margin}, {"detail", c.detail}};
    }
    j["verdicts"] = verdicts;
    return j;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string csv_optional(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

ManifestEntry write_timeseries(const MarketTrajectory& trajectory, OutputFormat format, const fs::path& path) {
    auto out = open_output(path);
    if (format == OutputFormat::csv) {
        out << "t,S,I,R,X,P,phase\n";
        for (const auto& n : trajectory.nodes) {
            out << format_double(n.t) << ',' << format_double(n.state.epidemic.s) << ','
                << format_double(n.state.epidemic.i) << ',' << format_double(n.state.epidemic.r) << ','
                << format_double(n.state.x) << ',' << format_double(n.state.p) << ',' << to_string(n.phase) << '\n';
        }
    } else {
        ordered_json j;
        j["scenario"] = std::string(to_string(trajectory.scenario));
        if (trajectory.plateau) {
            j["plateau"] = {{"t1", trajectory.plateau->t1},
                            {"t2", trajectory.plateau->t2},
                            {"p_star", trajectory.plateau->p_star}};
        }
        ordered_json nodes = ordered_json::array();
        for (const auto& n : trajectory.nodes) {
            nodes.push_back({{"t", n.t},
                             {"S", n.state.epidemic.s},
                             {"I", n.state.epidemic.i},
                             {"R", n.state.epidemic.r},
                             {"X", n.state.x},
                             {"P", n.state.p},
                             {"phase", std::string(to_string(n.phase))}});
        }
        j["nodes"] = std::move(nodes);
        out << j.dump(1) << '\n';
    }
    finish(out, path);
    return {path.string(), format == OutputFormat::csv ? "timeseries-csv" : "timeseries-json",
            trajectory.nodes.size()};
}

std::vector<TimeseriesRow> read_timeseries_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_failure, "cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "t,S,I,R,X,P,phase") {
        throw Error(ErrorCode::config_syntax, "unexpected time-series header in " + path.string());
    }
    std::vector<TimeseriesRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string_view> cells;
        std::string_view rest = line;
        for (;;) {
            const auto comma = rest.find(',');
            cells.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos) break;
            rest = rest.substr(comma + 1);
        }
        if (cells.size() != 7) {
            throw Error(ErrorCode::config_syntax,
                        "expected 7 columns at line " + std::to_string(line_no) + " of " + path.string());
        }
        const Location where{line_no, 1};
        TimeseriesRow row;
        row.t = parse_number(cells[0], "t", where);
        row.s = parse_number(cells[1], "S", where);
        row.i = parse_number(cells[2], "I", where);
        row.r = parse_number(cells[3], "R", where);
        row.x = parse_number(cells[4], "X", where);
        row.p = parse_number(cells[5], "P", where);
        row.phase = std::string(cells[6]);
        rows.push_back(std::move(row));
    }
    return rows;
}

ManifestEntry write_plot_data(const MarketTrajectory& trajectory, const fs::path& path) {
    auto out = open_output(path);
    out << "# t P I\n";
    for (const auto& n : trajectory.nodes) {
        out << format_double(n.t) << ' ' << format_double(n.state.p) << ' ' << format_double(n.state.epidemic.i)
            << '\n';
    }
    finish(out, path);
    return {path.string(), "plot-dat", trajectory.nodes.size()};
}

ManifestEntry write_timeline_json(const EventTimeline& timeline, const PropositionReport& report,
                                  const fs::path& path) {
    auto out = open_output(path);
    out << timeline_json(timeline, report).dump(2) << '\n';
    finish(out, path);
    return {path.string(), "timeline-json", 1};
}

ManifestEntry write_sweep_table(const std::vector<SweepResult>& rows, const fs::path& path) {
    auto out = open_output(path);
    out << "index,beta,gamma,n1,kappa,status,dt,t_i_star,t_p_star_m,p_star_m,t1,t2,p_star_re,plateau_width,"
           "half_rise_m,half_rise_re,ordering,claims_passed,claims_failed,claims_inconclusive,error\n";
    for (const auto& r : rows) {
        std::size_t passed = 0, failed = 0, inconclusive = 0;
        for (const auto& c : r.report.claims) {
            if (c.verdict == Verdict::pass) ++passed;
            else if (c.verdict == Verdict::fail) ++failed;
            else ++inconclusive;
        }
        const auto& tl = r.timeline;
        const bool boom = r.status == PointStatus::ok;
        const std::string ordering = !boom ? "" : tl.ordering.all_pass() ? "pass" : tl.ordering.any_fail() ? "fail"
                                                                                                          : "inconclusive";
        out << r.index << ',' << format_double(r.params.beta) << ',' << format_double(r.params.gamma) << ','
            << format_double(r.params.n1) << ',' << format_double(r.curve.kappa) << ',' << to_string(r.status) << ','
            << format_double(r.dt_used) << ',' << (boom ? format_double(tl.t_i_star) : "") << ','
            << (boom ? format_double(tl.t_p_star_m) : "") << ',' << (boom ? format_double(tl.p_star_m) : "") << ','
            << csv_optional(tl.t1) << ',' << csv_optional(tl.t2) << ',' << csv_optional(tl.p_star_re) << ','
            << csv_optional(r.plateau_width) << ',' << csv_optional(r.half_rise_myopic) << ','
            << csv_optional(r.half_rise_rational) << ',' << ordering << ',' << passed << ',' << failed << ','
            << inconclusive << ',' << csv_quote(r.error) << '\n';
    }
    finish(out, path);
    return {path.string(), "sweep-csv", rows.size()};
}

ManifestEntry write_sweep_summary(const std::vector<SweepResult>& rows, const fs::path& path) {
    const auto s = summarize(rows);
    const auto trend = plateau_width_trend(rows);
    ordered_json j;
    j["points"] = s.points;
    j["ok"] = s.ok;
    j["no_boom"] = s.no_boom;
    j["errors"] = s.errors;
    j["claims_passed"] = s.claims_passed;
    j["claims_failed"] = s.claims_failed;
    j["claims_inconclusive"] = s.claims_inconclusive;
    ordered_json per_claim = ordered_json::object();
    for (const auto& r : rows) {
        for (const auto& c : r.report.claims) {
            auto& entry = per_claim[c.name];
            if (entry.is_null()) entry = {{"pass", 0}, {"fail", 0}, {"inconclusive", 0}};
            entry[std::string(to_string(c.verdict))] = entry[std::string(to_string(c.verdict))].get<int>() + 1;
        }
    }
    j["per_claim"] = per_claim;
    j["plateau_width_vs_gamma"] = {{"comparisons", trend.comparisons}, {"violations", trend.violations}};
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    finish(out, path);
    return {path.string(), "sweep-summary-json", 1};
}

void write_run_report(const RunReport& report, const fs::path& path) {
    ordered_json config;
    {
        std::istringstream lines(serialize_config(report.config));
        std::string line;
        while (std::getline(lines, line)) {
            const auto eq = line.find(" = ");
            config[line.substr(0, eq)] = line.substr(eq + 3);
        }
    }
    ordered_json manifest = ordered_json::array();
    for (const auto& m : report.manifest) manifest.push_back({{"path", m.path}, {"kind", m.kind}, {"rows", m.rows}});
    ordered_json j;
    j["engine_version"] = report.engine_version;
    j["config"] = config;
    j["timeline"] = timeline_json(report.timeline, report.verdicts);
    j["manifest"] = manifest;
    j["wall_seconds"] = report.wall_seconds;
    auto out = open_output(path);
    out << j.dump(2) << '\n';
    finish(out, path);
}

}  // namespace sirmarket
