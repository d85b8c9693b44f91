#include "sirmarket/acceptance.hpp"

#include <quadmath.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <utility>

namespace sirmarket {

namespace fs = std::filesystem;

namespace {

const Grid& default_grid() {
    static const Grid g = Grid::make(0.0, 300.0, 1e-2);
    return g;
}

std::string num(const char* label, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s=%.6g", label, v);
    return buf;
}

std::string join(std::initializer_list<std::string> parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += ' ';
        out += p;
    }
    return out;
}

CriterionResult result(int id, const char* title, bool pass, std::string detail) {
    return {id, title, pass, std::move(detail)};
}

inline double log_of(double x) { return std::log(x); }
inline __float128 log_of(__float128 x) { return logq(x); }

template <class Real>
Real magnitude(Real x) {
    return x < Real(0) ? -x : x;
}

// Max drift of I and R from their closed forms in S, computed entirely in Real.
template <class Real>
std::pair<double, double> first_integral_drift(const EpidemicParams& p, const Grid& grid) {
    const auto nodes = integrate_sir<Real>(p, grid);
    const Real c = Real(p.gamma) / Real(p.beta);
    const Real ln_n1 = log_of(Real(p.n1));
    const Real c_i = Real(p.n1) + Real(p.n2) - c * ln_n1;
    const Real c_r = Real(p.n3) + c * ln_n1;
    Real di = 0, dr = 0;
    for (const auto& y : nodes) {
        const Real ln_s = log_of(y[0]);
        di = std::max(di, magnitude(y[1] - (-y[0] + c * ln_s + c_i)));
        dr = std::max(dr, magnitude(y[2] - (-c * ln_s + c_r)));
    }
    return {static_cast<double>(di), static_cast<double>(dr)};
}

// R once I has died out, restarting the integration from the last state.
double long_horizon_recovered(EpidemicParams p) {
    const Grid chunk = Grid::make(0.0, 200.0, 1e-2);
    for (int k = 0; k < 500; ++k) {
        const auto y = integrate_sir<double>(p, chunk).back();
        p.n1 = y[0];
        p.n2 = y[1];
        p.n3 = y[2];
        if (y[1] < 1e-10) return y[2];
    }
    throw Error(ErrorCode::convergence_error, "infection did not die out within 1e5 time units");
}

std::size_t strict_interior_maxima(const std::vector<double>& v) {
    std::size_t n = 0;
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        if (v[k] > v[k - 1] && v[k] >= v[k + 1]) ++n;
    }
    return n;
}

bool same_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    return std::equal(std::istreambuf_iterator<char>(fa), std::istreambuf_iterator<char>(),
                      std::istreambuf_iterator<char>(fb), std::istreambuf_iterator<char>());
}

std::string file_name(const std::string& path) { return fs::path(path).filename().string(); }

}  // namespace

VerifyArtifacts write_verify_artifacts(const ScenarioConfig& config, const fs::path& dir, unsigned workers) {
    const Grid grid = config.grid();
    const auto ev = evaluate_point(config.epidemic, config.curve, grid, ScenarioSet{true, true, true});
    std::vector<ManifestEntry> manifest;
    const std::pair<const char*, const std::optional<MarketTrajectory>*> runs[] = {
        {"myopic", &ev.myopic}, {"rational", &ev.rational}, {"depression", &ev.depression}};
    for (const auto& [name, run] : runs) {
        if (!*run) continue;
        for (auto f : config.formats) {
            const auto ext = f == OutputFormat::csv ? ".csv" : ".json";
            manifest.push_back(write_timeseries(**run, f, dir / (std::string(name) + ext)));
        }
        manifest.push_back(write_plot_data(**run, dir / (std::string(name) + ".dat")));
    }
    manifest.push_back(write_timeline_json(ev.timeline, ev.report, dir / "timeline.json"));

    const SweepSpec spec = config.sweep.empty() ? default_sweep() : config.sweep;
    const auto rows = parameter_sweep(config.epidemic, config.curve, grid, spec, ScenarioSet{true, true, true}, workers);
    manifest.push_back(write_sweep_table(rows, dir / "sweep.csv"));
    manifest.push_back(write_sweep_summary(rows, dir / "sweep_summary.json"));
    return {std::move(manifest), ev.timeline, ev.report};
}

AcceptanceSuite::AcceptanceSuite(unsigned workers, fs::path scratch)
    : workers_(std::max(1u, workers)), scratch_(std::move(scratch)) {}

const PointEvaluation& AcceptanceSuite::defaults() {
    if (!defaults_) defaults_ = evaluate_point(EpidemicParams{}, SupplyCurve{}, default_grid(), ScenarioSet{});
    return *defaults_;
}

const std::vector<SweepResult>& AcceptanceSuite::sweep() {
    if (!sweep_) {
        sweep_ = parameter_sweep(EpidemicParams{}, SupplyCurve{}, default_grid(), default_sweep(), ScenarioSet{},
                                 workers_);
    }
    return *sweep_;
}

CriterionResult AcceptanceSuite::run(int id) {
    try {
        switch (id) {
            case 1: return conservation();
            case 2: return first_integrals();
            case 3: return final_size();
            case 4: return infection_peak_location();
            case 5: return lead_lag();
            case 6: return kernel_oracle();
            case 7: return plateau_closure();
            case 8: return faster_rise();
            case 9: return lower_peak();
            case 10: return ordering_chain();
            case 11: return depression_mirror();
            case 12: return event_convergence();
            case 13: return determinism();
            default: break;
        }
    } catch (const Error& e) {
        return {id, "error", false, std::string(to_string(e.code())) + ": " + e.what()};
    }
    throw Error(ErrorCode::invalid_parameter, "no acceptance criterion " + std::to_string(id));
}

std::vector<CriterionResult> AcceptanceSuite::run_all() {
    std::vector<CriterionResult> out;
    for (int id = 1; id <= count; ++id) out.push_back(run(id));
    return out;
}

CriterionResult AcceptanceSuite::conservation() {
    const EpidemicParams p;
    const double n = p.total();
    double worst = 0;
    for (const auto& s : simulate_epidemic(p, default_grid()).nodes) worst = std::max(worst, std::abs(s.total() - n));
    const auto& ev = defaults();
    for (const auto* run : {&*ev.myopic, &*ev.rational}) {
        for (const auto& node : run->nodes) worst = std::max(worst, std::abs(node.state.epidemic.total() - n));
    }
    return result(1, "conservation", worst <= 1e-8 * n, join({num("max|S+I+R-N|", worst), num("bound", 1e-8 * n)}));
}

CriterionResult AcceptanceSuite::first_integrals() {
    const EpidemicParams p;
    const double n = p.total();
    const Grid g = Grid::make(0.0, 300.0, 1e-3);
    const auto [di, dr] = first_integral_drift<double>(p, g);
    // Halving dt is judged in binary128: in double both drifts sit at roundoff already.
    const auto [qi1, qr1] = first_integral_drift<__float128>(p, g);
    const auto [qi2, qr2] = first_integral_drift<__float128>(p, g.refined());
    const double ratio_i = qi1 / qi2;
    const double ratio_r = qr1 / qr2;
    const bool ok = di <= 1e-6 * n && dr <= 1e-6 * n && ratio_i >= 8 && ratio_r >= 8;
    return result(2, "first integrals", ok,
                  join({num("drift_I", di), num("drift_R", dr), num("halving_ratio_I", ratio_i),
                        num("halving_ratio_R", ratio_r)}));
}

CriterionResult AcceptanceSuite::final_size() {
    double worst = 0;
    std::size_t cases = 0;
    for (double beta : {2.5e-4, 5e-4, 1e-3}) {
        for (double gamma : {0.05, 0.1, 0.2}) {
            EpidemicParams p;
            p.beta = beta;
            p.gamma = gamma;
            const double r_inf = steady_state_recovered(p);
            const double r_ode = long_horizon_recovered(p);
            worst = std::max(worst, std::abs(r_inf - r_ode) / r_ode);
            ++cases;
        }
    }
    return result(3, "final size", cases == 9 && worst <= 1e-5,
                  join({num("cases", static_cast<double>(cases)), num("max_rel_err", worst)}));
}

CriterionResult AcceptanceSuite::infection_peak_location() {
    const EpidemicParams p;
    const auto traj = simulate_epidemic(p, default_grid());
    const auto peak = infection_peak(p, traj);
    const double c = p.threshold();
    const double off = std::abs(peak.s_star - c);
    const auto maxima = strict_interior_maxima(traj.infected());

    EpidemicParams sub = p;
    sub.gamma = 0.6;  // gamma/beta = 1200 > n1
    const bool no_peak = !infection_peak(sub, simulate_epidemic(sub, default_grid())).exists;

    const bool ok = peak.exists && off <= 1e-4 * c && maxima == 1 && no_peak;
    return result(4, "infection peak at S=gamma/beta", ok,
                  join({num("t_I*", peak.t_star), num("|S*-c|/c", off / c), num("I_maxima", static_cast<double>(maxima)),
                        std::string("subcritical_no_peak=") + (no_peak ? "yes" : "no")}));
}

CriterionResult AcceptanceSuite::lead_lag() {
    const auto& rows = sweep();
    std::size_t booms = 0, failures = 0;
    for (const auto& r : rows) {
        if (r.status == PointStatus::error) ++failures;
        if (r.status != PointStatus::ok) continue;
        ++booms;
        const auto* unimodal = r.report.find("prop1_unimodal");
        if (!(r.timeline.t_p_star_m < r.timeline.t_i_star) || !unimodal || unimodal->verdict != Verdict::pass) {
            ++failures;
        }
    }
    const auto& m = *defaults().myopic;
    const double p_end = m.nodes.back().state.p;
    const auto peaks = count_interior_extrema(m, Extremum::max);
    const bool ok = rows.size() >= 9 && booms > 0 && failures == 0 && std::abs(p_end - m.curve.p0) <= 0.01 * m.curve.p0 &&
                    peaks == 1;
    return result(5, "price peak leads infection peak", ok,
                  join({num("sweep_points", static_cast<double>(rows.size())), num("booms", static_cast<double>(booms)),
                        num("failures", static_cast<double>(failures)), num("P(t_end)", p_end),
                        num("price_maxima", static_cast<double>(peaks))}));
}

CriterionResult AcceptanceSuite::kernel_oracle() {
    const EpidemicParams p;
    auto errors = [&](double dt) {
        const auto traj = simulate_myopic(p, SupplyCurve{}, Grid::make(0.0, 300.0, dt));
        const auto q = cohort_holdings_series(traj, p);
        double rel = std::abs(q[0] - traj.nodes[0].state.x);
        double abs_err = rel;
        for (std::size_t k = 1; k < q.size(); ++k) {
            const double x = traj.nodes[k].state.x;
            const double e = std::abs(q[k] - x);
            abs_err = std::max(abs_err, e);
            rel = std::max(rel, e / std::abs(x));
        }
        return std::pair{rel, abs_err};
    };
    const auto [rel1, abs1] = errors(1e-2);
    const auto [rel2, abs2] = errors(5e-3);
    const bool ok = rel1 <= 1e-4 && abs1 / abs2 >= 2;
    return result(6, "cohort quadrature matches state", ok,
                  join({num("max_rel_err", rel1), num("max_err_dt", abs1), num("max_err_dt/2", abs2),
                        num("ratio", abs1 / abs2)}));
}

CriterionResult AcceptanceSuite::plateau_closure() {
    const auto& ev = defaults();
    const auto& sol = *ev.plateau;
    const EpidemicParams p;
    const double held = excess_supply(sol.p_star, SupplyCurve{});
    double dev = 0, clearing = 0;
    std::size_t nodes = 0;
    for (const auto& n : ev.rational->nodes) {
        if (n.t < sol.t1 || n.t > sol.t2) continue;
        ++nodes;
        dev = std::max(dev, std::abs(n.state.p - sol.p_star) / sol.p_star);
        // holdings must still clear at P*
        clearing = std::max(clearing, std::abs(n.z + n.h - held) / held);
    }
    const bool ok = sol.residual_absorption <= 1e-4 * held && std::abs(sol.residual_flow) <= 1e-4 * p.gamma * held &&
                    nodes > 0 && dev <= 1e-6 && clearing <= 1e-6;
    return result(7, "plateau closure", ok,
                  join({num("h(t2)/phi", sol.residual_absorption / held),
                        num("|flow(t2)|/(gamma*phi)", std::abs(sol.residual_flow) / (p.gamma * held)),
                        num("plateau_nodes", static_cast<double>(nodes)), num("max_rel_dev", dev),
                        num("max_clearing_err", clearing)}));
}

CriterionResult AcceptanceSuite::faster_rise() {
    const auto& ev = defaults();
    const auto& m = ev.myopic->nodes;
    const auto& r = ev.rational->nodes;
    const double t1 = ev.plateau->t1;
    const double dt = ev.grid.dt();
    bool weak = true;
    double strict_gap = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < m.size() && r[k].t <= t1; ++k) {
        const double gap = r[k].state.p - m[k].state.p;
        if (gap < 0) weak = false;
        if (r[k].t > 10 * dt) strict_gap = std::min(strict_gap, gap);
    }
    return result(8, "rational price rises faster", weak && strict_gap > 0,
                  join({num("t1", t1), num("min_gap_after_10dt", strict_gap)}));
}

CriterionResult AcceptanceSuite::lower_peak() {
    const auto& tl = defaults().timeline;
    bool ok = tl.p_star_re && *tl.p_star_re < tl.p_star_m;
    std::size_t checked = 0;
    for (const auto& r : sweep()) {
        if (r.status != PointStatus::ok) continue;
        ++checked;
        ok = ok && r.timeline.p_star_re && *r.timeline.p_star_re < r.timeline.p_star_m;
    }
    return result(9, "rational peak is lower", ok && checked > 0,
                  join({num("P*_RE", tl.p_star_re.value_or(NAN)), num("P*_M", tl.p_star_m),
                        num("sweep_points", static_cast<double>(checked))}));
}

CriterionResult AcceptanceSuite::ordering_chain() {
    double min_gap_over_dt = std::numeric_limits<double>::infinity();
    bool ok = true;
    auto check = [&](const EventTimeline& tl, double dt) {
        if (!tl.t1 || !tl.t2) {
            ok = false;
            return;
        }
        const double gap = std::min({tl.t_p_star_m - *tl.t1, *tl.t2 - tl.t_p_star_m, tl.t_i_star - *tl.t2});
        min_gap_over_dt = std::min(min_gap_over_dt, gap / dt);
        ok = ok && gap > dt;
    };
    const auto& ev = defaults();
    check(ev.timeline, ev.grid.dt());
    for (const auto& r : sweep()) {
        if (r.status != PointStatus::ok) continue;
        check(r.timeline, r.dt_used);
    }
    const auto& tl = ev.timeline;
    return result(10, "t1 < t_P* < t2 < t_I*", ok,
                  join({num("t1", tl.t1.value_or(NAN)), num("t_P*", tl.t_p_star_m), num("t2", tl.t2.value_or(NAN)),
                        num("t_I*", tl.t_i_star), num("min_gap/dt", min_gap_over_dt)}));
}

CriterionResult AcceptanceSuite::depression_mirror() {
    const EpidemicParams p;
    SupplyCurve curve;
    curve.kappa = 100;
    const auto traj = simulate_depression(p, curve, default_grid());
    const auto peak = infection_peak(p, traj.times(), traj.susceptible(), traj.infected());
    const auto trough = refine_peak(traj.times(), traj.prices(), Extremum::min);
    const double p_end = traj.nodes.back().state.p;
    const auto minima = count_interior_extrema(traj, Extremum::min);
    const bool ok = peak.exists && strictly_before(trough.t, peak.t_star, default_grid().dt()) == Verdict::pass &&
                    std::abs(p_end - curve.p0) <= 0.01 * curve.p0 && minima == 1;
    return result(11, "depression mirror", ok,
                  join({num("t_trough", trough.t), num("P_min", trough.value), num("t_I*", peak.t_star),
                        num("P(t_end)", p_end), num("price_minima", static_cast<double>(minima))}));
}

CriterionResult AcceptanceSuite::event_convergence() {
    const EpidemicParams p;
    const SupplyCurve curve;
    double tp[3], t1[3];
    const double dts[3] = {2e-2, 1e-2, 5e-3};
    for (int k = 0; k < 3; ++k) {
        const Grid g = Grid::make(0.0, 300.0, dts[k]);
        const auto m = simulate_myopic(p, curve, g);
        tp[k] = refine_peak(m.times(), m.prices(), Extremum::max).t;
        t1[k] = solve_plateau(p, curve, g).t1;
    }
    const double ratio_p = std::abs(tp[0] - tp[1]) / std::abs(tp[1] - tp[2]);
    const double ratio_1 = std::abs(t1[0] - t1[1]) / std::abs(t1[1] - t1[2]);
    return result(12, "event times converge", ratio_p >= 2 && ratio_1 >= 2,
                  join({num("dtP_a", std::abs(tp[0] - tp[1])), num("dtP_b", std::abs(tp[1] - tp[2])),
                        num("ratio_tP", ratio_p), num("dt1_a", std::abs(t1[0] - t1[1])),
                        num("dt1_b", std::abs(t1[1] - t1[2])), num("ratio_t1", ratio_1)}));
}

CriterionResult AcceptanceSuite::determinism() {
    fs::path root = scratch_;
    if (root.empty()) root = fs::temp_directory_path() / ("sirmarket-determinism-" + std::to_string(::getpid()));
    fs::remove_all(root);
    ScenarioConfig config;
    const auto a = write_verify_artifacts(config, root / "a", workers_).manifest;
    const auto b = write_verify_artifacts(config, root / "b", workers_).manifest;
    std::size_t differing = a.size() == b.size() ? 0 : 1;
    for (const auto& entry : a) {
        const auto name = file_name(entry.path);
        if (!same_bytes(root / "a" / name, root / "b" / name)) ++differing;
    }

    const Grid& g = default_grid();
    const auto serial = parameter_sweep(EpidemicParams{}, SupplyCurve{}, g, default_sweep(), ScenarioSet{true, true, true}, 1);
    const auto parallel = parameter_sweep(EpidemicParams{}, SupplyCurve{}, g, default_sweep(),
                                          ScenarioSet{true, true, true}, std::max(2u, workers_));
    write_sweep_table(serial, root / "sweep_serial.csv");
    write_sweep_table(parallel, root / "sweep_parallel.csv");
    const bool sweep_same = same_bytes(root / "sweep_serial.csv", root / "sweep_parallel.csv");
    fs::remove_all(root);

    return result(13, "determinism", differing == 0 && sweep_same && !a.empty(),
                  join({num("artifacts", static_cast<double>(a.size())),
                        num("differing", static_cast<double>(differing)),
                        std::string("sweep_workers_invariant=") + (sweep_same ? "yes" : "no")}));
}

std::string format_result(const CriterionResult& r) {
    char head[64];
    std::snprintf(head, sizeof head, "%s criterion %2d ", r.pass ? "PASS" : "FAIL", r.id);
    return head + r.title + ": " + r.detail;
}

}  // namespace sirmarket
