#include "sirmarket/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

namespace sirmarket {

PeakEstimate refine_peak(std::span<const double> times, std::span<const double> values, Extremum mode) {
    if (times.size() != values.size() || values.size() < 3) {
        throw Error(ErrorCode::consistency_error, "refine_peak needs >= 3 paired samples");
    }
    const auto it = mode == Extremum::max ? std::max_element(values.begin(), values.end())
                                          : std::min_element(values.begin(), values.end());
    const auto k = static_cast<std::size_t>(it - values.begin());
    if (k == 0 || k + 1 == values.size()) {
        throw Error(ErrorCode::boundary_extremum, "extremum lies on the boundary of the samples");
    }
    const auto v = parabolic_vertex(values[k - 1], values[k], values[k + 1]);
    const double spacing = v.offset < 0 ? times[k] - times[k - 1] : times[k + 1] - times[k];
    return {times[k] + v.offset * spacing, v.value, k};
}

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

Verdict strictly_before(double a, double b, double resolution) noexcept {
    if (b - a > resolution) return Verdict::pass;
    if (a - b > resolution) return Verdict::fail;
    return Verdict::inconclusive;
}

namespace {

template <class F>
void for_each_check(const OrderingChecks& c, F&& f) {
    for (const auto* v : {&c.t1_before_tp, &c.tp_before_t2, &c.t2_before_ti, &c.tp_before_ti}) {
        if (v->has_value()) f(**v);
    }
}

}  // namespace

bool OrderingChecks::all_pass() const noexcept {
    bool ok = tp_before_ti.has_value();
    for_each_check(*this, [&](Verdict v) { ok = ok && v == Verdict::pass; });
    return ok;
}

bool OrderingChecks::any_fail() const noexcept {
    bool bad = false;
    for_each_check(*this, [&](Verdict v) { bad = bad || v == Verdict::fail; });
    return bad;
}

bool OrderingChecks::any_inconclusive() const noexcept {
    bool any = false;
    for_each_check(*this, [&](Verdict v) { any = any || v == Verdict::inconclusive; });
    return any;
}

EventTimeline build_timeline(const MarketTrajectory& primary, const MarketTrajectory* rational,
                             const InfectionPeak& peak) {
    if (rational && (!(rational->params == primary.params) || !(rational->grid == primary.grid) ||
                     !(rational->curve == primary.curve))) {
        throw Error(ErrorCode::consistency_error, "rational and primary runs differ in parameters or grid");
    }
    EventTimeline tl;
    tl.scenario = primary.scenario;
    tl.resolution = primary.grid.dt();
    if (!peak.exists) return tl;

    const auto times = primary.times();
    const auto prices = primary.prices();
    PeakEstimate price_peak;
    try {
        price_peak = refine_peak(times, prices,
                                 primary.scenario == Scenario::depression ? Extremum::min : Extremum::max);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::boundary_extremum) throw;
        return tl;  // flat or monotone price: no boom
    }
    tl.boom = true;
    tl.t_i_star = peak.t_star;
    tl.i_star = peak.i_star;
    tl.t_p_star_m = price_peak.t;
    tl.p_star_m = price_peak.value;
    const double dt = tl.resolution;
    tl.ordering.tp_before_ti = strictly_before(tl.t_p_star_m, tl.t_i_star, dt);

    if (rational && rational->plateau) {
        tl.t1 = rational->plateau->t1;
        tl.t2 = rational->plateau->t2;
        tl.p_star_re = rational->plateau->p_star;
        tl.ordering.t1_before_tp = strictly_before(*tl.t1, tl.t_p_star_m, dt);
        tl.ordering.tp_before_t2 = strictly_before(tl.t_p_star_m, *tl.t2, dt);
        tl.ordering.t2_before_ti = strictly_before(*tl.t2, tl.t_i_star, dt);
    }
    return tl;
}

bool PropositionReport::all_pass() const noexcept {
    return !claims.empty() &&
           std::all_of(claims.begin(), claims.end(), [](const ClaimResult& c) { return c.verdict == Verdict::pass; });
}

const ClaimResult* PropositionReport::find(std::string_view name) const noexcept {
    for (const auto& c : claims) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

std::size_t count_interior_extrema(const MarketTrajectory& trajectory, Extremum mode, double rel_band) {
    const auto& n = trajectory.nodes;
    const double p0 = trajectory.curve.p0;
    std::size_t count = 0;
    for (std::size_t k = 1; k + 1 < n.size(); ++k) {
        const double prev = n[k - 1].state.p;
        const double here = n[k].state.p;
        const double next = n[k + 1].state.p;
        if (mode == Extremum::max) {
            if (here > prev && here >= next && here > p0 * (1 + rel_band)) ++count;
        } else {
            if (here < prev && here <= next && here < p0 * (1 - rel_band)) ++count;
        }
    }
    return count;
}

std::optional<double> first_crossing_time(const MarketTrajectory& trajectory, double level) {
    const auto& n = trajectory.nodes;
    if (n.empty()) return std::nullopt;
    if (n.front().state.p >= level) return n.front().t;
    for (std::size_t k = 1; k < n.size(); ++k) {
        const double pa = n[k - 1].state.p;
        const double pb = n[k].state.p;
        if (pb >= level) {
            const double w = (level - pa) / (pb - pa);
            return n[k - 1].t + w * (n[k].t - n[k - 1].t);
        }
    }
    return std::nullopt;
}

namespace {

ClaimResult claim(std::string name, Verdict v, double margin, std::string detail) {
    return {std::move(name), v, margin, std::move(detail)};
}

Verdict pass_if(bool ok) { return ok ? Verdict::pass : Verdict::fail; }

std::string fmt(const char* label, double value) {
    std::ostringstream os;
    os.precision(10);
    os << label << "=" << value;
    return os.str();
}

void add_lead_lag_claims(PropositionReport& rep, const MarketTrajectory& primary, const EventTimeline& tl,
                         const std::string& prefix) {
    const bool depression = primary.scenario == Scenario::depression;
    const double p0 = primary.curve.p0;
    const double p_end = primary.nodes.back().state.p;
    const double deviation = std::abs(p_end - p0);
    rep.claims.push_back(claim(prefix + "long_run_price", pass_if(deviation <= 0.01 * p0), 0.01 * p0 - deviation,
                               fmt("P(t_end)", p_end)));

    const auto lead = tl.ordering.tp_before_ti.value_or(Verdict::inconclusive);
    rep.claims.push_back(claim(prefix + "lead_lag", lead, tl.t_i_star - tl.t_p_star_m,
                               fmt(depression ? "t_trough" : "t_P*", tl.t_p_star_m) + " " +
                                   fmt("t_I*", tl.t_i_star)));

    const auto extrema = count_interior_extrema(primary, depression ? Extremum::min : Extremum::max);
    rep.claims.push_back(claim(prefix + (depression ? "u_shape" : "unimodal"), pass_if(extrema == 1),
                               extrema == 1 ? 1.0 : -std::abs(static_cast<double>(extrema) - 1.0),
                               fmt("interior_extrema", static_cast<double>(extrema))));
}

}  // namespace

PropositionReport check_propositions(const MarketTrajectory& primary, const MarketTrajectory* rational,
                                     const EventTimeline& timeline) {
    PropositionReport rep;
    if (!timeline.boom) {
        rep.claims.push_back(claim("boom", Verdict::inconclusive, 0, "no infection peak or no price extremum"));
        return rep;
    }
    const bool depression = primary.scenario == Scenario::depression;
    add_lead_lag_claims(rep, primary, timeline, depression ? "depression_" : "prop1_");
    if (depression || !rational || !rational->plateau) return rep;

    const auto& plateau = *rational->plateau;
    const double dt = timeline.resolution;

    // Plateau: P pinned at P* and clearing phi(P*) = z + h on every plateau node.
    {
        const double held = excess_supply(plateau.p_star, rational->curve);
        double worst = 0;
        std::size_t count = 0;
        for (const auto& n : rational->nodes) {
            if (n.phase != Phase::plateau) continue;
            ++count;
            worst = std::max(worst, std::abs(n.state.p - plateau.p_star) / plateau.p_star);
            worst = std::max(worst, std::abs(n.z + n.h - held) / std::max(1.0, held));
        }
        const double margin = 1e-6 - worst;
        const bool ok = count > 0 && margin >= 0 && plateau.t2 > plateau.t1;
        rep.claims.push_back(claim("prop2_plateau", pass_if(ok), count > 0 ? margin : -1.0,
                                   fmt("plateau_nodes", static_cast<double>(count)) + " " +
                                       fmt("max_rel_dev", worst)));
    }

    // Faster rise: P_RE >= P_M on (0, t1], strictly once t > 10 dt.
    {
        double min_gap = std::numeric_limits<double>::infinity();
        bool weak_ok = true;
        const auto& m = primary.nodes;
        const auto& r = rational->nodes;
        for (std::size_t k = 1; k < std::min(m.size(), r.size()); ++k) {
            const double t = r[k].t;
            if (t > plateau.t1) break;
            const double gap = r[k].state.p - m[k].state.p;
            if (gap < 0) weak_ok = false;
            if (t > 10 * dt) min_gap = std::min(min_gap, gap);
        }
        const bool ok = weak_ok && min_gap > 0;
        rep.claims.push_back(claim("remark1_faster_rise", pass_if(ok), std::isfinite(min_gap) ? min_gap : 0.0,
                                   fmt("min(P_RE-P_M)", min_gap)));
    }

    rep.claims.push_back(claim("remark2_lower_peak", pass_if(timeline.p_star_m > plateau.p_star),
                               timeline.p_star_m - plateau.p_star,
                               fmt("P*_RE", plateau.p_star) + " " + fmt("P*_M", timeline.p_star_m)));

    {
        const auto& o = timeline.ordering;
        const Verdict v = o.all_pass() ? Verdict::pass : (o.any_fail() ? Verdict::fail : Verdict::inconclusive);
        const double gap = std::min({timeline.t_p_star_m - plateau.t1, plateau.t2 - timeline.t_p_star_m,
                                     timeline.t_i_star - plateau.t2});
        rep.claims.push_back(claim("ordering_chain", v, gap - dt,
                                   fmt("t1", plateau.t1) + " " + fmt("t_P*", timeline.t_p_star_m) + " " +
                                       fmt("t2", plateau.t2) + " " + fmt("t_I*", timeline.t_i_star)));
    }

    {
        const double level = 0.5 * (primary.curve.p0 + plateau.p_star);
        const auto t_re = first_crossing_time(*rational, level);
        const auto t_m = first_crossing_time(primary, level);
        const bool ok = t_re && (!t_m || *t_re < *t_m);
        const double margin = t_re && t_m ? *t_m - *t_re : (ok ? 1.0 : -1.0);
        rep.claims.push_back(claim("accelerates_boom", pass_if(ok), margin,
                                   fmt("t_half_RE", t_re.value_or(NAN)) + " " + fmt("t_half_M", t_m.value_or(NAN))));
    }

    rep.claims.push_back(claim("broad_top", strictly_before(plateau.t1, plateau.t2, dt),
                               plateau.t2 - plateau.t1 - dt, fmt("width", plateau.t2 - plateau.t1)));
    return rep;
}

PointEvaluation evaluate_point(const EpidemicParams& params, const SupplyCurve& curve, const Grid& grid,
                               const ScenarioSet& scenarios, int max_refinements) {
    Grid g = grid;
    for (int refinement = 0;; ++refinement) {
        PointEvaluation ev{params, curve, g, refinement, {}, {}, {}, {}, {}, {}, {}, {}};
        const bool need_myopic = scenarios.myopic || scenarios.rational || !scenarios.depression;
        try {
            if (need_myopic) ev.myopic = simulate_myopic(params, curve, g);
            if (scenarios.depression) ev.depression = simulate_depression(params, curve, g);
            const MarketTrajectory& base = ev.myopic ? *ev.myopic : *ev.depression;
            ev.peak = infection_peak(params, base.times(), base.susceptible(), base.infected());
            if (scenarios.rational && ev.peak.exists) {
                ev.plateau = solve_plateau(params, curve, g);
                ev.rational = simulate_re_given_t1(params, curve, ev.plateau->t1, g).trajectory;
            }
        } catch (const Error& e) {
            if (e.code() == ErrorCode::grid_too_coarse && refinement < max_refinements) {
                g = g.refined();
                continue;
            }
            throw;
        }

        if (ev.myopic) {
            ev.timeline = build_timeline(*ev.myopic, ev.rational ? &*ev.rational : nullptr, ev.peak);
            ev.report = check_propositions(*ev.myopic, ev.rational ? &*ev.rational : nullptr, ev.timeline);
        }
        if (ev.depression) {
            ev.depression_timeline = build_timeline(*ev.depression, nullptr, ev.peak);
            auto dep = check_propositions(*ev.depression, nullptr, *ev.depression_timeline);
            if (!ev.myopic) {
                ev.timeline = *ev.depression_timeline;
                ev.report = std::move(dep);
            } else if (ev.depression_timeline->boom) {
                for (auto& c : dep.claims) ev.report.claims.push_back(std::move(c));
            }
        }

        const bool inconclusive = ev.timeline.ordering.any_inconclusive() ||
                                  (ev.depression_timeline && ev.depression_timeline->ordering.any_inconclusive());
        if (!inconclusive || refinement >= max_refinements) return ev;
        g = g.refined();
    }
}

std::size_t SweepSpec::size() const noexcept {
    auto n = [](const std::vector<double>& v) { return std::max<std::size_t>(1, v.size()); };
    return n(beta) * n(gamma) * n(n1) * n(kappa);
}

std::string_view to_string(PointStatus s) noexcept {
    switch (s) {
        case PointStatus::ok: return "ok";
        case PointStatus::no_boom: return "no-boom";
        case PointStatus::error: return "error";
    }
    return "?";
}

namespace {

std::vector<std::pair<EpidemicParams, SupplyCurve>> expand(const EpidemicParams& base, const SupplyCurve& curve,
                                                           const SweepSpec& spec) {
    auto or_base = [](const std::vector<double>& v, double b) { return v.empty() ? std::vector<double>{b} : v; };
    std::vector<std::pair<EpidemicParams, SupplyCurve>> points;
    points.reserve(spec.size());
    for (double beta : or_base(spec.beta, base.beta)) {
        for (double gamma : or_base(spec.gamma, base.gamma)) {
            for (double n1 : or_base(spec.n1, base.n1)) {
                for (double kappa : or_base(spec.kappa, curve.kappa)) {
                    EpidemicParams p = base;
                    p.beta = beta;
                    p.gamma = gamma;
                    p.n1 = n1;
                    SupplyCurve c = curve;
                    c.kappa = kappa;
                    points.emplace_back(p, c);
                }
            }
        }
    }
    return points;
}

SweepResult run_point(std::size_t index, const EpidemicParams& params, const SupplyCurve& curve, const Grid& grid,
                      const ScenarioSet& scenarios) {
    SweepResult row;
    row.index = index;
    row.params = params;
    row.curve = curve;
    row.dt_used = grid.dt();
    try {
        params.validate();
        curve.validate();
        const auto ev = evaluate_point(params, curve, grid, scenarios);
        row.dt_used = ev.grid.dt();
        row.timeline = ev.timeline;
        row.report = ev.report;
        row.status = ev.timeline.boom ? PointStatus::ok : PointStatus::no_boom;
        if (ev.plateau) {
            row.plateau_width = ev.plateau->t2 - ev.plateau->t1;
            const double level = 0.5 * (curve.p0 + ev.plateau->p_star);
            if (ev.rational) row.half_rise_rational = first_crossing_time(*ev.rational, level);
            if (ev.myopic) row.half_rise_myopic = first_crossing_time(*ev.myopic, level);
        }
    } catch (const Error& e) {
        row.status = PointStatus::error;
        row.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    return row;
}

}  // namespace

std::vector<SweepResult> parameter_sweep(const EpidemicParams& base, const SupplyCurve& base_curve,
                                         const Grid& grid, const SweepSpec& spec, const ScenarioSet& scenarios,
                                         unsigned workers) {
    const auto points = expand(base, base_curve, spec);
    std::vector<SweepResult> rows(points.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < points.size(); i = next++) {
            rows[i] = run_point(i, points[i].first, points[i].second, grid, scenarios);
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(points.size())));
    if (n == 1) {
        work();
        return rows;
    }
    std::vector<std::jthread> pool;
    pool.reserve(n);
    for (unsigned i = 0; i < n; ++i) pool.emplace_back(work);
    pool.clear();  // joins
    return rows;
}

SweepSummary summarize(const std::vector<SweepResult>& rows) noexcept {
    SweepSummary s;
    s.points = rows.size();
    for (const auto& r : rows) {
        switch (r.status) {
            case PointStatus::ok: ++s.ok; break;
            case PointStatus::no_boom: ++s.no_boom; break;
            case PointStatus::error: ++s.errors; break;
        }
        if (r.status != PointStatus::ok) continue;
        for (const auto& c : r.report.claims) {
            switch (c.verdict) {
                case Verdict::pass: ++s.claims_passed; break;
                case Verdict::fail: ++s.claims_failed; break;
                case Verdict::inconclusive: ++s.claims_inconclusive; break;
            }
        }
    }
    return s;
}

WidthTrend plateau_width_trend(const std::vector<SweepResult>& rows) {
    std::map<std::tuple<double, double, double>, std::vector<const SweepResult*>> groups;
    for (const auto& r : rows) {
        if (r.plateau_width) groups[{r.params.beta, r.params.n1, r.curve.kappa}].push_back(&r);
    }
    WidthTrend trend;
    for (auto& [key, members] : groups) {
        std::sort(members.begin(), members.end(),
                  [](const SweepResult* a, const SweepResult* b) { return a->params.gamma < b->params.gamma; });
        for (std::size_t i = 1; i < members.size(); ++i) {
            if (members[i]->params.gamma == members[i - 1]->params.gamma) continue;
            ++trend.comparisons;
            if (!(*members[i]->plateau_width > *members[i - 1]->plateau_width)) {
                trend.violations.push_back(members[i]->index);
            }
        }
    }
    return trend;
}

SweepSpec default_sweep() {
    SweepSpec spec;
    spec.beta = {2.5e-4, 5e-4, 1e-3};
    spec.kappa = {5.0, 10.0, 20.0};
    return spec;
}

}  // namespace sirmarket
