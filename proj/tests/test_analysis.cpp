#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "sirmarket/analysis.hpp"

using namespace sirmarket;

namespace {

const Grid kGrid = Grid::make(0, 300, 1e-2);

struct Runs {
    MarketTrajectory myopic;
    MarketTrajectory rational;
    InfectionPeak peak;
    EventTimeline timeline;
};

const Runs& defaults() {
    static const Runs r = [] {
        const EpidemicParams p;
        auto m = simulate_myopic(p, SupplyCurve{}, kGrid);
        auto rat = re_price_path(p, SupplyCurve{}, kGrid);
        auto peak = infection_peak(p, m.times(), m.susceptible(), m.infected());
        auto tl = build_timeline(m, &rat, peak);
        return Runs{std::move(m), std::move(rat), peak, tl};
    }();
    return r;
}

Verdict verdict_of(const PropositionReport& rep, std::string_view name) {
    const auto* c = rep.find(name);
    EXPECT_NE(c, nullptr) << name;
    return c ? c->verdict : Verdict::inconclusive;
}

PropositionReport recheck(const MarketTrajectory& m, const MarketTrajectory& r) {
    const auto tl = build_timeline(m, &r, defaults().peak);
    return check_propositions(m, &r, tl);
}

}  // namespace

TEST(RefinePeak, ExactParabola) {
    std::vector<double> t, y;
    for (int k = 0; k <= 6; ++k) {
        t.push_back(k);
        y.push_back(-(k - 3.0) * (k - 3.0));
    }
    const auto pk = refine_peak(t, y, Extremum::max);
    EXPECT_DOUBLE_EQ(pk.t, 3.0);
    EXPECT_DOUBLE_EQ(pk.value, 0.0);
    for (auto& v : y) v = -v;
    EXPECT_DOUBLE_EQ(refine_peak(t, y, Extremum::min).t, 3.0);
}

TEST(RefinePeak, BoundaryAndShortInput) {
    const std::vector<double> t{0, 1, 2, 3}, up{1, 2, 3, 4};
    try {
        refine_peak(t, up, Extremum::max);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::boundary_extremum);
    }
    const std::vector<double> two{0, 1};
    EXPECT_THROW(refine_peak(two, two, Extremum::max), Error);
}

TEST(RefinePeak, StableUnderHalving) {
    const EpidemicParams p;
    const auto a = simulate_myopic(p, SupplyCurve{}, kGrid);
    const auto b = simulate_myopic(p, SupplyCurve{}, kGrid.refined());
    const auto ta = refine_peak(a.times(), a.prices(), Extremum::max).t;
    const auto tb = refine_peak(b.times(), b.prices(), Extremum::max).t;
    EXPECT_LT(std::abs(ta - tb), kGrid.dt());
}

TEST(StrictlyBefore, ThreeWay) {
    EXPECT_EQ(strictly_before(1.0, 1.5, 0.1), Verdict::pass);
    EXPECT_EQ(strictly_before(1.5, 1.0, 0.1), Verdict::fail);
    EXPECT_EQ(strictly_before(1.0, 1.05, 0.1), Verdict::inconclusive);
    EXPECT_EQ(strictly_before(1.05, 1.0, 0.1), Verdict::inconclusive);
}

TEST(Timeline, DefaultsChainHolds) {
    const auto& tl = defaults().timeline;
    EXPECT_TRUE(tl.boom);
    EXPECT_TRUE(tl.ordering.all_pass());
    ASSERT_TRUE(tl.t1 && tl.t2 && tl.p_star_re);
    EXPECT_LT(*tl.t1, tl.t_p_star_m);
    EXPECT_LT(tl.t_p_star_m, *tl.t2);
    EXPECT_LT(*tl.t2, tl.t_i_star);
    EXPECT_LE(tl.t_i_star, 300);
}

TEST(Timeline, MyopicOnly) {
    const auto& r = defaults();
    const auto tl = build_timeline(r.myopic, nullptr, r.peak);
    EXPECT_EQ(tl.ordering.tp_before_ti, Verdict::pass);
    EXPECT_FALSE(tl.ordering.t1_before_tp.has_value());
    EXPECT_FALSE(tl.t1.has_value());
    EXPECT_TRUE(tl.ordering.all_pass());
}

TEST(Timeline, NoEpidemicNoBoom) {
    EpidemicParams p;
    p.n2 = 0;
    const auto m = simulate_myopic(p, SupplyCurve{}, kGrid);
    const auto tl = build_timeline(m, nullptr, infection_peak(p, m.times(), m.susceptible(), m.infected()));
    EXPECT_FALSE(tl.boom);
    const auto rep = check_propositions(m, nullptr, tl);
    EXPECT_EQ(verdict_of(rep, "boom"), Verdict::inconclusive);
    EXPECT_FALSE(rep.all_pass());
}

TEST(Timeline, MismatchedRuns) {
    const auto& r = defaults();
    SupplyCurve other;
    other.kappa = 20;
    const auto m = simulate_myopic(EpidemicParams{}, other, kGrid);
    try {
        build_timeline(m, &r.rational, r.peak);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::consistency_error);
    }
}

TEST(Propositions, DefaultsAllPass) {
    const auto& r = defaults();
    const auto rep = check_propositions(r.myopic, &r.rational, r.timeline);
    for (const auto& c : rep.claims) EXPECT_EQ(c.verdict, Verdict::pass) << c.name << " " << c.detail;
    EXPECT_TRUE(rep.all_pass());
    for (const char* name : {"prop1_long_run_price", "prop1_lead_lag", "prop1_unimodal", "prop2_plateau",
                             "remark1_faster_rise", "remark2_lower_peak", "ordering_chain", "accelerates_boom",
                             "broad_top"}) {
        EXPECT_NE(rep.find(name), nullptr) << name;
    }
}

TEST(Propositions, DepressionMirrorPasses) {
    const EpidemicParams p;
    SupplyCurve c;
    c.kappa = 100;
    const auto d = simulate_depression(p, c, kGrid);
    const auto tl = build_timeline(d, nullptr, infection_peak(p, d.times(), d.susceptible(), d.infected()));
    const auto rep = check_propositions(d, nullptr, tl);
    EXPECT_EQ(verdict_of(rep, "depression_lead_lag"), Verdict::pass);
    EXPECT_EQ(verdict_of(rep, "depression_long_run_price"), Verdict::pass);
    EXPECT_EQ(verdict_of(rep, "depression_u_shape"), Verdict::pass);
}

TEST(Propositions, MirroredVerdictsAgree) {
    for (double kappa : {10.0, 100.0}) {
        const EpidemicParams p;
        SupplyCurve c;
        c.kappa = kappa;
        const auto m = simulate_myopic(p, c, kGrid);
        const auto d = simulate_depression(p, c, kGrid);
        const auto peak = infection_peak(p, m.times(), m.susceptible(), m.infected());
        EXPECT_EQ(build_timeline(m, nullptr, peak).ordering.tp_before_ti,
                  build_timeline(d, nullptr, peak).ordering.tp_before_ti);
    }
}

TEST(Propositions, InputsUntouched) {
    const auto& r = defaults();
    const auto m = r.myopic;
    const auto rat = r.rational;
    check_propositions(m, &rat, r.timeline);
    EXPECT_EQ(m.prices(), r.myopic.prices());
    EXPECT_EQ(rat.prices(), r.rational.prices());
}

// Each checker must reject a constructed counterexample.

TEST(Mutation, ShuffledPlateauPrices) {
    auto rat = defaults().rational;
    std::vector<double> prices = rat.prices();
    std::mt19937 rng(3);
    std::shuffle(prices.begin(), prices.end(), rng);
    for (std::size_t k = 0; k < prices.size(); ++k) rat.nodes[k].state.p = prices[k];
    const auto tl = defaults().timeline;
    EXPECT_EQ(verdict_of(check_propositions(defaults().myopic, &rat, tl), "prop2_plateau"), Verdict::fail);
}

TEST(Mutation, SecondPriceBump) {
    auto m = defaults().myopic;
    for (std::size_t k = 15000; k < 15100; ++k) m.nodes[k].state.p += 0.5 * std::sin(M_PI * (k - 15000) / 100.0);
    const auto tl = build_timeline(m, nullptr, defaults().peak);
    EXPECT_EQ(verdict_of(check_propositions(m, nullptr, tl), "prop1_unimodal"), Verdict::fail);
}

TEST(Mutation, PriceNeverReturns) {
    auto m = defaults().myopic;
    m.nodes.back().state.p = 1.5;
    const auto tl = build_timeline(m, nullptr, defaults().peak);
    EXPECT_EQ(verdict_of(check_propositions(m, nullptr, tl), "prop1_long_run_price"), Verdict::fail);
}

TEST(Mutation, PriceLagsInfection) {
    auto peak = defaults().peak;
    peak.t_star = 15.0;
    const auto tl = build_timeline(defaults().myopic, nullptr, peak);
    EXPECT_EQ(tl.ordering.tp_before_ti, Verdict::fail);
    EXPECT_EQ(verdict_of(check_propositions(defaults().myopic, nullptr, tl), "prop1_lead_lag"), Verdict::fail);
}

TEST(Mutation, RationalRisesSlower) {
    auto rat = defaults().rational;
    for (auto& n : rat.nodes) {
        if (n.t > 5 && n.t < 6) n.state.p = defaults().myopic.nodes[&n - rat.nodes.data()].state.p - 1e-3;
    }
    const auto rep = recheck(defaults().myopic, rat);
    EXPECT_EQ(verdict_of(rep, "remark1_faster_rise"), Verdict::fail);
}

TEST(Mutation, RationalPeakTooHigh) {
    auto rat = defaults().rational;
    rat.plateau->p_star = 9.0;
    EXPECT_EQ(verdict_of(recheck(defaults().myopic, rat), "remark2_lower_peak"), Verdict::fail);
}

TEST(Mutation, SellingStartsLate) {
    auto rat = defaults().rational;
    rat.plateau->t1 = 20.2;
    const auto rep = recheck(defaults().myopic, rat);
    EXPECT_EQ(verdict_of(rep, "ordering_chain"), Verdict::fail);
}

TEST(Mutation, NarrowTop) {
    auto rat = defaults().rational;
    rat.plateau->t2 = rat.plateau->t1;
    const auto rep = recheck(defaults().myopic, rat);
    EXPECT_NE(verdict_of(rep, "broad_top"), Verdict::pass);
}

TEST(Mutation, BoomNotAccelerated) {
    auto rat = defaults().rational;
    const double level = 0.5 * (1.0 + rat.plateau->p_star);
    for (auto& n : rat.nodes) n.state.p = std::min(n.state.p, level - 1e-3);
    const auto rep = recheck(defaults().myopic, rat);
    EXPECT_EQ(verdict_of(rep, "accelerates_boom"), Verdict::fail);
}

TEST(Extrema, CountsAndCrossing) {
    const auto& m = defaults().myopic;
    EXPECT_EQ(count_interior_extrema(m, Extremum::max), 1u);
    EXPECT_EQ(count_interior_extrema(m, Extremum::min), 0u);
    const auto t = first_crossing_time(m, 5.0);
    ASSERT_TRUE(t.has_value());
    const std::size_t k = kGrid.floor_index(*t);
    EXPECT_LT(m.nodes[k].state.p, 5.0);
    EXPECT_GE(m.nodes[k + 1].state.p, 5.0);
    EXPECT_FALSE(first_crossing_time(m, 100.0).has_value());
}

TEST(EvaluatePoint, DefaultsAndScenarioSelection) {
    const auto ev = evaluate_point(EpidemicParams{}, SupplyCurve{}, kGrid, ScenarioSet{true, true, true});
    EXPECT_EQ(ev.refinements, 0);
    EXPECT_TRUE(ev.myopic && ev.rational && ev.depression && ev.plateau && ev.depression_timeline);
    EXPECT_TRUE(ev.report.all_pass());
    const auto only_dep = evaluate_point(EpidemicParams{}, SupplyCurve{}, kGrid, ScenarioSet{false, true, false});
    EXPECT_FALSE(only_dep.myopic.has_value());
    EXPECT_EQ(only_dep.timeline.scenario, Scenario::depression);
}

TEST(EvaluatePoint, RefinesWhenInconclusive) {
    // On a very coarse grid the lead of t_P* over t2 is within one step.
    const auto ev = evaluate_point(EpidemicParams{}, SupplyCurve{}, Grid::make(0, 300, 0.75), ScenarioSet{});
    EXPECT_GT(ev.refinements, 0);
    EXPECT_LT(ev.grid.dt(), 0.75);
}

TEST(Sweep, DefaultGrid) {
    const auto rows = parameter_sweep(EpidemicParams{}, SupplyCurve{}, kGrid, default_sweep(), ScenarioSet{}, 3);
    ASSERT_EQ(rows.size(), 9u);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].index, i);
        EXPECT_EQ(rows[i].status, PointStatus::ok);
        EXPECT_TRUE(rows[i].timeline.ordering.all_pass()) << i;
        EXPECT_TRUE(rows[i].report.all_pass()) << i;
    }
    // beta outermost, kappa innermost
    EXPECT_EQ(rows[1].params.beta, 2.5e-4);
    EXPECT_EQ(rows[1].curve.kappa, 10);
    EXPECT_EQ(rows[3].params.beta, 5e-4);
    const auto s = summarize(rows);
    EXPECT_EQ(s.points, 9u);
    EXPECT_EQ(s.ok, 9u);
    EXPECT_EQ(s.claims_failed, 0u);
}

TEST(Sweep, NoBoomAndErrorsStayInRow) {
    SweepSpec spec;
    spec.gamma = {0.1, 0.6};
    spec.kappa = {10, -1};
    const auto rows = parameter_sweep(EpidemicParams{}, SupplyCurve{}, kGrid, spec, ScenarioSet{}, 2);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].status, PointStatus::ok);
    EXPECT_EQ(rows[1].status, PointStatus::error);
    EXPECT_FALSE(rows[1].error.empty());
    EXPECT_EQ(rows[2].status, PointStatus::no_boom);
    const auto s = summarize(rows);
    EXPECT_EQ(s.no_boom, 1u);
    EXPECT_EQ(s.errors, 2u);
}

TEST(Sweep, IndependentOfWorkers) {
    SweepSpec spec = default_sweep();
    spec.gamma = {0.08, 0.12};
    const auto a = parameter_sweep(EpidemicParams{}, SupplyCurve{}, kGrid, spec, ScenarioSet{true, true, true}, 1);
    const auto b = parameter_sweep(EpidemicParams{}, SupplyCurve{}, kGrid, spec, ScenarioSet{true, true, true}, 7);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].timeline.t_p_star_m, b[i].timeline.t_p_star_m);
        EXPECT_EQ(a[i].timeline.t1, b[i].timeline.t1);
        EXPECT_EQ(a[i].plateau_width, b[i].plateau_width);
        ASSERT_EQ(a[i].report.claims.size(), b[i].report.claims.size());
        for (std::size_t j = 0; j < a[i].report.claims.size(); ++j) {
            EXPECT_EQ(a[i].report.claims[j].margin, b[i].report.claims[j].margin);
        }
    }
}

TEST(Sweep, PlateauWidensWithGamma) {
    SweepSpec spec;
    spec.beta = {2.5e-4, 5e-4, 1e-3};
    spec.gamma = {0.05, 0.1, 0.2};
    const auto rows = parameter_sweep(EpidemicParams{}, SupplyCurve{}, kGrid, spec, ScenarioSet{}, 4);
    const auto trend = plateau_width_trend(rows);
    EXPECT_EQ(trend.comparisons, 6u);
    EXPECT_TRUE(trend.violations.empty());

    auto broken = rows;
    std::swap(broken[0].plateau_width, broken[2].plateau_width);
    EXPECT_FALSE(plateau_width_trend(broken).violations.empty());
}
