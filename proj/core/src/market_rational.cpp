#include "sirmarket/market_rational.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sirmarket {

std::string_view to_string(PlateauEnd e) noexcept {
    switch (e) {
        case PlateauEnd::absorbed: return "absorbed";
        case PlateauEnd::flow_reversed: return "flow-reversed";
        case PlateauEnd::horizon: return "horizon";
    }
    return "?";
}

double net_infected_flow(const EpidemicState& state, double z, double p, const EpidemicParams& params) noexcept {
    return params.beta * state.i * state.s * params.endowment / p - params.gamma * z;
}

namespace {

// (S, I, R, z, h)
using State = std::array<double, 5>;

EpidemicState epidemic_of(const State& y) noexcept { return {y[0], y[1], y[2]}; }

struct RationalModel {
    const EpidemicParams& params;
    const SupplyCurve& curve;

    State hold(const State& y) const {
        const double p = clearing_price(y[3] + y[4], curve);
        const double infection = params.beta * y[1] * y[0];
        const double cured = params.gamma * y[3];
        return {-infection, infection - params.gamma * y[1], params.gamma * y[1],
                infection * params.endowment / p - cured, cured};
    }

    State plateau(const State& y, double p_star) const {
        const double infection = params.beta * y[1] * y[0];
        const double net = infection * params.endowment / p_star - params.gamma * y[3];
        return {-infection, infection - params.gamma * y[1], params.gamma * y[1], net, -net};
    }

    State sell(const State& y) const {
        const double p = clearing_price(y[3], curve);
        const double infection = params.beta * y[1] * y[0];
        return {-infection, infection - params.gamma * y[1], params.gamma * y[1],
                infection * params.endowment / p - params.gamma * y[3], 0.0};
    }
};

constexpr std::size_t no_node = static_cast<std::size_t>(-1);

// Steps from (t, y) to t_stop, landing on every grid node in between; a
// partial step is taken wherever t or t_stop falls inside a grid interval.
// after_step(ta, ya, tb, yb, node) returns true to stop; node is the grid
// index of tb or no_node.
template <class Field, class AfterStep>
void march(const Grid& grid, Field&& field, double& t, State& y, double t_stop, AfterStep&& after_step) {
    auto rhs = [&field](double, const State& s) { return field(s); };
    while (t < t_stop) {
        const std::size_t k = grid.floor_index(t);
        if (k >= grid.steps()) break;
        const double next = grid.time(k + 1);
        const double tb = std::min(next, t_stop);
        const State yb = rk4_step(rhs, t, y, tb - t);
        const bool stop = after_step(t, y, tb, yb, tb == next ? k + 1 : no_node);
        t = tb;
        y = yb;
        if (stop) return;
    }
}

// First tau in (0, h] where indicator(state after a sub-step tau) drops to zero,
// given indicator(ya) > 0 >= indicator(yb).
template <class Field, class Indicator>
double locate_in_step(Field&& field, double ta, const State& ya, double h, Indicator&& indicator) {
    auto rhs = [&field](double, const State& s) { return field(s); };
    const double at_end = indicator(rk4_step(rhs, ta, ya, h));
    if (at_end == 0) return h;
    auto f = [&](double tau) { return tau == 0 ? indicator(ya) : indicator(rk4_step(rhs, ta, ya, tau)); };
    const Bracket bracket{0.0, h, indicator(ya), at_end};
    return find_root_bracketed(f, bracket, 1e-15 * std::max(1.0, h));
}

RationalRun run_rational(const EpidemicParams& params, const SupplyCurve& curve, double t1, const Grid& grid,
                         bool full_trajectory) {
    params.validate();
    curve.validate();
    const double slack = 1e-9 * grid.dt();
    if (!std::isfinite(t1) || t1 < grid.t_start() - slack || t1 > grid.t_end() + slack) {
        std::ostringstream msg;
        msg << "t1=" << t1 << " lies outside the grid [" << grid.t_start() << ", " << grid.t_end() << "]";
        throw Error(ErrorCode::domain_error, msg.str());
    }
    if (const auto k = grid.node_index(t1)) t1 = grid.time(*k);

    const RationalModel model{params, curve};
    RationalRun run{MarketTrajectory{Scenario::rational, params, curve, grid, {}, std::nullopt}, {}};
    auto& nodes = run.trajectory.nodes;
    auto& diag = run.diagnosis;
    if (full_trajectory) nodes.reserve(grid.nodes());

    auto record = [&](double t, const State& y, Phase phase, double price) {
        if (!full_trajectory) return;
        MarketNode n;
        n.t = t;
        n.state = {epidemic_of(y), y[3] + y[4], price};
        n.z = y[3];
        n.h = y[4];
        n.phase = phase;
        nodes.push_back(n);
    };

    // Phase 1: everybody holds.
    State y{params.n1, params.n2, params.n3, 0.0, 0.0};
    double t = grid.t_start();
    if (t1 > t) {
        record(t, y, Phase::pre, clearing_price(0.0, curve));
        march(grid, [&](const State& s) { return model.hold(s); }, t, y, t1,
              [&](double, const State&, double tb, const State& yb, std::size_t node) {
                  if (node != no_node && tb < t1) record(tb, yb, Phase::pre, clearing_price(yb[3] + yb[4], curve));
                  return false;
              });
    }
    t = t1;

    // Phase 2: price pinned at P*, rational inventory h feeds net new buying.
    const double p_star = clearing_price(y[3] + y[4], curve);
    diag.t1 = t1;
    diag.p_star = p_star;
    if (grid.node_index(t1)) record(t1, y, Phase::plateau, p_star);

    auto plateau_field = [&](const State& s) { return model.plateau(s, p_star); };
    auto inventory = [](const State& s) { return s[4]; };
    auto net_flow = [&](const State& s) { return net_infected_flow(epidemic_of(s), s[3], p_star, params); };

    bool ended = false;
    State y_end = y;
    auto end_plateau = [&](PlateauEnd why, double when, const State& at) {
        ended = true;
        diag.end = why;
        diag.t2 = when;
        y_end = at;
    };

    if (inventory(y) <= 0 && net_flow(y) > 0) {
        diag.t_absorbed = t1;
        end_plateau(PlateauEnd::absorbed, t1, y);
    }
    bool reversed = false;
    if (net_flow(y) <= 0) {
        diag.t_reversed = t1;
        diag.shooting_residual = inventory(y);
        reversed = true;
        if (!ended) end_plateau(PlateauEnd::flow_reversed, t1, y);
    } else {
        march(grid, plateau_field, t, y, grid.t_end(),
              [&](double ta, const State& ya, double tb, const State& yb, std::size_t node) {
                  std::optional<double> tau_abs;
                  std::optional<double> tau_rev;
                  if (!ended && inventory(ya) > 0 && inventory(yb) <= 0) {
                      tau_abs = locate_in_step(plateau_field, ta, ya, tb - ta, inventory);
                  }
                  if (net_flow(ya) > 0 && net_flow(yb) <= 0) {
                      tau_rev = locate_in_step(plateau_field, ta, ya, tb - ta, net_flow);
                  }
                  auto sub_step = [&](double tau) {
                      return rk4_step([&](double, const State& s) { return plateau_field(s); }, ta, ya, tau);
                  };
                  if (!ended && (tau_abs || tau_rev)) {
                      const bool absorbed_first = tau_abs && (!tau_rev || *tau_abs <= *tau_rev);
                      const double tau = absorbed_first ? *tau_abs : *tau_rev;
                      if (absorbed_first) diag.t_absorbed = ta + tau;
                      end_plateau(absorbed_first ? PlateauEnd::absorbed : PlateauEnd::flow_reversed,
                                  tau == tb - ta ? tb : ta + tau, tau == tb - ta ? yb : sub_step(tau));
                      if (tau == tb - ta && node != no_node) record(tb, yb, Phase::plateau, p_star);
                  } else if (!ended && node != no_node) {
                      record(tb, yb, Phase::plateau, p_star);
                  }
                  if (tau_rev) {
                      diag.t_reversed = ta + *tau_rev;
                      diag.shooting_residual = inventory(*tau_rev == tb - ta ? yb : sub_step(*tau_rev));
                      reversed = true;
                      return true;
                  }
                  return false;
              });
    }
    if (!reversed) diag.shooting_residual = inventory(y);
    if (!ended) end_plateau(PlateauEnd::horizon, grid.t_end(), y);

    diag.h_at_end = inventory(y_end);
    diag.flow_at_end = net_flow(y_end);
    run.trajectory.plateau = PlateauInfo{diag.t1, diag.t2, p_star};
    if (!full_trajectory) return run;

    // Phase 3: any remaining rational inventory is released, cured agents sell at once.
    if (diag.end != PlateauEnd::horizon) {
        State y3 = y_end;
        y3[4] = 0.0;
        double t3 = diag.t2;
        march(grid, [&](const State& s) { return model.sell(s); }, t3, y3, grid.t_end(),
              [&](double, const State&, double tb, const State& yb, std::size_t node) {
                  if (node != no_node) record(tb, yb, Phase::post, clearing_price(yb[3], curve));
                  return false;
              });
    }
    if (nodes.size() != grid.nodes()) {
        std::ostringstream msg;
        msg << "internal: rational run produced " << nodes.size() << " nodes for a grid of " << grid.nodes();
        throw Error(ErrorCode::consistency_error, msg.str());
    }
    return run;
}

}  // namespace

RationalRun simulate_re_given_t1(const EpidemicParams& params, const SupplyCurve& curve, double t1,
                                 const Grid& grid) {
    return run_rational(params, curve, t1, grid, true);
}

PlateauSolution solve_plateau(const EpidemicParams& params, const SupplyCurve& curve, const Grid& grid,
                              double tol) {
    params.validate();
    curve.validate();
    if (params.n2 == 0 || params.beta == 0 || !(params.n1 > params.threshold())) {
        throw Error(ErrorCode::no_plateau, "no boom: need n2 > 0 and n1 > gamma/beta");
    }
    int evaluations = 0;
    auto shoot = [&](double t1) {
        ++evaluations;
        return run_rational(params, curve, t1, grid, false).diagnosis.shooting_residual;
    };

    std::size_t lo = 0;
    std::size_t hi = grid.steps();
    double g_lo = shoot(grid.time(lo));
    double g_hi = shoot(grid.time(hi));
    if (!(g_lo < 0 && g_hi > 0)) {
        std::ostringstream msg;
        msg << "plateau diagnosis does not change sign over the horizon (early " << g_lo << ", late " << g_hi
            << ")";
        throw Error(ErrorCode::no_plateau, msg.str());
    }
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        const double g_mid = shoot(grid.time(mid));
        if (!(g_mid >= g_lo && g_mid <= g_hi)) {
            std::ostringstream msg;
            msg << "shooting diagnosis is not monotone in t1 near t=" << grid.time(mid)
                << "; retry with dt=" << grid.dt() / 2;
            throw Error(ErrorCode::grid_too_coarse, msg.str());
        }
        if (g_mid == 0) {
            lo = hi = mid;
            g_lo = g_hi = 0;
            break;
        }
        if (g_mid < 0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            g_hi = g_mid;
        }
    }

    double t1 = grid.time(lo);
    if (lo != hi) {
        const double a = grid.time(lo);
        const double b = grid.time(hi);
        t1 = find_root_bracketed(shoot, Bracket{a, b, g_lo, g_hi}, 1e-13 * std::max(1.0, b));
    }

    const auto run = run_rational(params, curve, t1, grid, false);
    const auto& d = run.diagnosis;
    if (d.end == PlateauEnd::horizon) {
        throw Error(ErrorCode::no_plateau, "plateau never closes before the horizon");
    }
    PlateauSolution sol;
    sol.t1 = d.t1;
    sol.t2 = d.t2;
    sol.p_star = d.p_star;
    sol.residual_flow = d.flow_at_end;
    sol.residual_absorption = d.h_at_end;
    sol.iterations = evaluations;
    sol.end = d.end;

    const double held = excess_supply(sol.p_star, curve);
    if (std::abs(sol.residual_absorption) > tol * held ||
        std::abs(sol.residual_flow) > tol * params.gamma * held) {
        std::ostringstream msg;
        msg << "plateau closure residuals (h=" << sol.residual_absorption << ", flow=" << sol.residual_flow
            << ") exceed tolerance at dt=" << grid.dt() << "; retry with dt=" << grid.dt() / 2;
        throw Error(ErrorCode::grid_too_coarse, msg.str());
    }
    return sol;
}

MarketTrajectory re_price_path(const EpidemicParams& params, const SupplyCurve& curve, const Grid& grid,
                               double tol) {
    const auto sol = solve_plateau(params, curve, grid, tol);
    return simulate_re_given_t1(params, curve, sol.t1, grid).trajectory;
}

}  // namespace sirmarket
