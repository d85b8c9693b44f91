#include <cmath>
#include <sstream>

#include "sirmarket/market.hpp"

namespace sirmarket {

void SupplyCurve::validate() const {
    if (!(std::isfinite(p0) && p0 > 0)) {
        std::ostringstream msg;
        msg << "p0 must be > 0 (got " << p0 << ")";
        throw Error(ErrorCode::invalid_parameter, msg.str());
    }
    if (!(std::isfinite(kappa) && kappa > 0)) {
        std::ostringstream msg;
        msg << "kappa must be > 0 (got " << kappa << ")";
        throw Error(ErrorCode::invalid_parameter, msg.str());
    }
}

double excess_supply(double p, const SupplyCurve& curve) {
    if (!(p > 0)) {
        throw Error(ErrorCode::domain_error, "excess supply is defined for p > 0");
    }
    return curve.kappa * (p - curve.p0);
}

double clearing_price(double x, const SupplyCurve& curve) {
    const double floor = -curve.kappa * curve.p0;
    if (!(x > floor)) {
        std::ostringstream msg;
        msg << "price floor reached: holdings " << x << " <= -kappa*p0 = " << floor;
        throw Error(ErrorCode::price_floor, msg.str());
    }
    return curve.p0 + x / curve.kappa;
}

std::string_view to_string(Scenario s) noexcept {
    switch (s) {
        case Scenario::myopic: return "myopic";
        case Scenario::depression: return "depression";
        case Scenario::rational: return "rational";
    }
    return "?";
}

std::string_view to_string(Phase p) noexcept {
    switch (p) {
        case Phase::na: return "na";
        case Phase::pre: return "pre";
        case Phase::plateau: return "plateau";
        case Phase::post: return "post";
    }
    return "?";
}

std::vector<double> MarketTrajectory::times() const {
    std::vector<double> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes) out.push_back(n.t);
    return out;
}

std::vector<double> MarketTrajectory::prices() const {
    std::vector<double> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes) out.push_back(n.state.p);
    return out;
}

std::vector<double> MarketTrajectory::susceptible() const {
    std::vector<double> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes) out.push_back(n.state.epidemic.s);
    return out;
}

std::vector<double> MarketTrajectory::infected() const {
    std::vector<double> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes) out.push_back(n.state.epidemic.i);
    return out;
}

double entry_position(Scenario scenario, double p, const SupplyCurve& curve, double endowment) noexcept {
    if (scenario == Scenario::depression) return -endowment * p / (curve.p0 * curve.p0);
    return endowment / p;
}

namespace {

MarketTrajectory simulate_single_position(Scenario scenario, const EpidemicParams& params,
                                          const SupplyCurve& curve, const Grid& grid) {
    params.validate();
    curve.validate();
    const double beta = params.beta;
    const double gamma = params.gamma;
    const double w = params.endowment;
    // (S, I, R, x)
    auto field = [&](double, const std::array<double, 4>& y) -> std::array<double, 4> {
        const double p = clearing_price(y[3], curve);
        const double infection = beta * y[1] * y[0];
        return {-infection, infection - gamma * y[1], gamma * y[1],
                infection * entry_position(scenario, p, curve, w) - gamma * y[3]};
    };
    const auto raw = integrate_fixed_step(field, std::array<double, 4>{params.n1, params.n2, params.n3, 0.0}, grid);

    MarketTrajectory traj{scenario, params, curve, grid, {}, std::nullopt};
    traj.nodes.reserve(raw.size());
    for (std::size_t k = 0; k < raw.size(); ++k) {
        const auto& y = raw[k];
        MarketNode node;
        node.t = grid.time(k);
        node.state = {{y[0], y[1], y[2]}, y[3], clearing_price(y[3], curve)};
        node.z = y[3];
        traj.nodes.push_back(node);
    }
    return traj;
}

}  // namespace

MarketTrajectory simulate_myopic(const EpidemicParams& params, const SupplyCurve& curve, const Grid& grid) {
    return simulate_single_position(Scenario::myopic, params, curve, grid);
}

MarketTrajectory simulate_depression(const EpidemicParams& params, const SupplyCurve& curve, const Grid& grid) {
    return simulate_single_position(Scenario::depression, params, curve, grid);
}

namespace {

void require_same_params(const MarketTrajectory& traj, const EpidemicParams& params) {
    if (!(traj.params == params)) {
        throw Error(ErrorCode::consistency_error, "trajectory was simulated with different parameters");
    }
}

double cohort_inflow(const MarketTrajectory& traj, const EpidemicParams& params, std::size_t k) {
    const auto& n = traj.nodes[k];
    return params.beta * n.state.epidemic.i * n.state.epidemic.s *
           entry_position(traj.scenario, n.state.p, traj.curve, params.endowment);
}

}  // namespace

double cohort_holdings_quadrature(const MarketTrajectory& trajectory, const EpidemicParams& params, double t) {
    require_same_params(trajectory, params);
    const auto node = trajectory.grid.node_index(t);
    if (!node || *node >= trajectory.nodes.size()) {
        std::ostringstream msg;
        msg << "t=" << t << " is not a node of the trajectory grid";
        throw Error(ErrorCode::domain_error, msg.str());
    }
    const std::size_t k_end = *node;
    const double t_end = trajectory.nodes[k_end].t;
    double sum = 0;
    for (std::size_t k = 0; k + 1 <= k_end; ++k) {
        const double ta = trajectory.nodes[k].t;
        const double tb = trajectory.nodes[k + 1].t;
        const double fa = cohort_inflow(trajectory, params, k) * std::exp(-params.gamma * (t_end - ta));
        const double fb = cohort_inflow(trajectory, params, k + 1) * std::exp(-params.gamma * (t_end - tb));
        sum += 0.5 * (tb - ta) * (fa + fb);
    }
    return sum;
}

std::vector<double> cohort_holdings_series(const MarketTrajectory& trajectory, const EpidemicParams& params) {
    require_same_params(trajectory, params);
    std::vector<double> out(trajectory.nodes.size(), 0.0);
    if (out.empty()) return out;
    double prev_inflow = cohort_inflow(trajectory, params, 0);
    for (std::size_t k = 1; k < out.size(); ++k) {
        const double h = trajectory.nodes[k].t - trajectory.nodes[k - 1].t;
        const double decay = std::exp(-params.gamma * h);
        const double inflow = cohort_inflow(trajectory, params, k);
        out[k] = decay * out[k - 1] + 0.5 * h * (decay * prev_inflow + inflow);
        prev_inflow = inflow;
    }
    return out;
}

}  // namespace sirmarket
