#include "sirmarket/epidemic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sirmarket {

namespace {

void require(bool ok, const char* field, const char* bound, double value) {
    if (!ok) {
        std::ostringstream msg;
        msg << field << " must be " << bound << " (got " << value << ")";
        throw Error(ErrorCode::invalid_parameter, msg.str());
    }
}

void require_transmission(const EpidemicParams& params) {
    if (!(params.beta > 0)) {
        throw Error(ErrorCode::domain_error, "first integrals need beta > 0");
    }
}

}  // namespace

double EpidemicParams::threshold() const noexcept {
    return beta > 0 ? gamma / beta : std::numeric_limits<double>::infinity();
}

void EpidemicParams::validate() const {
    require(std::isfinite(beta) && beta >= 0, "beta", ">= 0", beta);
    require(std::isfinite(gamma) && gamma > 0, "gamma", "> 0", gamma);
    require(std::isfinite(n1) && n1 > 0, "n1", "> 0", n1);
    require(std::isfinite(n2) && n2 >= 0, "n2", ">= 0", n2);
    require(std::isfinite(n3) && n3 >= 0, "n3", ">= 0", n3);
    require(std::isfinite(endowment) && endowment > 0, "endowment", "> 0", endowment);
}

SirRates sir_derivatives(const EpidemicState& state, const EpidemicParams& params) noexcept {
    const auto d = sir_field<double>({state.s, state.i, state.r}, params.beta, params.gamma);
    return {d[0], d[1], d[2]};
}

std::vector<double> EpidemicTrajectory::times() const {
    std::vector<double> out(nodes.size());
    for (std::size_t k = 0; k < nodes.size(); ++k) out[k] = grid.time(k);
    return out;
}

std::vector<double> EpidemicTrajectory::infected() const {
    std::vector<double> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes) out.push_back(n.i);
    return out;
}

EpidemicTrajectory simulate_epidemic(const EpidemicParams& params, const Grid& grid) {
    const auto raw = integrate_sir<double>(params, grid);
    EpidemicTrajectory traj{params, grid, {}};
    traj.nodes.reserve(raw.size());
    for (const auto& y : raw) traj.nodes.push_back({y[0], y[1], y[2]});
    return traj;
}

double first_integral_infected(const EpidemicState& state, const EpidemicParams& params) {
    require_transmission(params);
    if (!(state.s > 0)) {
        throw Error(ErrorCode::domain_error, "first integral needs s > 0");
    }
    const double c = params.threshold();
    const double c_i = params.n1 + params.n2 - c * std::log(params.n1);
    return -state.s + c * std::log(state.s) + c_i;
}

double first_integral_recovered(const EpidemicState& state, const EpidemicParams& params) {
    require_transmission(params);
    if (!(state.s > 0)) {
        throw Error(ErrorCode::domain_error, "first integral needs s > 0");
    }
    const double c = params.threshold();
    const double c_r = params.n3 + c * std::log(params.n1);
    return -c * std::log(state.s) + c_r;
}

double steady_state_recovered(const EpidemicParams& params, double tol) {
    params.validate();
    if (params.n2 == 0) return params.n3;            // nothing ever moves
    if (params.beta == 0) return params.n2 + params.n3;  // every infected recovers, nobody is infected

    // Final-size balance in u = ln S:
    //   F(u) = N1 + N2 - e^u + c (u - ln N1) = 0,  increasing for S < c.
    const double c = params.threshold();
    const double head = params.n1 + params.n2;
    const double log_n1 = std::log(params.n1);
    auto balance = [&](double u) { return head - std::exp(u) + c * (u - log_n1); };

    const double u_lo = log_n1 - head / c - 1.0;  // F(u_lo) = -e^u_lo - c < 0
    const double u_hi = std::log(std::min(c, head));
    const Bracket bracket{u_lo, u_hi, balance(u_lo), balance(u_hi)};
    if (!(bracket.f_lo < 0 && bracket.f_hi >= 0)) {
        std::ostringstream msg;
        msg << "final-size equation has no bracketed root below gamma/beta (F(lo)=" << bracket.f_lo
            << ", F(hi)=" << bracket.f_hi << ")";
        throw ConvergenceFailure(params.n3, msg.str());
    }
    const double u = find_root_bracketed(balance, bracket, 1e-15 * std::max(1.0, std::abs(u_lo)));
    const double residual = balance(u);
    if (std::abs(residual) > scaled_tolerance(tol, params.total())) {
        std::ostringstream msg;
        msg << "final-size residual " << residual << " exceeds tolerance";
        throw ConvergenceFailure(params.total() - std::exp(u), msg.str());
    }
    return params.total() - std::exp(u);
}

InfectionPeak infection_peak(const EpidemicParams& params, const std::vector<double>& times,
                             const std::vector<double>& susceptible, const std::vector<double>& infected) {
    if (times.size() != infected.size() || times.size() != susceptible.size()) {
        throw Error(ErrorCode::consistency_error, "time, S and I columns differ in length");
    }
    if (times.size() < 3) {
        throw Error(ErrorCode::consistency_error, "infection peak needs at least three samples");
    }
    if (susceptible.front() != params.n1 || infected.front() != params.n2) {
        throw Error(ErrorCode::consistency_error, "trajectory does not start from (n1, n2)");
    }
    InfectionPeak peak;
    if (!(params.n1 > params.threshold()) || params.n2 == 0) return peak;

    const auto it = std::max_element(infected.begin(), infected.end());
    const auto k = static_cast<std::size_t>(it - infected.begin());
    if (k == 0 || k + 1 == infected.size()) {
        throw Error(ErrorCode::boundary_extremum,
                    "infection maximum lies on the horizon boundary; extend t_end");
    }
    const auto v = parabolic_vertex(infected[k - 1], infected[k], infected[k + 1]);
    const double spacing = v.offset < 0 ? times[k] - times[k - 1] : times[k + 1] - times[k];
    peak.exists = true;
    peak.t_star = times[k] + v.offset * spacing;
    peak.i_star = v.value;
    peak.s_star = quadratic_interpolate(susceptible[k - 1], susceptible[k], susceptible[k + 1], v.offset);
    return peak;
}

InfectionPeak infection_peak(const EpidemicParams& params, const EpidemicTrajectory& trajectory) {
    if (!(trajectory.params == params)) {
        throw Error(ErrorCode::consistency_error, "trajectory was simulated with different parameters");
    }
    if (trajectory.nodes.size() != trajectory.grid.nodes()) {
        throw Error(ErrorCode::consistency_error, "trajectory node count does not match its grid");
    }
    std::vector<double> s;
    s.reserve(trajectory.nodes.size());
    for (const auto& n : trajectory.nodes) s.push_back(n.s);
    return infection_peak(params, trajectory.times(), s, trajectory.infected());
}

}  // namespace sirmarket
