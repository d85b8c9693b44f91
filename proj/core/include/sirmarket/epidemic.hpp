#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "sirmarket/numerics.hpp"

namespace sirmarket {

/// Rates and initial masses of the SIR contagion. Masses are in agents,
/// rates per time unit; `endowment` is the currency each agent brings to the
/// market once infected.
struct EpidemicParams {
    double beta = 5e-4;
    double gamma = 0.1;
    double n1 = 999.0;
    double n2 = 1.0;
    double n3 = 0.0;
    double endowment = 1.0;

    double total() const noexcept { return n1 + n2 + n3; }

    /// gamma / beta: the susceptible mass at which net infection growth stops.
    double threshold() const noexcept;

    /// Throws invalid_parameter naming the offending field. beta = 0 is
    /// accepted as the degenerate no-transmission case.
    void validate() const;

    bool operator==(const EpidemicParams&) const = default;
};

struct EpidemicState {
    double s = 0;
    double i = 0;
    double r = 0;

    double total() const noexcept { return s + i + r; }
};

struct SirRates {
    double ds;
    double di;
    double dr;
};

SirRates sir_derivatives(const EpidemicState& state, const EpidemicParams& params) noexcept;

/// Right-hand side of the SIR system for any arithmetic type; shared by the
/// double-precision engine and the extended-precision drift checks.
template <class Real>
std::array<Real, 3> sir_field(const std::array<Real, 3>& y, Real beta, Real gamma) noexcept {
    const Real infection = beta * y[1] * y[0];
    const Real recovery = gamma * y[1];
    return {-infection, infection - recovery, recovery};
}

/// Raw SIR integration in the requested precision.
template <class Real>
std::vector<std::array<Real, 3>> integrate_sir(const EpidemicParams& params, const Grid& grid) {
    params.validate();
    const Real beta = Real(params.beta);
    const Real gamma = Real(params.gamma);
    auto field = [beta, gamma](Real, const std::array<Real, 3>& y) { return sir_field(y, beta, gamma); };
    return integrate_fixed_step(field, std::array<Real, 3>{Real(params.n1), Real(params.n2), Real(params.n3)},
                                grid);
}

struct EpidemicTrajectory {
    EpidemicParams params;
    Grid grid;
    std::vector<EpidemicState> nodes;

    std::vector<double> times() const;
    std::vector<double> infected() const;
};

EpidemicTrajectory simulate_epidemic(const EpidemicParams& params, const Grid& grid);

/// -S + (gamma/beta) ln S + C_I with C_I = N1 + N2 - (gamma/beta) ln N1.
/// Equals I along exact trajectories. Throws domain_error for s <= 0 or beta = 0.
double first_integral_infected(const EpidemicState& state, const EpidemicParams& params);

/// -(gamma/beta) ln S + C_R with C_R = N3 + (gamma/beta) ln N1; equals R along
/// exact trajectories.
double first_integral_recovered(const EpidemicState& state, const EpidemicParams& params);

/// Final recovered mass R_inf. Of the two roots of the final-size equation the
/// one with S_inf = N - R_inf below gamma/beta is returned: the dynamically
/// reached steady state. The residual of the implicit equation is <= tol (in
/// the engine's relative/absolute convention).
double steady_state_recovered(const EpidemicParams& params, double tol = 1e-12);

struct InfectionPeak {
    bool exists = false;
    double t_star = 0;
    double s_star = 0;
    double i_star = 0;
};

/// Peak of I on a trajectory produced by simulate_epidemic (or any trajectory
/// sharing the parameters), refined by a parabola through the three nodes
/// around the discrete argmax. exists iff n1 > gamma/beta and n2 > 0.
InfectionPeak infection_peak(const EpidemicParams& params, const EpidemicTrajectory& trajectory);

/// Same, on raw samples (times and S, I columns) of a coupled market run.
InfectionPeak infection_peak(const EpidemicParams& params, const std::vector<double>& times,
                             const std::vector<double>& susceptible, const std::vector<double>& infected);

}  // namespace sirmarket
