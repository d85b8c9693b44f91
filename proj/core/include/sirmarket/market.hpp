#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "sirmarket/epidemic.hpp"
#include "sirmarket/numerics.hpp"

namespace sirmarket {

enum class SupplyForm { linear };

/// Exogenous excess supply X = phi(P) with phi(p0) = 0 and phi' > 0.
/// The linear form is phi(P) = kappa (P - p0).
struct SupplyCurve {
    double p0 = 1.0;
    double kappa = 10.0;
    SupplyForm form = SupplyForm::linear;

    void validate() const;
    bool operator==(const SupplyCurve&) const = default;
};

/// phi(p). Throws domain_error for p <= 0.
double excess_supply(double p, const SupplyCurve& curve);

/// phi^-1(x). Throws price_floor when x <= -kappa p0 (no positive price clears).
double clearing_price(double x, const SupplyCurve& curve);

enum class Scenario { myopic, depression, rational };
enum class Phase { na, pre, plateau, post };

std::string_view to_string(Scenario s) noexcept;
std::string_view to_string(Phase p) noexcept;

struct MarketState {
    EpidemicState epidemic;
    double x = 0;  ///< shares held by speculators
    double p = 0;  ///< clearing price
};

/// One grid node. z and h split the speculative position into shares held by
/// currently infected agents (z) and by cured agents waiting for the top (h);
/// outside the rational scenario z == x and h == 0.
struct MarketNode {
    double t = 0;
    MarketState state;
    double z = 0;
    double h = 0;
    Phase phase = Phase::na;
};

struct PlateauInfo {
    double t1 = 0;
    double t2 = 0;
    double p_star = 0;
};

struct MarketTrajectory {
    Scenario scenario;
    EpidemicParams params;
    SupplyCurve curve;
    Grid grid;
    std::vector<MarketNode> nodes;
    std::optional<PlateauInfo> plateau;

    std::vector<double> times() const;
    std::vector<double> prices() const;
    std::vector<double> susceptible() const;
    std::vector<double> infected() const;
};

/// Shares a newly infected agent adds to the speculative position.
/// Optimists spend their endowment: w / P. Pessimists (depression) short the
/// shares an optimist would buy at the reflected price p0^2 / P, i.e. w P / p0^2.
double entry_position(Scenario scenario, double p, const SupplyCurve& curve, double endowment) noexcept;

/// Euphoria: cured agents sell at once. x' = beta I S w / P - gamma x.
MarketTrajectory simulate_myopic(const EpidemicParams& params, const SupplyCurve& curve, const Grid& grid);

/// Mirrored mechanism for spreading pessimism, x <= 0 and P <= p0 throughout:
/// x' = -beta I S w P / p0^2 - gamma x.
MarketTrajectory simulate_depression(const EpidemicParams& params, const SupplyCurve& curve, const Grid& grid);

/// Holdings of all currently infected cohorts at grid time t, by trapezoidal
/// quadrature of the vintage integral
///   beta * int_0^t I_v S_v q(P(v)) e^{-gamma (t - v)} dv
/// over the stored samples, q being entry_position. This is an independent
/// route to the state variable z (x outside the rational scenario).
/// Throws domain_error when t is not a grid node.
double cohort_holdings_quadrature(const MarketTrajectory& trajectory, const EpidemicParams& params, double t);

/// The same trapezoidal quadrature at every node at once, O(n) via the
/// exponential-kernel recursion Q_k = e^{-gamma dt} Q_{k-1} + trapezoid panel.
std::vector<double> cohort_holdings_series(const MarketTrajectory& trajectory, const EpidemicParams& params);

}  // namespace sirmarket
