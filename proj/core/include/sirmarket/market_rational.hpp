#pragma once

#include <optional>
#include <string_view>

#include "sirmarket/market.hpp"

namespace sirmarket {

/// Why the plateau phase stopped.
enum class PlateauEnd {
    absorbed,       ///< rational inventory fully passed on while net buying was still positive
    flow_reversed,  ///< net buying of infected agents turned negative with inventory left
    horizon,        ///< neither happened before t_end
};

std::string_view to_string(PlateauEnd e) noexcept;

struct PlateauDiagnosis {
    PlateauEnd end = PlateauEnd::horizon;
    double t1 = 0;
    double t2 = 0;       ///< end of the plateau phase
    double p_star = 0;   ///< price held during the plateau, phi^-1(z + h) at t1
    double h_at_end = 0; ///< rational inventory when the plateau ended (liquidated if > 0)
    double flow_at_end = 0;
    /// Rational inventory at the moment net buying reverses, with the plateau
    /// continued past absorption (h allowed negative). Negative means t1 is too
    /// early, positive too late; zero closes both plateau conditions at once.
    double shooting_residual = 0;
    std::optional<double> t_absorbed;
    std::optional<double> t_reversed;
};

struct RationalRun {
    MarketTrajectory trajectory;
    PlateauDiagnosis diagnosis;
};

/// Three-phase run for a given selling date t1 (any time in the grid span):
///  1. [0, t1]  no selling: z' = b I S w / P - g z, h' = g z, P = phi^-1(z + h)
///  2. plateau  P = P*:     z' = b I S w / P* - g z, h' = -(b I S w / P* - g z)
///  3. after    h = 0,      z' = b I S w / P - g z,  P = phi^-1(z)
/// Switch times are resolved inside grid intervals by split RK4 steps.
RationalRun simulate_re_given_t1(const EpidemicParams& params, const SupplyCurve& curve, double t1,
                                 const Grid& grid);

/// Net buying of infected agents at a given price, b I S w / P - g z.
double net_infected_flow(const EpidemicState& state, double z, double p, const EpidemicParams& params) noexcept;

struct PlateauSolution {
    double t1 = 0;
    double t2 = 0;
    double p_star = 0;
    double residual_flow = 0;        ///< b I S w / P* - g z at t2
    double residual_absorption = 0;  ///< h(t2)
    int iterations = 0;              ///< shooting evaluations
    PlateauEnd end = PlateauEnd::absorbed;
};

/// Shooting on t1: bisection over grid nodes on the sign of the diagnosis
/// (absorbed first -> later t1, flow reversed first -> earlier t1), then
/// continuous refinement inside the final node interval. `tol` is the
/// relative closure tolerance: h(t2) <= tol phi(P*) and
/// |flow(t2)| <= tol gamma phi(P*).
/// Errors: no_plateau when no boom exists or the diagnosis never changes sign;
/// grid_too_coarse when the diagnosis is not monotone in t1 or the residuals
/// cannot be met at this dt.
PlateauSolution solve_plateau(const EpidemicParams& params, const SupplyCurve& curve, const Grid& grid,
                              double tol = 1e-4);

/// solve_plateau followed by the stitched trajectory at the solved t1.
MarketTrajectory re_price_path(const EpidemicParams& params, const SupplyCurve& curve, const Grid& grid,
                               double tol = 1e-4);

}  // namespace sirmarket
