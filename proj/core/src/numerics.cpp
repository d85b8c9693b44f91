#include "sirmarket/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sirmarket {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::integration_failure: return "integration-failure";
        case ErrorCode::bracket_error: return "bracket-error";
        case ErrorCode::convergence_error: return "convergence-error";
        case ErrorCode::range_error: return "range-error";
        case ErrorCode::domain_error: return "domain-error";
        case ErrorCode::consistency_error: return "consistency-error";
        case ErrorCode::price_floor: return "price-floor-error";
        case ErrorCode::no_plateau: return "no-plateau-error";
        case ErrorCode::grid_too_coarse: return "grid-too-coarse-error";
        case ErrorCode::boundary_extremum: return "boundary-extremum-error";
        case ErrorCode::invalid_parameter: return "invariant-violation";
        case ErrorCode::config_syntax: return "syntax-error";
        case ErrorCode::unknown_key: return "unknown-key";
        case ErrorCode::io_failure: return "io-failure";
    }
    return "unknown";
}

Grid Grid::make(double t_start, double t_end, double dt) {
    if (!std::isfinite(t_start) || !std::isfinite(t_end) || !std::isfinite(dt)) {
        throw Error(ErrorCode::invalid_parameter, "grid bounds and step must be finite");
    }
    if (!(dt > 0)) {
        throw Error(ErrorCode::invalid_parameter, "grid step dt must be > 0");
    }
    if (!(t_end > t_start)) {
        throw Error(ErrorCode::invalid_parameter, "grid requires t_end > t_start");
    }
    const double ratio = (t_end - t_start) / dt;
    const double steps = std::round(ratio);
    if (steps < 1 || std::abs(ratio - steps) > 1e-9 * ratio) {
        std::ostringstream msg;
        msg << "grid span " << (t_end - t_start) << " is not an integral multiple of dt=" << dt;
        throw Error(ErrorCode::invalid_parameter, msg.str());
    }
    return Grid(t_start, t_end, dt, static_cast<std::size_t>(steps));
}

std::optional<std::size_t> Grid::node_index(double t) const noexcept {
    if (!std::isfinite(t)) return std::nullopt;
    const double k = std::round((t - t_start_) / dt_);
    if (k < 0 || k > static_cast<double>(steps_)) return std::nullopt;
    const auto idx = static_cast<std::size_t>(k);
    if (std::abs(time(idx) - t) > 1e-9 * dt_) return std::nullopt;
    return idx;
}

std::size_t Grid::floor_index(double t) const noexcept {
    if (!(t > t_start_)) return 0;
    if (t >= t_end_) return steps_;
    auto k = static_cast<std::size_t>(std::floor((t - t_start_) / dt_));
    k = std::min(k, steps_);
    // floor() on a quotient can land one node past t by rounding.
    while (k > 0 && time(k) > t) --k;
    while (k < steps_ && time(k + 1) <= t) ++k;
    return k;
}

namespace {

bool opposite_or_zero(double a, double b) noexcept {
    return a == 0 || b == 0 || (std::signbit(a) != std::signbit(b));
}

struct Probe {
    double x;
    double fx;
};

// Shared safeguarded secant/bisection loop. `done(bracket, last_probe)` decides
// convergence; it is called once per iteration before and after the evaluation.
template <class Done>
double solve_bracketed(const ScalarMap& f, Bracket b, int max_iter, Done&& done) {
    if (b.f_lo == 0) return b.lo;
    if (b.f_hi == 0) return b.hi;
    bool force_bisect = false;
    double best = std::abs(b.f_lo) < std::abs(b.f_hi) ? b.lo : b.hi;
    for (int iter = 0; iter < max_iter; ++iter) {
        const double width = b.hi - b.lo;
        if (auto r = done(b, std::optional<Probe>{})) return *r;

        double x = b.hi - b.f_hi * width / (b.f_hi - b.f_lo);
        if (force_bisect || !(x > b.lo && x < b.hi)) x = b.lo + width / 2;
        if (!(x > b.lo && x < b.hi)) {
            // Bracket has collapsed to adjacent doubles.
            return std::abs(b.f_lo) < std::abs(b.f_hi) ? b.lo : b.hi;
        }
        const double fx = f(x);
        if (!std::isfinite(fx)) {
            throw ConvergenceFailure(best, "non-finite function value inside bracket");
        }
        if (fx == 0) return x;
        if (std::signbit(fx) == std::signbit(b.f_lo)) {
            b.lo = x;
            b.f_lo = fx;
        } else {
            b.hi = x;
            b.f_hi = fx;
        }
        best = std::abs(b.f_lo) < std::abs(b.f_hi) ? b.lo : b.hi;
        if (auto r = done(b, std::optional<Probe>{Probe{x, fx}})) return *r;
        force_bisect = (b.hi - b.lo) > 0.5 * width;
    }
    std::ostringstream msg;
    msg << "root finder exceeded " << max_iter << " iterations; best iterate " << best;
    throw ConvergenceFailure(best, msg.str());
}

}  // namespace

Bracket Bracket::make(const ScalarMap& f, double lo, double hi) {
    if (!(lo < hi)) {
        throw Error(ErrorCode::bracket_error, "bracket requires lo < hi");
    }
    Bracket b{lo, hi, f(lo), f(hi)};
    if (!std::isfinite(b.f_lo) || !std::isfinite(b.f_hi)) {
        throw Error(ErrorCode::bracket_error, "function is not finite at the bracket ends");
    }
    if (!opposite_or_zero(b.f_lo, b.f_hi)) {
        std::ostringstream msg;
        msg << "no sign change on [" << lo << ", " << hi << "]: f(lo)=" << b.f_lo
            << ", f(hi)=" << b.f_hi;
        throw Error(ErrorCode::bracket_error, msg.str());
    }
    return b;
}

double find_root_bracketed(const ScalarMap& f, const Bracket& bracket, double tol_x, int max_iter) {
    if (!(bracket.lo < bracket.hi) || !opposite_or_zero(bracket.f_lo, bracket.f_hi)) {
        throw Error(ErrorCode::bracket_error, "invalid bracket: endpoints do not straddle a root");
    }
    if (!(tol_x > 0)) {
        throw Error(ErrorCode::invalid_parameter, "tol_x must be > 0");
    }
    return solve_bracketed(f, bracket, max_iter,
                           [tol_x](const Bracket& b, std::optional<Probe>) -> std::optional<double> {
                               if (b.hi - b.lo <= tol_x) {
                                   return std::abs(b.f_lo) < std::abs(b.f_hi) ? b.lo : b.hi;
                               }
                               return std::nullopt;
                           });
}

double invert_monotone(const ScalarMap& f, double target, double lo, double hi, double tol) {
    if (!(lo < hi)) {
        throw Error(ErrorCode::range_error, "invert_monotone requires lo < hi");
    }
    const double f_lo = f(lo);
    const double f_hi = f(hi);
    if (!(target >= f_lo && target <= f_hi)) {
        std::ostringstream msg;
        msg << "target " << target << " outside [" << f_lo << ", " << f_hi << "]";
        throw Error(ErrorCode::range_error, msg.str());
    }
    const double eps = scaled_tolerance(tol, target);
    if (std::abs(f_lo - target) <= eps) return lo;
    if (std::abs(f_hi - target) <= eps) return hi;
    auto g = [&f, target](double x) { return f(x) - target; };
    return solve_bracketed(g, Bracket{lo, hi, f_lo - target, f_hi - target}, 400,
                           [eps](const Bracket&, std::optional<Probe> p) -> std::optional<double> {
                               if (p && std::abs(p->fx) <= eps) return p->x;
                               return std::nullopt;
                           });
}

ParabolaVertex parabolic_vertex(double y_prev, double y_mid, double y_next) noexcept {
    const double curvature = y_prev - 2 * y_mid + y_next;
    if (curvature == 0) return {0.0, y_mid};
    double offset = 0.5 * (y_prev - y_next) / curvature;
    offset = std::clamp(offset, -1.0, 1.0);
    return {offset, quadratic_interpolate(y_prev, y_mid, y_next, offset)};
}

double quadratic_interpolate(double y_prev, double y_mid, double y_next, double offset) noexcept {
    const double slope = 0.5 * (y_next - y_prev);
    const double curvature = 0.5 * (y_prev - 2 * y_mid + y_next);
    return y_mid + offset * (slope + offset * curvature);
}

}  // namespace sirmarket
