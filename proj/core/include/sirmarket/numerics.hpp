#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sirmarket/error.hpp"

namespace sirmarket {

/// Uniform time grid [t_start, t_end] with step dt. Construct through make(),
/// which enforces dt > 0, t_end > t_start and an integral step count.
class Grid {
public:
    static Grid make(double t_start, double t_end, double dt);

    double t_start() const noexcept { return t_start_; }
    double t_end() const noexcept { return t_end_; }
    double dt() const noexcept { return dt_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t nodes() const noexcept { return steps_ + 1; }

    /// Time of node k; the last node is exactly t_end.
    double time(std::size_t k) const noexcept {
        return k >= steps_ ? t_end_ : t_start_ + static_cast<double>(k) * dt_;
    }

    /// Index of the node at t, if t lies on the grid to within 1e-9 dt.
    std::optional<std::size_t> node_index(double t) const noexcept;

    /// Index of the last node at or before t (clamped to the grid).
    std::size_t floor_index(double t) const noexcept;

    /// Same span, half the step.
    Grid refined() const { return make(t_start_, t_end_, dt_ / 2); }

    bool operator==(const Grid&) const = default;

private:
    Grid(double t_start, double t_end, double dt, std::size_t steps)
        : t_start_(t_start), t_end_(t_end), dt_(dt), steps_(steps) {}

    double t_start_;
    double t_end_;
    double dt_;
    std::size_t steps_;
};

template <class Real>
constexpr bool is_finite(Real x) noexcept {
    // Works for every IEEE type, including __float128 which has no std::isfinite.
    return x == x && x - x == Real(0);
}

/// One classical RK4 step of length h from (t, y). `field(t, y)` returns dy/dt.
/// Throws IntegrationFailure if any stage derivative is non-finite.
template <class Real, std::size_t N, class Field>
std::array<Real, N> rk4_step(Field&& field, Real t, const std::array<Real, N>& y, Real h) {
    auto check = [t](const std::array<Real, N>& k) {
        for (const Real& v : k) {
            if (!is_finite(v)) {
                throw IntegrationFailure(static_cast<double>(t),
                                         "non-finite derivative at t=" +
                                             std::to_string(static_cast<double>(t)));
            }
        }
    };
    const Real half = h / Real(2);
    std::array<Real, N> tmp;

    const std::array<Real, N> k1 = field(t, y);
    check(k1);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + half * k1[i];
    const std::array<Real, N> k2 = field(t + half, tmp);
    check(k2);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + half * k2[i];
    const std::array<Real, N> k3 = field(t + half, tmp);
    check(k3);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * k3[i];
    const std::array<Real, N> k4 = field(t + h, tmp);
    check(k4);

    std::array<Real, N> out;
    const Real sixth = h / Real(6);
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = y[i] + sixth * (k1[i] + Real(2) * k2[i] + Real(2) * k3[i] + k4[i]);
        if (!is_finite(out[i])) {
            throw IntegrationFailure(static_cast<double>(t), "state overflow at t=" +
                                                                 std::to_string(static_cast<double>(t)));
        }
    }
    return out;
}

/// Fixed-step RK4 over every node of `grid`; returns one state per node,
/// both endpoints included.
template <class Real, std::size_t N, class Field>
std::vector<std::array<Real, N>> integrate_fixed_step(Field&& field, const std::array<Real, N>& y0,
                                                      const Grid& grid) {
    std::vector<std::array<Real, N>> out;
    out.reserve(grid.nodes());
    out.push_back(y0);
    const Real dt = Real(grid.dt());
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        const Real t = Real(grid.time(k));
        out.push_back(rk4_step(field, t, out.back(), dt));
    }
    return out;
}

using ScalarMap = std::function<double(double)>;

/// A sign-changing interval of a scalar map.
struct Bracket {
    double lo;
    double hi;
    double f_lo;
    double f_hi;

    /// Evaluates f at both ends; throws bracket_error unless lo < hi and the
    /// signs differ (or one end is an exact zero).
    static Bracket make(const ScalarMap& f, double lo, double hi);
};

/// Bisection with secant acceleration. Secant points are only taken strictly
/// inside the current bracket, and a bisection is forced whenever the
/// bracket failed to halve, so convergence is never slower than 2x bisection.
double find_root_bracketed(const ScalarMap& f, const Bracket& bracket, double tol_x,
                           int max_iter = 200);

/// x in [lo, hi] with |f(x) - target| <= tol * max(1, |target|), for strictly
/// increasing f. Throws range_error when target is outside [f(lo), f(hi)].
double invert_monotone(const ScalarMap& f, double target, double lo, double hi, double tol);

/// Vertex of the parabola through (-1, y_prev), (0, y_mid), (1, y_next).
/// `offset` is in units of the node spacing and is clamped to [-1, 1].
struct ParabolaVertex {
    double offset;
    double value;
};
ParabolaVertex parabolic_vertex(double y_prev, double y_mid, double y_next) noexcept;

/// Quadratic through the same three points, evaluated at `offset`.
double quadratic_interpolate(double y_prev, double y_mid, double y_next, double offset) noexcept;

/// Tolerance convention used across the engine: relative when the reference
/// magnitude exceeds 1, absolute otherwise.
inline double scaled_tolerance(double tol, double reference) noexcept {
    return tol * std::max(1.0, std::abs(reference));
}

}  // namespace sirmarket
