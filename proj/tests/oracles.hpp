#pragma once

// Test-only reference solvers. Nothing here shares code with the engine: an
// adaptive Dormand-Prince 5(4) integrator and the models written out again.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

template <std::size_t N>
using Vec = std::array<double, N>;

template <std::size_t N, class F>
Vec<N> dopri_advance(F&& f, Vec<N> y, double t0, double t1, double rtol = 1e-12, double atol = 1e-12) {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    double t = t0;
    double h = std::min(1e-3, t1 - t0);
    if (h <= 0) return y;
    auto axpy = [](const Vec<N>& base, std::initializer_list<std::pair<double, const Vec<N>*>> terms, double hh) {
        Vec<N> out = base;
        for (const auto& [c, k] : terms) {
            for (std::size_t i = 0; i < N; ++i) out[i] += hh * c * (*k)[i];
        }
        return out;
    };
    Vec<N> k1 = f(t, y);
    for (int guard = 0; t < t1; ++guard) {
        if (guard > 50'000'000) throw std::runtime_error("dopri: too many steps");
        h = std::min(h, t1 - t);
        const Vec<N> k2 = f(t + c2 * h, axpy(y, {{a21, &k1}}, h));
        const Vec<N> k3 = f(t + c3 * h, axpy(y, {{a31, &k1}, {a32, &k2}}, h));
        const Vec<N> k4 = f(t + c4 * h, axpy(y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, h));
        const Vec<N> k5 = f(t + c5 * h, axpy(y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h));
        const Vec<N> k6 = f(t + h, axpy(y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h));
        const Vec<N> y5 = axpy(y, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, h);
        const Vec<N> k7 = f(t + h, y5);
        double err = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
            err = std::max(err, std::abs(e) / sc);
        }
        if (err <= 1.0) {
            t = (h == t1 - t) ? t1 : t + h;
            y = y5;
            k1 = k7;  // FSAL
        }
        const double factor = err == 0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= factor;
    }
    return y;
}

/// Samples of the solution at each of `times` (ascending, first = start).
template <std::size_t N, class F>
std::vector<Vec<N>> dopri_samples(F&& f, Vec<N> y0, const std::vector<double>& times) {
    std::vector<Vec<N>> out{y0};
    for (std::size_t k = 1; k < times.size(); ++k) out.push_back(dopri_advance<N>(f, out.back(), times[k - 1], times[k]));
    return out;
}

struct Sir {
    double beta, gamma;
    Vec<3> operator()(double, const Vec<3>& y) const {
        const double inf = beta * y[0] * y[1];
        return {-inf, inf - gamma * y[1], gamma * y[1]};
    }
};

/// S, I, R and speculative holdings x with linear clearing P = p0 + x / kappa.
struct Myopic {
    double beta, gamma, w, p0, kappa;
    double price(double x) const { return p0 + x / kappa; }
    Vec<4> operator()(double, const Vec<4>& y) const {
        const double inf = beta * y[0] * y[1];
        return {-inf, inf - gamma * y[1], gamma * y[1], inf * w / price(y[3]) - gamma * y[3]};
    }
};

/// Cumulative buying with no selling: total holdings y[3] set the price.
struct Accumulate {
    double beta, gamma, w, p0, kappa;
    Vec<4> operator()(double, const Vec<4>& y) const {
        const double inf = beta * y[0] * y[1];
        return {-inf, inf - gamma * y[1], gamma * y[1], inf * w / (p0 + y[3] / kappa)};
    }
};

/// R once infections have died out (I < 1e-12).
inline double final_recovered(double beta, double gamma, Vec<3> y) {
    double t = 0;
    while (y[1] > 1e-12) {
        y = dopri_advance<3>(Sir{beta, gamma}, y, t, t + 100);
        t += 100;
        if (t > 1e6) throw std::runtime_error("final_recovered: no die-out");
    }
    return y[2];
}

/// Sum of a sampled integrand by the trapezoid rule.
inline double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
    double s = 0;
    for (std::size_t k = 1; k < t.size(); ++k) s += 0.5 * (t[k] - t[k - 1]) * (f[k] + f[k - 1]);
    return s;
}

}  // namespace oracle
