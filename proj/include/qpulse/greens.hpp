#pragma once

#include <cmath>
#include <limits>

#include "qpulse/numerics.hpp"
#include "qpulse/params.hpp"

namespace qpulse {

// Causal impulse response of the charger-battery pair. G(t < 0) = 0,
// G(0) = 0, G'(0) = 1 in every regime.
struct GreensEval {
    double g;        // G(t), units of time
    double g_prime;  // G'(t), dimensionless
    Regime regime_used;
};

inline GreensEval green(const RegimeData& rd, double t) {
    if (t < 0.0) return {0.0, 0.0, rd.regime};
    const double gamma = rd.gamma;
    const double env = std::exp(-0.5 * gamma * t);
    switch (rd.regime) {
        case Regime::exceptional_point:
            return {t * env, env * (1.0 - 0.5 * gamma * t), rd.regime};
        case Regime::underdamped: {
            const double om = *rd.omega_rabi;
            const double s = std::sin(om * t), c = std::cos(om * t);
            return {env * s / om, env * (c - 0.5 * gamma * s / om), rd.regime};
        }
        case Regime::overdamped: {
            const double sk = std::sqrt(rd.kappa);
            const double arg = 0.5 * sk * t;
            if (arg > 700.0) {
                // sinh would overflow; the decaying r- exponential is
                // negligible, so switch to the explicit pole difference
                const auto [rp, rm] = *rd.roots;
                const double ep = std::exp(rp * t);
                const double em = std::exp(rm * t);
                return {(ep - em) / sk, (rp * ep - rm * em) / sk, rd.regime};
            }
            const double sh = std::sinh(arg), ch = std::cosh(arg);
            return {2.0 * env * sh / sk, env * (ch - gamma * sh / sk), rd.regime};
        }
    }
    return {0.0, 0.0, rd.regime};
}

inline GreensEval green(const SystemParams& p, double t) {
    return green(classify_regime(p), t);
}

namespace detail {

// Slowest decay rate of |G|^2. The overdamped response relaxes at
// gamma - sqrt(kappa), far below gamma when the coupling is weak.
inline double slow_rate(const RegimeData& rd) {
    if (rd.regime == Regime::overdamped) return rd.gamma - std::sqrt(rd.kappa);
    return rd.gamma;
}

}  // namespace detail

// int_0^upper G(u)^2 du. Pass upper = infinity for the full norm integral;
// the tail is cut where exp(-rate * u) has decayed to ~1e-18 of the mass.
// At the exceptional point the closed form
// int_0^T u^2 exp(-gamma u) du = (2 - exp(-gamma T)(2 + 2 gamma T
// + (gamma T)^2)) / gamma^3 avoids quadrature entirely.
inline double green_sq_integral(const SystemParams& p, double upper,
                                double tol = 1e-12) {
    if (upper < 0.0) throw validation_error("green_sq_integral: upper < 0");
    if (upper == 0.0) return 0.0;
    const RegimeData rd = classify_regime(p);
    if (rd.regime == Regime::exceptional_point) {
        const double g = rd.gamma;
        if (!std::isfinite(upper)) return 2.0 / (g * g * g);
        const double x = g * upper;
        // 1 - exp(-x)(1 + x + x^2/2), evaluated through expm1 for small x
        double deficit;
        if (x < 1e-2) {
            // series: x^3/6 - x^4/8 + x^5/20 - ...
            deficit = x * x * x * (1.0 / 6.0 - x / 8.0 + x * x / 20.0 - x * x * x / 72.0);
        } else {
            deficit = 1.0 - std::exp(-x) * (1.0 + x + 0.5 * x * x);
        }
        return 2.0 / (g * g * g) * deficit;
    }
    const double rate = detail::slow_rate(rd);
    const double cutoff = 42.0 / rate;
    const double hi = std::isfinite(upper) ? upper : cutoff;
    auto g2 = [&](double u) {
        const double g = green(rd, u).g;
        return g * g;
    };
    // long ranges are pre-split so the first Kronrod panel is not asked to
    // resolve a sharply localized integrand
    double total = 0.0;
    double lo = 0.0;
    double seg = 8.0 / rd.gamma;
    while (lo < hi) {
        const double next = std::min(hi, lo + seg);
        total += integrate(g2, lo, next, tol).value;
        lo = next;
        seg *= 2.0;
    }
    return total;
}

}  // namespace qpulse
