#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "qpulse/dynamics.hpp"
#include "qpulse/greens.hpp"
#include "qpulse/numerics.hpp"
#include "qpulse/params.hpp"
#include "qpulse/pulse.hpp"

namespace qpulse {

// Saturation value of the battery excitation together with the numerically
// integrated kernel norm that must reproduce it.
struct ChargingBound {
    double bound;           // gamma_pulse / (gamma_pulse + gamma_env)
    double kernel_norm_sq;  // f^2 Gamma int_0^inf G^2
};

struct MinTimeResult {
    double t_min;
    double p_threshold;
    RootResult solver;
    double asymptotic_estimate;  // ln(1 / (1 - q)) / gamma
    // closed-form transcendental solve, present at the exceptional point
    std::optional<double> t_min_closed_ep;
};

struct PowerResult {
    double t_star;
    double p_at_star;
    double power;   // p(t_star) / t_star
    double x_star;  // gamma * t_star
    // every stationarity root found; off the exceptional point |G|^2 can
    // oscillate and produce several
    std::vector<double> stationary_candidates;
};

inline ChargingBound charging_bound(const SystemParams& p, double tol = 1e-12) {
    ChargingBound cb{};
    cb.bound = p.gamma_pulse / (p.gamma_pulse + p.gamma_env);
    const double inf = std::numeric_limits<double>::infinity();
    cb.kernel_norm_sq = p.coupling * p.coupling * p.gamma_pulse *
                        green_sq_integral(p, inf, tol);
    if (std::abs(cb.kernel_norm_sq - cb.bound) > 1e-6)
        throw error("charging_bound: kernel norm disagrees with the analytic bound");
    return cb;
}

enum class PMethod { automatic, quadrature, closed_form_ep };

// Battery charge delivered by the duration-T truncated optimal pulse,
// p(T) = f^2 Gamma int_0^T G(u)^2 du. Monotone in T, saturating at the bound.
inline double p_of_duration(const SystemParams& p, double duration,
                            PMethod method = PMethod::automatic,
                            double tol = 1e-12) {
    if (duration < 0.0) throw validation_error("p_of_duration: duration < 0");
    if (duration == 0.0) return 0.0;
    const RegimeData rd = classify_regime(p);
    const bool ep = rd.regime == Regime::exceptional_point;
    if (method == PMethod::closed_form_ep && !ep)
        throw validation_error("p_of_duration: closed form only valid at the EP");
    if (ep && method != PMethod::quadrature) {
        const double bound = p.gamma_pulse / (p.gamma_pulse + p.gamma_env);
        const double x = rd.gamma * duration;
        double deficit;
        if (x < 1e-2) {
            deficit = x * x * x * (1.0 / 6.0 - x / 8.0 + x * x / 20.0 - x * x * x / 72.0);
        } else {
            deficit = 1.0 - std::exp(-x) * (1.0 + x + 0.5 * x * x);
        }
        return bound * deficit;
    }
    return p.coupling * p.coupling * p.gamma_pulse *
           green_sq_integral(p, duration, tol);
}

// Truncated matched-filter pulse, rescaled so the cut envelope still carries
// unit norm. The raw truncated norm is p(T) / bound, so the factor approaches
// one as the truncation window grows.
inline PulseSpec optimal_pulse(const SystemParams& p, double truncation) {
    if (!(truncation > 0.0))
        throw validation_error("optimal_pulse: truncation must be positive");
    const double bound = p.gamma_pulse / (p.gamma_pulse + p.gamma_env);
    const double raw_norm_sq =
        p_of_duration(p, truncation, PMethod::automatic, 1e-13) / bound;
    const double scale = raw_norm_sq > 0.0 ? 1.0 / std::sqrt(raw_norm_sq) : 1.0;
    return make_optimal_truncated(p, truncation, scale);
}

// Smallest pulse duration whose truncated optimal pulse reaches p_th.
inline MinTimeResult min_time(const SystemParams& p, double p_th,
                              double root_tol = default_root_tol) {
    const double bound = p.gamma_pulse / (p.gamma_pulse + p.gamma_env);
    if (!(p_th > 0.0))
        throw validation_error("min_time: threshold must be positive");
    const double q = p_th / bound;
    if (q >= 1.0)
        throw threshold_unreachable_error(
            "min_time: threshold at or above the saturation bound "
            "is approached only asymptotically");
    const RegimeData rd = classify_regime(p);
    const double gamma = rd.gamma;

    // bracket [eps, X] with X doubling until p(X) clears the threshold;
    // p is monotone so this terminates
    const double lo = 1e-9 / gamma;
    double hi = 10.0 / gamma;
    auto g = [&](double T) {
        return p_of_duration(p, T, PMethod::quadrature, 1e-13) - p_th;
    };
    while (g(hi) <= 0.0) hi *= 2.0;

    MinTimeResult out{};
    out.p_threshold = p_th;
    out.solver = find_root(g, lo, hi, root_tol);
    out.t_min = out.solver.root;
    out.asymptotic_estimate = std::log(1.0 / (1.0 - q)) / gamma;
    if (rd.regime == Regime::exceptional_point) {
        auto h = [&](double x) {
            return std::exp(-x) * (1.0 + x + 0.5 * x * x) - (1.0 - q);
        };
        double xhi = 10.0;
        while (h(xhi) >= 0.0) xhi *= 2.0;
        out.t_min_closed_ep = find_root(h, 1e-12, xhi, 1e-14).root / gamma;
    }
    return out;
}

// Duration maximizing the charging power P(T) = p(T) / T. Solved through the
// stationarity condition p'(T) T = p(T) with p'(T) = f^2 Gamma G(T)^2 on the
// dimensionless variable x = gamma T; all sign changes are bracketed and the
// best candidate wins. A golden-section pass on p(T)/T backs up the root scan
// when no bracket shows up.
inline PowerResult power_optimal(const SystemParams& p) {
    const RegimeData rd = classify_regime(p);
    const double gamma = rd.gamma;
    const double f2G = p.coupling * p.coupling * p.gamma_pulse;
    auto p_of = [&](double T) {
        return p_of_duration(p, T, PMethod::automatic, 1e-13);
    };
    auto stationarity = [&](double x) {
        const double T = x / gamma;
        const double G = green(rd, T).g;
        return f2G * G * G * T - p_of(T);
    };
    PowerResult out{};
    // scan for sign changes of the stationarity function; the scan keeps its
    // own running p integral so |G|^2 is evaluated once per node, and its
    // density tracks the Rabi frequency so no oscillation lobe is skipped
    const double x_max = 80.0;
    const double osc = rd.omega_rabi ? std::max(1.0, *rd.omega_rabi / gamma) : 1.0;
    const int n_scan = std::clamp(int(400 * osc), 400, 8000);
    double x_prev = 1e-3, s_prev = stationarity(x_prev);
    double p_run = p_of(x_prev / gamma);
    auto g2 = [&](double u) {
        const double G = green(rd, u).g;
        return f2G * G * G;
    };
    for (int i = 1; i <= n_scan; ++i) {
        const double x = 1e-3 + (x_max - 1e-3) * double(i) / n_scan;
        p_run += integrate(g2, x_prev / gamma, x / gamma, 1e-13).value;
        const double T = x / gamma;
        const double s = g2(T) * T - p_run;
        if ((s_prev > 0.0 && s <= 0.0) || (s_prev < 0.0 && s >= 0.0)) {
            try {
                const double root =
                    find_root(stationarity, x_prev, x, 1e-12).root;
                out.stationary_candidates.push_back(root / gamma);
            } catch (const no_sign_change_error&) {
                // grazing contact of the incremental scan, not a crossing
            }
        }
        x_prev = x;
        s_prev = s;
    }
    double best_T = 0.0, best_P = -1.0;
    for (double T : out.stationary_candidates) {
        const double P = p_of(T) / T;
        if (P > best_P) {
            best_P = P;
            best_T = T;
        }
    }
    if (out.stationary_candidates.empty()) {
        // golden-section fallback on p(T)/T
        double a = 0.1 / gamma, b = x_max / gamma;
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        auto val = [&](double T) { return p_of(T) / T; };
        for (int i = 0; i < 200 && (b - a) > 1e-12 / gamma; ++i) {
            const double c = b - gr * (b - a);
            const double d = a + gr * (b - a);
            if (val(c) > val(d))
                b = d;
            else
                a = c;
        }
        best_T = 0.5 * (a + b);
        best_P = val(best_T);
        if (!(best_P > 0.0))
            throw no_interior_maximum_error(
                "power_optimal: no stationary point or interior maximum found");
        out.stationary_candidates.push_back(best_T);
    }
    out.t_star = best_T;
    out.p_at_star = p_of(best_T);
    out.power = best_P;
    out.x_star = gamma * best_T;
    return out;
}

}  // namespace qpulse
