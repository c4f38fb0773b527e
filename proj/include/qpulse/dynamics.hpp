#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "qpulse/greens.hpp"
#include "qpulse/numerics.hpp"
#include "qpulse/params.hpp"
#include "qpulse/pulse.hpp"

namespace qpulse {

enum class TraceMethod { closed_form, convolution, ode_oracle };

// Battery amplitudes on a time grid. alpha0 is the TLS excited amplitude,
// alpha1 the battery excited amplitude; |alpha0|^2 + |alpha1|^2 <= 1.
struct AmplitudeTrace {
    std::vector<double> times;
    std::vector<cplx> alpha0;
    std::vector<cplx> alpha1;
    std::vector<double> energy;     // omega_b |alpha1|^2
    std::vector<double> ergotropy;  // omega_b (2|alpha1|^2 - 1) above half filling
    TraceMethod method = TraceMethod::closed_form;
};

// Decomposition of the conserved unit excitation at one instant.
struct NormLedger {
    double p_tls;
    double p_battery;
    double p_emitted_pulse;
    double p_emitted_env;
    double total;
};

struct Amplitudes {
    cplx alpha0;
    cplx alpha1;
};

namespace detail {

struct KernelRoots {
    bool ep;
    double gamma;
    cplx rp, rm, d;  // d = rp - rm
};

inline KernelRoots kernel_roots(const RegimeData& rd) {
    KernelRoots kr{};
    kr.gamma = rd.gamma;
    if (rd.regime == Regime::exceptional_point) {
        kr.ep = true;
        kr.rp = kr.rm = -0.5 * rd.gamma;
        kr.d = 0.0;
        return kr;
    }
    kr.ep = false;
    const cplx sk = (rd.kappa > 0.0) ? cplx(std::sqrt(rd.kappa), 0.0)
                                     : cplx(0.0, std::sqrt(-rd.kappa));
    kr.rp = 0.5 * (-rd.gamma + sk);
    kr.rm = 0.5 * (-rd.gamma - sk);
    kr.d = sk;
    return kr;
}

// Assemble both amplitudes from the two pole components
// I(r) = int exp(r (t - tau)) xi(tau) dtau.
inline Amplitudes from_pole_integrals(const SystemParams& p, const KernelRoots& kr,
                                      cplx Ip, cplx Im) {
    const double sqg = std::sqrt(p.gamma_pulse);
    const cplx a1 = cplx(0.0, 1.0) * p.coupling * sqg * (Ip - Im) / kr.d;
    const cplx a0 = -sqg * (kr.rp * Ip - kr.rm * Im) / kr.d;
    return {a0, a1};
}

// Assemble both amplitudes at the exceptional point from
// J0 = int exp(-gamma (t - tau) / 2) xi dtau and
// J1 = int (t - tau) exp(-gamma (t - tau) / 2) xi dtau.
inline Amplitudes from_ep_integrals(const SystemParams& p, double gamma, cplx J0,
                                    cplx J1) {
    const double sqg = std::sqrt(p.gamma_pulse);
    const cplx a1 = cplx(0.0, 1.0) * p.coupling * sqg * J1;
    const cplx a0 = -sqg * (J0 - 0.5 * gamma * J1);
    return {a0, a1};
}

inline Amplitudes closed_square(const SystemParams& p, const KernelRoots& kr,
                                const SquarePulse& sq, double t) {
    if (t <= 0.0) return {0.0, 0.0};
    const double lo = 0.0, hi = std::min(t, sq.duration);
    const double amp = 1.0 / std::sqrt(sq.duration);
    if (!kr.ep) {
        auto I = [&](cplx r) {
            return amp * powexp_window(0, lo, hi, r * (t - lo), r * (t - hi), -r);
        };
        return from_pole_integrals(p, kr, I(kr.rp), I(kr.rm));
    }
    const double g = kr.gamma;
    auto pexp = [&](double tau) { return cplx(-0.5 * g * (t - tau), 0.0); };
    const cplx M0 = amp * powexp_window(0, lo, hi, pexp(lo), pexp(hi), 0.5 * g);
    const cplx M1 = amp * powexp_window(1, lo, hi, pexp(lo), pexp(hi), 0.5 * g);
    return from_ep_integrals(p, g, M0, t * M0 - M1);
}

inline Amplitudes closed_decay_exp(const SystemParams& p, const KernelRoots& kr,
                                   const DecayExpPulse& de, double t) {
    if (t <= 0.0) return {0.0, 0.0};
    const double s = 0.5 / de.timescale;
    const double amp = 1.0 / std::sqrt(de.timescale);
    const double lo = 0.0, hi = t;
    if (!kr.ep) {
        auto I = [&](cplx r) {
            // p(tau) = r (t - tau) - s tau
            return amp * powexp_window(0, lo, hi, r * t, cplx(-s * t, 0.0), -(r + s));
        };
        return from_pole_integrals(p, kr, I(kr.rp), I(kr.rm));
    }
    const double g = kr.gamma;
    auto pexp = [&](double tau) {
        return cplx(-0.5 * g * (t - tau) - s * tau, 0.0);
    };
    const cplx m = cplx(0.5 * g - s, 0.0);
    const cplx M0 = amp * powexp_window(0, lo, hi, pexp(lo), pexp(hi), m);
    const cplx M1 = amp * powexp_window(1, lo, hi, pexp(lo), pexp(hi), m);
    return from_ep_integrals(p, g, M0, t * M0 - M1);
}

// exp(r t + T^2 r^2) erfc(-(t + 2 T^2 r) / (2T)) without cancellation: in the
// upper half plane the product collapses onto exp(-t^2/4T^2) w(i z), which is
// bounded; otherwise one reflection of w restores it.
inline cplx gauss_erfc_product(cplx r, double t, double T) {
    const cplx z = -(t + 2.0 * T * T * r) / (2.0 * T);
    const cplx zeta = cplx(0.0, 1.0) * z;
    const double envelope = std::exp(-0.25 * t * t / (T * T));
    if (zeta.imag() >= 0.0) return envelope * faddeeva(zeta);
    return 2.0 * std::exp(r * t + T * T * r * r) - envelope * faddeeva(-zeta);
}

inline Amplitudes closed_gaussian(const SystemParams& p, const KernelRoots& kr,
                                  const GaussianPulse& gp, double t) {
    const double T = gp.width;
    const double Cg = std::pow(2.0 * std::numbers::pi * T * T, -0.25);
    const double spT = std::sqrt(std::numbers::pi) * T;
    if (!kr.ep) {
        auto I = [&](cplx r) { return Cg * spT * gauss_erfc_product(r, t, T); };
        return from_pole_integrals(p, kr, I(kr.rp), I(kr.rm));
    }
    const double g = kr.gamma;
    const cplx P = gauss_erfc_product(cplx(-0.5 * g, 0.0), t, T);
    const double mshift = t - g * T * T;
    const cplx J0 = Cg * spT * P;
    const cplx J1 =
        Cg * (2.0 * T * T * std::exp(-0.25 * t * t / (T * T)) + spT * mshift * P);
    return from_ep_integrals(p, g, J0, J1);
}

inline Amplitudes closed_delta(const SystemParams& p, const RegimeData& rd,
                               const DeltaPulse& dp, double t) {
    if (t < dp.arrival) return {0.0, 0.0};
    const GreensEval ge = green(rd, t - dp.arrival);
    return {cplx(-ge.g_prime, 0.0), cplx(0.0, 1.0) * p.coupling * ge.g};
}

// Truncated optimal pulse driving a system whose parameters may differ from
// the ones it was shaped for. Everything reduces to windowed exponential
// moments over tau in [-duration, min(t, 0)].
inline Amplitudes closed_optimal(const SystemParams& p, const RegimeData& rd_sys,
                                 const OptimalTruncatedPulse& op, double t) {
    const double lo = -op.duration;
    const double hi = std::min(t, 0.0);
    if (hi <= lo) return {0.0, 0.0};
    const KernelRoots ks = kernel_roots(rd_sys);
    const RegimeData rd_p = classify_regime(op.system);
    const KernelRoots kp = kernel_roots(rd_p);
    const double A = op.scale * std::sqrt(2.0 * rd_p.gamma) * op.system.coupling;

    if (!ks.ep && !kp.ep) {
        auto I = [&](cplx r) {
            cplx tot = 0.0;
            for (auto [sb, rb] : {std::pair<double, cplx>{1.0, kp.rp},
                                  std::pair<double, cplx>{-1.0, kp.rm}}) {
                const cplx p_lo = r * (t - lo) - rb * lo;
                const cplx p_hi = r * (t - hi) - rb * hi;
                tot += sb * powexp_window(0, lo, hi, p_lo, p_hi, -(r + rb));
            }
            return A * tot / kp.d;
        };
        return from_pole_integrals(p, ks, I(ks.rp), I(ks.rm));
    }
    if (ks.ep && !kp.ep) {
        const double g = ks.gamma;
        cplx M0 = 0.0, M1 = 0.0;  // moments of exp kernel against the pulse
        for (auto [sb, rb] : {std::pair<double, cplx>{1.0, kp.rp},
                              std::pair<double, cplx>{-1.0, kp.rm}}) {
            auto pexp = [&](double tau) { return -0.5 * g * (t - tau) - rb * tau; };
            const cplx m = 0.5 * g - rb;
            M0 += sb * powexp_window(0, lo, hi, pexp(lo), pexp(hi), m);
            M1 += sb * powexp_window(1, lo, hi, pexp(lo), pexp(hi), m);
        }
        const cplx J0 = A * M0 / kp.d;
        const cplx J1 = A * (t * M0 - M1) / kp.d;
        return from_ep_integrals(p, g, J0, J1);
    }
    if (!ks.ep && kp.ep) {
        const double gp_ = kp.gamma;
        auto I = [&](cplx r) {
            auto pexp = [&](double tau) { return r * (t - tau) + 0.5 * gp_ * tau; };
            const cplx m = 0.5 * gp_ - r;
            return -A * powexp_window(1, lo, hi, pexp(lo), pexp(hi), m);
        };
        return from_pole_integrals(p, ks, I(ks.rp), I(ks.rm));
    }
    const double gs = ks.gamma, gp_ = kp.gamma;
    auto pexp = [&](double tau) {
        return cplx(-0.5 * gs * (t - tau) + 0.5 * gp_ * tau, 0.0);
    };
    const cplx m = cplx(0.5 * (gs + gp_), 0.0);
    const cplx M1 = powexp_window(1, lo, hi, pexp(lo), pexp(hi), m);
    const cplx M2 = powexp_window(2, lo, hi, pexp(lo), pexp(hi), m);
    const cplx J0 = -A * M1;
    const cplx J1 = A * (-t * M1 + M2);
    return from_ep_integrals(p, gs, J0, J1);
}

}  // namespace detail

// Regime-matched closed-form amplitudes. Sampled envelopes have no closed
// form; use the convolution engine for those.
inline Amplitudes closed_form_amplitudes(const SystemParams& p,
                                         const PulseSpec& spec, double t) {
    const RegimeData rd = classify_regime(p);
    const detail::KernelRoots kr = detail::kernel_roots(rd);
    return std::visit(
        [&](const auto& s) -> Amplitudes {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SquarePulse>)
                return detail::closed_square(p, kr, s, t);
            else if constexpr (std::is_same_v<T, DecayExpPulse>)
                return detail::closed_decay_exp(p, kr, s, t);
            else if constexpr (std::is_same_v<T, GaussianPulse>)
                return detail::closed_gaussian(p, kr, s, t);
            else if constexpr (std::is_same_v<T, DeltaPulse>)
                return detail::closed_delta(p, rd, s, t);
            else if constexpr (std::is_same_v<T, OptimalTruncatedPulse>)
                return detail::closed_optimal(p, rd, s, t);
            else
                throw unsupported_shape_error(
                    "closed form unavailable for sampled pulses; use the "
                    "convolution engine");
        },
        spec.shape);
}

inline cplx amplitude_closed_form(const SystemParams& p, const PulseSpec& spec,
                                  double t) {
    return closed_form_amplitudes(p, spec, t).alpha1;
}

inline bool has_closed_form(const PulseSpec& spec) {
    return !std::holds_alternative<SampledPulse>(spec.shape);
}

// Fills stored energy and the piecewise ergotropy from the amplitudes.
inline AmplitudeTrace energy_and_ergotropy(AmplitudeTrace trace,
                                           const SystemParams& p) {
    const std::size_t n = trace.times.size();
    trace.energy.resize(n);
    trace.ergotropy.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pop = std::norm(trace.alpha1[i]);
        trace.energy[i] = p.omega_b * pop;
        trace.ergotropy[i] = pop > 0.5 ? p.omega_b * (2.0 * pop - 1.0) : 0.0;
    }
    return trace;
}

inline AmplitudeTrace closed_form_trace(const SystemParams& p,
                                        const PulseSpec& spec,
                                        std::vector<double> times) {
    AmplitudeTrace tr;
    tr.times = std::move(times);
    tr.method = TraceMethod::closed_form;
    tr.alpha0.reserve(tr.times.size());
    tr.alpha1.reserve(tr.times.size());
    for (double t : tr.times) {
        const Amplitudes a = closed_form_amplitudes(p, spec, t);
        tr.alpha0.push_back(a.alpha0);
        tr.alpha1.push_back(a.alpha1);
    }
    return energy_and_ergotropy(std::move(tr), p);
}

namespace detail {

// Quadrature windows for int_{support}^{t} of kernel * pulse, split at
// envelope breakpoints.
inline std::vector<double> convolution_splits(const PulseSpec& spec, double t) {
    const PulseSupport sup = pulse_support(spec);
    const double hi = std::min(t, sup.hi);
    std::vector<double> pts;
    for (double b : intensity_splits(spec))
        if (b > sup.lo && b < hi) pts.push_back(b);
    pts.push_back(sup.lo);
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace detail

// Single-time amplitudes by adaptive quadrature of the kernel convolution.
inline Amplitudes convolution_amplitudes(const SystemParams& p,
                                         const PulseSpec& spec, double t,
                                         double tol = default_quad_tol) {
    if (std::holds_alternative<DeltaPulse>(spec.shape))
        throw delta_not_pointwise_error(
            "convolution requires a pointwise-evaluable envelope");
    const RegimeData rd = classify_regime(p);
    const PulseSupport sup = pulse_support(spec);
    if (t <= sup.lo) return {0.0, 0.0};
    const auto pts = detail::convolution_splits(spec, t);
    cplx i0 = 0.0, i1 = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (!(pts[i] < pts[i + 1])) continue;
        i1 += integrate(
                  [&](double tau) {
                      return green(rd, t - tau).g * pulse_value(spec, tau);
                  },
                  pts[i], pts[i + 1], tol)
                  .value;
        i0 += integrate(
                  [&](double tau) {
                      return green(rd, t - tau).g_prime * pulse_value(spec, tau);
                  },
                  pts[i], pts[i + 1], tol)
                  .value;
    }
    const double sqg = std::sqrt(p.gamma_pulse);
    return {-sqg * i0, cplx(0.0, 1.0) * p.coupling * sqg * i1};
}

inline AmplitudeTrace amplitude_convolution(const SystemParams& p,
                                            const PulseSpec& spec,
                                            std::vector<double> times,
                                            double tol = default_quad_tol) {
    AmplitudeTrace tr;
    tr.times = std::move(times);
    tr.method = TraceMethod::convolution;
    tr.alpha0.reserve(tr.times.size());
    tr.alpha1.reserve(tr.times.size());
    for (double t : tr.times) {
        const Amplitudes a = convolution_amplitudes(p, spec, t, tol);
        tr.alpha0.push_back(a.alpha0);
        tr.alpha1.push_back(a.alpha1);
    }
    return energy_and_ergotropy(std::move(tr), p);
}

namespace detail {

// Dormand-Prince 5(4) with PI-free step control on the two-amplitude state.
struct Dopri5 {
    const SystemParams& p;
    const PulseSpec& spec;
    double rtol, atol;
    double gamma;

    struct State {
        cplx a0, a1;
    };

    State rhs(double t, const State& y) const {
        const cplx xi = pulse_value(spec, t);
        const cplx i(0.0, 1.0);
        return {-i * p.coupling * y.a1 - std::sqrt(p.gamma_pulse) * xi -
                    gamma * y.a0,
                -i * p.coupling * y.a0};
    }

    // advances y from ta to tb, assuming the envelope is smooth inside
    void advance(State& y, double ta, double tb) const {
        const double eps = std::numeric_limits<double>::epsilon();
        // intervals at rounding scale (adjacent breakpoints) are a no-op
        if (tb - ta <= 64.0 * eps * std::max(1.0, std::abs(ta))) return;
        double t = ta;
        double h = std::min(tb - ta, 0.1 / gamma);
        while (t < tb) {
            h = std::min(h, tb - t);
            if (h < 16.0 * eps * std::max(1.0, std::abs(t)))
                throw step_size_underflow_error(
                    "ode oracle: step size underflow");
            const State k1 = rhs(t, y);
            auto lin = [&](std::initializer_list<std::pair<double, const State*>>
                               terms) {
                State s = y;
                for (auto [c, k] : terms) {
                    s.a0 += h * c * k->a0;
                    s.a1 += h * c * k->a1;
                }
                return s;
            };
            const State k2 = rhs(t + h / 5.0, lin({{1.0 / 5.0, &k1}}));
            const State k3 =
                rhs(t + 3.0 * h / 10.0, lin({{3.0 / 40.0, &k1}, {9.0 / 40.0, &k2}}));
            const State k4 = rhs(t + 4.0 * h / 5.0,
                                 lin({{44.0 / 45.0, &k1},
                                      {-56.0 / 15.0, &k2},
                                      {32.0 / 9.0, &k3}}));
            const State k5 = rhs(t + 8.0 * h / 9.0,
                                 lin({{19372.0 / 6561.0, &k1},
                                      {-25360.0 / 2187.0, &k2},
                                      {64448.0 / 6561.0, &k3},
                                      {-212.0 / 729.0, &k4}}));
            const State k6 = rhs(t + h, lin({{9017.0 / 3168.0, &k1},
                                             {-355.0 / 33.0, &k2},
                                             {46732.0 / 5247.0, &k3},
                                             {49.0 / 176.0, &k4},
                                             {-5103.0 / 18656.0, &k5}}));
            const State y5 = lin({{35.0 / 384.0, &k1},
                                  {500.0 / 1113.0, &k3},
                                  {125.0 / 192.0, &k4},
                                  {-2187.0 / 6784.0, &k5},
                                  {11.0 / 84.0, &k6}});
            const State k7 = rhs(t + h, y5);
            // embedded 4th-order error
            const cplx e0 = h * ((71.0 / 57600.0) * k1.a0 -
                                 (71.0 / 16695.0) * k3.a0 +
                                 (71.0 / 1920.0) * k4.a0 -
                                 (17253.0 / 339200.0) * k5.a0 +
                                 (22.0 / 525.0) * k6.a0 - (1.0 / 40.0) * k7.a0);
            const cplx e1 = h * ((71.0 / 57600.0) * k1.a1 -
                                 (71.0 / 16695.0) * k3.a1 +
                                 (71.0 / 1920.0) * k4.a1 -
                                 (17253.0 / 339200.0) * k5.a1 +
                                 (22.0 / 525.0) * k6.a1 - (1.0 / 40.0) * k7.a1);
            const double sc0 =
                atol + rtol * std::max(std::abs(y.a0), std::abs(y5.a0));
            const double sc1 =
                atol + rtol * std::max(std::abs(y.a1), std::abs(y5.a1));
            const double err = std::sqrt(0.5 * (std::norm(e0 / sc0) + std::norm(e1 / sc1)));
            if (err <= 1.0) {
                t += h;
                y = y5;
            }
            const double fac =
                std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
            h *= fac;
        }
    }
};

}  // namespace detail

// Brute-force integration of the amplitude ODEs from rest before the pulse.
// Independent of the Green's function closed forms; this is the oracle the
// analytic paths are tested against.
inline AmplitudeTrace amplitude_ode_oracle(const SystemParams& p,
                                           const PulseSpec& spec,
                                           std::vector<double> times,
                                           double rtol = 1e-10,
                                           double atol = 1e-12) {
    if (std::holds_alternative<DeltaPulse>(spec.shape))
        throw delta_not_pointwise_error(
            "ode oracle requires a pointwise-evaluable envelope");
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] <= times[i + 1]))
            throw validation_error("ode oracle: time grid must be ascending");
    AmplitudeTrace tr;
    tr.times = std::move(times);
    tr.method = TraceMethod::ode_oracle;
    const PulseSupport sup = pulse_support(spec);
    const RegimeData rd = classify_regime(p);
    detail::Dopri5 stepper{p, spec, rtol, atol, rd.gamma};
    detail::Dopri5::State y{0.0, 0.0};
    double t_cur = std::min(sup.lo, tr.times.empty() ? sup.lo : tr.times.front());
    std::vector<double> brk = pulse_breakpoints(spec);
    std::sort(brk.begin(), brk.end());
    auto advance_through = [&](double target) {
        for (double b : brk) {
            if (b > t_cur && b < target) {
                stepper.advance(y, t_cur, b);
                t_cur = b;
            }
        }
        stepper.advance(y, t_cur, target);
        t_cur = target;
    };
    for (double t : tr.times) {
        if (t > t_cur) advance_through(t);
        tr.alpha0.push_back(y.a0);
        tr.alpha1.push_back(y.a1);
    }
    return energy_and_ergotropy(std::move(tr), p);
}

namespace detail {

inline Amplitudes amplitudes_auto(const SystemParams& p, const PulseSpec& spec,
                                  double t, double tol) {
    if (has_closed_form(spec)) return closed_form_amplitudes(p, spec, t);
    return convolution_amplitudes(p, spec, t, tol);
}

}  // namespace detail

// Excitation bookkeeping at time t. The pulse-mode entry carries the
// undisturbed envelope for tau > t and the interfered emission
// |xi + sqrt(Gamma) alpha0|^2 for tau <= t (theta(0) = 1 at the boundary).
inline NormLedger norm_ledger(const SystemParams& p, const PulseSpec& spec,
                              double t, double tol = 1e-9) {
    if (std::holds_alternative<DeltaPulse>(spec.shape))
        throw delta_not_pointwise_error(
            "norm ledger requires a pointwise-evaluable envelope");
    const PulseSupport sup = pulse_support(spec);
    NormLedger led{};
    if (t <= sup.lo) {
        led.p_emitted_pulse = 1.0;
        led.total = 1.0;
        return led;
    }
    const Amplitudes now = detail::amplitudes_auto(p, spec, t, tol);
    led.p_tls = std::norm(now.alpha0);
    led.p_battery = std::norm(now.alpha1);

    const double sqg = std::sqrt(p.gamma_pulse);
    auto segment_points = [&](double lo, double hi) {
        std::vector<double> pts{lo, hi};
        for (double b : detail::intensity_splits(spec))
            if (b > lo && b < hi) pts.push_back(b);
        // emission tail beyond the pulse is smooth but long; chunk it
        double step = 8.0 / classify_regime(p).gamma;
        for (double e = sup.hi + step; e < hi; e += step) pts.push_back(e);
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        return pts;
    };

    auto accumulate = [&](double lo, double hi, auto integrand) {
        double sum = 0.0;
        const auto pts = segment_points(lo, hi);
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
            if (!(pts[i] < pts[i + 1])) continue;
            sum += integrate(integrand, pts[i], pts[i + 1], tol).value;
        }
        return sum;
    };

    // emitted into the pulse mode: interfered part up to t, in-flight beyond
    led.p_emitted_pulse = accumulate(sup.lo, t, [&](double tau) {
        const cplx xi = pulse_value(spec, tau);
        const cplx a0 = detail::amplitudes_auto(p, spec, tau, tol).alpha0;
        return std::norm(xi + sqg * a0);
    });
    if (t < sup.hi)
        led.p_emitted_pulse += accumulate(t, sup.hi, [&](double tau) {
            return std::norm(pulse_value(spec, tau));
        });
    if (p.gamma_env > 0.0)
        led.p_emitted_env =
            p.gamma_env * accumulate(sup.lo, t, [&](double tau) {
                return std::norm(
                    detail::amplitudes_auto(p, spec, tau, tol).alpha0);
            });
    led.total =
        led.p_tls + led.p_battery + led.p_emitted_pulse + led.p_emitted_env;
    if (std::abs(led.total - 1.0) > ledger_tol)
        throw ledger_violation_error("norm ledger total " +
                                     std::to_string(led.total) +
                                     " deviates from unity beyond tolerance");
    return led;
}

// Default simulation grid: 400 points covering one decay time before the
// pulse and thirty after it starts.
inline std::vector<double> default_time_grid(const SystemParams& p,
                                             const PulseSpec& spec,
                                             int n = 400) {
    const RegimeData rd = classify_regime(p);
    const double start = pulse_support(spec).lo;
    const double lo = start - 1.0 / rd.gamma;
    const double hi = start + 30.0 / rd.gamma;
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i)
        g[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return g;
}

struct PeakExcitation {
    double t_peak;
    double value;  // max |alpha1|^2
};

// Scans |alpha1(t)|^2 on a grid dense enough to resolve Rabi oscillations,
// then golden-section refines around the best sample.
inline PeakExcitation peak_excitation(const SystemParams& p,
                                      const PulseSpec& spec) {
    const RegimeData rd = classify_regime(p);
    const PulseSupport sup = pulse_support(spec);
    const double lo = sup.lo;
    const double hi = std::max(sup.hi, 0.0) + 30.0 / rd.gamma;
    double scale = rd.gamma;
    if (rd.omega_rabi) scale = std::max(scale, *rd.omega_rabi);
    const int n = std::clamp(int((hi - lo) * scale * 6.0), 240, 6000);
    auto value_at = [&](double t) {
        return std::norm(detail::amplitudes_auto(p, spec, t, 1e-9).alpha1);
    };
    double best_t = lo, best_v = -1.0;
    double dt = (hi - lo) / n;
    for (int i = 0; i <= n; ++i) {
        const double t = lo + i * dt;
        const double v = value_at(t);
        if (v > best_v) {
            best_v = v;
            best_t = t;
        }
    }
    double a = best_t - dt, b = best_t + dt;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int i = 0; i < 80 && (b - a) > 1e-12 * std::max(1.0, std::abs(best_t)); ++i) {
        const double c = b - gr * (b - a);
        const double d = a + gr * (b - a);
        if (value_at(c) > value_at(d))
            b = d;
        else
            a = c;
    }
    const double tm = 0.5 * (a + b);
    const double vm = value_at(tm);
    if (vm >= best_v) return {tm, vm};
    return {best_t, best_v};
}

}  // namespace qpulse
