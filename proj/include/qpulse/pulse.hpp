#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <variant>
#include <vector>

#include "qpulse/greens.hpp"
#include "qpulse/numerics.hpp"
#include "qpulse/params.hpp"

namespace qpulse {

// Normalized single-photon envelopes. Heaviside convention: theta(0) = 1,
// so supports include their endpoints.

struct SquarePulse {
    double duration = 1.0;  // theta(t) theta(T - t) / sqrt(T)
};

struct DecayExpPulse {
    double timescale = 1.0;  // exp(-t / 2T) theta(t) / sqrt(T)
};

struct GaussianPulse {
    double width = 1.0;  // exp(-t^2 / 4T^2) / (2 pi T^2)^(1/4)
};

struct DeltaPulse {
    double arrival = 0.0;  // delta(t - t0) / sqrt(Gamma), unit weight
};

// Time-reversed Green's function of `system`, supported on [-duration, 0].
// With scale = 1 this is the raw sqrt(2 gamma) f G(-tau) prefactor, whose
// truncated norm falls short of one by the tail mass; optimal_pulse() sets
// scale to restore unit norm.
struct OptimalTruncatedPulse {
    double duration;
    SystemParams system;
    double scale = 1.0;
};

// Piecewise-linear complex envelope; renormalized to unit norm on
// construction (a all-zero envelope is kept as is).
struct SampledPulse {
    std::vector<double> times;
    std::vector<cplx> values;
};

using PulseShape = std::variant<SquarePulse, DecayExpPulse, GaussianPulse,
                                DeltaPulse, OptimalTruncatedPulse, SampledPulse>;

struct PulseSpec {
    PulseShape shape;
};

namespace detail {

// Exact integral of |linear interpolant|^2 and its first two moments over one
// segment; |xi|^2 is a quadratic so 3-point Gauss-Legendre is exact through
// the t^2-weighted moment.
inline void sampled_segment_moments(double t0, double t1, cplx v0, cplx v1,
                                    double& m0, double& m1, double& m2) {
    static const double gl_x[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static const double gl_w[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const double h = 0.5 * (t1 - t0), c = 0.5 * (t0 + t1);
    for (int i = 0; i < 3; ++i) {
        const double t = c + h * gl_x[i];
        const double s = (t - t0) / (t1 - t0);
        const cplx v = v0 + s * (v1 - v0);
        const double d = std::norm(v) * gl_w[i] * h;
        m0 += d;
        m1 += d * t;
        m2 += d * t * t;
    }
}

inline double sampled_norm_sq(const SampledPulse& sp) {
    double m0 = 0, m1 = 0, m2 = 0;
    for (std::size_t i = 0; i + 1 < sp.times.size(); ++i)
        sampled_segment_moments(sp.times[i], sp.times[i + 1], sp.values[i],
                                sp.values[i + 1], m0, m1, m2);
    return m0;
}

}  // namespace detail

inline PulseSpec make_square(double duration) {
    if (!(duration > 0.0)) throw validation_error("square pulse: duration must be positive");
    return {SquarePulse{duration}};
}

inline PulseSpec make_decay_exp(double timescale) {
    if (!(timescale > 0.0)) throw validation_error("decaying-exp pulse: timescale must be positive");
    return {DecayExpPulse{timescale}};
}

inline PulseSpec make_gaussian(double width) {
    if (!(width > 0.0)) throw validation_error("gaussian pulse: width must be positive");
    return {GaussianPulse{width}};
}

inline PulseSpec make_delta(double arrival) { return {DeltaPulse{arrival}}; }

inline PulseSpec make_optimal_truncated(const SystemParams& system,
                                        double duration, double scale = 1.0) {
    if (!(duration > 0.0)) throw validation_error("optimal pulse: duration must be positive");
    if (!(scale > 0.0)) throw validation_error("optimal pulse: scale must be positive");
    return {OptimalTruncatedPulse{duration, system, scale}};
}

inline PulseSpec make_sampled(std::vector<double> times, std::vector<cplx> values) {
    if (times.size() != values.size() || times.size() < 2)
        throw validation_error("sampled pulse: need matching times/values, at least 2 points");
    for (std::size_t i = 0; i + 1 < times.size(); ++i)
        if (!(times[i] < times[i + 1]))
            throw validation_error("sampled pulse: times must be strictly increasing");
    SampledPulse sp{std::move(times), std::move(values)};
    const double n2 = detail::sampled_norm_sq(sp);
    if (n2 > 0.0) {
        const double inv = 1.0 / std::sqrt(n2);
        for (auto& v : sp.values) v *= inv;
    }
    return {std::move(sp)};
}

// [lo, hi] outside which the envelope is zero or negligible (< 1e-18 of the
// intensity mass for the infinite-tail shapes).
struct PulseSupport {
    double lo, hi;
};

inline PulseSupport pulse_support(const PulseSpec& spec) {
    return std::visit(
        [](const auto& s) -> PulseSupport {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SquarePulse>)
                return {0.0, s.duration};
            else if constexpr (std::is_same_v<T, DecayExpPulse>)
                return {0.0, 42.0 * s.timescale};
            else if constexpr (std::is_same_v<T, GaussianPulse>)
                return {-9.0 * s.width, 9.0 * s.width};
            else if constexpr (std::is_same_v<T, DeltaPulse>)
                return {s.arrival, s.arrival};
            else if constexpr (std::is_same_v<T, OptimalTruncatedPulse>)
                return {-s.duration, 0.0};
            else
                return {s.times.front(), s.times.back()};
        },
        spec.shape);
}

// Interior points where the envelope is discontinuous or kinked; quadrature
// and the ODE stepper split there.
inline std::vector<double> pulse_breakpoints(const PulseSpec& spec) {
    return std::visit(
        [](const auto& s) -> std::vector<double> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SquarePulse>)
                return {0.0, s.duration};
            else if constexpr (std::is_same_v<T, DecayExpPulse>)
                return {0.0};
            else if constexpr (std::is_same_v<T, GaussianPulse>)
                return {};
            else if constexpr (std::is_same_v<T, DeltaPulse>)
                return {s.arrival};
            else if constexpr (std::is_same_v<T, OptimalTruncatedPulse>)
                return {-s.duration, 0.0};
            else
                return s.times;
        },
        spec.shape);
}

inline cplx pulse_value(const PulseSpec& spec, double t) {
    return std::visit(
        [t](const auto& s) -> cplx {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SquarePulse>) {
                if (t < 0.0 || t > s.duration) return 0.0;
                return 1.0 / std::sqrt(s.duration);
            } else if constexpr (std::is_same_v<T, DecayExpPulse>) {
                if (t < 0.0) return 0.0;
                return std::exp(-0.5 * t / s.timescale) / std::sqrt(s.timescale);
            } else if constexpr (std::is_same_v<T, GaussianPulse>) {
                const double T2 = s.width * s.width;
                return std::exp(-0.25 * t * t / T2) /
                       std::pow(2.0 * std::numbers::pi * T2, 0.25);
            } else if constexpr (std::is_same_v<T, DeltaPulse>) {
                throw delta_not_pointwise_error(
                    "pulse_value: delta pulse has no pointwise amplitude");
            } else if constexpr (std::is_same_v<T, OptimalTruncatedPulse>) {
                if (t < -s.duration || t > 0.0) return 0.0;
                const RegimeData rd = classify_regime(s.system);
                return s.scale * std::sqrt(2.0 * rd.gamma) * s.system.coupling *
                       green(rd, -t).g;
            } else {
                if (s.times.empty() || t < s.times.front() || t > s.times.back())
                    return 0.0;
                const auto it = std::upper_bound(s.times.begin(), s.times.end(), t);
                const std::size_t i =
                    std::min(s.times.size() - 2,
                             std::size_t(std::max<std::ptrdiff_t>(
                                 0, it - s.times.begin() - 1)));
                const double u = (t - s.times[i]) / (s.times[i + 1] - s.times[i]);
                return s.values[i] + u * (s.values[i + 1] - s.values[i]);
            }
        },
        spec.shape);
}

namespace detail {

// Split points for intensity integrals: pulse breakpoints plus geometric
// refinement of long smooth stretches so the first Kronrod panel is never
// asked to bridge decades of scale.
inline std::vector<double> intensity_splits(const PulseSpec& spec) {
    const PulseSupport sup = pulse_support(spec);
    std::vector<double> pts = pulse_breakpoints(spec);
    pts.push_back(sup.lo);
    pts.push_back(sup.hi);
    if (const auto* opt = std::get_if<OptimalTruncatedPulse>(&spec.shape)) {
        const double gamma = classify_regime(opt->system).gamma;
        double step = 8.0 / gamma;
        double edge = -step;
        while (edge > -opt->duration) {
            pts.push_back(edge);
            step *= 2.0;
            edge -= step;
        }
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

}  // namespace detail

// int |xi|^2 dtau over the pulse's effective support.
inline double pulse_norm(const PulseSpec& spec, double tol = 1e-12) {
    if (std::holds_alternative<DeltaPulse>(spec.shape))
        throw delta_not_pointwise_error(
            "pulse_norm: delta pulse has no square-integrable density");
    if (const auto* sp = std::get_if<SampledPulse>(&spec.shape))
        return detail::sampled_norm_sq(*sp);
    const auto pts = detail::intensity_splits(spec);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (!(pts[i] < pts[i + 1])) continue;
        total += integrate(
                     [&](double t) { return std::norm(pulse_value(spec, t)); },
                     pts[i], pts[i + 1], tol)
                     .value;
    }
    return total;
}

// Standard deviation of the intensity distribution |xi(t)|^2.
struct PulseWidth {
    double t_sigma;
};

inline PulseWidth pulse_width(const PulseSpec& spec) {
    return std::visit(
        [&spec](const auto& s) -> PulseWidth {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, SquarePulse>)
                return {s.duration / std::sqrt(12.0)};
            else if constexpr (std::is_same_v<T, DecayExpPulse>)
                return {s.timescale};
            else if constexpr (std::is_same_v<T, GaussianPulse>)
                return {s.width};
            else if constexpr (std::is_same_v<T, DeltaPulse>)
                return {0.0};
            else if constexpr (std::is_same_v<T, SampledPulse>) {
                double m0 = 0, m1 = 0, m2 = 0;
                for (std::size_t i = 0; i + 1 < s.times.size(); ++i)
                    detail::sampled_segment_moments(s.times[i], s.times[i + 1],
                                                    s.values[i], s.values[i + 1],
                                                    m0, m1, m2);
                if (m0 <= 0.0) return {0.0};
                const double mean = m1 / m0;
                return {std::sqrt(std::max(0.0, m2 / m0 - mean * mean))};
            } else {
                const auto pts = detail::intensity_splits(spec);
                double m0 = 0, m1 = 0, m2 = 0;
                for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
                    if (!(pts[i] < pts[i + 1])) continue;
                    auto I = [&](auto weight) {
                        return integrate(
                                   [&](double t) {
                                       return weight(t) *
                                              std::norm(pulse_value(spec, t));
                                   },
                                   pts[i], pts[i + 1], 1e-12)
                            .value;
                    };
                    m0 += I([](double) { return 1.0; });
                    m1 += I([](double t) { return t; });
                    m2 += I([](double t) { return t * t; });
                }
                const double mean = m1 / m0;
                return {std::sqrt(std::max(0.0, m2 / m0 - mean * mean))};
            }
        },
        spec.shape);
}

}  // namespace qpulse
