#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "qpulse/errors.hpp"

namespace qpulse {

// Relative band |kappa| <= ep_tol * gamma^2 that selects the exceptional-point
// branch. Inside it the three regime formulas agree to machine precision while
// 1/sqrt(kappa) starts losing mantissa.
inline constexpr double ep_tol = 1e-8;

// Constructor-level tolerance on unit pulse norms.
inline constexpr double norm_tol = 1e-6;

// Allowed defect of the excitation ledger total.
inline constexpr double ledger_tol = 1e-5;

inline constexpr double default_quad_tol = 1e-10;
inline constexpr double default_root_tol = 1e-12;

// Physical rates of the charger-battery pair. All rates in 1/time, hbar = 1.
struct SystemParams {
    double gamma_pulse;  // decay rate into the pulse mode
    double gamma_env;    // decay rate into the environment
    double coupling;     // coherent TLS-battery exchange rate
    double omega_b;      // battery frequency

    SystemParams(double gamma_pulse_, double gamma_env_, double coupling_,
                 double omega_b_ = 1.0)
        : gamma_pulse(gamma_pulse_),
          gamma_env(gamma_env_),
          coupling(coupling_),
          omega_b(omega_b_) {
        if (!(gamma_pulse > 0.0) || !std::isfinite(gamma_pulse))
            throw validation_error("gamma_pulse must be positive and finite");
        if (!(gamma_env >= 0.0) || !std::isfinite(gamma_env))
            throw validation_error("gamma_env must be nonnegative and finite");
        if (!(coupling > 0.0) || !std::isfinite(coupling))
            throw validation_error("coupling must be positive and finite");
        if (!(omega_b > 0.0) || !std::isfinite(omega_b))
            throw validation_error("omega_b must be positive and finite");
    }

    double gamma_total_half() const { return 0.5 * (gamma_pulse + gamma_env); }

    friend bool operator==(const SystemParams&, const SystemParams&) = default;
};

enum class Regime { underdamped, exceptional_point, overdamped };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::underdamped: return "underdamped";
        case Regime::exceptional_point: return "exceptional-point";
        case Regime::overdamped: return "overdamped";
    }
    return "?";
}

// Derived regime quantities. kappa = gamma^2 - 4 f^2 splits the response into
// oscillatory (kappa < 0), critically damped (kappa = 0) and bi-exponential
// (kappa > 0) branches.
struct RegimeData {
    double gamma;       // (gamma_pulse + gamma_env) / 2
    double kappa;       // gamma^2 - 4 coupling^2
    Regime regime;
    std::optional<double> omega_rabi;                 // underdamped only
    std::optional<std::pair<double, double>> roots;   // r+ and r-, kappa >= 0
    double f_ep;        // gamma / 2
};

inline RegimeData classify_regime(const SystemParams& p) {
    RegimeData d{};
    d.gamma = p.gamma_total_half();
    d.kappa = d.gamma * d.gamma - 4.0 * p.coupling * p.coupling;
    d.f_ep = 0.5 * d.gamma;
    if (std::abs(d.kappa) <= ep_tol * d.gamma * d.gamma) {
        d.regime = Regime::exceptional_point;
        d.roots = std::make_pair(-0.5 * d.gamma, -0.5 * d.gamma);
    } else if (d.kappa < 0.0) {
        d.regime = Regime::underdamped;
        d.omega_rabi = 0.5 * std::sqrt(-d.kappa);
    } else {
        d.regime = Regime::overdamped;
        const double sk = std::sqrt(d.kappa);
        d.roots = std::make_pair(0.5 * (-d.gamma + sk), 0.5 * (-d.gamma - sk));
    }
    return d;
}

}  // namespace qpulse
