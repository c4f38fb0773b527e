#pragma once

#include <stdexcept>
#include <string>

namespace qpulse {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Constructor or config input violates a documented invariant.
struct validation_error : error {
    using error::error;
};

// Adaptive quadrature ran out of panel budget before reaching the tolerance.
struct max_subdivisions_error : error {
    using error::error;
};

// Root bracket has no sign change.
struct no_sign_change_error : error {
    using error::error;
};

// Delta pulses have no pointwise amplitude.
struct delta_not_pointwise_error : error {
    using error::error;
};

// Requested closed form does not exist for this pulse shape.
struct unsupported_shape_error : error {
    using error::error;
};

// Excitation ledger failed to sum to one; signals an integration bug.
struct ledger_violation_error : error {
    using error::error;
};

// Charging threshold at or above the saturation bound.
struct threshold_unreachable_error : error {
    using error::error;
};

// Power stationarity bracket could not be established.
struct no_interior_maximum_error : error {
    using error::error;
};

// ODE stepper could not meet tolerances with a representable step.
struct step_size_underflow_error : error {
    using error::error;
};

// Config text could not be parsed.
struct parse_error : error {
    using error::error;
};

}  // namespace qpulse
