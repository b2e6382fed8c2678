#pragma once

// Decentralized barrier-function setpoint law for a GFM. Uses only the unit's
// own measured power and internal frequency.

#include "gridsim/case_model.hpp"
#include "gridsim/devices.hpp"

#include <string_view>

namespace gridsim {

enum class SafetyMode { inactive = 0, lower_active = 1, upper_active = 2, headroom_clipped = 3 };

std::string_view to_string(SafetyMode mode);

struct BarrierValues {
    double lower = 0.0;  // omega - omega_lo
    double upper = 0.0;  // omega - omega_hi
};

/// Both barrier functions, in whatever unit `omega` and the limits share.
BarrierValues eval_barriers(double omega, double omega_lo, double omega_hi);

struct SetpointLimits {
    double lower = 0.0;
    double upper = 0.0;
};

/// P_s bounds that make the band forward-invariant:
///   P + (omega - 1 - alpha h(omega)^p) / m_p
/// with omega and the barrier evaluated in per-unit speed.
SetpointLimits setpoint_limits(double meas_p, double omega_pu, const GfmParams& p, double f_nominal);

struct SafetyDecision {
    double p_setpoint = 0.0;
    SafetyMode mode = SafetyMode::inactive;
    double barrier_lower_hz = 0.0;
    double barrier_upper_hz = 0.0;
};

/// Inside the band the dispatch passes through; outside it is bounded by the
/// setpoint limits. The result is always clamped to +/- p_cap. With safety
/// disabled only the clamp applies.
SafetyDecision apply_safety_law(double p_star, const TerminalMeasurement& meas, double omega_pu, const GfmParams& p,
                                double f_nominal);

}  // namespace gridsim
