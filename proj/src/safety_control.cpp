#include "gridsim/safety_control.hpp"

#include <algorithm>
#include <cmath>

namespace gridsim {

std::string_view to_string(SafetyMode mode) {
    switch (mode) {
    case SafetyMode::inactive:
        return "inactive";
    case SafetyMode::lower_active:
        return "lower_active";
    case SafetyMode::upper_active:
        return "upper_active";
    case SafetyMode::headroom_clipped:
        return "headroom_clipped";
    }
    return "inactive";
}

BarrierValues eval_barriers(double omega, double omega_lo, double omega_hi) {
    return {omega - omega_lo, omega - omega_hi};
}

SetpointLimits setpoint_limits(double meas_p, double omega_pu, const GfmParams& p, double f_nominal) {
    const auto h = eval_barriers(omega_pu, p.safety.omega_lo_hz / f_nominal, p.safety.omega_hi_hz / f_nominal);
    const double a = p.safety.alpha;
    const int e = p.safety.p_exp;
    SetpointLimits out;
    out.lower = meas_p + (omega_pu - 1.0 - a * std::pow(h.lower, e)) / p.m_p;
    out.upper = meas_p + (omega_pu - 1.0 - a * std::pow(h.upper, e)) / p.m_p;
    return out;
}

SafetyDecision apply_safety_law(double p_star, const TerminalMeasurement& meas, double omega_pu, const GfmParams& p,
                                double f_nominal) {
    const double omega_hz = omega_pu * f_nominal;
    const auto h = eval_barriers(omega_hz, p.safety.omega_lo_hz, p.safety.omega_hi_hz);
    SafetyDecision out;
    out.barrier_lower_hz = h.lower;
    out.barrier_upper_hz = h.upper;

    double setpoint = p_star;
    const bool in_band = h.lower >= 0.0 && h.upper <= 0.0;
    if (p.safety.enabled && !in_band) {
        const auto lim = setpoint_limits(meas.p, omega_pu, p, f_nominal);
        setpoint = std::min(lim.upper, std::max(lim.lower, p_star));
        out.mode = h.lower < 0.0 ? SafetyMode::lower_active : SafetyMode::upper_active;
    }
    const double clamped = std::clamp(setpoint, -p.p_cap, p.p_cap);
    if (p.safety.enabled && !in_band && clamped != setpoint) {
        out.mode = SafetyMode::headroom_clipped;
    }
    out.p_setpoint = clamped;
    return out;
}

}  // namespace gridsim
