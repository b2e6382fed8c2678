#pragma once

// Dynamic device models. Each model exposes a pure derivative function and a
// network interface mapping the bus voltage phasor to an injected current.
// Speeds are per-unit of nominal; angles are radians; powers and currents
// are per-unit on the case base.

#include "gridsim/case_model.hpp"

#include <complex>
#include <span>

namespace gridsim {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// Synchronous generator (flux-decay, first-order governor)
// ---------------------------------------------------------------------------

struct SgState {
    double delta = 0.0;
    double omega = 1.0;
    double e_q_prime = 1.0;
    double p_m = 0.0;
};

/// Quantities fixed at initialization: field voltage and governor load reference.
struct SgControl {
    double e_fd = 0.0;
    double p_ref = 0.0;
};

struct DqCurrents {
    double d = 0.0;
    double q = 0.0;
};

struct SgInjection {
    Complex current;  // network frame, injected into the bus
    DqCurrents i_dq;
    double p_e = 0.0;  // E'q*Iq + (Xq - X'd)*Id*Iq
};

/// Stator algebraic equations with zero armature resistance:
/// Iq = Vd / Xq, Id = (E'q - Vq) / X'd.
SgInjection sg_interface(const SgParams& p, const SgState& s, Complex v_bus);

/// Time derivatives of (delta, omega, E'q, Pm).
SgState sg_derivatives(const SgParams& p, const SgControl& ctl, const SgState& s, const DqCurrents& i_dq,
                       double omega_base);

/// Norton admittance stamped into the network matrix for this machine.
Complex sg_norton_admittance(const SgParams& p);

// ---------------------------------------------------------------------------
// Grid-forming inverter
// ---------------------------------------------------------------------------

struct GfmState {
    double delta = 0.0;
    double omega = 1.0;
    double v_e = 0.0;
    double e_mag = 1.0;
};

struct GfmSetpoints {
    double p = 0.0;
    double q = 0.0;
    double v = 1.0;
};

struct TerminalMeasurement {
    Complex v;
    double p = 0.0;
    double q = 0.0;
    double freq_est_hz = 0.0;
};

struct LimitedCurrent {
    Complex current;
    double scale = 1.0;
    bool limited = false;
};

/// Scales `unlimited` toward zero, angle preserved, until |I| <= i_max and
/// |Re(V conj I)| <= p_cap.
LimitedCurrent limit_current(Complex unlimited, Complex v_bus, double i_max, double p_cap);

struct InverterInjection {
    Complex current;
    TerminalMeasurement meas;
    bool limited = false;
};

/// I = (E e^{j delta} - V) / (j x_c), then current/power limited.
InverterInjection gfm_interface(const GfmParams& p, const GfmState& s, Complex v_bus);

/// Droop dynamics:
///   tau * d(omega)/dt = 1 - omega + m_p (P_s - P)
///   tau * d(v_e)/dt   = V_s - V - v_e + m_q (Q_s - Q)
///   dE/dt             = k_p d(v_e)/dt + k_v v_e
GfmState gfm_derivatives(const GfmParams& p, const GfmState& s, const TerminalMeasurement& meas,
                         const GfmSetpoints& sp, double omega_base);

Complex gfm_norton_admittance(const GfmParams& p);

// ---------------------------------------------------------------------------
// Grid-following inverter
// ---------------------------------------------------------------------------

struct GflState {
    double theta_pll = 0.0;
    double omega_pll = 1.0;  // PI integrator output, pu speed
    double i_d = 0.0;
    double i_q = 0.0;
};

/// clamp(p_star + (1 - omega_pll) / m_p, -p_cap, p_cap)
double gfl_power_reference(const GflParams& p, double omega_pll);

/// Current source (i_d - j i_q) e^{j theta_pll}, current/power limited.
InverterInjection gfl_interface(const GflParams& p, const GflState& s, Complex v_bus);

GflState gfl_derivatives(const GflParams& p, const GflState& s, Complex v_bus, double omega_base);

// ---------------------------------------------------------------------------
// Bus frequency estimation
// ---------------------------------------------------------------------------

/// Washout-filtered derivative of a bus voltage angle, reported in Hz.
class BusFrequencyFilter {
public:
    BusFrequencyFilter(double dt, double t_f, double f_nominal);

    void reset(double angle);
    /// Moves the angle reference without touching the filtered rate, so a
    /// step change of the phasor at a switching instant is not read as frequency.
    void rebase(double angle) { last_angle_ = angle; }
    /// Feeds the next angle sample (rad), returns the estimate in Hz.
    double update(double angle);
    [[nodiscard]] double value() const;

private:
    double f_nominal_;
    double dt_;
    double decay_;
    double last_angle_ = 0.0;
    double rate_ = 0.0;  // filtered d(theta)/dt, rad/s
};

/// Runs the filter over a sample history (first sample seeds it).
/// Throws std::invalid_argument when fewer than two samples are given.
double bus_frequency_estimate(std::span<const double> angles, double dt, double t_f, double f_nominal);

}  // namespace gridsim
