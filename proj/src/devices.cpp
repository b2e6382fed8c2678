#include "gridsim/devices.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gridsim {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kMinVoltage = 1e-3;

}  // namespace

SgInjection sg_interface(const SgParams& p, const SgState& s, Complex v_bus) {
    const Complex to_dq = std::polar(1.0, -(s.delta - kHalfPi));
    const Complex v_dq = v_bus * to_dq;
    SgInjection out;
    out.i_dq.q = v_dq.real() / p.x_q;
    out.i_dq.d = (s.e_q_prime - v_dq.imag()) / p.x_d_prime;
    out.current = Complex(out.i_dq.d, out.i_dq.q) * std::conj(to_dq);
    out.p_e = s.e_q_prime * out.i_dq.q + (p.x_q - p.x_d_prime) * out.i_dq.d * out.i_dq.q;
    return out;
}

SgState sg_derivatives(const SgParams& p, const SgControl& ctl, const SgState& s, const DqCurrents& i_dq,
                       double omega_base) {
    const double speed_dev = s.omega - 1.0;
    const double p_e = s.e_q_prime * i_dq.q + (p.x_q - p.x_d_prime) * i_dq.d * i_dq.q;
    SgState d;
    d.delta = omega_base * speed_dev;
    d.omega = (s.p_m - p_e - p.D * speed_dev) / p.M;
    d.e_q_prime = (-s.e_q_prime - (p.x_d - p.x_d_prime) * i_dq.d + ctl.e_fd) / p.t_do_prime;
    d.p_m = (-s.p_m + ctl.p_ref - speed_dev / p.r_g) / p.t_ch;
    return d;
}

Complex sg_norton_admittance(const SgParams& p) {
    return Complex(0.0, -0.5 * (1.0 / p.x_d_prime + 1.0 / p.x_q));
}

LimitedCurrent limit_current(Complex unlimited, Complex v_bus, double i_max, double p_cap) {
    LimitedCurrent out{unlimited, 1.0, false};
    const double mag = std::abs(unlimited);
    if (mag > i_max) {
        out.scale = i_max / mag;
    }
    const double p_unlimited = (v_bus * std::conj(unlimited)).real();
    if (std::abs(out.scale * p_unlimited) > p_cap) {
        out.scale = p_cap / std::abs(p_unlimited);
    }
    if (out.scale < 1.0) {
        out.limited = true;
        out.current = unlimited * out.scale;
    }
    return out;
}

InverterInjection gfm_interface(const GfmParams& p, const GfmState& s, Complex v_bus) {
    const Complex e = std::polar(s.e_mag, s.delta);
    const Complex unlimited = (e - v_bus) / Complex(0.0, p.x_c);
    const auto lim = limit_current(unlimited, v_bus, p.i_max, p.p_cap);
    InverterInjection out;
    out.current = lim.current;
    out.limited = lim.limited;
    out.meas.v = v_bus;
    const Complex s_out = v_bus * std::conj(lim.current);
    out.meas.p = s_out.real();
    out.meas.q = s_out.imag();
    return out;
}

GfmState gfm_derivatives(const GfmParams& p, const GfmState& s, const TerminalMeasurement& meas,
                         const GfmSetpoints& sp, double omega_base) {
    GfmState d;
    d.delta = omega_base * (s.omega - 1.0);
    d.omega = (1.0 - s.omega + p.m_p * (sp.p - meas.p)) / p.tau;
    d.v_e = (sp.v - std::abs(meas.v) - s.v_e + p.m_q * (sp.q - meas.q)) / p.tau;
    d.e_mag = p.k_p * d.v_e + p.k_v * s.v_e;
    return d;
}

Complex gfm_norton_admittance(const GfmParams& p) { return Complex(0.0, -1.0 / p.x_c); }

double gfl_power_reference(const GflParams& p, double omega_pll) {
    const double raw = p.p_star + (1.0 - omega_pll) / p.m_p;
    return std::clamp(raw, -p.p_cap, p.p_cap);
}

InverterInjection gfl_interface(const GflParams& p, const GflState& s, Complex v_bus) {
    const Complex unlimited = Complex(s.i_d, -s.i_q) * std::polar(1.0, s.theta_pll);
    const auto lim = limit_current(unlimited, v_bus, p.i_max, p.p_cap);
    InverterInjection out;
    out.current = lim.current;
    out.limited = lim.limited;
    out.meas.v = v_bus;
    const Complex s_out = v_bus * std::conj(lim.current);
    out.meas.p = s_out.real();
    out.meas.q = s_out.imag();
    return out;
}

GflState gfl_derivatives(const GflParams& p, const GflState& s, Complex v_bus, double omega_base) {
    const double v_mag = std::max(std::abs(v_bus), kMinVoltage);
    const double v_q = (v_bus * std::polar(1.0, -s.theta_pll)).imag();
    GflState d;
    d.omega_pll = p.ki_pll * v_q;
    d.theta_pll = omega_base * (s.omega_pll + p.kp_pll * v_q - 1.0);
    d.i_d = (gfl_power_reference(p, s.omega_pll) / v_mag - s.i_d) / p.tau_c;
    d.i_q = (p.q_star / v_mag - s.i_q) / p.tau_c;
    return d;
}

BusFrequencyFilter::BusFrequencyFilter(double dt, double t_f, double f_nominal)
    : f_nominal_(f_nominal), dt_(dt), decay_(t_f > 0.0 ? std::exp(-dt / t_f) : 0.0) {
    if (!(dt > 0.0)) {
        throw std::invalid_argument("frequency filter: dt must be positive");
    }
}

void BusFrequencyFilter::reset(double angle) {
    last_angle_ = angle;
    rate_ = 0.0;
}

double BusFrequencyFilter::update(double angle) {
    const double step = std::remainder(angle - last_angle_, 2.0 * std::numbers::pi);
    last_angle_ = angle;
    const double raw = step / dt_;
    rate_ = decay_ * rate_ + (1.0 - decay_) * raw;
    return value();
}

double BusFrequencyFilter::value() const { return f_nominal_ + rate_ / (2.0 * std::numbers::pi); }

double bus_frequency_estimate(std::span<const double> angles, double dt, double t_f, double f_nominal) {
    if (angles.size() < 2) {
        throw std::invalid_argument("frequency estimate needs at least two angle samples");
    }
    BusFrequencyFilter filter(dt, t_f, f_nominal);
    filter.reset(angles.front());
    for (std::size_t i = 1; i < angles.size(); ++i) {
        filter.update(angles[i]);
    }
    return filter.value();
}

}  // namespace gridsim
