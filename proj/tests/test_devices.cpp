#include "gridsim/devices.hpp"
#include "gridsim/integrator.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

using namespace gridsim;
using gridsim::testing::load;

namespace {

constexpr double kOmegaBase = 2.0 * std::numbers::pi * 60.0;

SgParams machine() { return load("two_bus.case").sgs.front(); }

GfmParams gfm() { return load("single_gfm_safety.case").gfms.front(); }

GflParams gfl() {
    GflParams p;
    p.m_p = 0.05;
    p.p_cap = 1.0;
    p.i_max = 1.2;
    return p;
}

}  // namespace

TEST(SgModel, AcceleratesWhenMechanicalExceedsElectrical) {
    const SgParams p = machine();
    SgState s;
    s.p_m = 1.0;
    const auto d = sg_derivatives(p, {1.0, 1.0}, s, {0.0, 0.5}, kOmegaBase);
    EXPECT_GT(d.omega, 0.0);
    EXPECT_EQ(d.delta, 0.0);
}

TEST(SgModel, GovernorOpposesOverspeed) {
    const SgParams p = machine();
    SgState s;
    s.omega = 1.01;
    s.p_m = 0.5;
    const auto d = sg_derivatives(p, {1.0, 0.5}, s, {}, kOmegaBase);
    EXPECT_NEAR(d.p_m, (-0.01 / p.r_g) / p.t_ch, 1e-12);
}

TEST(SgModel, FieldStepFollowsClosedFormExponential) {
    const SgParams p = machine();
    const SgControl ctl{1.3, 0.0};
    SgState s;
    s.e_q_prime = 1.0;
    auto f = [&](const Eigen::VectorXd& x) {
        SgState st = s;
        st.e_q_prime = x(0);
        Eigen::VectorXd d(1);
        d(0) = sg_derivatives(p, ctl, st, {0.0, 0.0}, kOmegaBase).e_q_prime;
        return d;
    };
    const double h = 0.01;
    Eigen::VectorXd x(1);
    x(0) = 1.0;
    for (int k = 1; k <= 1000; ++k) {
        x = rk4_step(x, f(x), h, f);
        const double t = k * h;
        const double exact = 1.3 + (1.0 - 1.3) * std::exp(-t / p.t_do_prime);
        ASSERT_NEAR(x(0), exact, 1e-6) << "t=" << t;
    }
}

TEST(SgModel, MatchedInternalVoltageDrawsNoCurrent) {
    SgParams p = machine();
    p.x_q = p.x_d_prime;
    const Complex v = std::polar(1.03, 0.4);
    SgState s;
    s.e_q_prime = std::abs(v);
    s.delta = std::arg(v);
    EXPECT_LT(std::abs(sg_interface(p, s, v).current), 1e-12);
}

TEST(SgModel, QAxisDifferenceDrivesDAxisCurrent) {
    SgParams p = machine();
    SgState s;
    s.delta = 0.0;
    s.e_q_prime = 1.1;
    const auto inj = sg_interface(p, s, Complex(1.0, 0.0));
    EXPECT_NEAR(std::abs(inj.current), 0.1 / p.x_d_prime, 1e-12);
}

TEST(SgModel, InterfacePowerMatchesTorqueExpression) {
    const SgParams p = machine();
    for (double delta : {0.1, 0.5, 0.9}) {
        SgState s;
        s.delta = delta;
        s.e_q_prime = 1.05;
        const Complex v = std::polar(0.98, -0.05);
        const auto inj = sg_interface(p, s, v);
        const double p_terminal = (v * std::conj(inj.current)).real();
        EXPECT_NEAR(p_terminal, inj.p_e, 1e-10);
    }
}

TEST(SgModel, NortonSplitReproducesInterfaceCurrent) {
    // I = r E'q / X'd - Y V + c conj(V), the form the network solve uses.
    const SgParams p = machine();
    SgState s;
    s.delta = 0.7;
    s.e_q_prime = 1.02;
    const Complex v = std::polar(0.97, 0.1);
    const Complex r = std::polar(1.0, s.delta - std::numbers::pi / 2.0);
    const Complex y = sg_norton_admittance(p);
    const Complex c = Complex(0.0, 0.5 * (1.0 / p.x_q - 1.0 / p.x_d_prime)) * r * r;
    const Complex expected = r * s.e_q_prime / p.x_d_prime - y * v + c * std::conj(v);
    EXPECT_LT(std::abs(sg_interface(p, s, v).current - expected), 1e-12);
}

TEST(GfmModel, DroopRateArithmetic) {
    const GfmParams p = gfm();
    GfmState s;
    TerminalMeasurement m;
    m.v = Complex(1.0, 0.0);
    m.p = 0.2;
    GfmSetpoints sp;
    sp.p = 0.3;
    const auto d = gfm_derivatives(p, s, m, sp, kOmegaBase);
    EXPECT_NEAR(d.omega, 0.1 * p.m_p / p.tau, 1e-12);
}

TEST(GfmModel, HeldPowerStepIsFirstOrderWithTau) {
    const GfmParams p = gfm();
    TerminalMeasurement m;
    m.v = Complex(1.0, 0.0);
    m.p = 0.0;
    GfmSetpoints sp;
    sp.p = 0.2;
    auto f = [&](const Eigen::VectorXd& x) {
        GfmState st;
        st.omega = x(0);
        Eigen::VectorXd d(1);
        d(0) = gfm_derivatives(p, st, m, sp, kOmegaBase).omega;
        return d;
    };
    const double h = p.tau / 50.0;
    Eigen::VectorXd x(1);
    x(0) = 1.0;
    const double target = 1.0 + p.m_p * 0.2;
    for (int k = 1; k <= 500; ++k) {
        x = rk4_step(x, f(x), h, f);
        const double exact = target + (1.0 - target) * std::exp(-k * h / p.tau);
        ASSERT_NEAR(x(0), exact, 1e-10);
    }
}

TEST(GfmModel, MatchedSourceDrawsNoCurrent) {
    const GfmParams p = gfm();
    GfmState s;
    s.e_mag = 1.01;
    s.delta = 0.2;
    const auto inj = gfm_interface(p, s, std::polar(1.01, 0.2));
    EXPECT_LT(std::abs(inj.current), 1e-12);
    EXPECT_FALSE(inj.limited);
}

TEST(Limiter, CurrentMagnitudeIsCapped) {
    const Complex unlimited = std::polar(2.0 * 0.6, 1.1);
    const auto lim = limit_current(unlimited, Complex(0.0, 0.0), 0.6, 10.0);
    EXPECT_NEAR(std::abs(lim.current), 0.6, 1e-12);
    EXPECT_NEAR(std::arg(lim.current), 1.1, 1e-12);
    EXPECT_TRUE(lim.limited);
    EXPECT_NEAR(lim.scale, 0.5, 1e-12);
}

TEST(Limiter, ActivePowerIsCapped) {
    const auto lim = limit_current(Complex(0.9, 0.0), Complex(1.0, 0.0), 2.0, 0.5);
    EXPECT_NEAR((Complex(1.0, 0.0) * std::conj(lim.current)).real(), 0.5, 1e-12);
}

TEST(Limiter, RandomSamplesRespectBothLimits) {
    std::uint64_t seed = 12345;
    auto uniform = [&seed] {
        seed = seed * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(seed >> 11) / 9007199254740992.0;
    };
    for (int i = 0; i < 10000; ++i) {
        const Complex unlimited = std::polar(3.0 * uniform(), 2.0 * std::numbers::pi * uniform());
        const Complex v = std::polar(0.5 + uniform(), 2.0 * std::numbers::pi * uniform());
        const double i_max = 0.1 + uniform();
        const double p_cap = 0.1 + uniform();
        const auto lim = limit_current(unlimited, v, i_max, p_cap);
        ASSERT_LE(std::abs(lim.current), i_max * (1 + 1e-12));
        ASSERT_LE(std::abs((v * std::conj(lim.current)).real()), p_cap * (1 + 1e-12));
        ASSERT_LE(lim.scale, 1.0);
    }
}

TEST(GflModel, NominalZeroDispatchInjectsNothing) {
    const GflParams p = gfl();
    const GflState s;
    EXPECT_EQ(gfl_power_reference(p, 1.0), 0.0);
    EXPECT_LT(std::abs(gfl_interface(p, s, Complex(1.0, 0.0)).current), 1e-15);
}

TEST(GflModel, UnderfrequencyRaisesReferenceUpToCap) {
    const GflParams p = gfl();
    EXPECT_NEAR(gfl_power_reference(p, 1.0 - 0.01), 0.01 / p.m_p, 1e-12);
    EXPECT_NEAR(gfl_power_reference(p, 1.0 - 1.0), p.p_cap, 1e-12);
    EXPECT_NEAR(gfl_power_reference(p, 1.0 + 1.0), -p.p_cap, 1e-12);
}

TEST(GflModel, PllLocksToRotatingPhasor) {
    const GflParams p = gfl();
    GflState s;
    const double dt = 1e-4;
    const double df = 0.3;  // Hz
    auto f = [&](const Eigen::VectorXd& x, double t) {
        GflState st;
        st.theta_pll = x(0);
        st.omega_pll = x(1);
        const Complex v = std::polar(1.0, 2.0 * std::numbers::pi * df * t);
        const auto d = gfl_derivatives(p, st, v, kOmegaBase);
        Eigen::VectorXd out(2);
        out << d.theta_pll, d.omega_pll;
        return out;
    };
    Eigen::VectorXd x(2);
    x << s.theta_pll, s.omega_pll;
    for (int k = 0; k < 20000; ++k) {
        const double t = k * dt;
        // Explicit time dependence: stage times are t, t + h/2, t + h/2, t + h.
        int stage = 0;
        auto g = [&](const Eigen::VectorXd& xs) { return f(xs, t + (++stage < 3 ? 0.5 : 1.0) * dt); };
        x = rk4_step(x, f(x, t), dt, g);
    }
    EXPECT_NEAR((x(1) - 1.0) * 60.0, df, 1e-6);
}

TEST(FrequencyFilter, ConstantAngleReadsNominal) {
    std::vector<double> angles(100, 0.7);
    EXPECT_DOUBLE_EQ(bus_frequency_estimate(angles, 1e-3, 0.05, 60.0), 60.0);
}

TEST(FrequencyFilter, RampSettlesToOffset) {
    const double dt = 1e-3;
    const double tf = 0.05;
    std::vector<double> angles;
    for (int k = 0; k <= static_cast<int>(10 * tf / dt); ++k) {
        angles.push_back(2.0 * std::numbers::pi * 0.5 * k * dt);
    }
    EXPECT_NEAR(bus_frequency_estimate(angles, dt, tf, 60.0), 60.5, 1e-3);
}

TEST(FrequencyFilter, AngleWrapIsNotAJump) {
    const double dt = 1e-3;
    std::vector<double> angles;
    for (int k = 0; k <= 2000; ++k) {
        angles.push_back(std::remainder(3.0 + 2.0 * std::numbers::pi * 0.2 * k * dt, 2.0 * std::numbers::pi));
    }
    EXPECT_NEAR(bus_frequency_estimate(angles, dt, 0.05, 60.0), 60.2, 1e-6);
}

TEST(FrequencyFilter, RebaseIgnoresPhaseStep) {
    BusFrequencyFilter f(1e-3, 0.05, 60.0);
    f.reset(0.0);
    f.rebase(0.3);
    EXPECT_DOUBLE_EQ(f.update(0.3), 60.0);
}

TEST(FrequencyFilter, TooFewSamplesThrow) {
    std::vector<double> one{0.0};
    EXPECT_THROW((void)bus_frequency_estimate(one, 1e-3, 0.05, 60.0), std::invalid_argument);
}
