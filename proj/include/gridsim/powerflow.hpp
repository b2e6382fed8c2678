#pragma once

// Admittance matrix assembly, Newton-Raphson power flow, and back-solution of
// every device's dynamic state to an exact equilibrium.

#include "gridsim/case_model.hpp"
#include "gridsim/devices.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <vector>

namespace gridsim {

struct YBus {
    std::vector<int> bus_ids;  // row/column order
    Eigen::SparseMatrix<Complex> matrix;

    [[nodiscard]] Eigen::Index size() const { return matrix.rows(); }
    [[nodiscard]] Eigen::MatrixXcd dense() const { return Eigen::MatrixXcd(matrix); }
};

/// Adds one Pi-branch to a dense admittance matrix (tap on the from side).
void stamp_branch(Eigen::MatrixXcd& y, Eigen::Index from, Eigen::Index to, const Branch& br);

/// Pi-model stamping of all in-service branches plus bus shunts. Loads are
/// not included. Throws CaseError for a bus with no connection and no shunt.
YBus build_ybus(const Case& c);

struct PowerFlowOptions {
    double tolerance = 1e-8;
    int max_iterations = 30;
};

struct PowerFlowSolution {
    std::vector<Complex> v;
    std::vector<double> p_inj;
    std::vector<double> q_inj;
    int iterations = 0;
    double max_mismatch = 0.0;
};

/// Polar Newton-Raphson. Storage buses enter as PQ injections of p_star/q_star.
/// Throws ConvergenceError on non-convergence or a singular Jacobian.
PowerFlowSolution solve_powerflow(const Case& c, const YBus& ybus, const PowerFlowOptions& opts = {});

struct SgInit {
    SgState state;
    SgControl control;
};

/// Standard flux-decay back-solve from terminal voltage and injected power.
SgInit init_sg(const SgParams& p, Complex v_terminal, Complex s_injected);

struct GfmInit {
    GfmState state;
    GfmSetpoints setpoints;
};

/// Internal phasor E = V + j x_c I, omega = 1, v_e = 0; the voltage setpoint
/// is back-computed so the Q-V channel is at rest.
GfmInit init_gfm(const GfmParams& p, Complex v_terminal, Complex s_injected);

/// PLL locked to the terminal angle, current states at their references.
GflState init_gfl(const GflParams& p, Complex v_terminal, Complex s_injected);

struct EquilibriumState {
    PowerFlowSolution powerflow;
    std::vector<SgInit> sgs;
    std::vector<GfmInit> gfms;
    std::vector<GflState> gfls;
};

/// Builds the Y-bus, solves the power flow, and initializes all devices.
EquilibriumState initialize(const Case& c, const PowerFlowOptions& opts = {});

/// Complex power each device injects at the power-flow solution. The SG at a
/// bus absorbs whatever the bus injection, load, and storage dispatch leave.
Complex sg_injection_at(const Case& c, const PowerFlowSolution& pf, const SgParams& g);

}  // namespace gridsim
