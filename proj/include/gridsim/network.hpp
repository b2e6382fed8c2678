#pragma once

// Algebraic network: the Y-bus augmented with constant-impedance loads and
// device Norton admittances, solved against device interface currents.

#include "gridsim/case_model.hpp"
#include "gridsim/devices.hpp"
#include "gridsim/powerflow.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace gridsim {

/// Device states the network needs to evaluate interface currents.
struct DeviceStateView {
    std::span<const SgState> sgs;
    std::span<const GfmState> gfms;
    std::span<const GflState> gfls;
};

struct NetworkSolution {
    std::vector<Complex> v;
    std::vector<SgInjection> sgs;  // zero current for tripped machines
    std::vector<InverterInjection> gfms;
    std::vector<InverterInjection> gfls;
    int iterations = 0;
    double last_update = 0.0;  // infinity norm of the final voltage update
};

class Network {
public:
    /// Loads become admittances (P - jQ)/|V|^2 at the power-flow voltage.
    Network(const Case& c, const PowerFlowSolution& pf);

    [[nodiscard]] NetworkSolution solve(const DeviceStateView& states, std::span<const Complex> v_guess,
                                        double tol, int max_iter) const;

    void trip_sg(std::size_t sg_index);
    void trip_branch(int branch_id);
    /// Adds (dp - j dq)/|V_pf|^2 to the bus load admittance.
    void step_load(int bus_id, double dp, double dq);

    [[nodiscard]] bool sg_in_service(std::size_t k) const { return sg_in_service_[k]; }
    [[nodiscard]] std::size_t bus_count() const { return case_.buses.size(); }
    [[nodiscard]] Eigen::Index bus_row(int bus_id) const;
    [[nodiscard]] const Eigen::MatrixXcd& branch_matrix() const { return y_branches_; }
    [[nodiscard]] const std::vector<Complex>& load_admittance() const { return y_load_; }

    /// Real power absorbed by loads and by branch/shunt elements.
    [[nodiscard]] double load_power(std::span<const Complex> v) const;
    [[nodiscard]] double network_losses(std::span<const Complex> v) const;

    /// Throws IslandingError when in-service branches do not connect every
    /// bus, or when no in-service voltage source remains.
    void check_topology() const;

private:
    // Augmented-matrix factors.
    struct Factorization {
        Eigen::PartialPivLU<Eigen::MatrixXcd> lu;
        Eigen::MatrixXcd z_salient;  // inverse-matrix columns at salient machine buses
    };

    void refactor();
    [[nodiscard]] Factorization factor() const;

    const Case& case_;
    std::vector<Complex> v_pf_;
    Eigen::MatrixXcd y_branches_;  // branches and bus shunts
    std::vector<Complex> y_load_;
    std::vector<bool> branch_in_service_;
    std::vector<bool> sg_in_service_;
    std::vector<Eigen::Index> sg_row_;
    std::vector<Eigen::Index> gfm_row_;
    std::vector<Eigen::Index> gfl_row_;
    std::vector<Complex> sg_y_;
    std::vector<Complex> gfm_y_;
    std::vector<std::size_t> salient_;  // in-service machines with x_q != x'_d
    std::vector<Eigen::Index> salient_row_;
    Factorization base_;
};

}  // namespace gridsim
