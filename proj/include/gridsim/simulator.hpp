#pragma once

// Fixed-step transient simulation: explicit RK4 over the stacked device
// states, with the algebraic network re-solved at every stage.

#include "gridsim/case_model.hpp"
#include "gridsim/devices.hpp"
#include "gridsim/network.hpp"
#include "gridsim/powerflow.hpp"
#include "gridsim/safety_control.hpp"
#include "gridsim/trace.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace gridsim {

struct SimConfig {
    double dt = 1e-3;
    double t_end = 10.0;
    int log_decimation = 1;
    double network_tol = 1e-8;
    int network_max_iter = 20;
    double freq_filter_tf = 0.05;
    double divergence_limit = 0.1;  // |omega - 1| in pu
};

/// Empty when the configuration is usable.
std::vector<std::string> validate_config(const SimConfig& cfg);

enum class EventKind { sg_trip, load_step, branch_trip };

struct Event {
    double time = 0.0;
    EventKind kind = EventKind::sg_trip;
    int target = 0;  // sg id, bus id, or branch id
    double dp = 0.0;
    double dq = 0.0;
};

std::string_view to_string(EventKind kind);

/// Snapshot of the algebraic variables and derived controller outputs at
/// one instant.
struct SystemSnapshot {
    NetworkSolution network;
    std::vector<SafetyDecision> safety;  // per GFM
};

class Simulator {
public:
    Simulator(const Case& c, const SimConfig& cfg);
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    /// Applies a topology or load change at the current time and re-solves
    /// the network.
    void apply_event(const Event& e);

    /// One RK4 step of size cfg.dt.
    void step();

    /// Runs from the current time to t_end, applying `events` on the step
    /// grid (an event at t fires at ceil(t/dt)*dt).
    TraceLog run(std::vector<Event> events);

    [[nodiscard]] double time() const { return static_cast<double>(step_index_) * cfg_.dt; }
    [[nodiscard]] const SystemSnapshot& snapshot() const { return snapshot_; }
    [[nodiscard]] const Eigen::VectorXd& state() const { return x_; }
    [[nodiscard]] Eigen::VectorXd derivative() const { return dx_; }
    [[nodiscard]] const EquilibriumState& equilibrium() const { return eq_; }
    [[nodiscard]] const Network& network() const { return network_; }
    [[nodiscard]] const std::vector<double>& bus_frequency_hz() const { return bus_freq_hz_; }
    [[nodiscard]] const Case& study_case() const { return case_; }

    [[nodiscard]] SgState sg_state(std::size_t k) const;
    [[nodiscard]] GfmState gfm_state(std::size_t k) const;
    [[nodiscard]] GflState gfl_state(std::size_t k) const;

    /// Device electrical power minus load power and losses at the current snapshot.
    [[nodiscard]] double power_balance_residual() const;

private:
    struct Evaluation {
        Eigen::VectorXd dx;
        SystemSnapshot snap;
    };

    [[nodiscard]] Evaluation evaluate(const Eigen::VectorXd& x, std::span<const Complex> v_guess) const;
    void check_divergence() const;
    void setup_trace(TraceLog& log) const;
    void record(TraceLog& log) const;

    Case case_;
    SimConfig cfg_;
    EquilibriumState eq_;
    Network network_;
    double omega_base_;
    std::size_t gfm_offset_ = 0;
    std::size_t gfl_offset_ = 0;
    long step_index_ = 0;
    Eigen::VectorXd x_;
    Eigen::VectorXd dx_;
    SystemSnapshot snapshot_;
    std::vector<BusFrequencyFilter> freq_filters_;
    std::vector<double> bus_freq_hz_;
    mutable std::vector<double> row_;
};

/// Power flow, initialization, and a full run.
TraceLog run(const Case& c, const SimConfig& cfg, std::vector<Event> events);

}  // namespace gridsim
