#include "gridsim/simulator.hpp"

#include "gridsim/errors.hpp"
#include "gridsim/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace gridsim {

namespace {

constexpr std::size_t kStatesPerDevice = 4;
constexpr double kFlatStartTolerance = 1e-6;

}  // namespace

std::string_view to_string(EventKind kind) {
    switch (kind) {
    case EventKind::sg_trip:
        return "sg_trip";
    case EventKind::load_step:
        return "load_step";
    case EventKind::branch_trip:
        return "branch_trip";
    }
    return "sg_trip";
}

std::vector<std::string> validate_config(const SimConfig& cfg) {
    std::vector<std::string> out;
    if (!(cfg.dt > 0.0)) {
        out.emplace_back("config: dt > 0 required");
    }
    if (!(cfg.t_end >= cfg.dt)) {
        out.emplace_back("config: t_end >= dt required");
    }
    if (cfg.log_decimation < 1) {
        out.emplace_back("config: log_decimation >= 1 required");
    }
    if (!(cfg.network_tol > 0.0)) {
        out.emplace_back("config: network_tol > 0 required");
    }
    if (cfg.network_max_iter < 1) {
        out.emplace_back("config: network_max_iter >= 1 required");
    }
    if (cfg.freq_filter_tf < 0.0) {
        out.emplace_back("config: freq_filter_tf >= 0 required");
    }
    if (!(cfg.divergence_limit > 0.0)) {
        out.emplace_back("config: divergence_limit > 0 required");
    }
    return out;
}

Simulator::Simulator(const Case& c, const SimConfig& cfg)
    : case_(c),
      cfg_(cfg),
      eq_(initialize(case_)),
      network_(case_, eq_.powerflow),
      omega_base_(2.0 * std::numbers::pi * case_.f_nominal) {
    if (const auto problems = validate_config(cfg_); !problems.empty()) {
        throw CaseError(problems.front());
    }
    gfm_offset_ = kStatesPerDevice * case_.sgs.size();
    gfl_offset_ = gfm_offset_ + kStatesPerDevice * case_.gfms.size();
    x_.resize(static_cast<Eigen::Index>(gfl_offset_ + kStatesPerDevice * case_.gfls.size()));
    for (std::size_t k = 0; k < case_.sgs.size(); ++k) {
        const auto& s = eq_.sgs[k].state;
        x_.segment<4>(static_cast<Eigen::Index>(kStatesPerDevice * k)) << s.delta, s.omega, s.e_q_prime, s.p_m;
    }
    for (std::size_t k = 0; k < case_.gfms.size(); ++k) {
        const auto& s = eq_.gfms[k].state;
        x_.segment<4>(static_cast<Eigen::Index>(gfm_offset_ + kStatesPerDevice * k)) << s.delta, s.omega, s.v_e,
            s.e_mag;
    }
    for (std::size_t k = 0; k < case_.gfls.size(); ++k) {
        const auto& s = eq_.gfls[k];
        x_.segment<4>(static_cast<Eigen::Index>(gfl_offset_ + kStatesPerDevice * k)) << s.theta_pll, s.omega_pll,
            s.i_d, s.i_q;
    }

    auto eval = evaluate(x_, eq_.powerflow.v);
    dx_ = std::move(eval.dx);
    snapshot_ = std::move(eval.snap);

    freq_filters_.reserve(case_.buses.size());
    bus_freq_hz_.assign(case_.buses.size(), case_.f_nominal);
    for (std::size_t i = 0; i < case_.buses.size(); ++i) {
        freq_filters_.emplace_back(cfg_.dt, cfg_.freq_filter_tf, case_.f_nominal);
        freq_filters_.back().reset(std::arg(snapshot_.network.v[i]));
    }
}

SgState Simulator::sg_state(std::size_t k) const {
    const auto o = static_cast<Eigen::Index>(kStatesPerDevice * k);
    return {x_(o), x_(o + 1), x_(o + 2), x_(o + 3)};
}

GfmState Simulator::gfm_state(std::size_t k) const {
    const auto o = static_cast<Eigen::Index>(gfm_offset_ + kStatesPerDevice * k);
    return {x_(o), x_(o + 1), x_(o + 2), x_(o + 3)};
}

GflState Simulator::gfl_state(std::size_t k) const {
    const auto o = static_cast<Eigen::Index>(gfl_offset_ + kStatesPerDevice * k);
    return {x_(o), x_(o + 1), x_(o + 2), x_(o + 3)};
}

Simulator::Evaluation Simulator::evaluate(const Eigen::VectorXd& x, std::span<const Complex> v_guess) const {
    std::vector<SgState> sgs(case_.sgs.size());
    std::vector<GfmState> gfms(case_.gfms.size());
    std::vector<GflState> gfls(case_.gfls.size());
    for (std::size_t k = 0; k < sgs.size(); ++k) {
        const auto o = static_cast<Eigen::Index>(kStatesPerDevice * k);
        sgs[k] = {x(o), x(o + 1), x(o + 2), x(o + 3)};
    }
    for (std::size_t k = 0; k < gfms.size(); ++k) {
        const auto o = static_cast<Eigen::Index>(gfm_offset_ + kStatesPerDevice * k);
        gfms[k] = {x(o), x(o + 1), x(o + 2), x(o + 3)};
    }
    for (std::size_t k = 0; k < gfls.size(); ++k) {
        const auto o = static_cast<Eigen::Index>(gfl_offset_ + kStatesPerDevice * k);
        gfls[k] = {x(o), x(o + 1), x(o + 2), x(o + 3)};
    }

    Evaluation out;
    out.snap.network =
        network_.solve(DeviceStateView{sgs, gfms, gfls}, v_guess, cfg_.network_tol, cfg_.network_max_iter);
    const auto& net = out.snap.network;
    out.dx = Eigen::VectorXd::Zero(x.size());

    for (std::size_t k = 0; k < sgs.size(); ++k) {
        if (!network_.sg_in_service(k)) {
            continue;
        }
        const auto d = sg_derivatives(case_.sgs[k], eq_.sgs[k].control, sgs[k], net.sgs[k].i_dq, omega_base_);
        out.dx.segment<4>(static_cast<Eigen::Index>(kStatesPerDevice * k)) << d.delta, d.omega, d.e_q_prime, d.p_m;
    }
    out.snap.safety.resize(gfms.size());
    for (std::size_t k = 0; k < gfms.size(); ++k) {
        const auto& p = case_.gfms[k];
        const auto& meas = net.gfms[k].meas;
        out.snap.safety[k] = apply_safety_law(p.p_star, meas, gfms[k].omega, p, case_.f_nominal);
        GfmSetpoints sp = eq_.gfms[k].setpoints;
        sp.p = out.snap.safety[k].p_setpoint;
        const auto d = gfm_derivatives(p, gfms[k], meas, sp, omega_base_);
        out.dx.segment<4>(static_cast<Eigen::Index>(gfm_offset_ + kStatesPerDevice * k)) << d.delta, d.omega,
            d.v_e, d.e_mag;
    }
    for (std::size_t k = 0; k < gfls.size(); ++k) {
        const auto& p = case_.gfls[k];
        const auto d = gfl_derivatives(p, gfls[k], net.gfls[k].meas.v, omega_base_);
        out.dx.segment<4>(static_cast<Eigen::Index>(gfl_offset_ + kStatesPerDevice * k)) << d.theta_pll,
            d.omega_pll, d.i_d, d.i_q;
    }
    return out;
}

void Simulator::apply_event(const Event& e) {
    switch (e.kind) {
    case EventKind::sg_trip: {
        auto it = std::find_if(case_.sgs.begin(), case_.sgs.end(), [&](const SgParams& g) { return g.id == e.target; });
        if (it == case_.sgs.end()) {
            throw EventError("sg_trip: unknown sg " + std::to_string(e.target));
        }
        network_.trip_sg(static_cast<std::size_t>(it - case_.sgs.begin()));
        break;
    }
    case EventKind::load_step:
        if (!case_.bus_index(e.target)) {
            throw EventError("load_step: unknown bus " + std::to_string(e.target));
        }
        network_.step_load(e.target, e.dp, e.dq);
        break;
    case EventKind::branch_trip:
        network_.trip_branch(e.target);
        break;
    }
    auto eval = evaluate(x_, snapshot_.network.v);
    dx_ = std::move(eval.dx);
    snapshot_ = std::move(eval.snap);
    for (std::size_t i = 0; i < freq_filters_.size(); ++i) {
        freq_filters_[i].rebase(std::arg(snapshot_.network.v[i]));
    }
}

void Simulator::step() {
    const double h = cfg_.dt;
    // Each stage starts the network iteration from the previous stage's voltages.
    std::vector<Complex> guess = snapshot_.network.v;
    auto stage = [&](const Eigen::VectorXd& xs) {
        auto e = evaluate(xs, guess);
        guess = std::move(e.snap.network.v);
        return std::move(e.dx);
    };
    x_ = rk4_step(x_, dx_, h, stage);

    auto end = evaluate(x_, guess);
    dx_ = std::move(end.dx);
    snapshot_ = std::move(end.snap);
    ++step_index_;

    for (std::size_t i = 0; i < freq_filters_.size(); ++i) {
        bus_freq_hz_[i] = freq_filters_[i].update(std::arg(snapshot_.network.v[i]));
    }
    check_divergence();
}

void Simulator::check_divergence() const {
    auto fail = [this](const std::string& who, double omega) {
        std::ostringstream os;
        os << who << " speed " << omega << " pu outside 1 +/- " << cfg_.divergence_limit << " at t=" << time()
           << " s";
        throw DivergenceError(os.str());
    };
    if (!x_.allFinite()) {
        throw DivergenceError("non-finite state at t=" + std::to_string(time()) + " s");
    }
    for (std::size_t k = 0; k < case_.sgs.size(); ++k) {
        const double w = sg_state(k).omega;
        if (network_.sg_in_service(k) && std::abs(w - 1.0) > cfg_.divergence_limit) {
            fail(entity_name("sg", case_.sgs[k].id), w);
        }
    }
    for (std::size_t k = 0; k < case_.gfms.size(); ++k) {
        const double w = gfm_state(k).omega;
        if (std::abs(w - 1.0) > cfg_.divergence_limit) {
            fail(entity_name("gfm", case_.gfms[k].id), w);
        }
    }
    for (std::size_t k = 0; k < case_.gfls.size(); ++k) {
        const double w = gfl_state(k).omega_pll;
        if (std::abs(w - 1.0) > cfg_.divergence_limit) {
            fail(entity_name("gfl", case_.gfls[k].id), w);
        }
    }
}

double Simulator::power_balance_residual() const {
    const auto& net = snapshot_.network;
    double device = 0.0;
    auto add = [&](int bus, Complex current) {
        device += (net.v[static_cast<std::size_t>(network_.bus_row(bus))] * std::conj(current)).real();
    };
    for (std::size_t k = 0; k < case_.sgs.size(); ++k) {
        add(case_.sgs[k].bus, net.sgs[k].current);
    }
    for (std::size_t k = 0; k < case_.gfms.size(); ++k) {
        add(case_.gfms[k].bus, net.gfms[k].current);
    }
    for (std::size_t k = 0; k < case_.gfls.size(); ++k) {
        add(case_.gfls[k].bus, net.gfls[k].current);
    }
    return device - network_.load_power(net.v) - network_.network_losses(net.v);
}

void Simulator::setup_trace(TraceLog& log) const {
    for (const auto& b : case_.buses) {
        const auto e = entity_name("bus", b.id);
        log.add_channel(e, "v_mag");
        log.add_channel(e, "v_ang");
        log.add_channel(e, "f_hz");
    }
    for (const auto& g : case_.sgs) {
        const auto e = entity_name("sg", g.id);
        for (const char* v : {"delta", "omega", "e_q_prime", "p_m", "p", "q"}) {
            log.add_channel(e, v);
        }
    }
    for (const auto& g : case_.gfms) {
        const auto e = entity_name("gfm", g.id);
        for (const char* v : {"delta", "omega", "v_e", "e_mag", "p", "q", "i_mag", "p_set", "mode", "limited"}) {
            log.add_channel(e, v);
        }
    }
    for (const auto& g : case_.gfls) {
        const auto e = entity_name("gfl", g.id);
        for (const char* v : {"theta_pll", "omega_pll", "i_d", "i_q", "p", "q", "i_mag", "p_ref", "limited"}) {
            log.add_channel(e, v);
        }
    }
    for (const char* v : {"p_device", "p_load", "p_loss", "balance_residual", "network_iterations"}) {
        log.add_channel("system", v);
    }
}

void Simulator::record(TraceLog& log) const {
    const auto& net = snapshot_.network;
    row_.clear();
    for (std::size_t i = 0; i < case_.buses.size(); ++i) {
        row_.push_back(std::abs(net.v[i]));
        row_.push_back(std::arg(net.v[i]));
        row_.push_back(bus_freq_hz_[i]);
    }
    double p_device = 0.0;
    for (std::size_t k = 0; k < case_.sgs.size(); ++k) {
        const auto s = sg_state(k);
        const Complex v = net.v[static_cast<std::size_t>(network_.bus_row(case_.sgs[k].bus))];
        const Complex pq = v * std::conj(net.sgs[k].current);
        p_device += pq.real();
        row_.insert(row_.end(), {s.delta, s.omega, s.e_q_prime, s.p_m, pq.real(), pq.imag()});
    }
    for (std::size_t k = 0; k < case_.gfms.size(); ++k) {
        const auto s = gfm_state(k);
        const auto& inj = net.gfms[k];
        const auto& sd = snapshot_.safety[k];
        p_device += inj.meas.p;
        row_.insert(row_.end(), {s.delta, s.omega, s.v_e, s.e_mag, inj.meas.p, inj.meas.q, std::abs(inj.current),
                                 sd.p_setpoint, static_cast<double>(sd.mode), inj.limited ? 1.0 : 0.0});
    }
    for (std::size_t k = 0; k < case_.gfls.size(); ++k) {
        const auto s = gfl_state(k);
        const auto& inj = net.gfls[k];
        p_device += inj.meas.p;
        row_.insert(row_.end(), {s.theta_pll, s.omega_pll, s.i_d, s.i_q, inj.meas.p, inj.meas.q,
                                 std::abs(inj.current), gfl_power_reference(case_.gfls[k], s.omega_pll),
                                 inj.limited ? 1.0 : 0.0});
    }
    const double p_load = network_.load_power(net.v);
    const double p_loss = network_.network_losses(net.v);
    row_.insert(row_.end(),
                {p_device, p_load, p_loss, p_device - p_load - p_loss, static_cast<double>(net.iterations)});
    log.append_row(time(), row_);
}

TraceLog Simulator::run(std::vector<Event> events) {
    std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
    const long total_steps = std::lround(cfg_.t_end / cfg_.dt);
    std::vector<long> fire_at;
    for (const auto& e : events) {
        if (e.time < 0.0 || e.time > cfg_.t_end) {
            throw EventError("event at t=" + std::to_string(e.time) + " s lies outside [0, t_end]");
        }
        fire_at.push_back(static_cast<long>(std::ceil(e.time / cfg_.dt - 1e-9)));
    }

    if (step_index_ == 0 && dx_.size() > 0 && dx_.cwiseAbs().maxCoeff() > kFlatStartTolerance) {
        std::ostringstream os;
        os << "initial state is not an equilibrium (max derivative " << dx_.cwiseAbs().maxCoeff() << ")";
        throw ConvergenceError(os.str());
    }

    TraceLog log;
    setup_trace(log);
    record(log);
    std::size_t next = 0;
    while (step_index_ < total_steps) {
        while (next < events.size() && fire_at[next] <= step_index_) {
            apply_event(events[next]);
            ++next;
        }
        step();
        if (step_index_ % cfg_.log_decimation == 0 || step_index_ == total_steps) {
            record(log);
        }
    }
    return log;
}

TraceLog run(const Case& c, const SimConfig& cfg, std::vector<Event> events) {
    Simulator sim(c, cfg);
    return sim.run(std::move(events));
}

}  // namespace gridsim
