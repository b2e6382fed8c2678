#include "gridsim/network.hpp"

#include "gridsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace gridsim {

namespace {

constexpr int kPlainPasses = 8;

}  // namespace

Network::Network(const Case& c, const PowerFlowSolution& pf) : case_(c), v_pf_(pf.v) {
    const auto n = static_cast<Eigen::Index>(c.buses.size());
    y_branches_ = build_ybus(c).dense();
    y_load_.resize(c.buses.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& b = c.buses[i];
        const double vm2 = std::norm(pf.v[i]);
        y_load_[i] = Complex(b.p_load, -b.q_load) / vm2;
    }
    branch_in_service_.reserve(c.branches.size());
    for (const auto& br : c.branches) {
        branch_in_service_.push_back(br.in_service);
    }
    sg_in_service_.assign(c.sgs.size(), true);
    for (const auto& g : c.sgs) {
        sg_row_.push_back(bus_row(g.bus));
        sg_y_.push_back(sg_norton_admittance(g));
    }
    for (const auto& g : c.gfms) {
        gfm_row_.push_back(bus_row(g.bus));
        gfm_y_.push_back(gfm_norton_admittance(g));
    }
    for (const auto& g : c.gfls) {
        gfl_row_.push_back(bus_row(g.bus));
    }
    refactor();
}

Eigen::Index Network::bus_row(int bus_id) const {
    auto idx = case_.bus_index(bus_id);
    if (!idx) {
        throw CaseError("unknown bus " + std::to_string(bus_id));
    }
    return static_cast<Eigen::Index>(*idx);
}

void Network::refactor() {
    salient_.clear();
    salient_row_.clear();
    for (std::size_t k = 0; k < sg_row_.size(); ++k) {
        if (sg_in_service_[k] && case_.sgs[k].x_q != case_.sgs[k].x_d_prime) {
            salient_.push_back(k);
            salient_row_.push_back(sg_row_[k]);
        }
    }
    base_ = factor();
}

Network::Factorization Network::factor() const {
    Eigen::MatrixXcd y = y_branches_;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        y(i, i) += y_load_[i];
    }
    for (std::size_t k = 0; k < sg_row_.size(); ++k) {
        if (sg_in_service_[k]) {
            y(sg_row_[k], sg_row_[k]) += sg_y_[k];
        }
    }
    for (std::size_t k = 0; k < gfm_row_.size(); ++k) {
        y(gfm_row_[k], gfm_row_[k]) += gfm_y_[k];
    }
    Factorization f;
    f.lu.compute(y);
    const double det_mag = std::abs(f.lu.determinant());
    if (!(det_mag > 0.0) || !std::isfinite(f.lu.rcond()) || f.lu.rcond() < 1e-14) {
        throw ConvergenceError("augmented network matrix is singular");
    }
    Eigen::MatrixXcd unit = Eigen::MatrixXcd::Zero(y.rows(), static_cast<Eigen::Index>(salient_.size()));
    for (std::size_t l = 0; l < salient_.size(); ++l) {
        unit(salient_row_[l], static_cast<Eigen::Index>(l)) = 1.0;
    }
    f.z_salient = f.lu.solve(unit);
    return f;
}

void Network::check_topology() const {
    const std::size_t n = case_.buses.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&parent](std::size_t i) {
        while (parent[i] != i) {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        return i;
    };
    for (std::size_t k = 0; k < case_.branches.size(); ++k) {
        if (!branch_in_service_[k]) {
            continue;
        }
        const auto a = find(static_cast<std::size_t>(bus_row(case_.branches[k].from)));
        const auto b = find(static_cast<std::size_t>(bus_row(case_.branches[k].to)));
        parent[a] = b;
    }
    const auto root = find(0);
    for (std::size_t i = 1; i < n; ++i) {
        if (find(i) != root) {
            throw IslandingError("network split: bus " + std::to_string(case_.buses[i].id) +
                                 " is separated from bus " + std::to_string(case_.buses[0].id));
        }
    }
    const bool has_source = std::any_of(sg_in_service_.begin(), sg_in_service_.end(), [](bool b) { return b; }) ||
                            !case_.gfms.empty();
    if (!has_source) {
        throw IslandingError("no in-service voltage source remains in the network");
    }
}

void Network::trip_sg(std::size_t sg_index) {
    if (sg_index >= sg_in_service_.size()) {
        throw EventError("sg index out of range");
    }
    if (!sg_in_service_[sg_index]) {
        throw EventError("sg " + std::to_string(case_.sgs[sg_index].id) + " is already tripped");
    }
    sg_in_service_[sg_index] = false;
    check_topology();
    refactor();
}

void Network::trip_branch(int branch_id) {
    for (std::size_t k = 0; k < case_.branches.size(); ++k) {
        const auto& br = case_.branches[k];
        if (br.id != branch_id) {
            continue;
        }
        if (!branch_in_service_[k]) {
            throw EventError("branch " + std::to_string(branch_id) + " is already out of service");
        }
        branch_in_service_[k] = false;
        // Rebuilt from scratch; subtracting the stamp leaves rounding residue.
        y_branches_ = Eigen::MatrixXcd::Zero(y_branches_.rows(), y_branches_.cols());
        for (std::size_t j = 0; j < case_.branches.size(); ++j) {
            if (branch_in_service_[j]) {
                stamp_branch(y_branches_, bus_row(case_.branches[j].from), bus_row(case_.branches[j].to),
                             case_.branches[j]);
            }
        }
        for (Eigen::Index i = 0; i < y_branches_.rows(); ++i) {
            y_branches_(i, i) += Complex(0.0, case_.buses[i].shunt_b);
        }
        check_topology();
        refactor();
        return;
    }
    throw EventError("unknown branch " + std::to_string(branch_id));
}

void Network::step_load(int bus_id, double dp, double dq) {
    const auto row = bus_row(bus_id);
    y_load_[row] += Complex(dp, -dq) / std::norm(v_pf_[row]);
    refactor();
}

double Network::load_power(std::span<const Complex> v) const {
    double total = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        total += y_load_[i].real() * std::norm(v[i]);
    }
    return total;
}

double Network::network_losses(std::span<const Complex> v) const {
    const Eigen::Map<const Eigen::VectorXcd> vv(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::VectorXcd i = y_branches_ * vv;
    return vv.cwiseProduct(i.conjugate()).real().sum();
}

NetworkSolution Network::solve(const DeviceStateView& states, std::span<const Complex> v_guess, double tol,
                               int max_iter) const {
    const auto n = static_cast<Eigen::Index>(case_.buses.size());
    const auto m = static_cast<Eigen::Index>(salient_.size());
    NetworkSolution sol;
    sol.sgs.resize(case_.sgs.size());
    sol.gfms.resize(case_.gfms.size());
    sol.gfls.resize(case_.gfls.size());

    // Machine currents are I = r E'q/X'd - Y V + c conj(V) with the
    // frame rotation r; Y is stamped in the matrix and the conjugate-linear
    // saliency term c is solved exactly on the machine buses below.
    Eigen::VectorXcd sg_source = Eigen::VectorXcd::Zero(n);
    for (std::size_t k = 0; k < case_.sgs.size(); ++k) {
        if (sg_in_service_[k]) {
            const auto& p = case_.sgs[k];
            const Complex from_dq = std::polar(1.0, states.sgs[k].delta - std::numbers::pi / 2.0);
            sg_source(sg_row_[k]) += from_dq * (states.sgs[k].e_q_prime / p.x_d_prime);
        }
    }
    Eigen::VectorXcd c(m);
    for (Eigen::Index l = 0; l < m; ++l) {
        const auto k = salient_[static_cast<std::size_t>(l)];
        const auto& p = case_.sgs[k];
        const Complex from_dq = std::polar(1.0, states.sgs[k].delta - std::numbers::pi / 2.0);
        c(l) = Complex(0.0, 0.5 * (1.0 / p.x_q - 1.0 / p.x_d_prime)) * from_dq * from_dq;
    }

    Eigen::VectorXcd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = v_guess[i];
    }
    Eigen::VectorXcd source(n);

    // Inverter sources at the given voltages, net of the grid-forming Norton
    // terms stamped in the matrix. Returns false when any limiter is active,
    // since the source then depends on V.
    auto inverter_sources = [&](const Eigen::VectorXcd& volts) {
        bool linear = true;
        source = sg_source;
        for (std::size_t k = 0; k < case_.gfms.size(); ++k) {
            const auto row = gfm_row_[k];
            sol.gfms[k] = gfm_interface(case_.gfms[k], states.gfms[k], volts(row));
            source(row) += sol.gfms[k].current + gfm_y_[k] * volts(row);
            linear = linear && !sol.gfms[k].limited;
        }
        for (std::size_t k = 0; k < case_.gfls.size(); ++k) {
            const auto row = gfl_row_[k];
            sol.gfls[k] = gfl_interface(case_.gfls[k], states.gfls[k], volts(row));
            source(row) += sol.gfls[k].current;
            linear = linear && !sol.gfls[k].limited;
        }
        return linear;
    };

    const Factorization* f = &base_;
    Eigen::PartialPivLU<Eigen::MatrixXd> reduced_lu;
    if (m > 0) {
        // V_g - Z_gg diag(c) conj(V_g) = V0_g in real form.
        Eigen::MatrixXd reduced(2 * m, 2 * m);
        for (Eigen::Index l = 0; l < m; ++l) {
            for (Eigen::Index i = 0; i < m; ++i) {
                const Complex zc = f->z_salient(salient_row_[static_cast<std::size_t>(i)], l) * c(l);
                reduced(i, l) = (i == l ? 1.0 : 0.0) - zc.real();
                reduced(m + i, l) = -zc.imag();
                reduced(i, m + l) = -zc.imag();
                reduced(m + i, m + l) = (i == l ? 1.0 : 0.0) + zc.real();
            }
        }
        reduced_lu.compute(reduced);
    }

    // Real-linear in the injections.
    auto linear_solve = [&](const Eigen::VectorXcd& injections) -> Eigen::VectorXcd {
        Eigen::VectorXcd v0 = f->lu.solve(injections);
        if (m == 0) {
            return v0;
        }
        Eigen::VectorXd rhs(2 * m);
        for (Eigen::Index i = 0; i < m; ++i) {
            const Complex vg = v0(salient_row_[static_cast<std::size_t>(i)]);
            rhs(i) = vg.real();
            rhs(m + i) = vg.imag();
        }
        const Eigen::VectorXd x = reduced_lu.solve(rhs);
        Eigen::VectorXcd u(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            u(i) = c(i) * Complex(x(i), -x(m + i));
        }
        v0.noalias() += f->z_salient * u;
        return v0;
    };

    auto finish = [&]() {
        for (std::size_t k = 0; k < case_.sgs.size(); ++k) {
            sol.sgs[k] =
                sg_in_service_[k] ? sg_interface(case_.sgs[k], states.sgs[k], v(sg_row_[k])) : SgInjection{};
        }
        sol.v.assign(v.data(), v.data() + n);
        return sol;
    };

    bool previous_linear = inverter_sources(v);
    const int plain_passes = std::min(max_iter, kPlainPasses);
    for (int it = 1; it <= plain_passes; ++it) {
        const Eigen::VectorXcd v_new = linear_solve(source);
        const double update = (v_new - v).cwiseAbs().maxCoeff();
        v = v_new;
        const bool linear = inverter_sources(v);
        sol.iterations = it;
        sol.last_update = update;
        if (update <= tol || (linear && previous_linear)) {
            return finish();
        }
        previous_linear = linear;
    }

    // A stiff unit held at its limit makes the fixed point above crawl or
    // cycle. Newton on the inverter bus voltages instead: every injection
    // depends only on its own bus voltage, so the Jacobian is the network
    // response at those buses times a 2x2 block per bus.
    std::vector<Eigen::Index> rows(gfm_row_);
    rows.insert(rows.end(), gfl_row_.begin(), gfl_row_.end());
    std::sort(rows.begin(), rows.end());
    rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
    const auto q = static_cast<Eigen::Index>(rows.size());
    if (q == 0) {
        throw ConvergenceError("network solution did not converge");
    }
    Eigen::MatrixXd response(2 * q, 2 * q);  // d V_rows / d injections, real form
    for (Eigen::Index l = 0; l < q; ++l) {
        for (int part = 0; part < 2; ++part) {
            Eigen::VectorXcd unit = Eigen::VectorXcd::Zero(n);
            unit(rows[static_cast<std::size_t>(l)]) = part == 0 ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
            const Eigen::VectorXcd dv = linear_solve(unit);
            for (Eigen::Index i = 0; i < q; ++i) {
                const Complex d = dv(rows[static_cast<std::size_t>(i)]);
                response(i, l + part * q) = d.real();
                response(q + i, l + part * q) = d.imag();
            }
        }
    }
    auto mismatch = [&](const Eigen::VectorXcd& volts, Eigen::VectorXcd& full) {
        inverter_sources(volts);
        full = linear_solve(source);
        Eigen::VectorXd g(2 * q);
        for (Eigen::Index i = 0; i < q; ++i) {
            const Complex d = volts(rows[static_cast<std::size_t>(i)]) - full(rows[static_cast<std::size_t>(i)]);
            g(i) = d.real();
            g(q + i) = d.imag();
        }
        return g;
    };
    constexpr double kStep = 1e-7;
    Eigen::VectorXcd full(n);
    for (int it = plain_passes + 1; it <= max_iter; ++it) {
        const Eigen::VectorXd g = mismatch(v, full);
        // Injection sensitivities by one-sided differences at each bus.
        const Eigen::VectorXcd base_src = source;
        Eigen::MatrixXd ds = Eigen::MatrixXd::Zero(2 * q, 2 * q);
        for (int part = 0; part < 2; ++part) {
            Eigen::VectorXcd shifted = v;
            for (auto r : rows) {
                shifted(r) += part == 0 ? Complex(kStep, 0.0) : Complex(0.0, kStep);
            }
            inverter_sources(shifted);
            for (Eigen::Index i = 0; i < q; ++i) {
                const Complex d = (source(rows[static_cast<std::size_t>(i)]) - base_src(rows[static_cast<std::size_t>(i)])) / kStep;
                ds(i, i + part * q) = d.real();
                ds(q + i, i + part * q) = d.imag();
            }
        }
        const Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(2 * q, 2 * q) - response * ds;
        const Eigen::VectorXd dx = jac.partialPivLu().solve(-g);
        for (Eigen::Index i = 0; i < q; ++i) {
            v(rows[static_cast<std::size_t>(i)]) += Complex(dx(i), dx(q + i));
        }
        const Eigen::VectorXd g_new = mismatch(v, full);
        const double update = std::max(dx.cwiseAbs().maxCoeff(), g_new.cwiseAbs().maxCoeff());
        v = full;
        inverter_sources(v);
        sol.iterations = it;
        sol.last_update = update;
        if (update <= tol) {
            return finish();
        }
    }

    // Report the bus with the largest remaining update.
    const Eigen::VectorXcd v_next = linear_solve(source);
    Eigen::Index worst = 0;
    const double residual = (v_next - v).cwiseAbs().maxCoeff(&worst);
    std::ostringstream os;
    os << "network solution did not converge in " << max_iter << " iterations; worst bus "
       << case_.buses[worst].id << " with update " << residual << " pu";
    throw ConvergenceError(os.str());
}

}  // namespace gridsim
