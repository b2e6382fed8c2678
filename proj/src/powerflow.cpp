#include "gridsim/powerflow.hpp"

#include "gridsim/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace gridsim {

namespace {

Eigen::Index index_of(const Case& c, int bus_id) {
    auto idx = c.bus_index(bus_id);
    if (!idx) {
        throw CaseError("unknown bus " + std::to_string(bus_id));
    }
    return static_cast<Eigen::Index>(*idx);
}

}  // namespace

void stamp_branch(Eigen::MatrixXcd& y, Eigen::Index from, Eigen::Index to, const Branch& br) {
    const Complex series = 1.0 / Complex(br.r, br.x);
    const Complex half_charging(0.0, 0.5 * br.b_charging);
    const double t = br.tap_ratio;
    y(from, from) += (series + half_charging) / (t * t);
    y(to, to) += series + half_charging;
    y(from, to) -= series / t;
    y(to, from) -= series / t;
}

YBus build_ybus(const Case& c) {
    const auto n = static_cast<Eigen::Index>(c.buses.size());
    Eigen::MatrixXcd y = Eigen::MatrixXcd::Zero(n, n);
    std::vector<bool> connected(c.buses.size(), false);
    for (const auto& br : c.branches) {
        if (!br.in_service) {
            continue;
        }
        const auto f = index_of(c, br.from);
        const auto t = index_of(c, br.to);
        stamp_branch(y, f, t, br);
        connected[f] = connected[t] = true;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& b = c.buses[i];
        y(i, i) += Complex(0.0, b.shunt_b);
        if (!connected[i] && b.shunt_b == 0.0) {
            throw CaseError("bus " + std::to_string(b.id) + " is isolated (no in-service branch, no shunt)");
        }
    }
    YBus out;
    out.bus_ids.reserve(c.buses.size());
    for (const auto& b : c.buses) {
        out.bus_ids.push_back(b.id);
    }
    out.matrix = y.sparseView();
    out.matrix.makeCompressed();
    return out;
}

PowerFlowSolution solve_powerflow(const Case& c, const YBus& ybus, const PowerFlowOptions& opts) {
    const auto n = static_cast<Eigen::Index>(c.buses.size());
    const Eigen::MatrixXcd y = ybus.dense();

    Eigen::VectorXd p_sched = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd q_sched = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd vm = Eigen::VectorXd::Ones(n);
    Eigen::VectorXd va = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& b = c.buses[i];
        p_sched(i) -= b.p_load;
        q_sched(i) -= b.q_load;
        if (b.kind != BusKind::pq) {
            vm(i) = b.v_set;
        }
    }
    for (const auto& g : c.sgs) {
        p_sched(index_of(c, g.bus)) += g.p_set;
    }
    for (const auto& g : c.gfms) {
        p_sched(index_of(c, g.bus)) += g.p_star;
        q_sched(index_of(c, g.bus)) += g.q_star;
    }
    for (const auto& g : c.gfls) {
        p_sched(index_of(c, g.bus)) += g.p_star;
        q_sched(index_of(c, g.bus)) += g.q_star;
    }

    // Unknowns: angles of non-slack buses, magnitudes of PQ buses.
    std::vector<Eigen::Index> ang_idx;
    std::vector<Eigen::Index> mag_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (c.buses[i].kind != BusKind::slack) {
            ang_idx.push_back(i);
        }
        if (c.buses[i].kind == BusKind::pq) {
            mag_idx.push_back(i);
        }
    }
    const auto na = static_cast<Eigen::Index>(ang_idx.size());
    const auto nm = static_cast<Eigen::Index>(mag_idx.size());
    const Eigen::Index dim = na + nm;

    auto phasors = [&]() {
        Eigen::VectorXcd v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = std::polar(vm(i), va(i));
        }
        return v;
    };

    PowerFlowSolution sol;
    int iter = 0;
    while (true) {
        const Eigen::VectorXcd v = phasors();
        const Eigen::VectorXcd current = y * v;
        const Eigen::VectorXcd s = v.cwiseProduct(current.conjugate());

        Eigen::VectorXd mismatch(dim);
        for (Eigen::Index k = 0; k < na; ++k) {
            mismatch(k) = p_sched(ang_idx[k]) - s(ang_idx[k]).real();
        }
        for (Eigen::Index k = 0; k < nm; ++k) {
            mismatch(na + k) = q_sched(mag_idx[k]) - s(mag_idx[k]).imag();
        }
        const double worst = dim > 0 ? mismatch.cwiseAbs().maxCoeff() : 0.0;
        if (worst <= opts.tolerance) {
            sol.iterations = iter;
            sol.max_mismatch = worst;
            break;
        }
        if (iter >= opts.max_iterations) {
            std::ostringstream os;
            os << "power flow did not converge in " << opts.max_iterations << " iterations (max mismatch " << worst
               << " pu)";
            throw ConvergenceError(os.str());
        }

        // dS_i/dVa = j V_i conj(I_i) e_i - j V_i conj(Y_ij V_j)
        // dS_i/dVm = V_i conj(I_i)/|V_i| e_i + V_i conj(Y_ij V_j/|V_j|)
        const Eigen::MatrixXcd diag_v = v.asDiagonal();
        const Eigen::VectorXcd v_norm = v.cwiseQuotient(vm.cast<Complex>());
        const Eigen::MatrixXcd ds_dva =
            Complex(0.0, 1.0) * diag_v * (Eigen::MatrixXcd(current.asDiagonal()) - y * diag_v).conjugate();
        const Eigen::MatrixXcd ds_dvm =
            diag_v * (y * Eigen::MatrixXcd(v_norm.asDiagonal())).conjugate() +
            Eigen::MatrixXcd((current.conjugate().cwiseProduct(v_norm)).asDiagonal());

        Eigen::MatrixXd jac(dim, dim);
        for (Eigen::Index r = 0; r < na; ++r) {
            for (Eigen::Index k = 0; k < na; ++k) {
                jac(r, k) = ds_dva(ang_idx[r], ang_idx[k]).real();
            }
            for (Eigen::Index k = 0; k < nm; ++k) {
                jac(r, na + k) = ds_dvm(ang_idx[r], mag_idx[k]).real();
            }
        }
        for (Eigen::Index r = 0; r < nm; ++r) {
            for (Eigen::Index k = 0; k < na; ++k) {
                jac(na + r, k) = ds_dva(mag_idx[r], ang_idx[k]).imag();
            }
            for (Eigen::Index k = 0; k < nm; ++k) {
                jac(na + r, na + k) = ds_dvm(mag_idx[r], mag_idx[k]).imag();
            }
        }

        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) {
            throw ConvergenceError("power flow Jacobian is singular");
        }
        const Eigen::VectorXd dx = lu.solve(mismatch);
        for (Eigen::Index k = 0; k < na; ++k) {
            va(ang_idx[k]) += dx(k);
        }
        for (Eigen::Index k = 0; k < nm; ++k) {
            vm(mag_idx[k]) += dx(na + k);
        }
        ++iter;
    }

    const Eigen::VectorXcd v = phasors();
    const Eigen::VectorXcd s = v.cwiseProduct((y * v).conjugate());
    sol.v.assign(v.data(), v.data() + n);
    sol.p_inj.resize(n);
    sol.q_inj.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        sol.p_inj[i] = s(i).real();
        sol.q_inj[i] = s(i).imag();
    }
    return sol;
}

SgInit init_sg(const SgParams& p, Complex v_terminal, Complex s_injected) {
    if (std::abs(v_terminal) == 0.0) {
        throw CaseError("sg " + std::to_string(p.id) + ": zero terminal voltage at initialization");
    }
    const Complex current = std::conj(s_injected / v_terminal);
    const Complex e_q = v_terminal + Complex(0.0, p.x_q) * current;
    SgInit out;
    out.state.delta = std::arg(e_q);
    const Complex to_dq = std::polar(1.0, -(out.state.delta - std::numbers::pi / 2.0));
    const Complex i_dq = current * to_dq;
    const Complex v_dq = v_terminal * to_dq;
    out.state.omega = 1.0;
    out.state.e_q_prime = v_dq.imag() + p.x_d_prime * i_dq.real();
    out.control.e_fd = out.state.e_q_prime + (p.x_d - p.x_d_prime) * i_dq.real();
    out.state.p_m = out.state.e_q_prime * i_dq.imag() + (p.x_q - p.x_d_prime) * i_dq.real() * i_dq.imag();
    out.control.p_ref = out.state.p_m;
    return out;
}

GfmInit init_gfm(const GfmParams& p, Complex v_terminal, Complex s_injected) {
    if (std::abs(v_terminal) == 0.0) {
        throw CaseError("gfm " + std::to_string(p.id) + ": zero terminal voltage at initialization");
    }
    const Complex current = std::conj(s_injected / v_terminal);
    const Complex e = v_terminal + Complex(0.0, p.x_c) * current;
    GfmInit out;
    out.state.delta = std::arg(e);
    out.state.omega = 1.0;
    out.state.v_e = 0.0;
    out.state.e_mag = std::abs(e);
    out.setpoints.p = s_injected.real();
    out.setpoints.q = std::clamp(p.q_star, -p.q_cap, p.q_cap);
    out.setpoints.v = std::abs(v_terminal) - p.m_q * (out.setpoints.q - s_injected.imag());
    return out;
}

GflState init_gfl(const GflParams& /*p*/, Complex v_terminal, Complex s_injected) {
    const double v_mag = std::abs(v_terminal);
    if (v_mag == 0.0) {
        throw CaseError("gfl: zero terminal voltage at initialization");
    }
    GflState s;
    s.theta_pll = std::arg(v_terminal);
    s.omega_pll = 1.0;
    s.i_d = s_injected.real() / v_mag;
    s.i_q = s_injected.imag() / v_mag;
    return s;
}

Complex sg_injection_at(const Case& c, const PowerFlowSolution& pf, const SgParams& g) {
    const auto i = index_of(c, g.bus);
    const auto& b = c.buses[i];
    Complex s(pf.p_inj[i] + b.p_load, pf.q_inj[i] + b.q_load);
    for (const auto& u : c.gfms) {
        if (u.bus == g.bus) {
            s -= Complex(u.p_star, u.q_star);
        }
    }
    for (const auto& u : c.gfls) {
        if (u.bus == g.bus) {
            s -= Complex(u.p_star, u.q_star);
        }
    }
    return s;
}

EquilibriumState initialize(const Case& c, const PowerFlowOptions& opts) {
    EquilibriumState eq;
    const YBus ybus = build_ybus(c);
    eq.powerflow = solve_powerflow(c, ybus, opts);
    const auto& v = eq.powerflow.v;
    for (const auto& g : c.sgs) {
        eq.sgs.push_back(init_sg(g, v[index_of(c, g.bus)], sg_injection_at(c, eq.powerflow, g)));
    }
    for (const auto& g : c.gfms) {
        const Complex s(g.p_star, g.q_star);
        const Complex vt = v[index_of(c, g.bus)];
        const auto lim = limit_current(std::conj(s / vt), vt, g.i_max, g.p_cap);
        if (lim.limited) {
            throw CaseError("gfm " + std::to_string(g.id) + ": dispatch exceeds its current or power limit");
        }
        eq.gfms.push_back(init_gfm(g, vt, s));
    }
    for (const auto& g : c.gfls) {
        const Complex s(g.p_star, g.q_star);
        const Complex vt = v[index_of(c, g.bus)];
        const auto lim = limit_current(std::conj(s / vt), vt, g.i_max, g.p_cap);
        if (lim.limited) {
            throw CaseError("gfl " + std::to_string(g.id) + ": dispatch exceeds its current or power limit");
        }
        eq.gfls.push_back(init_gfl(g, vt, s));
    }
    return eq;
}

}  // namespace gridsim
