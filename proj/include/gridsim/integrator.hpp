#pragma once

#include <Eigen/Dense>

namespace gridsim {

/// One classical RK4 step. `k1` is f(x), already known to the caller; `f`
/// maps a state to its derivative and may carry state between stages.
template <typename F>
Eigen::VectorXd rk4_step(const Eigen::VectorXd& x, const Eigen::VectorXd& k1, double h, F&& f) {
    const Eigen::VectorXd k2 = f(Eigen::VectorXd(x + 0.5 * h * k1));
    const Eigen::VectorXd k3 = f(Eigen::VectorXd(x + 0.5 * h * k2));
    const Eigen::VectorXd k4 = f(Eigen::VectorXd(x + h * k3));
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace gridsim
