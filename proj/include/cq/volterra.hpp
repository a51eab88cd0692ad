#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "cq/kernels.hpp"
#include "cq/oblivious.hpp"
#include "cq/stepgen.hpp"

namespace cq {

/// Nonlinear Volterra equation of convolution type,
///     u(t) = a(t) + int_0^t f(t - tau) g(tau, u(tau)) dtau,
/// with f given through its sectorial Laplace transform.
struct VolterraProblem {
    std::function<double(double)> forcing;            // a(t)
    std::function<double(double, double)> g;          // g(t, u)
    std::function<double(double, double)> dg_du;      // analytic derivative
    SectorialTransform kernel;
    double final_time = 0.0;
};

enum class HistoryMode { Direct, Fast };

struct VolterraOptions {
    HistoryMode mode = HistoryMode::Fast;
    EngineOptions engine{};
    double newton_tol = 1e-12;
    int newton_max_iter = 50;
};

/// Damped-free Newton iteration: returns the first iterate whose residual
/// max-norm is <= tol. Throws on a singular Jacobian or when max_iter is
/// exceeded.
Eigen::VectorXd newton_solve(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
    Eigen::VectorXd guess, double tol = 1e-12, int max_iter = 50);

/// Time-step the Volterra equation with N steps of size h. Returns
/// u_0..u_N at the grid points. mode=Direct keeps the full history (the
/// O(N^2) oracle); mode=Fast uses the oblivious engine.
std::vector<double> solve_volterra(const VolterraProblem& problem, const TimeMethod& method,
                                   double h, long N, const VolterraOptions& options = {});

/// The weakly singular test problem
///     u(t) = -int_0^t (u - sin tau)^3 / sqrt(pi (t - tau)) dtau.
VolterraProblem levinson_problem(double final_time = 60.0);

}  // namespace cq
