#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "cq/contours.hpp"
#include "cq/kernels.hpp"
#include "cq/stepgen.hpp"

namespace cq {

/// Convolution quadrature weights for indices 0..n_max. For multistep methods
/// each weight is a scalar; for an m-stage Runge-Kutta method it is the last
/// row of the weight matrix W_n, stored as m consecutive values.
struct WeightSequence {
    double h = 0.0;
    int stages = 1;
    std::string method_id;
    long n_max = -1;
    std::vector<double> values;  // (n_max+1) * stages, row-major

    double omega(long n) const { return values[static_cast<std::size_t>(n * stages)]; }
    std::span<const double> row(long n) const {
        return {values.data() + n * stages, static_cast<std::size_t>(stages)};
    }
};

/// Default circle parameters: Ncirc = max(128, 8*(n0+1)) rounded up to even,
/// rho = eps^(1/(2*Ncirc)).
long circle_node_count(long n0);
double circle_radius(long ncirc);

/// Trapezoidal rule on |zeta| = rho for the weight generating function:
/// omega_n ~ rho^(-n)/Ncirc * sum_l F(delta(zeta_l)/h) zeta_l^(-n).
/// For RK methods F is applied to the matrix Delta(zeta)/h by
/// eigendecomposition and the last row of W_n is returned.
WeightSequence weights_circle(const SectorialTransform& kernel, const TimeMethod& method,
                              double h, long n0);
WeightSequence weights_circle(const SectorialTransform& kernel, const TimeMethod& method,
                              double h, long n0, double rho, long ncirc);

/// Full weight matrices W_0..W_n0 for an RK method (needed by the stage
/// formulation of integral equations).
std::vector<Eigen::MatrixXd> weight_matrices_circle(const SectorialTransform& kernel,
                                                    const RungeKuttaTableau& tab, double h,
                                                    long n0);

/// Reference value of a single weight omega_n via the circle rule with node
/// count scaled to n (accuracy about sqrt(machine epsilon), relative).
std::vector<double> weight_circle_single(const SectorialTransform& kernel,
                                         const TimeMethod& method, double h, long n);

/// Local contour approximation h * sum_k w_k e_n(h lambda_k) F(lambda_k);
/// valid when the rule was built for the interval containing n*h.
std::vector<double> weights_contour(const SectorialTransform& kernel, const TimeMethod& method,
                                    double h, long n, const QuadratureRule& rule);

/// O(N^2) reference convolution: out[n] = sum_{j<=n} omega_{n-j} . g_j, where
/// g holds (N+1)*stages samples (stage-major per step).
std::vector<double> convolve_direct(const WeightSequence& weights, std::span<const double> g);

}  // namespace cq
