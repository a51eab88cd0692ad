#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "cq/kernels.hpp"

namespace cq {

enum class MultistepKind { BackwardEuler, Bdf2 };

/// Linear multistep method given by its generating function
/// delta(zeta) = sum_k delta_coeffs[k] * (1 - zeta)^k.
struct MultistepMethod {
    MultistepKind kind;
    int order_p;
    std::array<double, 3> delta_coeffs;  // coefficients of (1-zeta)^k

    static MultistepMethod backward_euler();
    static MultistepMethod bdf2();
};

Complex generating_delta(const MultistepMethod& method, Complex zeta);

/// Stiffly accurate implicit Runge-Kutta tableau (b_j = A_{m,j}, c_m = 1),
/// with all eigenvalues of A in the right half-plane.
struct RungeKuttaTableau {
    int stages_m = 0;
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    int order_p = 0;
    int stage_order_q = 0;
};

/// Radau IIA collocation tableau with 1, 2 or 3 stages (orders 1, 3, 5).
/// Construction validates stiff accuracy, the eigenvalue condition and an
/// A-stability spot check on the imaginary axis.
const RungeKuttaTableau& radau_iia(int stages);

/// Delta(zeta) = (A + zeta/(1-zeta) * 1l b^T)^{-1}; requires |zeta| < 1.
Eigen::MatrixXcd rk_delta_matrix(const RungeKuttaTableau& tab, Complex zeta);

struct StabilityWeight {
    Complex r;               // stability function r(z)
    Eigen::RowVectorXcd q;   // q(z) = b^T (I - z A)^{-1}
};

/// Stability function and weight row at z. Throws if I - zA is singular.
StabilityWeight stability_and_weight(const RungeKuttaTableau& tab, Complex z);

/// Roots and prefactors of the BDF2 partial fraction decomposition:
/// e_n(z) = q1 r1^n + q2 r2^n with w = sqrt(1 + 2 z).
struct BdfComponents {
    Complex r1, r2, q1, q2;
};

/// Throws std::domain_error when |1 + 2z| <= 1e-12 (degenerate double root).
BdfComponents bdf2_components(Complex z);

/// Coefficient e_n(z) of zeta^n in (delta(zeta) - z)^{-1}, by closed form.
Complex en_multistep(const MultistepMethod& method, long n, Complex z);

struct RkEn {
    Eigen::RowVectorXcd row;  // e_n(z) = r(z)^n q(z)
    Eigen::MatrixXcd matrix;  // E_n(z)
};

/// E_0(z) = (A^{-1} - zI)^{-1}; for n >= 1 the rank-1 matrix
/// r(z)^{n-1} (I-zA)^{-1} 1l b^T (I-zA)^{-1}. The row is the last row.
RkEn rk_en(const RungeKuttaTableau& tab, long n, Complex z);

/// A time discretization: either a multistep generating function or a
/// Runge-Kutta tableau. CLI ids: be, bdf2, radau3, radau5.
struct TimeMethod {
    enum class Family { Multistep, RungeKutta };

    Family family = Family::Multistep;
    MultistepMethod multistep{};
    RungeKuttaTableau tableau{};
    std::string id;

    int stages() const { return family == Family::RungeKutta ? tableau.stages_m : 1; }
    bool is_bdf2() const {
        return family == Family::Multistep && multistep.kind == MultistepKind::Bdf2;
    }
    /// Abscissae within a step, as offsets in units of h: multistep methods
    /// sample g at the step start, RK methods at t_n + c_i h.
    std::vector<double> abscissae() const;

    static TimeMethod parse(const std::string& id);
};

/// One-step integrator for y' = lambda*y + g with fixed lambda and h.
/// Multistep methods consume g at the step start (the convolution quadrature
/// sampling convention); BDF2 starts with one backward Euler step.
class LinearIvpStepper {
  public:
    LinearIvpStepper(const TimeMethod& method, Complex lambda, double h);

    /// Advance one step; g_stages holds m values (m = 1 for multistep).
    /// Returns the step-end value.
    Complex step(std::span<const Complex> g_stages);

    Complex value() const { return y_; }
    void reset();

  private:
    TimeMethod::Family family_;
    MultistepKind ms_kind_ = MultistepKind::BackwardEuler;
    int stages_ = 1;
    Complex hl_;
    double h_;
    Complex y_ = 0.0, y_prev_ = 0.0;
    long n_ = 0;
    Complex r_;                     // RK one-step propagator r(h lambda)
    Eigen::RowVectorXcd phi_;       // h * q(h lambda)
};

}  // namespace cq
