#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "cq/banded.hpp"
#include "cq/kernels.hpp"
#include "cq/oblivious.hpp"
#include "cq/stepgen.hpp"

namespace cq {

/// Symmetric grid x_l = l * dx for l = -M..M with dx = a/M (2M+1 unknowns).
struct Grid1D {
    double a = 0.0;
    int M = 0;
    double dx = 0.0;

    static Grid1D make(double a, int M);
    double x(int l) const { return static_cast<double>(l) * dx; }
    int size() const { return 2 * M + 1; }
};

/// u(x,t) - u0(x) = int_0^t (t-s)^(alpha-1)/Gamma(alpha) u_xx(x,s) ds + g(x,t)
/// on [-a, a], closed by transparent boundary conditions expressed through
/// the alpha/2 kernel acting on the discrete normal derivative.
struct SubdiffusionProblem {
    double alpha = 0.0;  // in (0, 2)
    std::function<double(double)> u0;
    std::function<double(double, double)> g;  // g(x, t) with g(.,0) = 0
    Grid1D grid;
};

enum class BoundaryKind { Transparent, DirichletZero };

struct FracdiffOptions {
    EngineOptions engine{};
    BoundaryKind boundary = BoundaryKind::Transparent;
};

/// CQ-in-time / second-order finite differences in space. Histories are kept
/// by oblivious engines: one vector-valued engine for the interior kernel
/// t^(alpha-1)/Gamma(alpha) applied to delta_xx u, and two scalar engines for
/// the alpha/2 boundary kernels.
class SubdiffusionSolver {
  public:
    SubdiffusionSolver(const SubdiffusionProblem& problem, const TimeMethod& method, double h,
                       const FracdiffOptions& options = {});
    ~SubdiffusionSolver();

    /// Advance one time step.
    void advance();

    long steps_done() const { return n_; }
    double time() const { return static_cast<double>(n_) * h_; }
    /// Solution values at the 2M+1 grid points after the last step.
    const std::vector<double>& solution() const { return u_; }

    ConvolutionEngine::Memory interior_memory() const;
    ConvolutionEngine::Counters interior_counters() const;

  private:
    void build_system();
    void assemble_rhs(std::vector<double>& rhs) const;  // stages * (2M+1)

    SubdiffusionProblem prob_;
    TimeMethod method_;
    double h_;
    FracdiffOptions opt_;
    int m_;        // stages
    int npts_;     // 2M+1
    long n_ = 0;

    std::vector<double> u_;  // current solution (last stage)

    // stage decoupling: A = T diag(d) T^{-1}; per eigen-channel one banded LU
    Eigen::MatrixXcd T_, Tinv_;
    Eigen::VectorXcd eig_;
    std::vector<BandedLU<Complex>> lu_c_;   // RK channels
    std::unique_ptr<BandedLU<double>> lu_r_;  // multistep

    std::unique_ptr<ConvolutionEngine> interior_;  // dim 2M-1
    std::unique_ptr<ConvolutionEngine> bdry_lo_, bdry_hi_;  // dim 1
};

/// Advance N steps and return the final solution.
std::vector<double> run_subdiffusion(const SubdiffusionProblem& problem, const TimeMethod& method,
                                     double h, long N, const FracdiffOptions& options = {});

/// The experiment setup: u0(x) = exp(-x^2), g = 0.
SubdiffusionProblem gaussian_subdiffusion(double alpha, double a, int M);

}  // namespace cq
