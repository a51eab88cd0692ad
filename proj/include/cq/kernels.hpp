#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <string>

namespace cq {

using Complex = std::complex<double>;

/// A scalar Laplace transform F(s), analytic in the sector
/// |arg(s - vertex_c)| < pi - angle_phi and bounded there by
/// |F(s)| <= bound_M * |s|^(-exponent_nu).
///
/// The library trusts the declared sector data; verify_sector() provides an
/// offline sampled check.
struct SectorialTransform {
    std::function<Complex(Complex)> evaluate;
    double vertex_c = 0.0;
    double angle_phi = 0.0;   // in (0, pi/2)
    double bound_M = 1.0;
    double exponent_nu = 1.0; // nu > 0
    std::string name;         // e.g. "pow:0.5", used for CLI echo
};

/// F(s) = s^(-beta) on the principal branch, f(t) = t^(beta-1)/Gamma(beta).
struct PowerKernel {
    double beta;

    Complex operator()(Complex s) const;
    SectorialTransform transform() const;
};

/// Evaluate F(s). Throws std::domain_error on a non-finite result
/// (evaluation at a singularity).
Complex eval_transform(const SectorialTransform& kernel, Complex s);

struct SectorReport {
    bool pass = false;
    double worst_ratio = 0.0;  // max |F(s)| |s|^nu / M over the sample set
    std::size_t samples = 0;
    std::size_t failures = 0;
};

/// Sampled validation of the sector bound: draws `samples` points with
/// |s| in [1, 1e6] inside the declared sector and checks the decay bound.
/// Deterministic (fixed internal seed).
SectorReport verify_sector(const SectorialTransform& kernel, std::size_t samples);

/// Parse the CLI kernel syntax `pow:<beta>`.
SectorialTransform parse_kernel(const std::string& spec);

}  // namespace cq
