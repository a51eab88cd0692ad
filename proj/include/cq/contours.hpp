#pragma once

#include <complex>
#include <string>
#include <vector>

#include "cq/kernels.hpp"

namespace cq {

enum class ContourKind { Talbot, Hyperbola, Circle };
enum class Profile { Fast, Accurate };

ContourKind parse_contour(const std::string& id);
Profile parse_profile(const std::string& id);

/// Parameters for one quadrature contour. Only the fields relevant to `kind`
/// are meaningful.
struct ContourSpec {
    ContourKind kind = ContourKind::Talbot;
    double mu = 0.0;           // scale
    double talbot_skew = 0.0;  // the Talbot nu parameter
    double sigma = 0.0;        // shift
    double alpha = 0.0;        // hyperbola angle
    double tau = 0.0;          // hyperbola step
    double rho = 0.0;          // circle radius
    int K = 0;                 // half node count (Talbot/hyperbola)
};

/// Contour nodes lambda_k with trapezoidal weights w_k, k = -K..K stored in
/// ascending k. Conjugate-symmetric: node(-k) = conj(node(k)).
struct QuadratureRule {
    int half_count = 0;  // K
    std::vector<Complex> nodes;    // size 2K+1
    std::vector<Complex> weights;  // size 2K+1

    Complex node(int k) const { return nodes[static_cast<std::size_t>(k + half_count)]; }
    Complex weight(int k) const { return weights[static_cast<std::size_t>(k + half_count)]; }
};

/// Talbot contour gamma(theta) = sigma + mu (theta cot theta + i skew theta)
/// sampled at theta_k = k pi / (K+1), with weights -i gamma'(theta_k)/(2(K+1)).
/// The theta = 0 node uses the analytic limits gamma(0) = sigma + mu,
/// gamma'(0) = i mu skew.
QuadratureRule talbot_rule(double mu, double talbot_skew, double sigma, int K);

/// Hyperbola gamma(theta) = mu (1 - sin(alpha + i theta)) sampled at
/// theta_k = k tau, with weights i tau gamma'(theta_k)/(2 pi).
QuadratureRule hyperbola_rule(double mu, double alpha, double tau, int K);

/// Per-interval parameter recipe for I_ell = [B^(ell-1) h, 2 B^ell h):
/// Talbot mu = 8/T_ell, skew 0.6; hyperbola mu = 3.6/T_ell, alpha 1, tau 0.64;
/// K = 10 (fast) or 15 (accurate). sigma = 0 for kernels with vertex 0,
/// otherwise vertex_c + 1/T_ell.
ContourSpec interval_params(int ell, int B, double h, ContourKind kind, Profile profile,
                            double vertex_c = 0.0);

QuadratureRule make_rule(const ContourSpec& spec);

}  // namespace cq
