#include "cq/contours.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cq {

namespace {

constexpr double kPi = std::numbers::pi;

void check_off_branch_cut(const QuadratureRule& rule) {
    for (const Complex& z : rule.nodes) {
        const double dist = z.real() > 0.0 ? std::abs(z) : std::abs(z.imag());
        if (!(dist > 0.0))
            throw std::logic_error("contour node on the negative real axis");
    }
}

}  // namespace

ContourKind parse_contour(const std::string& id) {
    if (id == "talbot") return ContourKind::Talbot;
    if (id == "hyperbola") return ContourKind::Hyperbola;
    throw std::invalid_argument("unknown contour '" + id + "' (expected talbot|hyperbola)");
}

Profile parse_profile(const std::string& id) {
    if (id == "fast") return Profile::Fast;
    if (id == "accurate") return Profile::Accurate;
    throw std::invalid_argument("unknown profile '" + id + "' (expected fast|accurate)");
}

QuadratureRule talbot_rule(double mu, double talbot_skew, double sigma, int K) {
    if (K < 1) throw std::invalid_argument("talbot_rule: K >= 1 required");
    if (!(mu > 0.0) || !(talbot_skew > 0.0))
        throw std::invalid_argument("talbot_rule: mu and skew must be positive");
    QuadratureRule rule;
    rule.half_count = K;
    rule.nodes.resize(2 * K + 1);
    rule.weights.resize(2 * K + 1);
    const double step = kPi / (K + 1);
    const Complex wfac(0.0, -1.0 / (2.0 * (K + 1)));
    for (int k = -K; k <= K; ++k) {
        Complex gamma, dgamma;
        if (k == 0) {
            gamma = Complex(sigma + mu, 0.0);
            dgamma = Complex(0.0, mu * talbot_skew);
        } else {
            const double th = k * step;
            const double cot = std::cos(th) / std::sin(th);
            gamma = Complex(sigma + mu * th * cot, mu * talbot_skew * th);
            // d/dtheta [theta cot theta] = cot theta - theta / sin^2 theta
            const double s = std::sin(th);
            dgamma = Complex(mu * (cot - th / (s * s)), mu * talbot_skew);
        }
        rule.nodes[static_cast<std::size_t>(k + K)] = gamma;
        rule.weights[static_cast<std::size_t>(k + K)] = wfac * dgamma;
    }
    check_off_branch_cut(rule);
    return rule;
}

QuadratureRule hyperbola_rule(double mu, double alpha, double tau, int K) {
    if (K < 1) throw std::invalid_argument("hyperbola_rule: K >= 1 required");
    if (!(tau > 0.0)) throw std::invalid_argument("hyperbola_rule: tau > 0 required");
    if (!(alpha > 0.0 && alpha < kPi / 2.0))
        throw std::invalid_argument("hyperbola_rule: alpha in (0, pi/2) required");
    QuadratureRule rule;
    rule.half_count = K;
    rule.nodes.resize(2 * K + 1);
    rule.weights.resize(2 * K + 1);
    const Complex wfac = Complex(0.0, tau / (2.0 * kPi));
    for (int k = -K; k <= K; ++k) {
        const Complex arg(alpha, k * tau);
        const Complex gamma = mu * (1.0 - std::sin(arg));
        const Complex dgamma = Complex(0.0, -mu) * std::cos(arg);
        rule.nodes[static_cast<std::size_t>(k + K)] = gamma;
        rule.weights[static_cast<std::size_t>(k + K)] = wfac * dgamma;
    }
    check_off_branch_cut(rule);
    return rule;
}

ContourSpec interval_params(int ell, int B, double h, ContourKind kind, Profile profile,
                            double vertex_c) {
    if (ell < 1) throw std::invalid_argument("interval_params: ell >= 1 required");
    if (B < 2) throw std::invalid_argument("interval_params: B >= 2 required");
    const double T = 2.0 * std::pow(static_cast<double>(B), ell) * h;  // right end of I_ell
    ContourSpec spec;
    spec.kind = kind;
    spec.K = profile == Profile::Fast ? 10 : 15;
    if (kind == ContourKind::Talbot) {
        spec.mu = 8.0 / T;
        spec.talbot_skew = 0.6;
        spec.sigma = vertex_c == 0.0 ? 0.0 : vertex_c + 1.0 / T;
    } else if (kind == ContourKind::Hyperbola) {
        spec.mu = 3.6 / T;
        spec.alpha = 1.0;
        spec.tau = 0.64;
    } else {
        throw std::invalid_argument("interval_params: circle has no interval recipe");
    }
    return spec;
}

QuadratureRule make_rule(const ContourSpec& spec) {
    switch (spec.kind) {
        case ContourKind::Talbot:
            return talbot_rule(spec.mu, spec.talbot_skew, spec.sigma, spec.K);
        case ContourKind::Hyperbola:
            return hyperbola_rule(spec.mu, spec.alpha, spec.tau, spec.K);
        default:
            throw std::invalid_argument("make_rule: unsupported contour kind");
    }
}

}  // namespace cq
