#include "cq/kernels.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace cq {

Complex PowerKernel::operator()(Complex s) const {
    // exp(-beta log s) with the principal log; branch cut on the negative
    // real axis. Contour nodes never land on the cut by construction.
    return std::exp(-beta * std::log(s));
}

SectorialTransform PowerKernel::transform() const {
    if (!(beta > 0.0)) throw std::invalid_argument("PowerKernel: beta must be positive");
    SectorialTransform t;
    const double b = beta;
    t.evaluate = [b](Complex s) { return std::exp(-b * std::log(s)); };
    t.vertex_c = 0.0;
    t.angle_phi = 1e-8;  // analytic off the cut; any phi > 0 works
    t.bound_M = 1.0;
    t.exponent_nu = beta;
    t.name = "pow:" + std::to_string(beta);
    return t;
}

Complex eval_transform(const SectorialTransform& kernel, Complex s) {
    const Complex v = kernel.evaluate(s);
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw std::domain_error("eval_transform: non-finite value (singularity?)");
    return v;
}

SectorReport verify_sector(const SectorialTransform& kernel, std::size_t samples) {
    if (samples < 1) throw std::invalid_argument("verify_sector: samples >= 1 required");
    SectorReport rep;
    rep.samples = samples;

    std::mt19937_64 rng(0x5ec70f2dULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double half_opening = std::numbers::pi - kernel.angle_phi;

    for (std::size_t i = 0; i < samples; ++i) {
        // log-uniform modulus in [1, 1e6], uniform argument inside the sector
        const double rho = std::pow(10.0, 6.0 * unit(rng));
        const double arg = (2.0 * unit(rng) - 1.0) * half_opening * (1.0 - 1e-9);
        const Complex s = kernel.vertex_c + std::polar(rho, arg);
        const Complex v = kernel.evaluate(s);
        const double ratio =
            std::abs(v) * std::pow(std::abs(s), kernel.exponent_nu) / kernel.bound_M;
        if (ratio > rep.worst_ratio) rep.worst_ratio = ratio;
        if (!(ratio <= 1.0 + 1e-9)) ++rep.failures;
    }
    rep.pass = rep.failures == 0;
    return rep;
}

SectorialTransform parse_kernel(const std::string& spec) {
    if (spec.rfind("pow:", 0) == 0) {
        const double beta = std::stod(spec.substr(4));
        return PowerKernel{beta}.transform();
    }
    throw std::invalid_argument("unknown kernel '" + spec + "' (expected pow:<beta>)");
}

}  // namespace cq
