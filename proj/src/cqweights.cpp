#include "cq/cqweights.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cq {

namespace {

constexpr double kPi = std::numbers::pi;

/// F applied to the m x m matrix (h*G)^{-1} where G = A + zeta/(1-zeta) 1l b^T,
/// i.e. F(Delta(zeta)/h), via eigendecomposition of G. Retries at a rotated
/// zeta when the eigenvector basis is ill-conditioned.
Eigen::MatrixXcd matrix_transform(const SectorialTransform& kernel,
                                  const RungeKuttaTableau& tab, double h, Complex zeta,
                                  double rotate_step, bool* flagged) {
    for (int attempt = 0; attempt < 2; ++attempt) {
        const int m = tab.stages_m;
        Eigen::MatrixXcd G = tab.A.cast<Complex>();
        const Complex f = zeta / (1.0 - zeta);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) G(i, j) += f * tab.b(j);

        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(G);
        if (es.info() == Eigen::Success) {
            const Eigen::MatrixXcd& V = es.eigenvectors();
            Eigen::PartialPivLU<Eigen::MatrixXcd> lu(V);
            const double cond = V.norm() * lu.inverse().norm();
            if (cond <= 1e8) {
                Eigen::VectorXcd fe(m);
                for (int i = 0; i < m; ++i)
                    fe(i) = eval_transform(kernel, 1.0 / (h * es.eigenvalues()(i)));
                return V * fe.asDiagonal() * lu.inverse();
            }
        }
        if (attempt == 0) {
            if (flagged) *flagged = true;
            zeta *= std::polar(1.0, rotate_step);  // half a grid spacing
        }
    }
    throw std::runtime_error("weights_circle: non-diagonalizable Delta(zeta)");
}

}  // namespace

long circle_node_count(long n0) {
    long n = std::max<long>(128, 8 * (n0 + 1));
    return n + (n & 1);
}

double circle_radius(long ncirc) {
    return std::pow(std::numeric_limits<double>::epsilon(),
                    1.0 / (2.0 * static_cast<double>(ncirc)));
}

WeightSequence weights_circle(const SectorialTransform& kernel, const TimeMethod& method,
                              double h, long n0) {
    const long ncirc = circle_node_count(n0);
    return weights_circle(kernel, method, h, n0, circle_radius(ncirc), ncirc);
}

WeightSequence weights_circle(const SectorialTransform& kernel, const TimeMethod& method,
                              double h, long n0, double rho, long ncirc) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("weights_circle: rho in (0,1)");
    if (ncirc < 4 * n0) throw std::invalid_argument("weights_circle: Ncirc >= 4*N0 required");
    const int m = method.stages();

    WeightSequence out;
    out.h = h;
    out.stages = m;
    out.method_id = method.id;
    out.n_max = n0;
    out.values.assign(static_cast<std::size_t>((n0 + 1) * m), 0.0);

    // Samples at zeta_l and conj(zeta_l) are conjugate for real data, so only
    // the upper half circle is evaluated.
    const double dtheta = 2.0 * kPi / static_cast<double>(ncirc);
    std::vector<Eigen::RowVectorXcd> rows;  // last row of F(Delta/h) per sample
    rows.reserve(static_cast<std::size_t>(ncirc / 2 + 1));
    for (long l = 0; l <= ncirc / 2; ++l) {
        const Complex zeta = std::polar(rho, dtheta * static_cast<double>(l));
        if (method.family == TimeMethod::Family::Multistep) {
            Eigen::RowVectorXcd r(1);
            r(0) = eval_transform(kernel, generating_delta(method.multistep, zeta) / h);
            rows.push_back(std::move(r));
        } else {
            const Eigen::MatrixXcd W =
                matrix_transform(kernel, method.tableau, h, zeta, 0.5 * dtheta, nullptr);
            rows.push_back(W.row(m - 1));
        }
    }

    const double inv_n = 1.0 / static_cast<double>(ncirc);
    for (long n = 0; n <= n0; ++n) {
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(m);
        for (long l = 0; l <= ncirc / 2; ++l) {
            const Complex phase = std::polar(1.0, -dtheta * static_cast<double>((l * n) % ncirc));
            const double f = (l == 0 || l == ncirc / 2) ? 1.0 : 2.0;
            // conjugate pair combined: z + conj(z) = 2 Re z
            acc += f * (rows[static_cast<std::size_t>(l)] * phase).real();
        }
        const double scale = std::pow(rho, -static_cast<double>(n)) * inv_n;
        for (int i = 0; i < m; ++i)
            out.values[static_cast<std::size_t>(n * m + i)] = scale * acc(i);
    }
    return out;
}

std::vector<Eigen::MatrixXd> weight_matrices_circle(const SectorialTransform& kernel,
                                                    const RungeKuttaTableau& tab, double h,
                                                    long n0) {
    const long ncirc = circle_node_count(n0);
    const double rho = circle_radius(ncirc);
    const int m = tab.stages_m;
    const double dtheta = 2.0 * kPi / static_cast<double>(ncirc);

    std::vector<Eigen::MatrixXcd> samples;
    samples.reserve(static_cast<std::size_t>(ncirc / 2 + 1));
    for (long l = 0; l <= ncirc / 2; ++l) {
        const Complex zeta = std::polar(rho, dtheta * static_cast<double>(l));
        samples.push_back(matrix_transform(kernel, tab, h, zeta, 0.5 * dtheta, nullptr));
    }

    std::vector<Eigen::MatrixXd> out;
    out.reserve(static_cast<std::size_t>(n0 + 1));
    const double inv_n = 1.0 / static_cast<double>(ncirc);
    for (long n = 0; n <= n0; ++n) {
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m, m);
        for (long l = 0; l <= ncirc / 2; ++l) {
            const Complex phase = std::polar(1.0, -dtheta * static_cast<double>((l * n) % ncirc));
            const double f = (l == 0 || l == ncirc / 2) ? 1.0 : 2.0;
            acc += f * (samples[static_cast<std::size_t>(l)] * phase).real();
        }
        out.push_back(std::pow(rho, -static_cast<double>(n)) * inv_n * acc);
    }
    return out;
}

std::vector<double> weight_circle_single(const SectorialTransform& kernel,
                                         const TimeMethod& method, double h, long n) {
    const long ncirc = [&] {
        long c = std::max<long>(512, 4 * n);
        return c + (c & 1);
    }();
    const double rho = circle_radius(ncirc);
    const int m = method.stages();
    const double dtheta = 2.0 * kPi / static_cast<double>(ncirc);

    Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(m);
    for (long l = 0; l <= ncirc / 2; ++l) {
        const Complex zeta = std::polar(rho, dtheta * static_cast<double>(l));
        Eigen::RowVectorXcd row(m);
        if (method.family == TimeMethod::Family::Multistep)
            row(0) = eval_transform(kernel, generating_delta(method.multistep, zeta) / h);
        else
            row = matrix_transform(kernel, method.tableau, h, zeta, 0.5 * dtheta, nullptr)
                      .row(m - 1);
        const Complex phase = std::polar(1.0, -dtheta * static_cast<double>((l * n) % ncirc));
        const double f = (l == 0 || l == ncirc / 2) ? 1.0 : 2.0;
        acc += f * (row * phase).real().cast<Complex>();
    }
    const double scale =
        std::exp(-static_cast<double>(n) * std::log(rho)) / static_cast<double>(ncirc);
    std::vector<double> out(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = scale * acc(i).real();
    return out;
}

std::vector<double> weights_contour(const SectorialTransform& kernel, const TimeMethod& method,
                                    double h, long n, const QuadratureRule& rule) {
    const int m = method.stages();
    Eigen::RowVectorXcd acc = Eigen::RowVectorXcd::Zero(m);
    const int K = rule.half_count;
    for (int k = -K; k <= K; ++k) {
        const Complex lam = rule.node(k);
        const Complex wF = rule.weight(k) * eval_transform(kernel, lam);
        if (method.family == TimeMethod::Family::Multistep)
            acc(0) += wF * en_multistep(method.multistep, n, h * lam);
        else
            acc += wF * rk_en(method.tableau, n, h * lam).row;
    }
    std::vector<double> out(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(i)] = h * acc(i).real();
    return out;
}

std::vector<double> convolve_direct(const WeightSequence& weights, std::span<const double> g) {
    const int m = weights.stages;
    if (g.size() % static_cast<std::size_t>(m) != 0)
        throw std::invalid_argument("convolve_direct: sample count not a multiple of stages");
    const long n_steps = static_cast<long>(g.size()) / m;
    if (n_steps - 1 > weights.n_max)
        throw std::invalid_argument("convolve_direct: weights cover fewer indices than g");

    std::vector<double> out(static_cast<std::size_t>(n_steps), 0.0);
    for (long n = 0; n < n_steps; ++n) {
        double acc = 0.0;
        for (long j = 0; j <= n; ++j) {
            const auto w = weights.row(n - j);
            for (int i = 0; i < m; ++i) acc += w[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(j * m + i)];
        }
        out[static_cast<std::size_t>(n)] = acc;
    }
    return out;
}

}  // namespace cq
