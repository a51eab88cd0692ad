#include "cq/volterra.hpp"

#include "cq/cqweights.hpp"

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>

namespace cq {

Eigen::VectorXd newton_solve(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
    Eigen::VectorXd guess, double tol, int max_iter) {
    Eigen::VectorXd x = std::move(guess);
    for (int it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd r = residual(x);
        if (!r.allFinite()) throw std::runtime_error("newton_solve: non-finite residual");
        if (r.cwiseAbs().maxCoeff() <= tol) return x;
        const Eigen::MatrixXd J = jacobian(x);
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        if (std::abs(lu.determinant()) < 1e-300)
            throw std::runtime_error("newton_solve: singular Jacobian");
        x -= lu.solve(r);
    }
    throw std::runtime_error("newton_solve: max_iter exceeded");
}

namespace {

/// One implicit stage solve shared by both history modes: find the stage
/// vector v with v = rhs + W0 * g_stage(v).
Eigen::VectorXd solve_stage(const Eigen::MatrixXd& W0, const Eigen::VectorXd& rhs,
                            const std::vector<double>& stage_times,
                            const VolterraProblem& problem, Eigen::VectorXd guess,
                            const VolterraOptions& opt, long step) {
    const int m = static_cast<int>(stage_times.size());
    auto g_of = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd g(m);
        for (int i = 0; i < m; ++i) {
            g(i) = problem.g(stage_times[static_cast<std::size_t>(i)], v(i));
            if (!std::isfinite(g(i)))
                throw std::runtime_error("solve_volterra: g not finite at step " +
                                         std::to_string(step));
        }
        return g;
    };
    auto residual = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return v - rhs - W0 * g_of(v);
    };
    auto jacobian = [&](const Eigen::VectorXd& v) -> Eigen::MatrixXd {
        Eigen::MatrixXd J = Eigen::MatrixXd::Identity(m, m);
        for (int i = 0; i < m; ++i) {
            const double d = problem.dg_du(stage_times[static_cast<std::size_t>(i)], v(i));
            if (!std::isfinite(d))
                throw std::runtime_error("solve_volterra: dg/du not finite at step " +
                                         std::to_string(step));
            J.col(i) -= W0.col(i) * d;
        }
        return J;
    };
    try {
        return newton_solve(residual, jacobian, std::move(guess), opt.newton_tol,
                            opt.newton_max_iter);
    } catch (const std::runtime_error& e) {
        throw std::runtime_error(std::string(e.what()) + " (step " + std::to_string(step) + ")");
    }
}

}  // namespace

std::vector<double> solve_volterra(const VolterraProblem& problem, const TimeMethod& method,
                                   double h, long N, const VolterraOptions& options) {
    const bool rk = method.family == TimeMethod::Family::RungeKutta;
    const int m = method.stages();
    const std::vector<double> offsets = method.abscissae();

    // Weight data: the implicit block W0 plus either the full direct table
    // or the oblivious engine for the history.
    Eigen::MatrixXd W0(m, m);
    std::vector<Eigen::MatrixXd> Wfull;   // direct RK
    WeightSequence wseq;                  // direct multistep
    std::unique_ptr<ConvolutionEngine> engine;

    if (options.mode == HistoryMode::Direct) {
        if (rk) {
            Wfull = weight_matrices_circle(problem.kernel, method.tableau, h, N);
            W0 = Wfull[0];
        } else {
            wseq = weights_circle(problem.kernel, method, h, N);
            W0(0, 0) = wseq.omega(0);
        }
    } else {
        EngineOptions eopt = options.engine;
        if (eopt.expected_steps <= 0) eopt.expected_steps = N + 1;
        eopt.stage_history = rk;
        engine = std::make_unique<ConvolutionEngine>(problem.kernel, method, h, 1, eopt);
        if (rk) {
            W0 = engine->first_weight_matrices()[0];
        } else {
            W0(0, 0) = engine->first_weights().omega(0);
        }
    }

    std::vector<double> u(static_cast<std::size_t>(N) + 1, 0.0);
    u[0] = problem.forcing(0.0);

    std::vector<double> g_hist;  // direct mode: stage samples per step
    if (options.mode == HistoryMode::Direct)
        g_hist.reserve(static_cast<std::size_t>(N + 1) * static_cast<std::size_t>(m));

    Eigen::VectorXd v_prev = Eigen::VectorXd::Constant(m, u[0]);
    std::vector<double> stage_times(static_cast<std::size_t>(m));
    std::vector<double> hbuf(static_cast<std::size_t>(m));

    // Multistep methods approximate u(t_n) at step n (solves n = 0..N);
    // RK methods produce u(t_{n+1}) from the stage system at step n.
    const long n_last = rk ? N - 1 : N;
    for (long n = 0; n <= n_last; ++n) {
        const double tn = static_cast<double>(n) * h;
        for (int i = 0; i < m; ++i)
            stage_times[static_cast<std::size_t>(i)] = tn + offsets[static_cast<std::size_t>(i)] * h;

        Eigen::VectorXd rhs(m);
        for (int i = 0; i < m; ++i)
            rhs(i) = problem.forcing(stage_times[static_cast<std::size_t>(i)]);

        if (options.mode == HistoryMode::Direct) {
            for (long j = 0; j < n; ++j) {
                if (rk) {
                    const Eigen::MatrixXd& W = Wfull[static_cast<std::size_t>(n - j)];
                    for (int i = 0; i < m; ++i)
                        for (int i2 = 0; i2 < m; ++i2)
                            rhs(i) += W(i, i2) * g_hist[static_cast<std::size_t>(j * m + i2)];
                } else {
                    rhs(0) += wseq.omega(n - j) * g_hist[static_cast<std::size_t>(j)];
                }
            }
        } else {
            engine->begin_step();
            if (rk) {
                engine->history_stage(hbuf);
                for (int i = 0; i < m; ++i) rhs(i) += hbuf[static_cast<std::size_t>(i)];
            } else {
                engine->history({hbuf.data(), 1});
                rhs(0) += hbuf[0];
            }
        }

        const Eigen::VectorXd v =
            solve_stage(W0, rhs, stage_times, problem, v_prev, options, n);
        v_prev = v;

        for (int i = 0; i < m; ++i)
            hbuf[static_cast<std::size_t>(i)] =
                problem.g(stage_times[static_cast<std::size_t>(i)], v(i));
        if (options.mode == HistoryMode::Direct)
            g_hist.insert(g_hist.end(), hbuf.begin(), hbuf.begin() + m);
        else
            engine->feed({hbuf.data(), static_cast<std::size_t>(m)});

        if (rk)
            u[static_cast<std::size_t>(n + 1)] = v(m - 1);
        else
            u[static_cast<std::size_t>(n)] = v(0);
    }
    return u;
}

VolterraProblem levinson_problem(double final_time) {
    VolterraProblem p;
    p.forcing = [](double) { return 0.0; };
    p.g = [](double t, double u) {
        const double w = u - std::sin(t);
        return -w * w * w;
    };
    p.dg_du = [](double t, double u) {
        const double w = u - std::sin(t);
        return -3.0 * w * w;
    };
    p.kernel = PowerKernel{0.5}.transform();
    p.final_time = final_time;
    return p;
}

}  // namespace cq
