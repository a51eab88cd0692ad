#include "cq/fracdiff.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace cq {

Grid1D Grid1D::make(double a, int M) {
    if (!(a > 0.0) || M < 3) throw std::invalid_argument("Grid1D: a > 0 and M >= 3 required");
    return {a, M, a / static_cast<double>(M)};
}

SubdiffusionSolver::SubdiffusionSolver(const SubdiffusionProblem& problem,
                                       const TimeMethod& method, double h,
                                       const FracdiffOptions& options)
    : prob_(problem), method_(method), h_(h), opt_(options), m_(method.stages()),
      npts_(problem.grid.size()) {
    if (!(prob_.alpha > 0.0 && prob_.alpha < 2.0))
        throw std::invalid_argument("SubdiffusionSolver: alpha in (0, 2) required");
    if (std::abs(prob_.g(0.0, 0.0)) != 0.0)
        throw std::invalid_argument("SubdiffusionSolver: g(., 0) must vanish");

    const int M = prob_.grid.M;
    u_.resize(static_cast<std::size_t>(npts_));
    for (int l = -M; l <= M; ++l)
        u_[static_cast<std::size_t>(l + M)] = prob_.u0(prob_.grid.x(l));

    const SectorialTransform k_alpha = PowerKernel{prob_.alpha}.transform();
    const SectorialTransform k_half = PowerKernel{prob_.alpha / 2.0}.transform();

    EngineOptions eopt = opt_.engine;
    eopt.stage_history = method_.family == TimeMethod::Family::RungeKutta;
    interior_ = std::make_unique<ConvolutionEngine>(k_alpha, method_, h_, npts_ - 2, eopt);
    if (opt_.boundary == BoundaryKind::Transparent) {
        bdry_lo_ = std::make_unique<ConvolutionEngine>(k_half, method_, h_, 1, eopt);
        bdry_hi_ = std::make_unique<ConvolutionEngine>(k_half, method_, h_, 1, eopt);
    }

    build_system();
}

SubdiffusionSolver::~SubdiffusionSolver() = default;

void SubdiffusionSolver::build_system() {
    const int M = prob_.grid.M;
    const double dx = prob_.grid.dx;
    const double inv_dx2 = 1.0 / (dx * dx);
    const double inv_2dx = 1.0 / (2.0 * dx);

    // W0 coefficients per stage eigen-channel: for F(s) = s^(-beta) the
    // implicit diagonal block is (h d)^beta with d an eigenvalue of A
    // (multistep: d = 1/delta(0)).
    const bool rk = method_.family == TimeMethod::Family::RungeKutta;
    std::vector<Complex> c_alpha, c_half;
    if (rk) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(method_.tableau.A);
        if (es.info() != Eigen::Success)
            throw std::runtime_error("SubdiffusionSolver: tableau eigendecomposition failed");
        eig_ = es.eigenvalues();
        T_ = es.eigenvectors();
        Tinv_ = T_.inverse();
        for (int i = 0; i < m_; ++i) {
            const Complex hd = h_ * eig_(i);
            c_alpha.push_back(std::exp(prob_.alpha * std::log(hd)));
            c_half.push_back(std::exp(0.5 * prob_.alpha * std::log(hd)));
        }
    } else {
        const double d0 = generating_delta(method_.multistep, 0.0).real();
        const double hd = h_ / d0;
        c_alpha.push_back(std::pow(hd, prob_.alpha));
        c_half.push_back(std::pow(hd, prob_.alpha / 2.0));
    }

    // Rows: 0 = boundary relation at -(M-1); 1..2M-1 interior l = -(M-1)..M-1;
    // 2M = boundary relation at +(M-1). Unknown column l + M.
    auto assemble = [&](auto& lu, Complex ca, Complex ch2) {
        using S = std::decay_t<decltype(lu.at(0, 0))>;
        auto val = [](Complex z) {
            if constexpr (std::is_same_v<S, double>)
                return z.real();
            else
                return z;
        };
        for (int l = -(M - 1); l <= M - 1; ++l) {
            const int r = l + M;
            lu.at(r, r - 1) = val(-ca * inv_dx2);
            lu.at(r, r) = val(1.0 + 2.0 * ca * inv_dx2);
            lu.at(r, r + 1) = val(-ca * inv_dx2);
        }
        if (opt_.boundary == BoundaryKind::Transparent) {
            // u_{+-(M-1)} + W0^(alpha/2) (u_{+-M} - u_{+-(M-2)})/(2 dx) = rhs
            lu.at(0, 1) = val(Complex(1.0));
            lu.at(0, 0) = val(ch2 * inv_2dx);
            lu.at(0, 2) = val(-ch2 * inv_2dx);
            lu.at(2 * M, 2 * M - 1) = val(Complex(1.0));
            lu.at(2 * M, 2 * M) = val(ch2 * inv_2dx);
            lu.at(2 * M, 2 * M - 2) = val(-ch2 * inv_2dx);
        } else {
            lu.at(0, 0) = val(Complex(1.0));
            lu.at(2 * M, 2 * M) = val(Complex(1.0));
        }
        lu.factor();
    };

    if (rk) {
        lu_c_.clear();
        lu_c_.reserve(static_cast<std::size_t>(m_));
        for (int i = 0; i < m_; ++i) {
            lu_c_.emplace_back(npts_, 2, 2);
            assemble(lu_c_.back(), c_alpha[static_cast<std::size_t>(i)],
                     c_half[static_cast<std::size_t>(i)]);
        }
    } else {
        lu_r_ = std::make_unique<BandedLU<double>>(npts_, 2, 2);
        assemble(*lu_r_, c_alpha[0], c_half[0]);
    }
}

void SubdiffusionSolver::assemble_rhs(std::vector<double>& rhs) const {
    const int M = prob_.grid.M;
    const long n = n_;
    const double tn = static_cast<double>(n) * h_;
    const std::vector<double> offs = method_.abscissae();
    const bool rk = method_.family == TimeMethod::Family::RungeKutta;

    // interior history
    std::vector<double> hist(static_cast<std::size_t>(m_) * static_cast<std::size_t>(npts_ - 2));
    if (rk)
        interior_->history_stage(hist);
    else
        interior_->history({hist.data(), static_cast<std::size_t>(npts_ - 2)});

    std::vector<double> hb_lo(static_cast<std::size_t>(m_), 0.0);
    std::vector<double> hb_hi(static_cast<std::size_t>(m_), 0.0);
    if (opt_.boundary == BoundaryKind::Transparent) {
        if (rk) {
            bdry_lo_->history_stage(hb_lo);
            bdry_hi_->history_stage(hb_hi);
        } else {
            bdry_lo_->history({hb_lo.data(), 1});
            bdry_hi_->history({hb_hi.data(), 1});
        }
    }

    for (int i = 0; i < m_; ++i) {
        const double ti = tn + offs[static_cast<std::size_t>(i)] * h_;
        double* r = rhs.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(npts_);
        for (int l = -(M - 1); l <= M - 1; ++l) {
            const int row = l + M;
            r[row] = prob_.u0(prob_.grid.x(l)) +
                     hist[static_cast<std::size_t>(i * (npts_ - 2) + (row - 1))] +
                     prob_.g(prob_.grid.x(l), ti);
        }
        if (opt_.boundary == BoundaryKind::Transparent) {
            r[0] = -hb_lo[static_cast<std::size_t>(i)];
            r[2 * M] = -hb_hi[static_cast<std::size_t>(i)];
        } else {
            r[0] = 0.0;
            r[2 * M] = 0.0;
        }
    }
}

void SubdiffusionSolver::advance() {
    const int M = prob_.grid.M;
    const double inv_2dx = 1.0 / (2.0 * prob_.grid.dx);
    const double inv_dx2 = 1.0 / (prob_.grid.dx * prob_.grid.dx);
    const bool rk = method_.family == TimeMethod::Family::RungeKutta;

    interior_->begin_step();
    if (bdry_lo_) {
        bdry_lo_->begin_step();
        bdry_hi_->begin_step();
    }

    std::vector<double> rhs(static_cast<std::size_t>(m_) * static_cast<std::size_t>(npts_));
    assemble_rhs(rhs);

    // stage-coupled solve, decoupled in the eigenbasis of A
    std::vector<double> v(rhs.size());
    if (rk) {
        std::vector<std::vector<Complex>> vh(static_cast<std::size_t>(m_));
        for (auto& ch : vh) ch.assign(static_cast<std::size_t>(npts_), Complex(0.0));
        for (int p = 0; p < npts_; ++p)
            for (int i = 0; i < m_; ++i) {
                Complex acc = 0.0;
                for (int i2 = 0; i2 < m_; ++i2)
                    acc += Tinv_(i, i2) * rhs[static_cast<std::size_t>(i2 * npts_ + p)];
                vh[static_cast<std::size_t>(i)][static_cast<std::size_t>(p)] = acc;
            }
        for (int i = 0; i < m_; ++i) lu_c_[static_cast<std::size_t>(i)].solve(vh[static_cast<std::size_t>(i)]);
        for (int p = 0; p < npts_; ++p)
            for (int i = 0; i < m_; ++i) {
                Complex acc = 0.0;
                for (int i2 = 0; i2 < m_; ++i2)
                    acc += T_(i, i2) * vh[static_cast<std::size_t>(i2)][static_cast<std::size_t>(p)];
                v[static_cast<std::size_t>(i * npts_ + p)] = acc.real();
            }
    } else {
        lu_r_->solve({rhs.data(), static_cast<std::size_t>(npts_)});
        v = rhs;
    }

    // feed the histories with delta_xx v and delta_nu v per stage
    std::vector<double> feed_int(static_cast<std::size_t>(m_) * static_cast<std::size_t>(npts_ - 2));
    std::vector<double> feed_lo(static_cast<std::size_t>(m_));
    std::vector<double> feed_hi(static_cast<std::size_t>(m_));
    for (int i = 0; i < m_; ++i) {
        const double* vi = v.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(npts_);
        for (int l = -(M - 1); l <= M - 1; ++l) {
            const int row = l + M;
            feed_int[static_cast<std::size_t>(i * (npts_ - 2) + (row - 1))] =
                (vi[row - 1] - 2.0 * vi[row] + vi[row + 1]) * inv_dx2;
        }
        feed_lo[static_cast<std::size_t>(i)] = (vi[0] - vi[2]) * inv_2dx;
        feed_hi[static_cast<std::size_t>(i)] = (vi[2 * M] - vi[2 * M - 2]) * inv_2dx;
    }
    interior_->feed(feed_int);
    if (bdry_lo_) {
        bdry_lo_->feed(feed_lo);
        bdry_hi_->feed(feed_hi);
    }

    // stiffly accurate: the last stage is the step solution
    const double* last = v.data() + static_cast<std::size_t>(m_ - 1) * static_cast<std::size_t>(npts_);
    u_.assign(last, last + npts_);
    ++n_;
}

ConvolutionEngine::Memory SubdiffusionSolver::interior_memory() const {
    return interior_->memory_report();
}

ConvolutionEngine::Counters SubdiffusionSolver::interior_counters() const {
    return interior_->counters();
}

std::vector<double> run_subdiffusion(const SubdiffusionProblem& problem, const TimeMethod& method,
                                     double h, long N, const FracdiffOptions& options) {
    FracdiffOptions opt = options;
    if (opt.engine.expected_steps <= 0) opt.engine.expected_steps = N + 1;
    SubdiffusionSolver solver(problem, method, h, opt);
    for (long n = 0; n < N; ++n) solver.advance();
    return solver.solution();
}

SubdiffusionProblem gaussian_subdiffusion(double alpha, double a, int M) {
    SubdiffusionProblem p;
    p.alpha = alpha;
    p.u0 = [](double x) { return std::exp(-x * x); };
    p.g = [](double, double) { return 0.0; };
    p.grid = Grid1D::make(a, M);
    return p;
}

}  // namespace cq
