#include "cq/oblivious.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace cq {

// ---------------------------------------------------------------------------
// Schedule
// ---------------------------------------------------------------------------

Schedule::Schedule(int base) : B(base) {
    if (base < 2) throw std::invalid_argument("Schedule: B >= 2 required");
    q_.assign(2, 0);
    b_.assign(2, 0);
}

long Schedule::pow_B(int k) const {
    long v = 1;
    for (int i = 0; i < k; ++i) {
        if (v > (1L << 61) / B) throw std::overflow_error("Schedule: B^k overflow");
        v *= B;
    }
    return v;
}

void Schedule::step() {
    ++n;
    const long np1 = n + 1;
    if (2 * pow_B(L) == np1) {
        ++L;
        q_.resize(static_cast<std::size_t>(L) + 1, 0);
        b_.resize(static_cast<std::size_t>(L) + 1, 0);
    }
    int k = 1;
    while (np1 % pow_B(k) == 0 && k < L) {
        ++q_[static_cast<std::size_t>(k)];
        ++k;
    }
    for (int i = 1; i <= L - 1; ++i)
        b_[static_cast<std::size_t>(i)] = q_[static_cast<std::size_t>(i)] * pow_B(i);
}

long Schedule::b_of(int k) const {
    if (k == 0) return n;
    if (k >= L) return 0;
    return b_[static_cast<std::size_t>(k)];
}

// ---------------------------------------------------------------------------
// ConvolutionEngine internals
// ---------------------------------------------------------------------------

struct ConvolutionEngine::Channel {
    Complex r{}, r_block{}, r_pm1{};
    Complex rho{}, rho_stage{};
    Eigen::RowVectorXcd phi;    // h * q(h lambda), m entries
    Eigen::VectorXcd stage_in;  // (I - h lambda A)^{-1} 1l, m entries (RK)
    std::vector<Complex> V, Vnext, K, J;
};

struct ConvolutionEngine::Node {
    Complex lambda{}, w{}, F{};
    std::vector<Channel> ch;
};

struct ConvolutionEngine::Level {
    int ell = 0;
    long p = 0, P = 0;
    std::vector<Node> nodes;
    bool F_set = false;
    bool this_tick = false;
    long v_start = -1, v_end = -1;
    long vnext_start = -1;
    long k_end = -1;
    bool j_live = false;
};

namespace {

void axpy_push(std::vector<Complex>& dst, const Complex& a, const std::vector<Complex>& add) {
    for (std::size_t d = 0; d < dst.size(); ++d) dst[d] = a * dst[d] + add[d];
}

}  // namespace

ConvolutionEngine::ConvolutionEngine(const SectorialTransform& kernel, const TimeMethod& method,
                                     double h, int dimension, const EngineOptions& options)
    : method_(method),
      h_(h),
      dim_(dimension),
      stages_(method.stages()),
      channels_(method.is_bdf2() ? 2 : 1),
      opt_(options),
      sched_(options.B),
      kernel_eval_count_(std::make_shared<long>(0)) {
    if (!(h > 0.0)) throw std::invalid_argument("ConvolutionEngine: h > 0 required");
    if (dimension < 1) throw std::invalid_argument("ConvolutionEngine: dimension >= 1 required");
    if (opt_.K == 0) opt_.K = opt_.profile == Profile::Fast ? 10 : 15;
    if (opt_.expected_steps <= 0) opt_.expected_steps = 1000000000000L;
    if (opt_.stage_history && method_.family != TimeMethod::Family::RungeKutta)
        throw std::invalid_argument("stage_history requires a Runge-Kutta method");

    kernel_ = kernel;
    auto base_eval = kernel.evaluate;
    auto counter = kernel_eval_count_;
    kernel_.evaluate = [base_eval, counter](Complex s) {
        ++*counter;
        return base_eval(s);
    };

    const long n0 = 2L * opt_.B - 1;
    first_w_ = weights_circle(kernel_, method_, h_, n0);
    if (opt_.stage_history)
        first_W_ = weight_matrices_circle(kernel_, method_.tableau, h_, n0);

    window_.assign(static_cast<std::size_t>(2 * opt_.B), {});

    spawn_levels();
}

ConvolutionEngine::~ConvolutionEngine() = default;

void ConvolutionEngine::spawn_levels() {
    // Levels 2..Lcap must integrate from step 0; Lcap is the deepest level
    // ever queried within expected_steps (first query at step 2 B^(ell-1) - 1).
    int lcap = 2;
    while (2 * sched_.pow_B(lcap) <= opt_.expected_steps + 1) ++lcap;

    const int K = opt_.K;
    const int m = stages_;
    for (int ell = 2; ell <= lcap; ++ell) {
        Level lev;
        lev.ell = ell;
        lev.p = sched_.pow_B(ell - 1);
        lev.P = sched_.pow_B(ell);
        ContourSpec spec =
            interval_params(ell, opt_.B, h_, opt_.contour, opt_.profile, kernel_.vertex_c);
        spec.K = K;
        const QuadratureRule rule = make_rule(spec);

        const int k_lo = opt_.symmetric_reduction ? 0 : -K;
        for (int k = k_lo; k <= K; ++k) {
            Node node;
            node.lambda = rule.node(k);
            node.w = rule.weight(k);
            node.ch.resize(static_cast<std::size_t>(channels_));
            const Complex z = h_ * node.lambda;
            if (method_.family == TimeMethod::Family::RungeKutta) {
                Channel& c = node.ch[0];
                const int ms = method_.tableau.stages_m;
                Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(ms, ms) -
                                     z * method_.tableau.A.cast<Complex>();
                Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
                const Eigen::RowVectorXcd q =
                    method_.tableau.b.cast<Complex>().transpose() * lu.inverse();
                c.r = 1.0 + z * q.sum();
                c.phi = h_ * q;
                c.stage_in = lu.solve(Eigen::VectorXcd::Ones(ms));
            } else if (method_.multistep.kind == MultistepKind::BackwardEuler) {
                Channel& c = node.ch[0];
                c.r = 1.0 / (1.0 - z);
                c.phi.resize(1);
                c.phi(0) = h_ * c.r;
            } else {
                const BdfComponents bc = bdf2_components(z);
                node.ch[0].r = bc.r1;
                node.ch[0].phi.resize(1);
                node.ch[0].phi(0) = h_ * bc.q1;
                node.ch[1].r = bc.r2;
                node.ch[1].phi.resize(1);
                node.ch[1].phi(0) = h_ * bc.q2;
            }
            for (Channel& c : node.ch) {
                const double pd = static_cast<double>(lev.p);
                c.r_block = std::pow(c.r, pd);
                c.r_pm1 = std::pow(c.r, pd - 1.0);
                (void)m;
            }
            lev.nodes.push_back(std::move(node));
        }
        levels_.push_back(std::move(lev));
    }
}

void ConvolutionEngine::ensure_F(Level& lev) const {
    if (lev.F_set) return;
    for (Node& node : lev.nodes) node.F = eval_transform(kernel_, node.lambda);
    lev.F_set = true;
}

void ConvolutionEngine::phase_advance() {
    const long n = sched_.n;
    if (sched_.L - 1 > static_cast<int>(levels_.size()))
        throw std::runtime_error("ConvolutionEngine: expected_steps exceeded");

    for (Level& lev : levels_) {
        const long p = lev.p;
        lev.this_tick = ((n + 1) % p) == 0;
        if (!lev.this_tick) {
            for (Node& node : lev.nodes)
                for (Channel& c : node.ch) {
                    c.rho *= c.r;
                    if (opt_.stage_history) c.rho_stage *= c.r;
                }
            continue;
        }

        const long c_new = n + 1 - p;
        if (lev.k_end == c_new && c_new >= p) {
            if (lev.v_start < 0) {
                // first window [0, p)
                if (c_new - p != 0)
                    throw std::logic_error("engine: level birth out of phase");
                for (Node& node : lev.nodes)
                    for (Channel& c : node.ch) c.V = std::move(c.K);
                lev.v_start = 0;
                lev.v_end = c_new;
            } else {
                if (lev.v_end != c_new - p)
                    throw std::logic_error("engine: window push out of phase");
                for (Node& node : lev.nodes)
                    for (Channel& c : node.ch) axpy_push(c.V, c.r_block, c.K);
                cmults_ += static_cast<long>(lev.nodes.size()) * channels_ * dim_;
                lev.v_end = c_new;

                if (lev.vnext_start >= 0) {
                    for (Node& node : lev.nodes)
                        for (Channel& c : node.ch) axpy_push(c.Vnext, c.r_block, c.K);
                    cmults_ += static_cast<long>(lev.nodes.size()) * channels_ * dim_;
                } else if (c_new - p == lev.v_start + lev.P) {
                    for (Node& node : lev.nodes)
                        for (Channel& c : node.ch) c.Vnext = c.K;
                    lev.vnext_start = lev.v_start + lev.P;
                }
                for (Node& node : lev.nodes)
                    for (Channel& c : node.ch) {
                        c.K.clear();
                        c.K.shrink_to_fit();
                    }
            }
            lev.k_end = -1;
        }

        const long b_now = sched_.b_of(lev.ell);
        if (lev.v_start >= 0 && b_now != lev.v_start) {
            if (lev.vnext_start != b_now)
                throw std::logic_error("engine: promotion without matching accumulator");
            for (Node& node : lev.nodes)
                for (Channel& c : node.ch) {
                    c.V = std::move(c.Vnext);
                    c.Vnext.clear();
                    c.Vnext.shrink_to_fit();
                }
            lev.v_start = lev.vnext_start;
            lev.vnext_start = -1;
        }

        for (Node& node : lev.nodes)
            for (Channel& c : node.ch) {
                c.rho = c.r_block;
                if (opt_.stage_history) c.rho_stage = c.r_pm1;
            }
    }
}

void ConvolutionEngine::begin_step() {
    if (in_step_) throw std::logic_error("ConvolutionEngine: begin_step during open step");
    sched_.step();
    phase_advance();
    // evict window entries that dropped out of the direct range [b(1), n]
    const long b1 = sched_.b_of(1);
    while (window_count_ > 0 && window_begin_ < b1) {
        window_[static_cast<std::size_t>(window_begin_ % (2 * opt_.B))].clear();
        ++window_begin_;
        --window_count_;
    }
    in_step_ = true;
}

void ConvolutionEngine::window_push(std::span<const double> g_n) {
    const long n = sched_.n;
    if (window_count_ == 0) window_begin_ = n;
    auto& slot = window_[static_cast<std::size_t>(n % (2 * opt_.B))];
    slot.assign(g_n.begin(), g_n.end());
    ++window_count_;
    if (window_count_ > 2 * opt_.B)
        throw std::logic_error("ConvolutionEngine: window exceeded 2B entries");
}

void ConvolutionEngine::bank_feed(std::span<const double> g_n) {
    const long n = sched_.n;
    for (Level& lev : levels_) {
        for (Node& node : lev.nodes)
            for (Channel& c : node.ch) {
                if (c.J.empty()) c.J.assign(static_cast<std::size_t>(dim_), Complex(0.0, 0.0));
                for (int d = 0; d < dim_; ++d) {
                    Complex acc = c.r * c.J[static_cast<std::size_t>(d)];
                    for (int i = 0; i < stages_; ++i)
                        acc += c.phi(i) * g_n[static_cast<std::size_t>(i * dim_ + d)];
                    c.J[static_cast<std::size_t>(d)] = acc;
                }
            }
        lev.j_live = true;
        cmults_ += static_cast<long>(lev.nodes.size()) * channels_ * dim_ * (stages_ + 1);

        if (lev.this_tick) {
            for (Node& node : lev.nodes)
                for (Channel& c : node.ch) {
                    c.K = std::move(c.J);
                    c.J.clear();
                }
            lev.k_end = n + 1;
            lev.j_live = false;
        }
    }
}

void ConvolutionEngine::feed(std::span<const double> g_n) {
    if (!in_step_) throw std::logic_error("ConvolutionEngine: feed before begin_step");
    if (g_n.size() != static_cast<std::size_t>(stages_) * static_cast<std::size_t>(dim_))
        throw std::invalid_argument("ConvolutionEngine: wrong sample size");
    window_push(g_n);
    bank_feed(g_n);
    in_step_ = false;
}

void ConvolutionEngine::window_sum(std::span<double> out, bool include_head,
                                   bool stage_flavor) const {
    const long n = sched_.n;
    const long j_hi = include_head ? n : n - 1;
    const int m = stages_;
    for (long j = window_begin_; j <= j_hi; ++j) {
        const auto& g = window_[static_cast<std::size_t>(j % (2 * opt_.B))];
        const long lag = n - j;
        if (!stage_flavor) {
            const auto w = first_w_.row(lag);
            for (int i = 0; i < m; ++i) {
                const double wi = w[static_cast<std::size_t>(i)];
                for (int d = 0; d < dim_; ++d)
                    out[static_cast<std::size_t>(d)] += wi * g[static_cast<std::size_t>(i * dim_ + d)];
            }
        } else {
            const Eigen::MatrixXd& W = first_W_[static_cast<std::size_t>(lag)];
            for (int i = 0; i < m; ++i)
                for (int i2 = 0; i2 < m; ++i2) {
                    const double wi = W(i, i2);
                    for (int d = 0; d < dim_; ++d)
                        out[static_cast<std::size_t>(i * dim_ + d)] +=
                            wi * g[static_cast<std::size_t>(i2 * dim_ + d)];
                }
        }
        cmults_ += m * (stage_flavor ? m : 1) * dim_;
    }
}

void ConvolutionEngine::query_bank(std::span<double> out, bool stage_flavor) const {
    const int L = sched_.L;
    for (const Level& lev : levels_) {
        if (lev.ell > L) break;
        const long b_hi = sched_.b_of(lev.ell - 1);
        if (b_hi <= 0) continue;  // level not active yet
        const long b_lo = sched_.b_of(lev.ell);
        if (lev.v_start != b_lo || lev.v_end != b_hi)
            throw std::logic_error("engine: bank coverage out of sync with schedule");
        const_cast<ConvolutionEngine*>(this)->ensure_F(const_cast<Level&>(lev));

        for (const Node& node : lev.nodes) {
            const double mult =
                (opt_.symmetric_reduction && node.lambda.imag() != 0.0) ? 2.0 : 1.0;
            const Complex wF = node.w * node.F;
            if (!stage_flavor) {
                for (const Channel& c : node.ch) {
                    const Complex f = wF * c.rho;
                    for (int d = 0; d < dim_; ++d)
                        out[static_cast<std::size_t>(d)] +=
                            mult * (f * c.V[static_cast<std::size_t>(d)]).real();
                }
            } else {
                const Channel& c = node.ch[0];
                const Complex base = wF * c.rho_stage;
                for (int i = 0; i < stages_; ++i) {
                    const Complex coef = base * c.stage_in(i);
                    for (int d = 0; d < dim_; ++d)
                        out[static_cast<std::size_t>(i * dim_ + d)] +=
                            mult * (coef * c.V[static_cast<std::size_t>(d)]).real();
                }
            }
        }
        cmults_ += static_cast<long>(lev.nodes.size()) * channels_ * dim_ *
                   (stage_flavor ? stages_ : 1);
    }
}

void ConvolutionEngine::history(std::span<double> out) const {
    if (!in_step_) throw std::logic_error("ConvolutionEngine: history outside step");
    if (out.size() != static_cast<std::size_t>(dim_))
        throw std::invalid_argument("history: wrong output size");
    std::fill(out.begin(), out.end(), 0.0);
    window_sum(out, /*include_head=*/false, /*stage_flavor=*/false);
    query_bank(out, /*stage_flavor=*/false);
}

void ConvolutionEngine::history_stage(std::span<double> out) const {
    if (!in_step_) throw std::logic_error("ConvolutionEngine: history outside step");
    if (!opt_.stage_history)
        throw std::logic_error("ConvolutionEngine: stage_history not enabled");
    if (out.size() != static_cast<std::size_t>(stages_) * static_cast<std::size_t>(dim_))
        throw std::invalid_argument("history_stage: wrong output size");
    std::fill(out.begin(), out.end(), 0.0);
    window_sum(out, /*include_head=*/false, /*stage_flavor=*/true);
    query_bank(out, /*stage_flavor=*/true);
}

void ConvolutionEngine::step(std::span<const double> g_n, std::span<double> out) {
    if (out.size() != static_cast<std::size_t>(dim_))
        throw std::invalid_argument("step: wrong output size");
    if (g_n.size() != static_cast<std::size_t>(stages_) * static_cast<std::size_t>(dim_))
        throw std::invalid_argument("ConvolutionEngine: wrong sample size");
    begin_step();
    window_push(g_n);  // the head sample enters through the window
    std::fill(out.begin(), out.end(), 0.0);
    window_sum(out, /*include_head=*/true, /*stage_flavor=*/false);
    query_bank(out, /*stage_flavor=*/false);
    bank_feed(g_n);
    in_step_ = false;
}

ConvolutionEngine::Memory ConvolutionEngine::memory_report() const {
    Memory mem;
    mem.window_entries = window_count_;
    mem.levels_spawned = static_cast<int>(levels_.size());
    for (const Level& lev : levels_) {
        int live = 0;
        if (lev.v_start >= 0) ++live;
        if (lev.vnext_start >= 0) ++live;
        if (lev.k_end >= 0) ++live;
        if (lev.j_live) ++live;
        mem.bank_registers += static_cast<long>(lev.nodes.size()) * channels_ * live;
        if (live * channels_ > mem.max_slots_per_node) mem.max_slots_per_node = live * channels_;
        if (sched_.b_of(lev.ell - 1) > 0) ++mem.levels_active;
    }
    mem.per_unknown = mem.bank_registers + mem.window_entries * stages_;
    return mem;
}

}  // namespace cq
