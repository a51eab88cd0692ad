#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "cq/contours.hpp"
#include "cq/cqweights.hpp"
#include "cq/kernels.hpp"
#include "cq/stepgen.hpp"

namespace cq {

/// Block schedule of the fast algorithm. After processing step n, b(k) is the
/// start of the level-k history window: the level-k sum covers
/// j in [b(k), b(k-1) - 1] with n - j in [B^(k-1), 2 B^k - 2].
struct Schedule {
    int B;
    int L = 1;
    long n = -1;

    explicit Schedule(int base);

    /// One iteration of the recursive block-index update.
    void step();

    /// b(k); 0 for k >= L. b(0) is the current step n.
    long b_of(int k) const;

    long pow_B(int k) const;  // B^k as long

  private:
    std::vector<long> q_;  // q(k), k >= 1
    std::vector<long> b_;  // b(k), k >= 1
};

struct EngineOptions {
    int B = 5;
    int K = 0;  // 0: use the profile's K (10 fast / 15 accurate)
    ContourKind contour = ContourKind::Talbot;
    Profile profile = Profile::Accurate;
    /// Upper bound on the number of steps this engine will be fed. The level
    /// machinery must run from step 0, so the bound fixes how many levels are
    /// spawned. 0 chooses a generous default (about 10^12 steps).
    long expected_steps = 0;
    /// Store only the upper half of each contour (real data); sums take
    /// twice the real part of the k > 0 terms.
    bool symmetric_reduction = true;
    /// Maintain the full first weight matrices and the stage-level query
    /// needed by the Runge-Kutta formulation of integral equations.
    bool stage_history = false;
};

/// Fast, oblivious evaluation of convolution quadrature sums. Feeding the
/// samples g_0, g_1, ... one step at a time yields
///     out[n] = sum_{j<=n} omega_{n-j} . g_j
/// with O(log N) active memory: the history is kept only as ODE states
/// y' = lambda y + g at the contour nodes of a ladder of approximation
/// intervals, plus a sliding window of at most 2B recent samples.
///
/// Exclusively owned during a step; independent engines are independent.
class ConvolutionEngine {
  public:
    ConvolutionEngine(const SectorialTransform& kernel, const TimeMethod& method, double h,
                      int dimension, const EngineOptions& options = {});
    ~ConvolutionEngine();

    ConvolutionEngine(const ConvolutionEngine&) = delete;
    ConvolutionEngine& operator=(const ConvolutionEngine&) = delete;

    int dimension() const { return dim_; }
    int stages() const { return stages_; }
    double step_size() const { return h_; }

    /// Plain convolution: feed the stage samples of step n (stages*dimension
    /// values, stage-major) and receive out[n] (dimension values).
    void step(std::span<const double> g_n, std::span<double> out);

    /// Equation mode. begin_step() advances the schedule; history() returns
    /// sum_{j<n} omega_{n-j} . g_j before g_n is known; feed(g_n) completes
    /// the step. history_stage() is the Runge-Kutta stage flavor
    /// sum_{j<n} W_{n-j} g_j (stages*dimension values).
    void begin_step();
    void history(std::span<double> out) const;
    void history_stage(std::span<double> out) const;
    void feed(std::span<const double> g_n);

    /// Direct weights omega_0..omega_{2B-1} (last rows for RK methods).
    const WeightSequence& first_weights() const { return first_w_; }
    /// Full matrices W_0..W_{2B-1}; available in stage_history mode.
    const std::vector<Eigen::MatrixXd>& first_weight_matrices() const { return first_W_; }

    long current_step() const { return sched_.n; }

    struct Memory {
        long per_unknown = 0;    // stored history entries per data dimension
        long window_entries = 0; // live g entries (<= 2B)
        long bank_registers = 0; // live ODE-bank states across all nodes
        int max_slots_per_node = 0;
        int levels_spawned = 0;
        int levels_active = 0;
    };
    Memory memory_report() const;

    struct Counters {
        long kernel_evals = 0;
        long cmults = 0;
    };
    Counters counters() const { return {*kernel_eval_count_, cmults_}; }

  private:
    struct Channel;
    struct Node;
    struct Level;

    void spawn_levels();
    void phase_advance();
    void window_push(std::span<const double> g_n);
    void bank_feed(std::span<const double> g_n);
    void query_bank(std::span<double> out, bool stage_flavor) const;
    void window_sum(std::span<double> out, bool include_head, bool stage_flavor) const;
    void ensure_F(Level& lev) const;

    SectorialTransform kernel_;  // evaluation wrapped with a counter
    TimeMethod method_;
    double h_;
    int dim_;
    int stages_;
    int channels_;  // 2 for BDF2, else 1
    EngineOptions opt_;
    Schedule sched_;
    bool in_step_ = false;

    WeightSequence first_w_;
    std::vector<Eigen::MatrixXd> first_W_;

    std::vector<Level> levels_;

    // sliding window: ring of up to 2B entries of stages*dim samples
    std::vector<std::vector<double>> window_;
    long window_begin_ = 0;  // step index of the oldest live entry
    long window_count_ = 0;

    std::shared_ptr<long> kernel_eval_count_;
    mutable long cmults_ = 0;
};

}  // namespace cq
