#include "cq/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "cq/cqweights.hpp"
#include "cq/fracdiff.hpp"
#include "cq/kernels.hpp"
#include "cq/oblivious.hpp"
#include "cq/volterra.hpp"

namespace cq::cli {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Output {
    std::ofstream file;
    std::ostream* os = &std::cout;

    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw std::runtime_error("cannot open output file '" + path + "'");
            os = &file;
        }
    }
    std::ostream& stream() { return *os; }
};

struct CommonFlags {
    std::string kernel = "pow:0.5";
    std::string method = "be";
    std::string contour = "talbot";
    std::string profile = "accurate";
    int B = 5;
    int K = 0;
    double h = 0.01;
    long N = 1000;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_kernel = true) {
    if (with_kernel) cmd->add_option("--kernel", f.kernel, "kernel, pow:<beta>");
    cmd->add_option("--method", f.method, "time method: be|bdf2|radau3|radau5");
    cmd->add_option("--contour", f.contour, "contour: talbot|hyperbola");
    cmd->add_option("--profile", f.profile, "parameter profile: fast|accurate");
    cmd->add_option("--B", f.B, "interval base B");
    cmd->add_option("--K", f.K, "contour half node count (0: profile default)");
    cmd->add_option("--h", f.h, "step size");
    cmd->add_option("--out", f.out, "output CSV path (default stdout)");
}

EngineOptions engine_options(const CommonFlags& f, long steps) {
    EngineOptions o;
    o.B = f.B;
    o.K = f.K;
    o.contour = parse_contour(f.contour);
    o.profile = parse_profile(f.profile);
    o.expected_steps = steps;
    return o;
}

double forcing_value(const std::string& id, double t) {
    if (id == "one") return 1.0;
    if (id == "sin") return std::sin(t);
    if (id == "texp") return t * std::exp(-t);
    throw CLI::ValidationError("--g", "expected one|sin|texp");
}

int cmd_weights(const CommonFlags& f, long n) {
    const auto kernel = parse_kernel(f.kernel);
    const auto method = TimeMethod::parse(f.method);
    const WeightSequence w = weights_circle(kernel, method, f.h, n);
    Output out(f.out);
    if (w.stages == 1) {
        out.stream() << "n,omega\n";
    } else {
        out.stream() << "n";
        for (int i = 1; i <= w.stages; ++i) out.stream() << ",omega_" << i;
        out.stream() << "\n";
    }
    for (long k = 0; k <= n; ++k) {
        out.stream() << k;
        for (int i = 0; i < w.stages; ++i)
            out.stream() << ',' << fmt(w.row(k)[static_cast<std::size_t>(i)]);
        out.stream() << '\n';
    }
    return 0;
}

int cmd_contour_error(const CommonFlags& f, long n_max) {
    const auto kernel = parse_kernel(f.kernel);
    const auto method = TimeMethod::parse(f.method);
    const ContourKind kind = parse_contour(f.contour);
    const Profile prof = parse_profile(f.profile);
    Output out(f.out);
    out.stream() << "n,rel_err\n";

    std::vector<long> ns;
    for (long n = 1; n <= std::min<long>(64, n_max); ++n) ns.push_back(n);
    for (double x = 64.0; x <= static_cast<double>(n_max); x *= 1.08) {
        const long n = static_cast<long>(std::llround(x));
        if (n > 64 && n <= n_max && (ns.empty() || n != ns.back())) ns.push_back(n);
    }

    int ell = 2;
    long lim = 2 * static_cast<long>(std::pow(f.B, ell));
    std::optional<QuadratureRule> rule;
    for (long n : ns) {
        while (n >= lim) {
            ++ell;
            lim = 2 * static_cast<long>(std::pow(f.B, ell));
            rule.reset();
        }
        if (!rule) {
            ContourSpec spec = interval_params(ell, f.B, f.h, kind, prof, kernel.vertex_c);
            if (f.K > 0) spec.K = f.K;
            rule = make_rule(spec);
        }
        const auto approx = weights_contour(kernel, method, f.h, n, *rule);
        const auto ref = weight_circle_single(kernel, method, f.h, n);
        // for RK methods the last entry is plotted
        const double a = approx.back(), r = ref.back();
        const double err = std::abs(a - r) / std::max(std::abs(r), 1e-300);
        out.stream() << n << ',' << fmt(err) << '\n';
    }
    return 0;
}

int cmd_convolve(const CommonFlags& f, const std::string& g_id, bool check) {
    const auto kernel = parse_kernel(f.kernel);
    const auto method = TimeMethod::parse(f.method);
    const int m = method.stages();
    const auto offs = method.abscissae();

    ConvolutionEngine engine(kernel, method, f.h, 1, engine_options(f, f.N + 1));
    std::vector<double> g_all;
    std::vector<double> u(static_cast<std::size_t>(f.N) + 1);
    std::vector<double> gn(static_cast<std::size_t>(m));
    for (long n = 0; n <= f.N; ++n) {
        for (int i = 0; i < m; ++i)
            gn[static_cast<std::size_t>(i)] = forcing_value(
                g_id, (static_cast<double>(n) + offs[static_cast<std::size_t>(i)]) * f.h);
        double out_val = 0.0;
        engine.step(gn, {&out_val, 1});
        u[static_cast<std::size_t>(n)] = out_val;
        if (check) g_all.insert(g_all.end(), gn.begin(), gn.end());
    }

    std::vector<double> u_ref;
    if (check) {
        const WeightSequence w = weights_circle(kernel, method, f.h, f.N);
        u_ref = convolve_direct(w, g_all);
    }

    Output out(f.out);
    const auto c = engine.counters();
    const auto mem = engine.memory_report();
    out.stream() << "# kernel_evals=" << c.kernel_evals << ", cmults=" << c.cmults
                 << ", stored=" << mem.per_unknown << "\n";
    out.stream() << (check ? "n,t,u_fast,u_direct,abs_err\n" : "n,t,u_fast\n");
    for (long n = 0; n <= f.N; ++n) {
        const double t = (method.family == TimeMethod::Family::RungeKutta)
                             ? static_cast<double>(n + 1) * f.h
                             : static_cast<double>(n) * f.h;
        out.stream() << n << ',' << fmt(t) << ',' << fmt(u[static_cast<std::size_t>(n)]);
        if (check) {
            const double d = std::abs(u[static_cast<std::size_t>(n)] - u_ref[static_cast<std::size_t>(n)]);
            out.stream() << ',' << fmt(u_ref[static_cast<std::size_t>(n)]) << ',' << fmt(d);
        }
        out.stream() << '\n';
    }
    return 0;
}

int cmd_volterra(const CommonFlags& f, const std::string& mode, const std::string& ref_path) {
    const auto method = TimeMethod::parse(f.method);
    VolterraProblem problem = levinson_problem(static_cast<double>(f.N) * f.h);

    VolterraOptions opt;
    opt.mode = mode == "direct" ? HistoryMode::Direct : HistoryMode::Fast;
    opt.engine = engine_options(f, f.N + 1);
    const std::vector<double> u = solve_volterra(problem, method, f.h, f.N, opt);

    std::vector<double> ref_u;
    double ref_h = 0.0;
    if (!ref_path.empty()) {
        std::ifstream in(ref_path);
        if (!in) throw std::runtime_error("cannot open reference '" + ref_path + "'");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#' || line[0] == 'n') continue;
            std::istringstream row(line);
            std::string tok;
            std::getline(row, tok, ',');
            std::getline(row, tok, ',');
            const double t = std::stod(tok);
            std::getline(row, tok, ',');
            ref_u.push_back(std::stod(tok));
            if (ref_u.size() == 2) ref_h = t;  // t of row n=1
        }
        if (ref_u.size() < 2) throw std::runtime_error("reference file too short");
    }

    Output out(f.out);
    out.stream() << (ref_path.empty() ? "n,t,u\n" : "n,t,u,abs_err\n");
    for (long n = 0; n <= f.N; ++n) {
        const double t = static_cast<double>(n) * f.h;
        out.stream() << n << ',' << fmt(t) << ',' << fmt(u[static_cast<std::size_t>(n)]);
        if (!ref_path.empty()) {
            const double jr = t / ref_h;
            const long j = std::lround(jr);
            if (std::abs(jr - static_cast<double>(j)) < 1e-9 &&
                j < static_cast<long>(ref_u.size()))
                out.stream() << ','
                             << fmt(std::abs(u[static_cast<std::size_t>(n)] -
                                             ref_u[static_cast<std::size_t>(j)]));
            else
                out.stream() << ',';
        }
        out.stream() << '\n';
    }
    return 0;
}

int cmd_fracdiff(const CommonFlags& f, double alpha, double a, int M, long snapshot_every,
                 const std::string& snapshot_prefix, const std::string& ref_path) {
    const auto method = TimeMethod::parse(f.method);
    FracdiffOptions opt;
    opt.engine = engine_options(f, f.N + 1);
    SubdiffusionProblem problem = gaussian_subdiffusion(alpha, a, M);
    SubdiffusionSolver solver(problem, method, f.h, opt);

    auto write_snapshot = [&](const std::string& path) {
        Output snap(path);
        snap.stream() << "x,u\n";
        for (int l = -M; l <= M; ++l)
            snap.stream() << fmt(problem.grid.x(l)) << ','
                          << fmt(solver.solution()[static_cast<std::size_t>(l + M)]) << '\n';
    };

    for (long n = 1; n <= f.N; ++n) {
        solver.advance();
        if (snapshot_every > 0 && !snapshot_prefix.empty() && n % snapshot_every == 0)
            write_snapshot(snapshot_prefix + "_" + std::to_string(n) + ".csv");
    }

    if (!ref_path.empty()) {
        std::ifstream in(ref_path);
        if (!in) throw std::runtime_error("cannot open reference '" + ref_path + "'");
        std::string line;
        std::vector<double> ref;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#' || line[0] == 'x') continue;
            std::istringstream row(line);
            std::string tok;
            std::getline(row, tok, ',');
            std::getline(row, tok, ',');
            ref.push_back(std::stod(tok));
        }
        if (static_cast<int>(ref.size()) != 2 * M + 1)
            throw std::runtime_error("reference grid size mismatch");
        double err = 0.0;
        for (int i = 0; i < 2 * M + 1; ++i)
            err = std::max(err, std::abs(solver.solution()[static_cast<std::size_t>(i)] -
                                         ref[static_cast<std::size_t>(i)]));
        Output out(f.out);
        out.stream() << "h,method,abs_err_at_t\n";
        out.stream() << fmt(f.h) << ',' << f.method << ',' << fmt(err) << '\n';
    } else {
        write_snapshot(f.out);
    }
    return 0;
}

int cmd_bench(const CommonFlags& f, long n_min, long n_max) {
    const auto kernel = parse_kernel(f.kernel);
    const auto method = TimeMethod::parse(f.method);
    const int m = method.stages();
    const auto offs = method.abscissae();
    Output out(f.out);
    out.stream() << "N,seconds,kernel_evals,cmults,stored_scalars\n";
    for (long N = n_min; N <= n_max; N *= 2) {
        ConvolutionEngine engine(kernel, method, f.h, 1, engine_options(f, N + 1));
        std::vector<double> gn(static_cast<std::size_t>(m));
        double u = 0.0;
        const auto t0 = std::chrono::steady_clock::now();
        for (long n = 0; n < N; ++n) {
            for (int i = 0; i < m; ++i)
                gn[static_cast<std::size_t>(i)] = std::sin(
                    (static_cast<double>(n) + offs[static_cast<std::size_t>(i)]) * f.h);
            engine.step(gn, {&u, 1});
        }
        const auto t1 = std::chrono::steady_clock::now();
        const double secs = std::chrono::duration<double>(t1 - t0).count();
        const auto c = engine.counters();
        const auto mem = engine.memory_report();
        out.stream() << N << ',' << fmt(secs) << ',' << c.kernel_evals << ',' << c.cmults << ','
                     << mem.per_unknown << '\n';
    }
    return 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"fast oblivious convolution quadrature"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read flags from a key=value file");
    app.allow_config_extras(CLI::config_extras_mode::error);

    CommonFlags f;

    auto* weights = app.add_subcommand("weights", "emit quadrature weights as CSV");
    long weights_n = 10;
    add_common(weights, f);
    weights->add_option("--n", weights_n, "highest weight index");

    auto* cerr_cmd = app.add_subcommand("contour-error", "contour weight error vs circle reference");
    long n_max = 20000;
    add_common(cerr_cmd, f);
    cerr_cmd->add_option("--Nmax", n_max, "largest weight index");

    auto* conv = app.add_subcommand("convolve", "fast convolution of a sample sequence");
    std::string g_id = "sin";
    bool check = false;
    add_common(conv, f);
    conv->add_option("--N", f.N, "number of steps");
    conv->add_option("--g", g_id, "forcing: one|sin|texp");
    conv->add_flag("--check", check, "also run the O(N^2) direct convolution");

    auto* vol = app.add_subcommand("volterra", "solve the nonlinear Volterra test equation");
    std::string mode = "fast";
    std::string ref_path;
    add_common(vol, f, /*with_kernel=*/false);
    vol->add_option("--N", f.N, "number of steps");
    vol->add_option("--mode", mode, "history mode: direct|fast")
        ->check(CLI::IsMember({"direct", "fast"}));
    vol->add_option("--ref", ref_path, "reference CSV (n,t,u) for abs_err");

    auto* fd = app.add_subcommand("fracdiff", "subdiffusion with transparent boundaries");
    double alpha = 2.0 / 3.0, half_width = 5.0;
    int M = 450;
    long snapshot_every = 0;
    std::string snapshot_prefix, fd_ref;
    add_common(fd, f, /*with_kernel=*/false);
    fd->add_option("--N", f.N, "number of steps");
    fd->add_option("--alpha", alpha, "fractional exponent in (0,2)");
    fd->add_option("--a", half_width, "domain half width");
    fd->add_option("--M", M, "grid intervals per half width");
    fd->add_option("--snapshot-every", snapshot_every, "write a snapshot every k steps");
    fd->add_option("--snapshot-prefix", snapshot_prefix, "snapshot file prefix");
    fd->add_option("--ref", fd_ref, "reference snapshot (x,u) for the error report");

    auto* bench = app.add_subcommand("bench", "counters and wall time over an N ladder");
    long n_min = 1000, bench_max = 1000000;
    add_common(bench, f);
    bench->add_option("--Nmin", n_min, "smallest N");
    bench->add_option("--Nmax", bench_max, "largest N");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (weights->parsed()) return cmd_weights(f, weights_n);
        if (cerr_cmd->parsed()) return cmd_contour_error(f, n_max);
        if (conv->parsed()) return cmd_convolve(f, g_id, check);
        if (vol->parsed()) return cmd_volterra(f, mode, ref_path);
        if (fd->parsed())
            return cmd_fracdiff(f, alpha, half_width, M, snapshot_every, snapshot_prefix, fd_ref);
        if (bench->parsed()) return cmd_bench(f, n_min, bench_max);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace cq::cli
