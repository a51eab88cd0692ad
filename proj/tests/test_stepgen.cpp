#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "cq/stepgen.hpp"

using cq::Complex;

namespace {

// Series-inversion oracle: coefficients e_0..e_n of (delta(zeta) - z)^{-1}
// from the zeta-power coefficients of delta.
std::vector<Complex> series_en(const cq::MultistepMethod& ms, Complex z, int n) {
    // expand sum_k d_k (1-zeta)^k into zeta powers
    std::vector<Complex> c(3, 0.0);
    c[0] = ms.delta_coeffs[0] + ms.delta_coeffs[1] + ms.delta_coeffs[2] - z;
    c[1] = -ms.delta_coeffs[1] - 2.0 * ms.delta_coeffs[2];
    c[2] = ms.delta_coeffs[2];
    std::vector<Complex> e(static_cast<std::size_t>(n) + 1);
    e[0] = 1.0 / c[0];
    for (int i = 1; i <= n; ++i) {
        Complex acc = 0.0;
        for (int k = 1; k <= std::min(i, 2); ++k) acc += c[static_cast<std::size_t>(k)] * e[static_cast<std::size_t>(i - k)];
        e[static_cast<std::size_t>(i)] = -acc / c[0];
    }
    return e;
}

// Matrix series oracle for E_n: with G(zeta) = A + (zeta + zeta^2 + ...) 1l b^T
// and P = I - z G, the series of (Delta - zI)^{-1} = P^{-1} G.
std::vector<Eigen::MatrixXcd> series_En(const cq::RungeKuttaTableau& tab, Complex z, int n) {
    const int m = tab.stages_m;
    const Eigen::MatrixXcd ones_bt =
        Eigen::VectorXcd::Ones(m) * tab.b.cast<Complex>().transpose();
    auto G = [&](int k) -> Eigen::MatrixXcd {
        if (k == 0) return tab.A.cast<Complex>();
        return ones_bt;
    };
    std::vector<Eigen::MatrixXcd> Q(static_cast<std::size_t>(n) + 1);
    const Eigen::MatrixXcd P0 = Eigen::MatrixXcd::Identity(m, m) - z * G(0);
    const Eigen::MatrixXcd P0inv = P0.inverse();
    Q[0] = P0inv;
    for (int i = 1; i <= n; ++i) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(m, m);
        for (int k = 1; k <= i; ++k) acc += (-z * G(k)) * Q[static_cast<std::size_t>(i - k)];
        Q[static_cast<std::size_t>(i)] = -P0inv * acc;
    }
    std::vector<Eigen::MatrixXcd> E(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) {
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(m, m);
        for (int k = 0; k <= i; ++k) acc += Q[static_cast<std::size_t>(i - k)] * G(k);
        E[static_cast<std::size_t>(i)] = acc;
    }
    return E;
}

}  // namespace

TEST_SUITE_BEGIN("stepgen");

TEST_CASE("generating functions") {
    const auto be = cq::MultistepMethod::backward_euler();
    const auto bdf2 = cq::MultistepMethod::bdf2();
    CHECK(std::abs(cq::generating_delta(be, Complex(0.5, 0.0)) - Complex(0.5, 0.0)) < 1e-16);
    CHECK(std::abs(cq::generating_delta(bdf2, Complex(0.0, 0.0)) - Complex(1.5, 0.0)) < 1e-16);
    CHECK(std::abs(cq::generating_delta(be, Complex(1.0, 0.0))) == 0.0);
    CHECK(std::abs(cq::generating_delta(bdf2, Complex(1.0, 0.0))) == 0.0);
    CHECK(std::abs(cq::generating_delta(be, Complex(0.0, 0.0)) - Complex(1.0, 0.0)) < 1e-16);
}

TEST_CASE("radau tableaux satisfy the structural invariants") {
    for (int m : {1, 2, 3}) {
        const auto& tab = cq::radau_iia(m);
        CHECK(tab.stages_m == m);
        for (int j = 0; j < m; ++j) CHECK(tab.b(j) == tab.A(m - 1, j));
        CHECK(tab.c(m - 1) == doctest::Approx(1.0));
        // row sums of A equal c (collocation)
        for (int i = 0; i < m; ++i) CHECK(tab.A.row(i).sum() == doctest::Approx(tab.c(i)).epsilon(1e-14));
    }
    CHECK(cq::radau_iia(1).order_p == 1);
    CHECK(cq::radau_iia(2).order_p == 3);
    CHECK(cq::radau_iia(3).order_p == 5);
    CHECK_THROWS_AS((void)cq::radau_iia(4), std::invalid_argument);
}

TEST_CASE("rk_delta_matrix") {
    SUBCASE("Delta(0) is the inverse of A") {
        for (int m : {1, 2, 3}) {
            const auto& tab = cq::radau_iia(m);
            const Eigen::MatrixXcd d = cq::rk_delta_matrix(tab, 0.0);
            const Eigen::MatrixXcd id = d * tab.A.cast<Complex>();
            CHECK((id - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-13);
        }
    }
    SUBCASE("one stage reduces to 1 - zeta") {
        const Eigen::MatrixXcd d = cq::rk_delta_matrix(cq::radau_iia(1), Complex(0.3, 0.0));
        CHECK(std::abs(d(0, 0) - Complex(0.7, 0.0)) < 1e-15);
    }
    SUBCASE("two stages at zeta = 0") {
        const Eigen::MatrixXcd d = cq::rk_delta_matrix(cq::radau_iia(2), 0.0);
        CHECK(std::abs(d(0, 0) - Complex(1.5, 0.0)) < 1e-13);
        CHECK(std::abs(d(0, 1) - Complex(0.5, 0.0)) < 1e-13);
        CHECK(std::abs(d(1, 0) - Complex(-4.5, 0.0)) < 1e-13);
        CHECK(std::abs(d(1, 1) - Complex(2.5, 0.0)) < 1e-13);
    }
}

TEST_CASE("stability function and weight row") {
    SUBCASE("z = 0 gives r = 1 and q = b") {
        for (int m : {1, 2, 3}) {
            const auto& tab = cq::radau_iia(m);
            const auto sw = cq::stability_and_weight(tab, 0.0);
            CHECK(std::abs(sw.r - Complex(1.0, 0.0)) < 1e-14);
            for (int j = 0; j < m; ++j) CHECK(std::abs(sw.q(j) - Complex(tab.b(j), 0.0)) < 1e-14);
        }
    }
    SUBCASE("one stage closed form") {
        const auto sw = cq::stability_and_weight(cq::radau_iia(1), Complex(0.5, 0.0));
        CHECK(std::abs(sw.r - Complex(2.0, 0.0)) < 1e-14);
        CHECK(std::abs(sw.q(0) - Complex(2.0, 0.0)) < 1e-14);
    }
    SUBCASE("two stages closed form r(z) = (1 + z/3)/(1 - 2z/3 + z^2/6)") {
        const auto sw = cq::stability_and_weight(cq::radau_iia(2), Complex(1.0, 0.0));
        CHECK(std::abs(sw.r - Complex(8.0 / 3.0, 0.0)) < 1e-13);
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int i = 0; i < 20; ++i) {
            const Complex z(u(rng), u(rng));
            const Complex want = (1.0 + z / 3.0) / (1.0 - 2.0 * z / 3.0 + z * z / 6.0);
            CHECK(std::abs(cq::stability_and_weight(cq::radau_iia(2), z).r - want) <
                  1e-12 * std::abs(want));
        }
    }
}

TEST_CASE("en_multistep closed forms against the series oracle") {
    const auto be = cq::MultistepMethod::backward_euler();
    const auto bdf2 = cq::MultistepMethod::bdf2();

    CHECK(std::abs(cq::en_multistep(be, 7, 0.0) - Complex(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(cq::en_multistep(be, 2, Complex(0.5, 0.0)) - Complex(8.0, 0.0)) < 1e-12);
    CHECK(std::abs(cq::en_multistep(bdf2, 0, 0.0) - Complex(2.0 / 3.0, 0.0)) < 1e-15);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (const auto* ms : {&be, &bdf2}) {
        int tested = 0;
        while (tested < 20) {
            const Complex z(2.0 * u(rng), 2.0 * u(rng));
            if (ms->kind == cq::MultistepKind::BackwardEuler && std::abs(1.0 - z) < 0.2) continue;
            if (ms->kind == cq::MultistepKind::Bdf2 && std::abs(1.0 + 2.0 * z) < 0.2) continue;
            const auto oracle = series_en(*ms, z, 50);
            for (int n = 0; n <= 50; ++n) {
                const double scale = std::max(1.0, std::abs(oracle[static_cast<std::size_t>(n)]));
                CHECK(std::abs(cq::en_multistep(*ms, n, z) - oracle[static_cast<std::size_t>(n)]) <
                      1e-10 * scale);
            }
            ++tested;
        }
    }

    CHECK_THROWS_AS((void)cq::en_multistep(bdf2, 0, Complex(-0.5, 0.0)), std::domain_error);
}

TEST_CASE("rk_en against the matrix series oracle") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int m : {2, 3}) {
        const auto& tab = cq::radau_iia(m);
        for (int trial = 0; trial < 20; ++trial) {
            const Complex z(2.0 * u(rng), 2.0 * u(rng));
            const auto oracle = series_En(tab, z, 30);
            for (int n = 0; n <= 30; ++n) {
                const auto en = cq::rk_en(tab, n, z);
                const double scale =
                    std::max(1.0, oracle[static_cast<std::size_t>(n)].cwiseAbs().maxCoeff());
                CHECK((en.matrix - oracle[static_cast<std::size_t>(n)]).cwiseAbs().maxCoeff() <
                      1e-10 * scale);
                // the row is the last row of the matrix
                CHECK((en.row - en.matrix.row(m - 1)).cwiseAbs().maxCoeff() < 1e-10 * scale);
            }
        }
    }
}

TEST_CASE("rk_en basics") {
    for (int m : {1, 2, 3}) {
        const auto& tab = cq::radau_iia(m);
        const auto en = cq::rk_en(tab, 3, 0.0);
        for (int j = 0; j < m; ++j) CHECK(std::abs(en.row(j) - Complex(tab.b(j), 0.0)) < 1e-13);
        const auto e0 = cq::rk_en(tab, 0, 0.0);
        CHECK((e0.matrix - tab.A.cast<Complex>()).cwiseAbs().maxCoeff() < 1e-13);
    }
    // one-stage Radau IIA reproduces backward Euler
    const auto be = cq::MultistepMethod::backward_euler();
    for (long n : {0L, 1L, 5L, 50L, 100L}) {
        const Complex z(0.37, -0.21);
        CHECK(std::abs(cq::rk_en(cq::radau_iia(1), n, z).row(0) - cq::en_multistep(be, n, z)) <
              1e-13 * std::abs(cq::en_multistep(be, n, z)));
    }
    CHECK(std::abs(cq::rk_en(cq::radau_iia(1), 2, Complex(0.5, 0.0)).row(0) - Complex(8.0, 0.0)) <
          1e-12);
}

TEST_CASE("linear IVP stepping") {
    SUBCASE("frozen dynamics") {
        for (const char* id : {"be", "bdf2", "radau3", "radau5"}) {
            const auto method = cq::TimeMethod::parse(id);
            cq::LinearIvpStepper s(method, 0.0, 0.1);
            const std::vector<Complex> zero(static_cast<std::size_t>(method.stages()), 0.0);
            for (int i = 0; i < 5; ++i) s.step(zero);
            CHECK(std::abs(s.value()) == 0.0);
        }
    }
    SUBCASE("backward Euler single step") {
        cq::LinearIvpStepper s(cq::TimeMethod::parse("be"), -1.0, 0.1);
        const std::vector<Complex> g{1.0};
        CHECK(std::abs(s.step(g) - Complex(1.0 / 11.0, 0.0)) < 1e-16);
    }
    SUBCASE("Runge-Kutta stepping equals the e_n sum") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (const char* id : {"be", "radau3", "radau5"}) {
            const auto method = cq::TimeMethod::parse(id);
            const int m = method.stages();
            for (int trial = 0; trial < 10; ++trial) {
                const double h = 0.5;
                Complex lam(u(rng) * 5.0, u(rng) * 5.0);
                if (std::abs(lam) > 5.0 / h) lam *= 5.0 / (h * std::abs(lam));
                std::vector<Complex> g(static_cast<std::size_t>(100 * m));
                for (auto& v : g) v = Complex(u(rng), u(rng));
                cq::LinearIvpStepper s(method, lam, h);
                for (int n = 0; n < 100; ++n) {
                    s.step({g.data() + n * m, static_cast<std::size_t>(m)});
                    Complex want = 0.0;
                    if (method.family == cq::TimeMethod::Family::Multistep) {
                        for (int j = 0; j <= n; ++j)
                            want += h * cq::en_multistep(method.multistep, n - j, h * lam) *
                                    g[static_cast<std::size_t>(j)];
                    } else {
                        for (int j = 0; j <= n; ++j) {
                            const auto row = cq::rk_en(method.tableau, n - j, h * lam).row;
                            for (int i = 0; i < m; ++i)
                                want += h * row(i) * g[static_cast<std::size_t>(j * m + i)];
                        }
                    }
                    const double scale = std::max(1.0, std::abs(want));
                    CHECK(std::abs(s.value() - want) <= 1e-12 * scale);
                }
            }
        }
    }
    SUBCASE("BDF2 recurrence with backward Euler start") {
        const double h = 0.1;
        const Complex lam(-2.0, 0.0);
        cq::LinearIvpStepper s(cq::TimeMethod::parse("bdf2"), lam, h);
        const std::vector<Complex> g{1.0};
        const Complex y1 = s.step(g);
        CHECK(std::abs(y1 - h / (1.0 - h * lam)) < 1e-16);
        const Complex y2 = s.step(g);
        CHECK(std::abs(y2 - (2.0 * y1 + h) / (1.5 - h * lam)) < 1e-16);
    }
}

TEST_SUITE_END();
