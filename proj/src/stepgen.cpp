#include "cq/stepgen.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace cq {

MultistepMethod MultistepMethod::backward_euler() {
    return {MultistepKind::BackwardEuler, 1, {0.0, 1.0, 0.0}};
}

MultistepMethod MultistepMethod::bdf2() {
    return {MultistepKind::Bdf2, 2, {0.0, 1.0, 0.5}};
}

Complex generating_delta(const MultistepMethod& method, Complex zeta) {
    const Complex u = 1.0 - zeta;
    return method.delta_coeffs[0] + u * (method.delta_coeffs[1] + u * method.delta_coeffs[2]);
}

namespace {

RungeKuttaTableau make_radau(int stages) {
    RungeKuttaTableau t;
    t.stages_m = stages;
    t.A.resize(stages, stages);
    t.b.resize(stages);
    t.c.resize(stages);
    switch (stages) {
        case 1:
            t.A << 1.0;
            t.c << 1.0;
            t.order_p = 1;
            t.stage_order_q = 1;
            break;
        case 2:
            t.A << 5.0 / 12.0, -1.0 / 12.0,
                   3.0 / 4.0,   1.0 / 4.0;
            t.c << 1.0 / 3.0, 1.0;
            t.order_p = 3;
            t.stage_order_q = 2;
            break;
        case 3: {
            const double s6 = std::sqrt(6.0);
            t.A << (88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0,
                   (296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0,
                   (16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0;
            t.c << (4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0;
            t.order_p = 5;
            t.stage_order_q = 3;
            break;
        }
        default:
            throw std::invalid_argument("radau_iia: stages must be 1, 2 or 3");
    }
    t.b = t.A.row(stages - 1).transpose();

    // stiff accuracy and c_m = 1
    if ((t.b.transpose() - t.A.row(stages - 1)).cwiseAbs().maxCoeff() != 0.0 ||
        std::abs(t.c(stages - 1) - 1.0) > 1e-15)
        throw std::logic_error("radau_iia: tableau is not stiffly accurate");

    // eigenvalues of A in the right half-plane
    Eigen::EigenSolver<Eigen::MatrixXd> es(t.A);
    for (int i = 0; i < stages; ++i)
        if (!(es.eigenvalues()(i).real() > 0.0))
            throw std::logic_error("radau_iia: eigenvalue with non-positive real part");

    // A-stability spot check along the imaginary axis
    for (double y : {1e-3, 1e-1, 1.0, 1e1, 1e3, 1e6}) {
        for (double sgn : {1.0, -1.0}) {
            const Complex r = stability_and_weight(t, Complex(0.0, sgn * y)).r;
            if (std::abs(r) > 1.0 + 1e-12)
                throw std::logic_error("radau_iia: A-stability spot check failed");
        }
    }
    return t;
}

}  // namespace

const RungeKuttaTableau& radau_iia(int stages) {
    static const RungeKuttaTableau t1 = make_radau(1);
    static const RungeKuttaTableau t2 = make_radau(2);
    static const RungeKuttaTableau t3 = make_radau(3);
    switch (stages) {
        case 1: return t1;
        case 2: return t2;
        case 3: return t3;
        default: throw std::invalid_argument("radau_iia: stages must be 1, 2 or 3");
    }
}

Eigen::MatrixXcd rk_delta_matrix(const RungeKuttaTableau& tab, Complex zeta) {
    const int m = tab.stages_m;
    Eigen::MatrixXcd G = tab.A.cast<Complex>();
    const Complex f = zeta / (1.0 - zeta);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) G(i, j) += f * tab.b(j);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(G);
    // PartialPivLU has no rank query; detect degeneracy via the determinant
    if (std::abs(lu.determinant()) < 1e-300)
        throw std::domain_error("rk_delta_matrix: singular inner matrix");
    return lu.inverse();
}

StabilityWeight stability_and_weight(const RungeKuttaTableau& tab, Complex z) {
    const int m = tab.stages_m;
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(m, m) - z * tab.A.cast<Complex>();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    if (std::abs(lu.determinant()) < 1e-300)
        throw std::domain_error("stability_and_weight: I - zA singular");
    StabilityWeight out;
    // q = b^T (I - zA)^{-1}  via  M^T q^T = b
    out.q = tab.b.cast<Complex>().transpose() * lu.inverse();
    out.r = 1.0 + z * out.q.sum();  // q * 1l
    return out;
}

BdfComponents bdf2_components(Complex z) {
    const Complex disc = 1.0 + 2.0 * z;
    if (std::abs(disc) <= 1e-12)
        throw std::domain_error("bdf2_components: degenerate double root near z = -1/2");
    const Complex w = std::sqrt(disc);  // principal branch
    BdfComponents c;
    c.r1 = 1.0 / (2.0 - w);
    c.r2 = 1.0 / (2.0 + w);
    c.q1 = c.r1 / w;
    c.q2 = -c.r2 / w;
    return c;
}

Complex en_multistep(const MultistepMethod& method, long n, Complex z) {
    if (n < 0) throw std::invalid_argument("en_multistep: n >= 0 required");
    if (method.kind == MultistepKind::BackwardEuler) {
        const Complex r = 1.0 / (1.0 - z);
        return std::pow(r, static_cast<double>(n + 1));
    }
    const BdfComponents c = bdf2_components(z);
    return c.q1 * std::pow(c.r1, static_cast<double>(n)) +
           c.q2 * std::pow(c.r2, static_cast<double>(n));
}

RkEn rk_en(const RungeKuttaTableau& tab, long n, Complex z) {
    if (n < 0) throw std::invalid_argument("rk_en: n >= 0 required");
    const int m = tab.stages_m;
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(m, m) - z * tab.A.cast<Complex>();
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(M);
    if (std::abs(lu.determinant()) < 1e-300)
        throw std::domain_error("rk_en: I - zA singular");

    RkEn out;
    const Eigen::RowVectorXcd q = tab.b.cast<Complex>().transpose() * lu.inverse();
    const Complex r = 1.0 + z * q.sum();
    out.row = std::pow(r, static_cast<double>(n)) * q;
    if (n == 0) {
        out.matrix = lu.solve(tab.A.cast<Complex>());  // (I - zA)^{-1} A
    } else {
        const Eigen::VectorXcd s = lu.solve(Eigen::VectorXcd::Ones(m));
        out.matrix = std::pow(r, static_cast<double>(n - 1)) * (s * q);
    }
    return out;
}

std::vector<double> TimeMethod::abscissae() const {
    if (family == Family::Multistep) return {0.0};
    std::vector<double> a(tableau.stages_m);
    for (int i = 0; i < tableau.stages_m; ++i) a[i] = tableau.c(i);
    return a;
}

TimeMethod TimeMethod::parse(const std::string& id) {
    TimeMethod m;
    m.id = id;
    if (id == "be") {
        m.family = Family::Multistep;
        m.multistep = MultistepMethod::backward_euler();
    } else if (id == "bdf2") {
        m.family = Family::Multistep;
        m.multistep = MultistepMethod::bdf2();
    } else if (id == "radau1") {
        m.family = Family::RungeKutta;
        m.tableau = radau_iia(1);
    } else if (id == "radau3") {
        m.family = Family::RungeKutta;
        m.tableau = radau_iia(2);
    } else if (id == "radau5") {
        m.family = Family::RungeKutta;
        m.tableau = radau_iia(3);
    } else {
        throw std::invalid_argument("unknown method '" + id +
                                    "' (expected be|bdf2|radau3|radau5)");
    }
    return m;
}

LinearIvpStepper::LinearIvpStepper(const TimeMethod& method, Complex lambda, double h)
    : family_(method.family), stages_(method.stages()), hl_(h * lambda), h_(h) {
    if (family_ == TimeMethod::Family::Multistep) {
        ms_kind_ = method.multistep.kind;
        if (ms_kind_ == MultistepKind::BackwardEuler && hl_ == Complex(1.0, 0.0))
            throw std::domain_error("LinearIvpStepper: 1 - h*lambda == 0");
    } else {
        const StabilityWeight sw = stability_and_weight(method.tableau, hl_);
        r_ = sw.r;
        phi_ = h * sw.q;
    }
}

Complex LinearIvpStepper::step(std::span<const Complex> g_stages) {
    if (static_cast<int>(g_stages.size()) != stages_)
        throw std::invalid_argument("LinearIvpStepper::step: wrong stage count");
    if (family_ == TimeMethod::Family::RungeKutta) {
        Complex acc = r_ * y_;
        for (int i = 0; i < stages_; ++i) acc += phi_(i) * g_stages[i];
        y_ = acc;
    } else if (ms_kind_ == MultistepKind::BackwardEuler) {
        y_ = (y_ + h_ * g_stages[0]) / (1.0 - hl_);
    } else {
        // BDF2 with a backward Euler first step
        if (n_ == 0) {
            y_prev_ = y_;
            y_ = (y_ + h_ * g_stages[0]) / (1.0 - hl_);
        } else {
            const Complex d = 1.5 - hl_;
            if (std::abs(d) < 1e-300)
                throw std::domain_error("LinearIvpStepper: singular BDF2 step");
            const Complex ynew = (2.0 * y_ - 0.5 * y_prev_ + h_ * g_stages[0]) / d;
            y_prev_ = y_;
            y_ = ynew;
        }
    }
    ++n_;
    return y_;
}

void LinearIvpStepper::reset() {
    y_ = y_prev_ = 0.0;
    n_ = 0;
}

}  // namespace cq
