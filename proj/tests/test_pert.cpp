#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include "spopo/pert.hpp"

using namespace spopo;
using Catch::Approx;

namespace {

pert::OscillatorParams single_mode(double lambda, double gamma, double delta) {
    pert::OscillatorParams p;
    p.gain = Eigen::VectorXd::Constant(1, lambda);
    p.loss = Eigen::VectorXd::Constant(1, gamma);
    p.detuning = Eigen::VectorXd::Constant(1, delta);
    p.coupling = Eigen::MatrixXcd::Zero(1, 1);
    return p;
}

// Fixed 4-mode system with complex Hermitian coupling; exercises every term
// of the expansion without any special structure.
pert::OscillatorParams mixed_system() {
    pert::OscillatorParams p;
    p.gain.resize(4);
    p.gain << 0.5, 0.2, 0.0, 0.3;
    p.loss.resize(4);
    p.loss << 1.0, 1.3, 0.8, 1.1;
    p.detuning.resize(4);
    p.detuning << 0.1, -0.2, 0.05, 0.0;
    p.coupling = Eigen::MatrixXcd::Zero(4, 4);
    p.coupling(0, 1) = cplx(0.03, 0.01);
    p.coupling(0, 2) = cplx(-0.02, 0.015);
    p.coupling(0, 3) = cplx(0.01, -0.02);
    p.coupling(1, 2) = cplx(0.025, 0.0);
    p.coupling(1, 3) = cplx(-0.015, 0.01);
    p.coupling(2, 3) = cplx(0.02, 0.02);
    p.coupling = (p.coupling + p.coupling.adjoint()).eval();
    return p;
}

}  // namespace

TEST_CASE("uncoupled coefficients at line center", "[pert]") {
    // At Omega = Delta = 0 the closed forms collapse to
    // U = 2 gamma/(gamma^2 - lambda^2), V = 2 lambda/(gamma^2 - lambda^2).
    auto p = single_mode(0.48, 1.0, 0.0);
    auto c = pert::zeroth_order(p, 0.0);
    CHECK(c.u(0).real() == Approx(2.0 / (1.0 - 0.48 * 0.48)).epsilon(1e-12));
    CHECK(c.u(0).imag() == Approx(0.0).margin(1e-15));
    CHECK(c.v(0).real() == Approx(2.0 * 0.48 / (1.0 - 0.48 * 0.48)).epsilon(1e-12));
    CHECK(c.w(0).real() == Approx(2.0 / (1.0 - 0.48 * 0.48) - 1.0).epsilon(1e-12));
    // Spot values: U = 2.5988, V = 1.2474, W = 1.5988.
    CHECK(c.u(0).real() == Approx(2.5988).margin(5e-5));
    CHECK(c.v(0).real() == Approx(1.2474).margin(5e-5));
    CHECK(c.w(0).real() == Approx(1.5988).margin(5e-5));
}

TEST_CASE("vacuum cavity is a one-pole filter", "[pert]") {
    auto p = single_mode(0.0, 1.0, 0.3);
    for (double omega : {-2.0, -0.4, 0.0, 1.1, 20.0}) {
        auto c = pert::zeroth_order(p, omega);
        const cplx expect = 1.0 / cplx(0.5, -0.3 - omega);
        CHECK(std::abs(c.u(0) - expect) < 1e-14);
        CHECK(std::abs(c.v(0)) == 0.0);
    }
}

TEST_CASE("output coefficients preserve the commutator", "[pert]") {
    // |W(Omega)|^2 - |V(Omega)|^2 = 1/gamma^2 at every frequency, any pump,
    // loss or detuning.
    for (double lam_ratio : {0.0, 0.17, 0.48, 0.9})
        for (double gamma : {1.0, 2.0})
            for (double delta : {0.0, 0.6, -0.6}) {
                auto p = single_mode(lam_ratio * gamma, gamma, delta);
                for (int i = 0; i < 200; ++i) {
                    const double omega = gamma * (-5.0 + 10.0 * i / 199.0);
                    auto c = pert::zeroth_order(p, omega);
                    const double lhs = std::norm(c.w(0)) - std::norm(c.v(0));
                    CHECK(std::abs(lhs * gamma * gamma - 1.0) < 1e-12);
                }
            }
}

TEST_CASE("threshold singularity raises a numerical error", "[pert]") {
    auto p = single_mode(1.0 - 2e-15, 1.0, 0.0);
    CHECK_THROWS_AS(pert::zeroth_order(p, 0.0), NumericalError);
    // Away from resonance the same pump is regular.
    CHECK_NOTHROW(pert::zeroth_order(p, 1.0));
}

TEST_CASE("parameter validation", "[pert]") {
    auto p = single_mode(1.01, 1.0, 0.0);
    CHECK_THROWS_WITH(pert::validate(p), Catch::Matchers::ContainsSubstring("threshold"));
    p = single_mode(0.5, 1.0, 0.0);
    p.gain(0) = -0.1;
    CHECK_THROWS_AS(pert::validate(p), ConfigError);

    auto m = mixed_system();
    m.coupling(1, 1) = 0.05;  // diagonal must be folded out
    CHECK_THROWS_AS(pert::validate(m), ConfigError);
    m = mixed_system();
    m.coupling(0, 1) = cplx(0.03, 0.01);
    m.coupling(1, 0) = cplx(0.03, 0.01);  // breaks Hermiticity
    CHECK_THROWS_AS(pert::validate(m), ConfigError);
    m = mixed_system();
    m.detuning.resize(3);
    CHECK_THROWS_AS(pert::validate(m), ConfigError);

    CHECK_THROWS_AS(pert::evaluate(mixed_system(), 0.3, 9), ConfigError);
    CHECK_THROWS_AS(pert::evaluate(mixed_system(), 0.3, -1), ConfigError);
}

TEST_CASE("first-order coupling terms, frozen examples", "[pert]") {
    // Two unpumped modes: U_nm = -4 i c, V_nm = 0 (gamma = 1, resonance).
    pert::OscillatorParams p;
    p.gain = Eigen::VectorXd::Zero(2);
    p.loss = Eigen::VectorXd::Ones(2);
    p.detuning = Eigen::VectorXd::Zero(2);
    p.coupling = Eigen::MatrixXcd::Zero(2, 2);
    const double c01 = 0.07;
    p.coupling(0, 1) = c01;
    p.coupling(1, 0) = c01;
    auto t = pert::evaluate(p, 0.0, 1);
    CHECK(std::abs(t.plus.u[1](0, 1) - cplx(0.0, -4.0 * c01)) < 1e-14);
    CHECK(std::abs(t.plus.v[1](0, 1)) == 0.0);

    // Pump mode 0 at lambda = 0.8: U_0 = 50/9, V_0 = 40/9, so
    // U_01 = -i U_0 c U_1 = -(100/9) i c and V_01 = +i V_0 c U_1 = (80/9) i c.
    p.gain(0) = 0.8;
    t = pert::evaluate(p, 0.0, 1);
    CHECK(std::abs(t.plus.u[1](0, 1) - cplx(0.0, -100.0 * c01 / 9.0)) < 1e-12);
    CHECK(std::abs(t.plus.v[1](0, 1) - cplx(0.0, 80.0 * c01 / 9.0)) < 1e-12);
    // Diagonals stay zero at odd order.
    CHECK(t.plus.u[1].diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("second-order return paths, frozen example", "[pert]") {
    // Two unpumped modes at resonance: the n -> m -> n term is -8 |c|^2.
    pert::OscillatorParams p;
    p.gain = Eigen::VectorXd::Zero(2);
    p.loss = Eigen::VectorXd::Ones(2);
    p.detuning = Eigen::VectorXd::Zero(2);
    p.coupling = Eigen::MatrixXcd::Zero(2, 2);
    p.coupling(0, 1) = cplx(0.05, 0.02);
    p.coupling(1, 0) = std::conj(p.coupling(0, 1));
    auto t = pert::evaluate(p, 0.0, 2);
    const double c2 = std::norm(p.coupling(0, 1));
    CHECK(std::abs(t.plus.u_return(0, 1) - cplx(-8.0 * c2, 0.0)) < 1e-14);
    CHECK(std::abs(t.plus.u[2](0, 0) - cplx(-8.0 * c2, 0.0)) < 1e-14);
}

TEST_CASE("matrix recursion equals the explicit chain sums", "[pert]") {
    auto p = mixed_system();
    const double omega = 0.37;
    auto t = pert::evaluate(p, omega, 2);

    auto zp = pert::zeroth_order(p, omega);
    auto zm = pert::zeroth_order(p, -omega);
    const int n = 4;
    const cplx i_u(0, 1);

    // First order, element by element, at both frequency signs.
    Eigen::MatrixXcd u1p = Eigen::MatrixXcd::Zero(n, n), v1p = u1p, u1m = u1p,
                     v1m = u1p;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            if (a == b) continue;
            const cplx c = p.coupling(a, b), cb = std::conj(c);
            u1p(a, b) = i_u * (-zp.u(a) * c * zp.u(b) +
                               zp.v(a) * cb * std::conj(zm.v(b)));
            v1p(a, b) = i_u * (-zp.u(a) * c * zp.v(b) +
                               zp.v(a) * cb * std::conj(zm.u(b)));
            u1m(a, b) = i_u * (-zm.u(a) * c * zm.u(b) +
                               zm.v(a) * cb * std::conj(zp.v(b)));
            v1m(a, b) = i_u * (-zm.u(a) * c * zm.v(b) +
                               zm.v(a) * cb * std::conj(zp.u(b)));
        }
    CHECK((t.plus.u[1] - u1p).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((t.plus.v[1] - v1p).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((t.minus.u[1] - u1m).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((t.minus.v[1] - v1m).cwiseAbs().maxCoeff() < 1e-14);

    // Second order as a sum over intermediate modes of first-order blocks.
    Eigen::MatrixXcd u2p = Eigen::MatrixXcd::Zero(n, n), v2p = u2p;
    Eigen::MatrixXcd ur = Eigen::MatrixXcd::Zero(n, n), vr = ur;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int m = 0; m < n; ++m) {
                if (m == a) continue;
                const cplx c = p.coupling(a, m), cb = std::conj(c);
                const cplx uterm = i_u * (-zp.u(a) * c * u1p(m, b) +
                                          zp.v(a) * cb * std::conj(v1m(m, b)));
                const cplx vterm = i_u * (-zp.u(a) * c * v1p(m, b) +
                                          zp.v(a) * cb * std::conj(u1m(m, b)));
                u2p(a, b) += uterm;
                v2p(a, b) += vterm;
                if (a == b) {
                    ur(a, m) = uterm;
                    vr(a, m) = vterm;
                }
            }
    CHECK((t.plus.u[2] - u2p).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((t.plus.v[2] - v2p).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((t.plus.u_return - ur).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((t.plus.v_return - vr).cwiseAbs().maxCoeff() < 1e-14);
    // Return paths sum to the second-order diagonal.
    CHECK((t.plus.u_return.rowwise().sum() - t.plus.u[2].diagonal())
              .cwiseAbs()
              .maxCoeff() < 1e-15);
}

TEST_CASE("even coupling preserves mode parity at every order", "[pert]") {
    // Pentadiagonal +/-2 coupling cannot connect odd to even orders; the
    // corresponding stack entries stay exactly zero.
    const int n = 6;
    pert::OscillatorParams p;
    p.gain = Eigen::VectorXd::Zero(n);
    p.gain(0) = 0.4;
    p.loss = Eigen::VectorXd::Ones(n);
    auto o = modes::overlap_matrix_analytic(n, 1.0);
    auto cm = modes::build_coupling_model(o.cast<cplx>(), 0.25, 0.0);
    p.detuning = cm.detunings;
    p.coupling = cm.coupling;
    p.coupling.diagonal().setZero();
    auto t = pert::evaluate(p, 0.8, 4);
    for (int k = 0; k <= 4; ++k)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if ((a - b) % 2 != 0) {
                    CHECK(std::abs(t.plus.u[k](a, b)) == 0.0);
                    CHECK(std::abs(t.plus.v[k](a, b)) == 0.0);
                }
    CHECK(pert::max_coupling_ratio(p) == Approx(0.25 * std::sqrt(4.0 * 5.0) / 2.0));
}
