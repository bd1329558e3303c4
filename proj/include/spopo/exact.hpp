#pragma once

// Non-perturbative reference solution of the coupled-mode equations.
//
// Stacking x = (a_1..a_N at +Omega, a_1^dag..a_N^dag at -Omega), the
// frequency-domain equations of motion close into M(Omega) x = f with
//
//   M = [ A  B ]    A    = diag(gamma/2 - i(Delta_n + Omega)) + i C_offdiag
//       [ B  D ]    B    = -diag(lambda_n / 2)
//                   D    = diag(gamma/2 + i(Delta_n - Omega)) - i conj(C_offdiag)
//
// and f the stacked vacuum inputs.  Inverting M gives the full intracavity
// transfer blocks a = UU f + VV f^dag; the output field follows from the
// mirror relation b = sqrt(gamma) a - f, i.e. UU_out = UU - Gamma^{-1},
// VV_out = VV with Gamma = diag(gamma).  No expansion in the coupling is
// involved, so this is the oracle the perturbative stacks are checked
// against.  Canonical commutators survive the cavity exactly:
//
//   UU_out Gamma UU_out^dag - VV_out Gamma VV_out^dag = Gamma^{-1}.

#include <cmath>
#include <string>

#include <Eigen/Dense>
#include <Eigen/LU>

#include "spopo/core.hpp"
#include "spopo/pert.hpp"

namespace spopo::exact {

struct ScatteringMatrix {
    double omega = 0.0;
    Eigen::MatrixXcd u, v;          // intracavity blocks
    Eigen::MatrixXcd u_out, v_out;  // output-side blocks
    Eigen::VectorXd loss;           // Gamma diagonal, carried for spectrum assembly
    double condition = 0.0;         // infinity-norm condition estimate of M
};

inline ScatteringMatrix solve(const pert::OscillatorParams& p, double omega) {
    pert::validate(p);
    const auto n = p.gain.size();
    Eigen::MatrixXcd m(2 * n, 2 * n);
    m.setZero();
    for (Eigen::Index k = 0; k < n; ++k) {
        m(k, k) = cplx(p.loss(k) / 2.0, -(p.detuning(k) + omega));
        m(n + k, n + k) = cplx(p.loss(k) / 2.0, p.detuning(k) - omega);
        m(k, n + k) = -p.gain(k) / 2.0;
        m(n + k, k) = -p.gain(k) / 2.0;
    }
    const cplx i_unit(0, 1);
    m.topLeftCorner(n, n) += i_unit * p.coupling;
    m.bottomRightCorner(n, n) -= i_unit * p.coupling.conjugate();

    const Eigen::MatrixXcd minv = m.partialPivLu().inverse();
    const double cond = m.cwiseAbs().rowwise().sum().maxCoeff() *
                        minv.cwiseAbs().rowwise().sum().maxCoeff();
    if (!std::isfinite(cond) || cond > 1e12)
        throw NumericalError(
            "scattering matrix nearly singular at omega = " + std::to_string(omega) +
            " (condition ~ " + std::to_string(cond) +
            "); the pump sits too close to threshold");

    ScatteringMatrix s;
    s.omega = omega;
    s.loss = p.loss;
    s.u = minv.topLeftCorner(n, n);
    s.v = minv.topRightCorner(n, n);
    s.u_out = s.u;
    s.u_out.diagonal() -= p.loss.cwiseInverse().cast<cplx>();
    s.v_out = s.v;
    s.condition = cond;
    return s;
}

struct ScatteringPair {
    ScatteringMatrix plus, minus;
};

inline ScatteringPair solve_pair(const pert::OscillatorParams& p, double omega) {
    return {solve(p, omega), solve(p, -omega)};
}

// Max-abs residual of the output commutator identity.
inline double bogoliubov_residual(const ScatteringMatrix& s) {
    const Eigen::MatrixXd g = s.loss.asDiagonal();
    const Eigen::MatrixXcd lhs = s.u_out * g * s.u_out.adjoint() -
                                 s.v_out * g * s.v_out.adjoint();
    const Eigen::MatrixXcd rhs =
        s.loss.cwiseInverse().asDiagonal().toDenseMatrix().cast<cplx>();
    return (lhs - rhs).cwiseAbs().maxCoeff();
}

}  // namespace spopo::exact
