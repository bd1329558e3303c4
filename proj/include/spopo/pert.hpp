#pragma once

// Perturbative input-output coefficients of the multimode oscillator.
//
// Below threshold the intracavity supermode operators obey linear
// frequency-domain equations of motion
//
//   -i Omega a_n = (-gamma_n/2 + i Delta_n) a_n + (lambda_n/2) a_n^dag(-Omega)
//                  + f_n - i sum_{m != n} C_nm a_m,
//
// with per-mode pump gain lambda_n >= 0, loss gamma_n, detuning Delta_n, and
// Hermitian zero-diagonal dispersion coupling C (its diagonal is already
// folded into Delta_n).  Without coupling each mode solves exactly:
//
//   H_n(Omega) = gamma_n/2 - i Delta_n - i Omega
//                - (lambda_n/2)^2 / (gamma_n/2 + i Delta_n - i Omega),
//   U_n = 1/H_n,
//   V_n = (lambda_n/2) / (H_n (gamma_n/2 + i Delta_n - i Omega)),
//   W_n = U_n - 1/gamma_n,
//
// where a_n(Omega) = U_n f_n(Omega) + V_n f_n^dag(-Omega) and W_n replaces
// U_n on the output side of the input-output relation.  The coupling is then
// resummed order by order: writing the full transfer matrices as stacks
// UU^(k), VV^(k) with one extra power of C per level,
//
//   UU^(k)(+O) = -i diag(U(+O)) C UU^(k-1)(+O) + i diag(V(+O)) conj(C) conj(VV^(k-1)(-O)),
//   VV^(k)(+O) = -i diag(U(+O)) C VV^(k-1)(+O) + i diag(V(+O)) conj(C) conj(UU^(k-1)(-O)),
//
// seeded by the diagonal zeroth order.  Expanding the products shows level k
// is exactly the sum over coupling chains n -> m1 -> ... -> mk of the
// per-step formulas, i.e. the Neumann series of the exact scattering
// problem, so truncation at order K carries an O(C^{K+1}) error.
//
// Both signs of Omega are built together: level k at +Omega consumes level
// k-1 at -Omega and vice versa.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spopo/core.hpp"
#include "spopo/modes.hpp"

namespace spopo::pert {

struct OscillatorParams {
    Eigen::VectorXd gain;       // lambda_n
    Eigen::VectorXd loss;       // gamma_n
    Eigen::VectorXd detuning;   // Delta_n, diagonal coupling folded in
    Eigen::MatrixXcd coupling;  // Hermitian, zero diagonal
};

inline void validate(const OscillatorParams& p) {
    const auto n = p.gain.size();
    if (n < 1) throw ConfigError("oscillator: need at least one mode");
    if (p.loss.size() != n || p.detuning.size() != n || p.coupling.rows() != n ||
        p.coupling.cols() != n)
        throw ConfigError("oscillator: parameter sizes disagree");
    for (Eigen::Index k = 0; k < n; ++k) {
        if (p.loss(k) <= 0)
            throw ConfigError("oscillator: loss of mode " + std::to_string(k) +
                              " must be > 0");
        if (p.gain(k) < 0)
            throw ConfigError("oscillator: gain of mode " + std::to_string(k) +
                              " must be >= 0");
        if (p.gain(k) >= p.loss(k))
            throw ConfigError("oscillator: mode " + std::to_string(k) +
                              " is at or above threshold (lambda/gamma = " +
                              std::to_string(p.gain(k) / p.loss(k)) +
                              " >= 1); below-threshold model only");
        if (std::abs(p.coupling(k, k)) != 0.0)
            throw ConfigError("oscillator: coupling diagonal must be folded into "
                              "detuning (mode " + std::to_string(k) + ")");
    }
    const double herm = (p.coupling - p.coupling.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-8 * std::max(1.0, p.coupling.cwiseAbs().maxCoeff()))
        throw ConfigError("oscillator: coupling matrix not Hermitian");
}

// Pack a coupling model and per-mode pump/loss into oscillator parameters,
// splitting C into its folded diagonal (already inside cm.detunings) and the
// strictly off-diagonal part used by the expansion.
inline OscillatorParams from_coupling(const Eigen::VectorXd& gain,
                                      const Eigen::VectorXd& loss,
                                      const modes::CouplingModel& cm) {
    OscillatorParams p;
    p.gain = gain;
    p.loss = loss;
    p.detuning = cm.detunings;
    p.coupling = cm.coupling;
    p.coupling.diagonal().setZero();
    validate(p);
    return p;
}

inline double max_coupling_ratio(const OscillatorParams& p) {
    return p.coupling.cwiseAbs().maxCoeff() / p.loss.minCoeff();
}

struct ModeCoefficients {
    Eigen::VectorXcd u, v, w;
};

inline ModeCoefficients zeroth_order(const OscillatorParams& p, double omega) {
    const auto n = p.gain.size();
    ModeCoefficients c;
    c.u.resize(n);
    c.v.resize(n);
    c.w.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const cplx hbar(p.loss(k) / 2.0, p.detuning(k) - omega);
        const double half_gain = p.gain(k) / 2.0;
        const cplx h = cplx(p.loss(k) / 2.0, -p.detuning(k) - omega) -
                       half_gain * half_gain / hbar;
        if (std::abs(h) < 1e-14 * p.loss(k))
            throw NumericalError(
                "transfer coefficients singular: mode " + std::to_string(k) +
                " at omega = " + std::to_string(omega) +
                " sits at the oscillation threshold");
        c.u(k) = 1.0 / h;
        c.v(k) = half_gain / (h * hbar);
        c.w(k) = c.u(k) - 1.0 / p.loss(k);
    }
    return c;
}

struct CoefficientSet {
    double omega = 0.0;
    ModeCoefficients base;               // U_n, V_n, W_n
    std::vector<Eigen::MatrixXcd> u, v;  // stack index = expansion order
    // Second-order paths that return to the detected mode, resolved by
    // intermediate mode: u_return(n, m) is the n -> m -> n term, so
    // u_return.rowwise().sum() equals the diagonal of u[2].
    Eigen::MatrixXcd u_return, v_return;
};

struct TransferCoefficients {
    int order = 0;
    Eigen::VectorXd loss;  // carried along for spectrum assembly
    CoefficientSet plus, minus;
};

inline TransferCoefficients evaluate(const OscillatorParams& p, double omega,
                                     int order) {
    validate(p);
    if (order < 0 || order > 8)
        throw ConfigError("transfer coefficients: order must be in [0, 8]");
    const auto n = p.gain.size();
    TransferCoefficients t;
    t.order = order;
    t.loss = p.loss;
    t.plus.omega = omega;
    t.minus.omega = -omega;
    t.plus.base = zeroth_order(p, omega);
    t.minus.base = zeroth_order(p, -omega);

    const Eigen::MatrixXcd cbar = p.coupling.conjugate();
    const cplx i_unit(0, 1);

    for (CoefficientSet* s : {&t.plus, &t.minus}) {
        s->u.assign(order + 1, Eigen::MatrixXcd::Zero(n, n));
        s->v.assign(order + 1, Eigen::MatrixXcd::Zero(n, n));
        s->u[0] = s->base.u.asDiagonal();
        s->v[0] = s->base.v.asDiagonal();
        s->u_return = Eigen::MatrixXcd::Zero(n, n);
        s->v_return = Eigen::MatrixXcd::Zero(n, n);
    }

    for (int k = 1; k <= order; ++k) {
        for (auto [self, other] : {std::pair{&t.plus, &t.minus},
                                   std::pair{&t.minus, &t.plus}}) {
            const Eigen::MatrixXcd cu = p.coupling * self->u[k - 1];
            const Eigen::MatrixXcd cv = p.coupling * self->v[k - 1];
            const Eigen::MatrixXcd cbar_v = cbar * other->v[k - 1].conjugate();
            const Eigen::MatrixXcd cbar_u = cbar * other->u[k - 1].conjugate();
            self->u[k] = -i_unit * (self->base.u.asDiagonal() * cu) +
                         i_unit * (self->base.v.asDiagonal() * cbar_v);
            self->v[k] = -i_unit * (self->base.u.asDiagonal() * cv) +
                         i_unit * (self->base.v.asDiagonal() * cbar_u);
        }
    }

    if (order >= 2) {
        for (auto [self, other] : {std::pair{&t.plus, &t.minus},
                                   std::pair{&t.minus, &t.plus}}) {
            // n -> m -> n second-order paths kept per intermediate mode; the
            // homodyne cross term needs them resolved, not just their sum.
            const Eigen::MatrixXcd u1t = self->u[1].transpose();
            const Eigen::MatrixXcd v1t = self->v[1].transpose();
            const Eigen::MatrixXcd v1o = other->v[1].adjoint();
            const Eigen::MatrixXcd u1o = other->u[1].adjoint();
            self->u_return =
                -i_unit * (self->base.u.asDiagonal() * p.coupling.cwiseProduct(u1t)) +
                i_unit * (self->base.v.asDiagonal() * cbar.cwiseProduct(v1o));
            self->v_return =
                -i_unit * (self->base.u.asDiagonal() * p.coupling.cwiseProduct(v1t)) +
                i_unit * (self->base.v.asDiagonal() * cbar.cwiseProduct(u1o));
        }
    }
    return t;
}

}  // namespace spopo::pert
