#pragma once

// Temporal supermode basis and intracavity-dispersion coupling model.
//
// The signal field of a synchronously pumped OPO decomposes onto a set of
// pulse supermodes s_n(t).  For a Gaussian-envelope pump these are the
// Hermite-Gaussian functions
//
//   s_n(t) = i^n (sqrt(pi) 2^n n! tau_s)^{-1/2} H_n(t/tau_s) exp(-t^2/2 tau_s^2),
//
// with tau_s the duration of the fundamental mode.  Intracavity group-velocity
// dispersion couples supermodes pairwise through the curvature overlap matrix
//
//   O_nm = Integral s_n^*(t) d^2/dt^2 s_m(t) dt,
//
// which for the basis above is pentadiagonal: the i^n phase convention makes
// every nonzero entry real and negative,
//
//   O_nm tau_s^2 = -(n + 1/2) d_{nm}
//                  - (sqrt((n-1)n)/2)     d_{n,m+2}
//                  - (sqrt((n+1)(n+2))/2) d_{n,m-2}.
//
// The mode-space coupling is C = D * O with dispersion strength
// D = sqrt(R) k2 L / (2 T_R), and the diagonal of C folds into per-mode
// detunings Delta_n = Delta - C_nn.

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "spopo/core.hpp"

namespace spopo::modes {

struct ModeBasis {
    int n_max = 0;        // number of modes, orders 0 .. n_max-1
    double tau_s = 1.0;   // fundamental mode duration
    Eigen::VectorXd grid; // uniform time samples
    Eigen::MatrixXcd profiles; // column n = s_n sampled on grid
    double dt = 0.0;
};

// Normalized Hermite-function recurrence; numerically stable for all orders
// used here (no factorial overflow, columns stay O(1)).
//   phi_0 = pi^{-1/4} exp(-x^2/2),  phi_1 = sqrt(2) x phi_0,
//   phi_{n+1} = x sqrt(2/(n+1)) phi_n - sqrt(n/(n+1)) phi_{n-1},
// then s_n(t) = i^n phi_n(t/tau_s) / sqrt(tau_s).
inline ModeBasis build_hermite_gaussian_basis(int n_max, double tau_s,
                                              double half_span, int grid_points) {
    if (n_max < 1) throw ConfigError("mode basis: n_max must be >= 1");
    if (tau_s <= 0) throw ConfigError("mode basis: tau_s must be > 0");
    if (grid_points < 2) throw ConfigError("mode basis: need >= 2 grid points");
    const double min_span = (std::sqrt(2.0 * n_max) + 4.0) * tau_s;
    if (half_span < min_span)
        throw ConfigError("mode basis: half_span " + std::to_string(half_span) +
                          " too small for n_max " + std::to_string(n_max) +
                          " (need >= " + std::to_string(min_span) + ")");
    if ((grid_points - 1) * tau_s < 16.0 * half_span)
        throw ConfigError("mode basis: grid must resolve tau_s with >= 16 samples");

    ModeBasis b;
    b.n_max = n_max;
    b.tau_s = tau_s;
    b.grid = Eigen::VectorXd::LinSpaced(grid_points, -half_span, half_span);
    b.dt = b.grid(1) - b.grid(0);
    b.profiles.resize(grid_points, n_max);

    const Eigen::ArrayXd x = b.grid.array() / tau_s;
    Eigen::ArrayXd prev = Eigen::ArrayXd::Zero(grid_points);
    Eigen::ArrayXd cur = std::pow(M_PI, -0.25) * (-0.5 * x.square()).exp();
    const cplx phases[4] = {cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)};
    const double root_tau = std::sqrt(tau_s);
    for (int n = 0; n < n_max; ++n) {
        b.profiles.col(n) = (phases[n % 4] / root_tau) * cur.matrix().cast<cplx>();
        Eigen::ArrayXd next = x * std::sqrt(2.0 / (n + 1)) * cur -
                              std::sqrt(double(n) / (n + 1)) * prev;
        prev.swap(cur);
        cur.swap(next);
    }

    // Guard the basis quality on the chosen grid before anything downstream
    // consumes it; name the first failing mode order.
    for (int n = 0; n < n_max; ++n) {
        const double norm = trapezoid(b.profiles.col(n).cwiseAbs2().eval(), b.dt);
        if (std::abs(norm - 1.0) > 1e-9)
            throw ConfigError("mode basis: normalization of mode " +
                              std::to_string(n) + " off by " +
                              std::to_string(std::abs(norm - 1.0)) +
                              " (grid too coarse or span too small)");
    }
    for (int n = 0; n < n_max; ++n)
        for (int m = 0; m < n; ++m) {
            const cplx ov = trapezoid(
                (b.profiles.col(n).conjugate().cwiseProduct(b.profiles.col(m))).eval(),
                b.dt);
            if (std::abs(ov) > 1e-8)
                throw ConfigError("mode basis: modes " + std::to_string(n) + "," +
                                  std::to_string(m) + " not orthogonal on this grid");
        }
    return b;
}

// Pentadiagonal closed form of O_nm; exact parity zeros everywhere else.
inline Eigen::MatrixXd overlap_matrix_analytic(int n_max, double tau_s) {
    if (n_max < 1) throw ConfigError("overlap matrix: n_max must be >= 1");
    if (tau_s <= 0) throw ConfigError("overlap matrix: tau_s must be > 0");
    Eigen::MatrixXd o = Eigen::MatrixXd::Zero(n_max, n_max);
    const double it2 = 1.0 / (tau_s * tau_s);
    for (int n = 0; n < n_max; ++n) {
        o(n, n) = -(n + 0.5) * it2;
        if (n + 2 < n_max) {
            const double off = -0.5 * std::sqrt(double(n + 1) * (n + 2)) * it2;
            o(n, n + 2) = off;
            o(n + 2, n) = off;
        }
    }
    return o;
}

// Second derivative on a uniform grid, 5-point central stencil with
// progressively one-sided rows at the boundary.  Interior truncation error
// is O(dt^4 f^{(6)}); for the basis grids used here that is ~1e-9 while a
// 3-point stencil would sit near 1e-4, far above the accuracy the overlap
// consumers need.
inline Eigen::MatrixXcd second_derivative(const Eigen::MatrixXcd& f, double dt) {
    const auto rows = f.rows();
    if (rows < 6) throw ConfigError("second_derivative: need >= 6 samples");
    Eigen::MatrixXcd d2(rows, f.cols());
    const double w = 1.0 / (12.0 * dt * dt);
    d2.row(0) = (45.0 * f.row(0) - 154.0 * f.row(1) + 214.0 * f.row(2) -
                 156.0 * f.row(3) + 61.0 * f.row(4) - 10.0 * f.row(5)) * w;
    d2.row(1) = (10.0 * f.row(0) - 15.0 * f.row(1) - 4.0 * f.row(2) +
                 14.0 * f.row(3) - 6.0 * f.row(4) + f.row(5)) * w;
    for (Eigen::Index i = 2; i + 2 < rows; ++i)
        d2.row(i) = (-f.row(i - 2) + 16.0 * f.row(i - 1) - 30.0 * f.row(i) +
                     16.0 * f.row(i + 1) - f.row(i + 2)) * w;
    d2.row(rows - 2) = (10.0 * f.row(rows - 1) - 15.0 * f.row(rows - 2) -
                        4.0 * f.row(rows - 3) + 14.0 * f.row(rows - 4) -
                        6.0 * f.row(rows - 5) + f.row(rows - 6)) * w;
    d2.row(rows - 1) = (45.0 * f.row(rows - 1) - 154.0 * f.row(rows - 2) +
                        214.0 * f.row(rows - 3) - 156.0 * f.row(rows - 4) +
                        61.0 * f.row(rows - 5) - 10.0 * f.row(rows - 6)) * w;
    return d2;
}

// O_nm by quadrature on sampled profiles.  Valid for any mode set, not just
// Hermite-Gaussian; used to cross-check the closed form and to handle bases
// obtained numerically from a downconversion kernel.
inline Eigen::MatrixXcd overlap_matrix_numeric(const ModeBasis& basis) {
    if (basis.grid.size() < 6)
        throw ConfigError("overlap matrix: grid too small for the stencil");
    const Eigen::MatrixXcd d2 = second_derivative(basis.profiles, basis.dt);
    const int n = basis.n_max;
    Eigen::MatrixXcd o(n, n);
    for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c)
            o(a, c) = trapezoid(
                basis.profiles.col(a).conjugate().cwiseProduct(d2.col(c)).eval(),
                basis.dt);
    const double herm = (o - o.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-8)
        throw ConfigError("overlap matrix: Hermiticity residual " +
                          std::to_string(herm) + " exceeds 1e-8; refine the grid");
    return o;
}

// Frequency-domain route: d^2/dt^2 maps to multiplication by -omega^2, so
// O_nm = -Integral omega^2 conj(s_n)(omega) s_m(omega) domega.  No stencil
// needed; preferred for modes that are native to the frequency domain.
inline Eigen::MatrixXcd overlap_matrix_spectral(const Eigen::MatrixXcd& spectral_modes,
                                                const Eigen::VectorXd& omega_grid) {
    if (spectral_modes.rows() != omega_grid.size())
        throw ConfigError("overlap matrix: mode/grid size mismatch");
    if (omega_grid.size() < 2)
        throw ConfigError("overlap matrix: need >= 2 frequency samples");
    const double dw = omega_grid(1) - omega_grid(0);
    const Eigen::ArrayXd w2 = omega_grid.array().square();
    const int n = int(spectral_modes.cols());
    Eigen::MatrixXcd o(n, n);
    for (int a = 0; a < n; ++a)
        for (int c = 0; c < n; ++c)
            o(a, c) = -trapezoid((spectral_modes.col(a).conjugate().array() *
                                  w2 * spectral_modes.col(c).array())
                                     .matrix()
                                     .eval(),
                                 dw);
    const double herm = (o - o.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-8)
        throw ConfigError("overlap matrix: Hermiticity residual " +
                          std::to_string(herm) + " exceeds 1e-8; refine the grid");
    return o;
}

struct CouplingModel {
    Eigen::MatrixXcd overlap;   // O_nm
    Eigen::MatrixXcd coupling;  // C = D * O, diagonal included
    Eigen::VectorXd detunings;  // Delta_n = Delta - C_nn
    double dispersion = 0.0;    // D
    double global_detuning = 0.0;
};

inline CouplingModel build_coupling_model(const Eigen::MatrixXcd& overlap,
                                          double dispersion,
                                          double global_detuning) {
    const double herm = (overlap - overlap.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-8)
        throw ConfigError("coupling model: overlap matrix not Hermitian (residual " +
                          std::to_string(herm) + ")");
    CouplingModel cm;
    cm.overlap = overlap;
    cm.dispersion = dispersion;
    cm.global_detuning = global_detuning;
    cm.coupling = dispersion * overlap;
    cm.detunings = global_detuning * Eigen::VectorXd::Ones(overlap.rows()) -
                   cm.coupling.diagonal().real();
    return cm;
}

// D = sqrt(R) k2 L / (2 T_R): per-round-trip quadratic spectral phase spread
// over the cavity lifetime scale.  Units: k2*L in s^2, T_R in s, D in s^2/s.
inline double dispersion_strength(double k2, double length, double round_trip_time,
                                  double reflectivity) {
    if (round_trip_time <= 0) throw ConfigError("dispersion: T_R must be > 0");
    if (reflectivity <= 0 || reflectivity > 1)
        throw ConfigError("dispersion: reflectivity must be in (0, 1]");
    return std::sqrt(reflectivity) * k2 * length / (2.0 * round_trip_time);
}

// Mirror-loss rate from finesse: field decays at gamma/2 = (1 - sqrt(R))/T_R
// and finesse = 2 pi / (gamma T_R).
inline double gamma_from_finesse(double finesse, double round_trip_time) {
    if (finesse <= M_PI) throw ConfigError("cavity: finesse must exceed pi");
    if (round_trip_time <= 0) throw ConfigError("cavity: T_R must be > 0");
    return 2.0 * M_PI / (finesse * round_trip_time);
}

inline double reflectivity_from_finesse(double finesse) {
    if (finesse <= M_PI) throw ConfigError("cavity: finesse must exceed pi");
    const double s = 1.0 - M_PI / finesse;
    return s * s;
}

struct DispersionDiagnostics {
    double dispersion = 0.0;        // D
    double dispersion_length = 0.0; // L_D = tau_s^2 / k2
    double n_gamma = 0.0;           // round trips for an e-fold of field amplitude
    double n_dispersion = 0.0;      // N_D = L_D / L
    double coupling_scale = 0.0;    // D / (gamma tau_s^2), i.e. C_nm = scale * gamma * O_nm tau_s^2
};

inline DispersionDiagnostics dispersion_diagnostics(double k2, double length,
                                                    double round_trip_time,
                                                    double reflectivity,
                                                    double gamma, double tau_s) {
    if (k2 <= 0 || length <= 0)
        throw ConfigError("dispersion diagnostics: k2 and L must be > 0");
    if (gamma <= 0 || tau_s <= 0)
        throw ConfigError("dispersion diagnostics: gamma and tau_s must be > 0");
    DispersionDiagnostics d;
    d.dispersion = dispersion_strength(k2, length, round_trip_time, reflectivity);
    d.dispersion_length = tau_s * tau_s / k2;
    d.n_gamma = 2.0 / (gamma * round_trip_time);
    d.n_dispersion = d.dispersion_length / length;
    d.coupling_scale = d.dispersion / (gamma * tau_s * tau_s);
    return d;
}

// Fundamental mode duration from a pulse-spectrum FWHM (wavelength units):
// tau_s = sqrt(ln 2) lambda0^2 / (pi c dlambda).
inline double tau_from_spectral_fwhm(double lambda0, double dlambda) {
    if (lambda0 <= 0 || dlambda <= 0)
        throw ConfigError("tau_s: wavelength and bandwidth must be > 0");
    constexpr double c = 299792458.0;
    return std::sqrt(std::log(2.0)) * lambda0 * lambda0 / (M_PI * c * dlambda);
}

}  // namespace spopo::modes
