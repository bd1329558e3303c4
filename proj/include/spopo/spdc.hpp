#pragma once

// Parametric-gain kernel construction and its supermode factorization.
//
// Collinear degenerate downconversion pumped by a broadband pulse produces a
// joint spectral amplitude over signal detunings (nu, nu') from the carrier:
//
//   K(nu, nu') = E_p(nu + nu') exp(i dk L / 2) sinc(dk L / 2),
//
// with E_p a Gaussian pump envelope and dk(nu, nu') the phase mismatch,
// expanded to second order in the detunings.  The symmetrized kernel is
// complex symmetric, K = K^T, and factorizes (Autonne-Takagi) as
//
//   K = Q diag(sigma) Q^T,  sigma_n >= 0 non-increasing, Q unitary,
//
// which is exactly the supermode form of the gain term in the intracavity
// equations of motion: sigma_n are the per-mode gains, the columns of Q the
// supermode spectral profiles.  The factorization runs through an SVD; the
// left/right factors of a symmetric matrix differ only by a diagonal phase,
// which is absorbed as a half-phase into Q.

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "spopo/core.hpp"

namespace spopo::spdc {

// Phase mismatch as a quadratic expansion in the signal detunings:
//   dk = c00 + c10 nu + c01 nu' + c20 nu^2 + c02 nu'^2 + c11 nu nu'.
// Asymmetric linear terms (c10 != c01) model group-velocity mismatch between
// the signal and the pump frame.
struct PhaseMatching {
    double c00 = 0.0;
    double c10 = 0.0, c01 = 0.0;
    double c20 = 0.0, c02 = 0.0, c11 = 0.0;
};

struct JsaParams {
    int grid_points = 257;     // samples per frequency axis
    double nu_max = 0.0;       // grid spans [-nu_max, nu_max] on both axes
    double pump_sigma = 0.0;   // pump amplitude envelope exp(-(nu+nu')^2 / (2 sigma^2))
    double crystal_length = 0.0;
    PhaseMatching phase_matching;
};

struct JsaGrid {
    Eigen::VectorXd nu;       // shared axis for both arguments
    Eigen::MatrixXcd kernel;  // kernel(i, j) = K(nu_i, nu_j), symmetric
    double dnu = 0.0;
};

inline double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
    return std::sin(x) / x;
}

inline JsaGrid build_jsa(const JsaParams& p) {
    if (p.grid_points < 16) throw ConfigError("jsa: need >= 16 grid points");
    if (p.nu_max <= 0) throw ConfigError("jsa: nu_max must be > 0");
    if (p.pump_sigma <= 0) throw ConfigError("jsa: pump_sigma must be > 0");
    if (p.crystal_length < 0) throw ConfigError("jsa: crystal length must be >= 0");
    JsaGrid g;
    g.nu = Eigen::VectorXd::LinSpaced(p.grid_points, -p.nu_max, p.nu_max);
    g.dnu = g.nu(1) - g.nu(0);
    g.kernel.resize(p.grid_points, p.grid_points);
    const auto& pm = p.phase_matching;
    for (int i = 0; i < p.grid_points; ++i) {
        const double nu = g.nu(i);
        for (int j = 0; j < p.grid_points; ++j) {
            const double nup = g.nu(j);
            const double sum = nu + nup;
            const double pump = std::exp(-sum * sum / (2.0 * p.pump_sigma * p.pump_sigma));
            const double dk = pm.c00 + pm.c10 * nu + pm.c01 * nup + pm.c20 * nu * nu +
                              pm.c02 * nup * nup + pm.c11 * nu * nup;
            const double arg = 0.5 * dk * p.crystal_length;
            g.kernel(i, j) = pump * sinc(arg) * std::exp(cplx(0.0, arg));
        }
    }
    // The physical gain operator is symmetric under nu <-> nu'; enforce it
    // exactly so the factorization below sees a clean input.
    g.kernel = 0.5 * (g.kernel + g.kernel.transpose()).eval();
    return g;
}

struct SupermodeDecomposition {
    Eigen::VectorXd gains;    // sigma_n, non-increasing
    Eigen::MatrixXcd modes;   // column n: unit-l2-norm supermode samples
    double residual = 0.0;    // max-abs error of Q diag(sigma) Q^T vs input
    bool degenerate = false;  // near-equal gains present; mode pairing within
                              // such a group is not unique
};

// Autonne-Takagi factorization of a complex symmetric matrix.  With the SVD
// A = U S V*, symmetry forces Z = U^dag conj(V) to be diagonal (unit modulus)
// whenever the singular values are distinct, and Q = U sqrt(Z) gives
// A = Q S Q^T.  Each mode's overall sign is fixed by making the real part at
// its largest-magnitude sample non-negative; this is the only phase freedom
// that preserves the pairing of gains with s_n s_n^T.
inline SupermodeDecomposition takagi_decompose(const Eigen::MatrixXcd& a,
                                               double degeneracy_tol = 1e-12) {
    if (a.rows() != a.cols()) throw ConfigError("takagi: matrix must be square");
    const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
    const double sym = (a - a.transpose()).cwiseAbs().maxCoeff();
    if (sym > 1e-10 * scale)
        throw ConfigError("takagi: input not symmetric (residual " +
                          std::to_string(sym / scale) + " relative)");

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
        a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SupermodeDecomposition d;
    d.gains = svd.singularValues();
    const Eigen::MatrixXcd z = svd.matrixU().adjoint() * svd.matrixV().conjugate();
    Eigen::VectorXcd half_phase(a.rows());
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
        cplx zk = z(k, k);
        const double m = std::abs(zk);
        zk = (m > 1e-12) ? zk / m : cplx(1, 0);
        half_phase(k) = std::sqrt(zk);
    }
    d.modes = svd.matrixU() * half_phase.asDiagonal();

    // Equal gains make the mode pairing non-unique; gains at numerical zero
    // carry no physics and are exempt.
    for (Eigen::Index k = 0; k + 1 < d.gains.size(); ++k)
        if (d.gains(k + 1) > degeneracy_tol * d.gains(0) &&
            std::abs(d.gains(k) - d.gains(k + 1)) <= degeneracy_tol * d.gains(0))
            d.degenerate = true;

    for (Eigen::Index k = 0; k < d.modes.cols(); ++k) {
        Eigen::Index imax;
        d.modes.col(k).cwiseAbs().maxCoeff(&imax);
        const cplx peak = d.modes(imax, k);
        if (peak.real() < 0.0 || (peak.real() == 0.0 && peak.imag() < 0.0))
            d.modes.col(k) *= -1.0;
    }

    d.residual =
        (d.modes * d.gains.asDiagonal() * d.modes.transpose() - a).cwiseAbs().maxCoeff();
    return d;
}

// Rescale gains so the strongest supermode sits at a prescribed pump level;
// the kernel's overall magnitude carries no physical meaning on its own.
inline Eigen::VectorXd scale_gains(const SupermodeDecomposition& d, double lambda0) {
    if (d.gains.size() == 0 || d.gains(0) <= 0)
        throw ConfigError("gain scaling: decomposition carries no gain");
    if (lambda0 < 0) throw ConfigError("gain scaling: lambda0 must be >= 0");
    return d.gains * (lambda0 / d.gains(0));
}

// Quadrature-normalized continuum profiles: s_n(nu_i) = q_i / sqrt(dnu) so
// that Integral |s_n|^2 dnu = 1.
inline Eigen::MatrixXcd continuum_modes(const SupermodeDecomposition& d, double dnu) {
    if (dnu <= 0) throw ConfigError("continuum modes: dnu must be > 0");
    return d.modes / std::sqrt(dnu);
}

// Duration of the fundamental supermode from its spectral second moment:
// for a Gaussian profile |s(nu)|^2 ~ exp(-nu^2 tau^2), <nu^2> = 1/(2 tau^2).
inline double fit_tau(const Eigen::VectorXcd& mode, const Eigen::VectorXd& nu) {
    if (mode.size() != nu.size() || nu.size() < 2)
        throw ConfigError("fit_tau: mode/grid size mismatch");
    const double dnu = nu(1) - nu(0);
    const double norm = trapezoid(mode.cwiseAbs2().eval(), dnu);
    const double m2 =
        trapezoid((mode.cwiseAbs2().array() * nu.array().square()).matrix().eval(),
                  dnu);
    if (norm <= 0 || m2 <= 0) throw ConfigError("fit_tau: degenerate mode profile");
    return 1.0 / std::sqrt(2.0 * m2 / norm);
}

// --- kernel serialization -------------------------------------------------
//
// Little-endian binary layout:
//   bytes 0-7   magic "SPOPOJSA"
//   u32         format version (1)
//   u32         n, samples per axis
//   f64 * n     frequency axis
//   f64 * 2n^2  kernel, row-major, interleaved re/im

inline constexpr char kKernelMagic[8] = {'S', 'P', 'O', 'P', 'O', 'J', 'S', 'A'};

inline void write_kernel(const std::string& path, const JsaGrid& g) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("kernel write: cannot open " + path);
    f.write(kKernelMagic, 8);
    const std::uint32_t version = 1;
    const std::uint32_t n = std::uint32_t(g.nu.size());
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&n), 4);
    f.write(reinterpret_cast<const char*>(g.nu.data()), 8 * n);
    std::vector<double> row(2 * n);
    for (std::uint32_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < n; ++j) {
            row[2 * j] = g.kernel(i, j).real();
            row[2 * j + 1] = g.kernel(i, j).imag();
        }
        f.write(reinterpret_cast<const char*>(row.data()), 16 * n);
    }
    if (!f) throw ConfigError("kernel write: short write to " + path);
}

inline JsaGrid read_kernel(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("kernel read: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kKernelMagic, 8) != 0)
        throw ConfigError("kernel read: " + path + " is not a kernel file");
    std::uint32_t version = 0, n = 0;
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&n), 4);
    if (!f || version != 1)
        throw ConfigError("kernel read: unsupported format version in " + path);
    if (n < 2 || n > (1u << 16))
        throw ConfigError("kernel read: implausible grid size in " + path);
    JsaGrid g;
    g.nu.resize(n);
    f.read(reinterpret_cast<char*>(g.nu.data()), 8 * n);
    g.kernel.resize(n, n);
    std::vector<double> row(2 * n);
    for (std::uint32_t i = 0; i < n; ++i) {
        f.read(reinterpret_cast<char*>(row.data()), 16 * n);
        for (std::uint32_t j = 0; j < n; ++j)
            g.kernel(i, j) = cplx(row[2 * j], row[2 * j + 1]);
    }
    if (!f) throw ConfigError("kernel read: truncated file " + path);
    g.dnu = g.nu(1) - g.nu(0);
    return g;
}

}  // namespace spopo::spdc
