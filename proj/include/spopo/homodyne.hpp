#pragma once

// Homodyne photocurrent and photon-number spectra of the cavity output.
//
// Detecting supermode n at local-oscillator phase phi mixes the output-side
// transfer rows at +Omega and -Omega.  Writing per source channel p
//
//   c_p(phi) = e^{+i phi} UUout_np(+Omega) + e^{-i phi} conj(VVout_np(-Omega)),
//
// the normalized photocurrent spectrum is the weighted row power
//
//   S_n(Omega, phi) = gamma_n sum_p gamma_p |c_p(phi)|^2,
//
// which in phi is always of the form
//
//   S = offset + 2 Re{ twist e^{2 i phi} },
//
// i.e. a pure cos(2 phi) oscillation around its phase average.  Everything
// phase-related (optimal quadrature, min/max, pi periodicity) follows from
// (offset, twist) alone.  For the perturbative stacks the row products are
// truncated at total expansion order j + k <= K, which at K = 2 reproduces
// term by term the three contributions of the second-order spectrum: the
// uncoupled mode, the |first-order|^2 neighbor leakage, and the interference
// of the zeroth order with second-order paths returning to mode n.
//
// Shot noise is S = 1: an empty (or vacuum-coupled) cavity reflects vacuum.

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spopo/core.hpp"
#include "spopo/exact.hpp"
#include "spopo/pert.hpp"

namespace spopo::homodyne {

struct PhaseQuadratic {
    double offset = 0.0;  // phase-averaged spectrum
    cplx twist;           // complex half-amplitude of the cos(2 phi) swing

    double value(double phi) const {
        return offset + 2.0 * (twist * std::exp(cplx(0.0, 2.0 * phi))).real();
    }
    double min_value() const { return offset - 2.0 * std::abs(twist); }
    double max_value() const { return offset + 2.0 * std::abs(twist); }
    bool phase_independent() const {
        return std::abs(twist) <= 1e-14 * std::max(offset, 1.0);
    }
    // Quadrature phase minimizing S, folded into [0, pi); meaningless when
    // phase_independent().
    double optimal_phase() const {
        double phi = 0.5 * (M_PI - std::arg(twist));
        phi = std::fmod(phi, M_PI);
        if (phi < 0) phi += M_PI;
        return phi;
    }
};

namespace detail {
inline void check_mode(Eigen::Index n_modes, int mode) {
    if (mode < 0 || mode >= n_modes)
        throw ConfigError("homodyne: detection mode " + std::to_string(mode) +
                          " outside the retained basis of " +
                          std::to_string(n_modes) + " modes");
}
}  // namespace detail

// Perturbative spectrum at truncation order K = t.order.
inline PhaseQuadratic quadratic(const pert::TransferCoefficients& t, int mode) {
    const auto n_modes = t.loss.size();
    detail::check_mode(n_modes, mode);
    const int kmax = t.order;
    const int n = mode;
    std::vector<cplx> xs(kmax + 1), ys(kmax + 1);
    cplx acc_a(0, 0), acc_z(0, 0);
    for (Eigen::Index p = 0; p < n_modes; ++p) {
        xs[0] = (p == n) ? t.plus.base.w(n) : cplx(0, 0);
        ys[0] = (p == n) ? std::conj(t.minus.base.v(n)) : cplx(0, 0);
        for (int k = 1; k <= kmax; ++k) {
            xs[k] = t.plus.u[k](n, p);
            ys[k] = std::conj(t.minus.v[k](n, p));
        }
        cplx a(0, 0), z(0, 0);
        for (int j = 0; j <= kmax; ++j)
            for (int k = 0; j + k <= kmax; ++k) {
                a += xs[j] * std::conj(xs[k]) + ys[j] * std::conj(ys[k]);
                z += xs[j] * std::conj(ys[k]);
            }
        acc_a += t.loss(p) * a;
        acc_z += t.loss(p) * z;
    }
    PhaseQuadratic q;
    q.offset = t.loss(n) * acc_a.real();  // conjugate-paired sum; exactly real
    q.twist = t.loss(n) * acc_z;
    return q;
}

// Exact spectrum from the scattering blocks.
inline PhaseQuadratic quadratic(const exact::ScatteringPair& s, int mode) {
    const auto n_modes = s.plus.loss.size();
    detail::check_mode(n_modes, mode);
    const int n = mode;
    double acc_a = 0.0;
    cplx acc_z(0, 0);
    for (Eigen::Index p = 0; p < n_modes; ++p) {
        const cplx x = s.plus.u_out(n, p);
        const cplx y = std::conj(s.minus.v_out(n, p));
        acc_a += s.plus.loss(p) * (std::norm(x) + std::norm(y));
        acc_z += s.plus.loss(p) * x * std::conj(y);
    }
    PhaseQuadratic q;
    q.offset = s.plus.loss(n) * acc_a;
    q.twist = s.plus.loss(n) * acc_z;
    return q;
}

inline double spectrum(const pert::TransferCoefficients& t, int mode, double phi) {
    return quadratic(t, mode).value(phi);
}
inline double spectrum(const exact::ScatteringPair& s, int mode, double phi) {
    return quadratic(s, mode).value(phi);
}

// Photon-number spectral density of the detected output mode,
// gamma_n sum_p gamma_p |VVout_np(Omega)|^2, truncated like the photocurrent.
// Truncation can push weak values below zero; values are reported as-is and
// callers are expected to flag, not clamp.
inline double number_spectrum(const pert::TransferCoefficients& t, int mode) {
    const auto n_modes = t.loss.size();
    detail::check_mode(n_modes, mode);
    const int kmax = t.order;
    const int n = mode;
    std::vector<cplx> vs(kmax + 1);
    cplx acc(0, 0);
    for (Eigen::Index p = 0; p < n_modes; ++p) {
        vs[0] = (p == n) ? t.plus.base.v(n) : cplx(0, 0);
        for (int k = 1; k <= kmax; ++k) vs[k] = t.plus.v[k](n, p);
        cplx a(0, 0);
        for (int j = 0; j <= kmax; ++j)
            for (int k = 0; j + k <= kmax; ++k) a += vs[j] * std::conj(vs[k]);
        acc += t.loss(p) * a;
    }
    return t.loss(n) * acc.real();
}

inline double number_spectrum(const exact::ScatteringMatrix& s, int mode) {
    detail::check_mode(s.loss.size(), mode);
    double acc = 0.0;
    for (Eigen::Index p = 0; p < s.loss.size(); ++p)
        acc += s.loss(p) * std::norm(s.v_out(mode, p));
    return s.loss(mode) * acc;
}

// Closed-form zero-frequency limit at the two principal quadratures, leading
// order in pump and coupling:
//   S_n(0) = 1 +/- 4 r_n (1 - 12 d_n^2) -/+ 16 sum_m (|C_nm|^2/(gamma_n gamma_m)) (2 r_n + r_m)
// with r = lambda/gamma and d_n = Delta_n/gamma_n; upper signs at phi = 0,
// lower at phi = pi/2.  The residual against the order-2 spectrum scales as
// the square of the pump ratio.
inline double analytic_zero_frequency_limit(const pert::OscillatorParams& p,
                                            int mode, double phi) {
    pert::validate(p);
    detail::check_mode(p.gain.size(), mode);
    const bool amplitude = std::abs(phi) < 1e-12;
    if (!amplitude && std::abs(phi - M_PI / 2.0) > 1e-12)
        throw ConfigError("analytic limit defined at phi = 0 or pi/2 only");
    const double sign = amplitude ? 1.0 : -1.0;
    const int n = mode;
    const double r_n = p.gain(n) / p.loss(n);
    const double d_n = p.detuning(n) / p.loss(n);
    double coupling_term = 0.0;
    for (Eigen::Index m = 0; m < p.gain.size(); ++m) {
        if (m == n) continue;
        coupling_term += std::norm(p.coupling(n, m)) / (p.loss(n) * p.loss(m)) *
                         (2.0 * r_n + p.gain(m) / p.loss(m));
    }
    return 1.0 + sign * 4.0 * r_n * (1.0 - 12.0 * d_n * d_n) -
           sign * 16.0 * coupling_term;
}

struct SqueezingReport {
    int mode = 0;
    double phase = 0.0;       // optimal quadrature at Omega = 0
    double value = 0.0;       // S at that phase
    double db = 0.0;          // 10 log10 S
    bool degenerate = false;  // spectrum was phase-independent
};

inline SqueezingReport best_squeezing(const PhaseQuadratic& q, int mode) {
    SqueezingReport r;
    r.mode = mode;
    r.degenerate = q.phase_independent();
    r.phase = r.degenerate ? 0.0 : q.optimal_phase();
    r.value = r.degenerate ? q.offset : q.min_value();
    r.db = 10.0 * std::log10(std::max(r.value, 1e-300));
    return r;
}

}  // namespace spopo::homodyne
