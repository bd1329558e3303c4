#pragma once

// Shared error types and small numeric helpers used across the library.

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spopo {

using cplx = std::complex<double>;

// A user-supplied parameter or derived quantity is outside the model's
// domain (bad grid, non-Hermitian coupling, pump at or above threshold, ...).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// The computation itself hit an ill-conditioned regime (threshold
// singularity, near-singular scattering matrix, ...).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Trapezoid weight application for a uniform grid: sum f_i * w_i with
// w = dx everywhere except half weight at both ends.
template <typename Derived>
auto trapezoid(const Eigen::MatrixBase<Derived>& samples, double dx) ->
    typename Derived::Scalar {
    const auto n = samples.size();
    if (n < 2) throw ConfigError("trapezoid: need at least 2 samples");
    typename Derived::Scalar s = samples.sum();
    s -= 0.5 * (samples(0) + samples(n - 1));
    return s * dx;
}

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace spopo
