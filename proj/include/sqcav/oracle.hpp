#pragma once

// Independent references for the main solver. Nothing here reuses the
// Liouvillian assembly in dynamics.cpp.

#include <complex>
#include <vector>

#include "sqcav/model.hpp"
#include "sqcav/operators.hpp"

namespace sqcav::oracle {

struct GaussianMoments {
    double n;                      // <a^dag a>
    std::complex<double> m;        // <a^2>
};

/// Steady-state <a^dag a>, <a^2> of the empty lab-frame cavity
///   H = delta_c a^dag a + (omega_p / 2)(a^2 + a^dag^2), decay kappa,
/// from the closed real linear system for (n, Re m, Im m):
///   0 = -kappa n - 2 omega_p Im m
///   0 = -kappa Re m + 2 delta_c Im m
///   0 = -kappa Im m - 2 delta_c Re m - omega_p (2n + 1)
/// Throws ErrorKind::Threshold unless 0 <= omega_p < delta_c.
GaussianMoments empty_cavity_steady_moments(double delta_c, double omega_p_amp, double kappa);

/// exp(t L) vec(rho0) with L assembled densely from direct matrix products
/// and exponentiated by Pade scaling and squaring. Composite dimension <= 8.
Matrix small_system_brute_force(const FockOperator& hamiltonian, const std::vector<DissipatorSpec>& dissipators,
                                const Matrix& rho0, double t);

}  // namespace sqcav::oracle
