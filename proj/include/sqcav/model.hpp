#pragma once

// Physical parameters and model assembly for the driven chi(2) cavity with an
// optional two-level atom, in the laboratory frame and in the squeezed frame
// where the parametric Hamiltonian is diagonal.
//
// All rates and frequencies are in units of the cavity decay rate kappa.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "sqcav/operators.hpp"

namespace sqcav {

enum class Frame { Lab, Squeezed };

std::string to_string(Frame frame);

/// r = (1/4) ln((delta_c + omega_p) / (delta_c - omega_p)), i.e.
/// tanh(2r) = omega_p / delta_c. Throws ErrorKind::Threshold unless
/// 0 <= omega_p < delta_c.
double squeezing_param(double delta_c, double omega_p_amp);

/// Inverse of squeezing_param: omega_p = delta_c tanh(2r).
double pump_amplitude(double delta_c, double r);

/// omega_s = sqrt(delta_c^2 - omega_p^2).
double squeezed_frequency(double delta_c, double omega_p_amp);

struct EnhancedCouplings {
    double g_s;        // g0 cosh r
    double g_s_prime;  // g0 sinh r
};
EnhancedCouplings enhanced_couplings(double g0, double r);

struct NoiseParams {
    double n_s;  // sinh^2 r
    double m_s;  // cosh r sinh r
};
NoiseParams noise_params(double r);

struct ModelParams {
    double kappa = 1.0;
    double gamma = 1.0;
    double g0 = 0.0;
    double delta_c = 10.0;
    double omega_p_amp = 0.0;
    double theta_p = 0.0;
    double delta_A = 10.0;
    double r = 0.0;
    double omega_s = 10.0;
    Frame frame = Frame::Squeezed;
    bool atom_present = false;

    /// Derives omega_p and omega_s from (delta_c, r) and puts the atom on
    /// resonance with the squeezed mode (delta_A = omega_s).
    static ModelParams from_squeezing(Frame frame, double delta_c, double r, double g0, double gamma,
                                      bool atom_present, double kappa = 1.0);

    /// Same, starting from the pump amplitude.
    static ModelParams from_pump(Frame frame, double delta_c, double omega_p_amp, double g0, double gamma,
                                 bool atom_present, double kappa = 1.0);

    /// Throws ErrorKind::Threshold or ErrorKind::InvalidConfig when the stored
    /// values violate the below-threshold condition or the r / omega_s
    /// relations (tolerance 1e-12).
    void check_consistency() const;

    /// |g_s'| / (omega_s + delta_A); the counter-rotating terms dropped in
    /// the squeezed frame are negligible only when this is small.
    double rwa_ratio() const;
    bool rwa_valid() const { return rwa_ratio() < 0.1; }
};

/// Cross term coeff * (left rho right^dag - 1/2 {right^dag left, rho}). A
/// plain dissipator rate * D[L] is the cross term (L, L, rate).
struct CrossTerm {
    FockOperator left;
    FockOperator right;
    Complex coeff;
};

struct DissipatorSpec {
    FockOperator jump_operator;
    double rate = 0.0;
    std::vector<CrossTerm> cross_terms;
};

/// Delta_A sigma_ee + g0 (a sigma_eg + a^dag sigma_ge) [atom present]
/// + delta_c a^dag a + (omega_p / 2)(e^{i theta_p} a^2 + h.c.).
FockOperator build_hamiltonian_lab(const ModelParams& params, HilbertDims dims);

/// Delta_A sigma_ee + omega_s a^dag a + g_s (a sigma_eg + a^dag sigma_ge)
/// [atom present], with a the squeezed-mode ladder operator.
FockOperator build_hamiltonian_squeezed(const ModelParams& params, HilbertDims dims);

/// Dispatches on params.frame.
FockOperator build_hamiltonian(const ModelParams& params, HilbertDims dims);

/// Lab frame: (a, kappa) and (sigma_ge, gamma). Squeezed frame:
/// (a, kappa(N_s+1)) carrying the two M_s cross terms, (a^dag, kappa N_s),
/// (sigma_ge, gamma).
///
/// The empty cavity keeps the atomic factor of the Hilbert space; its
/// (sigma_ge, gamma) term pins that inert factor to |g> so the steady state
/// stays unique. The rate is gamma, or kappa when gamma is zero. It has no
/// effect on any cavity observable.
std::vector<DissipatorSpec> build_dissipators(const ModelParams& params, HilbertDims dims);

struct DiagonalizationResidual {
    double residual;  // max |S^dag H_NL S - omega_s a^dag a - c|
    double offset;    // fitted constant c
};

/// Conjugates the lab parametric Hamiltonian by S(r) and measures how far it
/// is from omega_s a^dag a + c on the lower two thirds of the Fock block.
/// r_override replaces params.r (used to probe other sign conventions).
DiagonalizationResidual diagonalization_residual(const ModelParams& params, HilbertDims dims,
                                                 std::optional<double> r_override = std::nullopt);

}  // namespace sqcav
