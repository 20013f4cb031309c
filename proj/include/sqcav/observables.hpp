#pragma once

#include <complex>
#include <vector>

#include "sqcav/model.hpp"
#include "sqcav/operators.hpp"

namespace sqcav {

/// <a^dag a> and <a^2> of one frame's ladder operator.
struct MomentSet {
    double mean_photon = 0.0;
    Complex second_moment{0.0, 0.0};
    Frame frame = Frame::Lab;

    double abs_second_moment() const { return std::abs(second_moment); }
    /// |<a^2>| <= sqrt(<n>(<n>+1)) + 1e-8.
    bool satisfies_bound() const;
};

enum class DistributionBasis { BareFock, SqueezedFock };

struct PhotonDistribution {
    DistributionBasis basis = DistributionBasis::BareFock;
    double r = 0.0;  // squeeze parameter of the basis (SqueezedFock only)
    std::vector<double> probs;

    double total() const;
};

/// Phase-space grid: values(i, j) = W(x_axis[i] + i p_axis[j]).
struct WignerGrid {
    std::vector<double> x_axis;
    std::vector<double> p_axis;
    Eigen::MatrixXd values;
    /// Grid points with |alpha|^2 > N_max / 4, where the truncated state is
    /// probed beyond its reliable range.
    Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> outside_margin;

    double integral() const;

    struct Quadratures {
        double mean_x, mean_p;
        double var_major, var_minor;
        double angle;  // orientation of the major axis
    };
    Quadratures quadratures() const;
};

inline constexpr int kDistributionReportMax = 10;

MomentSet moments(const DensityMatrix& rho, Frame frame = Frame::Lab);
MomentSet moments_cavity(const Matrix& rho_cavity, Frame frame = Frame::Lab);

/// Lab-frame moments from squeezed-frame moments (Bogoliubov map with
/// a = cosh r a_s - sinh r a_s^dag):
///   <a^dag a> = sinh^2 r + <a_s^dag a_s> cosh 2r - Re<a_s^2> sinh 2r
///   <a^2>     = sinh^2 r <a_s^dag^2> + cosh^2 r <a_s^2> - <a_s^dag a_s> sinh 2r - sinh r cosh r
MomentSet lab_moments_from_squeezed(const MomentSet& ms, double r);

/// Phi_out = kappa <a^dag a>. Requires lab-frame moments.
double output_flux(const MomentSet& ms, double kappa);

/// Populations of the cavity state in the bare Fock basis, or in the squeezed
/// Fock basis S(r)|n>, for n = 0..n_max.
PhotonDistribution photon_distribution(const DensityMatrix& rho_lab, DistributionBasis basis, double r = 0.0,
                                       int n_max = kDistributionReportMax);
PhotonDistribution photon_distribution_cavity(const Matrix& rho_cavity, DistributionBasis basis, double r = 0.0,
                                              int n_max = kDistributionReportMax);

/// W(alpha) = (2/pi) Tr[D(alpha) (-1)^{a^dag a} D^dag(alpha) rho_cavity],
/// alpha = x + i p, from closed-form displacement matrix elements.
WignerGrid wigner(const DensityMatrix& rho_lab, const std::vector<double>& x_grid, const std::vector<double>& p_grid);
WignerGrid wigner_cavity(const Matrix& rho_cavity, const std::vector<double>& x_grid,
                         const std::vector<double>& p_grid);

std::vector<double> linspace(double lo, double hi, int points);

/// Squeezed vacuum from its even-photon series,
///   c_{2n} = (-1)^n sqrt((2n)!) / (2^n n!) tanh^n r / sqrt(cosh r).
/// Not renormalized; the caller sees the truncation loss.
Vector squeezed_vacuum_amplitudes(double r, int fock_cutoff);

/// |g> (x) |0_s> as a density matrix. Throws ErrorKind::Truncation when the
/// truncated series loses more than 1e-6 of its norm.
DensityMatrix squeezed_vacuum_state(double r, HilbertDims dims);

/// S rho_s S^dag: the lab-frame cavity state of a squeezed-frame cavity
/// state, on lab_cutoff + 1 Fock levels.
Matrix squeezed_to_lab_cavity(const Matrix& rho_s_cavity, double r, int lab_cutoff);

}  // namespace sqcav
