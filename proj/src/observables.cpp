#include "sqcav/observables.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "sqcav/error.hpp"

namespace sqcav {

namespace {

// Trapezoid weights for a (possibly non-uniform) axis.
std::vector<double> trapezoid_weights(const std::vector<double>& axis) {
    std::vector<double> w(axis.size(), 0.0);
    for (std::size_t k = 1; k < axis.size(); ++k) {
        const double h = axis[k] - axis[k - 1];
        w[k - 1] += 0.5 * h;
        w[k] += 0.5 * h;
    }
    return w;
}

void check_distribution(const PhotonDistribution& dist) {
    for (double p : dist.probs) {
        if (p < -1e-10 || p > 1.0 + 1e-10) {
            throw Error(ErrorKind::InvalidState, "photon probability " + std::to_string(p) + " outside [0, 1]");
        }
    }
    if (dist.total() > 1.0 + 1e-8) {
        throw Error(ErrorKind::InvalidState, "photon distribution sums to " + std::to_string(dist.total()));
    }
}

}  // namespace

bool MomentSet::satisfies_bound() const {
    return mean_photon >= 0.0 && abs_second_moment() <= std::sqrt(mean_photon * (mean_photon + 1.0)) + 1e-8;
}

double PhotonDistribution::total() const {
    double s = 0.0;
    for (double p : probs) s += p;
    return s;
}

double WignerGrid::integral() const {
    const auto wx = trapezoid_weights(x_axis);
    const auto wp = trapezoid_weights(p_axis);
    double s = 0.0;
    for (std::size_t i = 0; i < x_axis.size(); ++i) {
        for (std::size_t j = 0; j < p_axis.size(); ++j) s += wx[i] * wp[j] * values(i, j);
    }
    return s;
}

WignerGrid::Quadratures WignerGrid::quadratures() const {
    const auto wx = trapezoid_weights(x_axis);
    const auto wp = trapezoid_weights(p_axis);
    double norm = 0.0, mx = 0.0, mp = 0.0;
    for (std::size_t i = 0; i < x_axis.size(); ++i) {
        for (std::size_t j = 0; j < p_axis.size(); ++j) {
            const double w = wx[i] * wp[j] * values(i, j);
            norm += w;
            mx += w * x_axis[i];
            mp += w * p_axis[j];
        }
    }
    mx /= norm;
    mp /= norm;
    double sxx = 0.0, spp = 0.0, sxp = 0.0;
    for (std::size_t i = 0; i < x_axis.size(); ++i) {
        for (std::size_t j = 0; j < p_axis.size(); ++j) {
            const double w = wx[i] * wp[j] * values(i, j);
            const double dx = x_axis[i] - mx;
            const double dp = p_axis[j] - mp;
            sxx += w * dx * dx;
            spp += w * dp * dp;
            sxp += w * dx * dp;
        }
    }
    Eigen::Matrix2d cov;
    cov << sxx / norm, sxp / norm, sxp / norm, spp / norm;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
    const Eigen::Vector2d major = eig.eigenvectors().col(1);
    return {mx, mp, eig.eigenvalues()(1), eig.eigenvalues()(0), std::atan2(major(1), major(0))};
}

MomentSet moments_cavity(const Matrix& rho_cavity, Frame frame) {
    MomentSet ms;
    ms.frame = frame;
    for (Eigen::Index k = 0; k < rho_cavity.rows(); ++k) {
        ms.mean_photon += static_cast<double>(k) * rho_cavity(k, k).real();
        if (k >= 2) ms.second_moment += std::sqrt(static_cast<double>(k * (k - 1))) * rho_cavity(k, k - 2);
    }
    return ms;
}

MomentSet moments(const DensityMatrix& rho, Frame frame) { return moments_cavity(partial_trace_atom(rho), frame); }

MomentSet lab_moments_from_squeezed(const MomentSet& ms, double r) {
    if (ms.frame != Frame::Squeezed) {
        throw Error(ErrorKind::InvalidConfig, "lab_moments_from_squeezed expects squeezed-frame moments");
    }
    const double sh = std::sinh(r);
    const double ch = std::cosh(r);
    const double sh2r = std::sinh(2.0 * r);
    MomentSet lab;
    lab.frame = Frame::Lab;
    lab.mean_photon = sh * sh + ms.mean_photon * std::cosh(2.0 * r) - ms.second_moment.real() * sh2r;
    lab.second_moment =
        sh * sh * std::conj(ms.second_moment) + ch * ch * ms.second_moment - ms.mean_photon * sh2r - sh * ch;
    return lab;
}

double output_flux(const MomentSet& ms, double kappa) {
    if (ms.frame != Frame::Lab) {
        throw Error(ErrorKind::InvalidConfig, "output flux needs lab-frame moments");
    }
    return kappa * ms.mean_photon;
}

PhotonDistribution photon_distribution_cavity(const Matrix& rho_cavity, DistributionBasis basis, double r,
                                              int n_max) {
    const double tail = truncation_tail_cavity(rho_cavity);
    if (tail > kTruncationTailTol) {
        throw Error(ErrorKind::Truncation,
                    "cavity population " + std::to_string(tail) + " above 0.8 N_max; raise the Fock cutoff");
    }
    const int levels = static_cast<int>(rho_cavity.rows());
    PhotonDistribution dist;
    dist.basis = basis;
    dist.r = basis == DistributionBasis::SqueezedFock ? r : 0.0;
    dist.probs.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    if (basis == DistributionBasis::BareFock) {
        for (int n = 0; n <= n_max && n < levels; ++n) dist.probs[n] = rho_cavity(n, n).real();
    } else {
        const Matrix cols = cavity::squeeze_block(r, 0.0, levels, n_max + 1);
        for (int n = 0; n <= n_max; ++n) {
            dist.probs[n] = (cols.col(n).adjoint() * rho_cavity * cols.col(n))(0, 0).real();
        }
    }
    check_distribution(dist);
    return dist;
}

PhotonDistribution photon_distribution(const DensityMatrix& rho_lab, DistributionBasis basis, double r, int n_max) {
    return photon_distribution_cavity(partial_trace_atom(rho_lab), basis, r, n_max);
}

WignerGrid wigner_cavity(const Matrix& rho_cavity, const std::vector<double>& x_grid,
                         const std::vector<double>& p_grid) {
    const int levels = static_cast<int>(rho_cavity.rows());
    const int cutoff = levels - 1;
    WignerGrid grid;
    grid.x_axis = x_grid;
    grid.p_axis = p_grid;
    grid.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x_grid.size()), static_cast<Eigen::Index>(p_grid.size()));
    grid.outside_margin.setConstant(grid.values.rows(), grid.values.cols(), false);

    // D(alpha) P D(alpha)^dag = D(2 alpha) P, and D(t e^{i phi}) differs from
    // D(t) only by the phases e^{i (m - n) phi}. Points sharing |alpha| share
    // one real-amplitude block.
    std::map<double, std::vector<std::pair<int, int>>> by_radius;
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        for (std::size_t j = 0; j < p_grid.size(); ++j) {
            const double amp = 2.0 * std::hypot(x_grid[i], p_grid[j]);
            by_radius[amp].emplace_back(static_cast<int>(i), static_cast<int>(j));
            grid.outside_margin(i, j) = 0.25 * amp * amp > 0.25 * cutoff;
        }
    }

    // parity_rho(n, m) = (-1)^n rho(n, m)
    Matrix parity_rho = rho_cavity;
    for (int n = 1; n < levels; n += 2) parity_rho.row(n) *= -1.0;

    for (const auto& [amp, points] : by_radius) {
        // W = (2/pi) sum_{m,n} D(2 alpha)_{mn} (-1)^n rho_{nm}
        const Matrix weighted = cavity::displacement_elements(amp, levels).cast<Complex>().cwiseProduct(parity_rho.transpose());
        // sums over the diagonals m - n = k, shared by every point on this circle
        Vector diag_sums(2 * levels - 1);
        for (int k = -(levels - 1); k <= levels - 1; ++k) diag_sums(k + levels - 1) = weighted.diagonal(-k).sum();
        for (const auto& [i, j] : points) {
            const double phi = std::atan2(p_grid[j], x_grid[i]);
            Complex acc(0.0);
            for (int k = -(levels - 1); k <= levels - 1; ++k) acc += std::polar(1.0, k * phi) * diag_sums(k + levels - 1);
            grid.values(i, j) = 2.0 / std::numbers::pi * acc.real();
        }
    }
    return grid;
}

WignerGrid wigner(const DensityMatrix& rho_lab, const std::vector<double>& x_grid, const std::vector<double>& p_grid) {
    return wigner_cavity(partial_trace_atom(rho_lab), x_grid, p_grid);
}

std::vector<double> linspace(double lo, double hi, int points) {
    std::vector<double> out(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        out[k] = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / (points - 1);
    }
    return out;
}

Vector squeezed_vacuum_amplitudes(double r, int fock_cutoff) {
    Vector c = Vector::Zero(fock_cutoff + 1);
    const double t = std::tanh(r);
    const double log_norm = -0.5 * std::log(std::cosh(r));
    c(0) = std::exp(log_norm);
    if (t == 0.0) return c;
    const double log_t = std::log(std::abs(t));
    const double sign_t = t < 0.0 ? -1.0 : 1.0;
    for (int n = 1; 2 * n <= fock_cutoff; ++n) {
        const double log_mag = 0.5 * std::lgamma(2.0 * n + 1.0) - n * std::log(2.0) - std::lgamma(n + 1.0) +
                               n * log_t + log_norm;
        const double sign = ((n % 2) ? -1.0 : 1.0) * std::pow(sign_t, n);
        c(2 * n) = sign * std::exp(log_mag);
    }
    return c;
}

DensityMatrix squeezed_vacuum_state(double r, HilbertDims dims) {
    const Vector c = squeezed_vacuum_amplitudes(r, dims.fock_cutoff);
    const double loss = 1.0 - c.squaredNorm();
    if (loss > 1e-6) {
        throw Error(ErrorKind::Truncation, "squeezed vacuum r=" + std::to_string(r) + " loses " + std::to_string(loss) +
                                               " of its norm at fock_cutoff " + std::to_string(dims.fock_cutoff));
    }
    Vector psi = Vector::Zero(dims.dim());
    psi.segment(dims.index(kGround, 0), dims.cavity_dim()) = c;
    return DensityMatrix::pure(dims, psi);
}

Matrix squeezed_to_lab_cavity(const Matrix& rho_s_cavity, double r, int lab_cutoff) {
    const Matrix s = cavity::squeeze_block(r, 0.0, lab_cutoff + 1, static_cast<int>(rho_s_cavity.rows()));
    return s * rho_s_cavity * s.adjoint();
}

}  // namespace sqcav
