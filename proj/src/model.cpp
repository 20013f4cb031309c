#include "sqcav/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "sqcav/error.hpp"

namespace sqcav {

std::string to_string(Frame frame) { return frame == Frame::Lab ? "lab" : "squeezed"; }

namespace {

void require_below_threshold(double delta_c, double omega_p_amp) {
    if (!(omega_p_amp >= 0.0) || !(omega_p_amp < delta_c)) {
        std::ostringstream msg;
        msg << "pump amplitude omega_p=" << omega_p_amp << " must satisfy 0 <= omega_p < delta_c=" << delta_c;
        throw Error(ErrorKind::Threshold, msg.str());
    }
}

void require_nonnegative_r(double r) {
    if (!(r >= 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "squeezing parameter must be >= 0, got " + std::to_string(r));
    }
}

}  // namespace

double squeezing_param(double delta_c, double omega_p_amp) {
    require_below_threshold(delta_c, omega_p_amp);
    return 0.25 * std::log((delta_c + omega_p_amp) / (delta_c - omega_p_amp));
}

double pump_amplitude(double delta_c, double r) {
    require_nonnegative_r(r);
    return delta_c * std::tanh(2.0 * r);
}

double squeezed_frequency(double delta_c, double omega_p_amp) {
    require_below_threshold(delta_c, omega_p_amp);
    return std::sqrt((delta_c - omega_p_amp) * (delta_c + omega_p_amp));
}

EnhancedCouplings enhanced_couplings(double g0, double r) { return {g0 * std::cosh(r), g0 * std::sinh(r)}; }

NoiseParams noise_params(double r) {
    const double s = std::sinh(r);
    return {s * s, std::cosh(r) * s};
}

ModelParams ModelParams::from_squeezing(Frame frame, double delta_c, double r, double g0, double gamma,
                                        bool atom_present, double kappa) {
    require_nonnegative_r(r);
    if (!(delta_c > 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "delta_c must be positive");
    }
    ModelParams p;
    p.kappa = kappa;
    p.gamma = gamma;
    p.g0 = g0;
    p.delta_c = delta_c;
    p.omega_p_amp = pump_amplitude(delta_c, r);
    p.r = r;
    // delta_c sech(2r), identical to sqrt(delta_c^2 - omega_p^2) but without
    // the cancellation at large r.
    p.omega_s = delta_c / std::cosh(2.0 * r);
    p.delta_A = p.omega_s;
    p.frame = frame;
    p.atom_present = atom_present;
    p.check_consistency();
    return p;
}

ModelParams ModelParams::from_pump(Frame frame, double delta_c, double omega_p_amp, double g0, double gamma,
                                   bool atom_present, double kappa) {
    ModelParams p;
    p.kappa = kappa;
    p.gamma = gamma;
    p.g0 = g0;
    p.delta_c = delta_c;
    p.omega_p_amp = omega_p_amp;
    p.r = squeezing_param(delta_c, omega_p_amp);
    p.omega_s = squeezed_frequency(delta_c, omega_p_amp);
    p.delta_A = p.omega_s;
    p.frame = frame;
    p.atom_present = atom_present;
    p.check_consistency();
    return p;
}

void ModelParams::check_consistency() const {
    require_below_threshold(delta_c, omega_p_amp);
    if (!(kappa > 0.0) || !(gamma >= 0.0) || !(g0 >= 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "rates must satisfy kappa > 0, gamma >= 0, g0 >= 0");
    }
    // Compare in the tanh(2r) / sech(2r) form; it is well conditioned for all r.
    const double tanh_err = std::abs(std::tanh(2.0 * r) - omega_p_amp / delta_c);
    const double sech_err = std::abs(omega_s / delta_c - 1.0 / std::cosh(2.0 * r));
    if (tanh_err > 1e-12 || sech_err > 1e-12) {
        std::ostringstream msg;
        msg << "inconsistent model parameters: tanh(2r) error " << tanh_err << ", omega_s error " << sech_err;
        throw Error(ErrorKind::InvalidConfig, msg.str());
    }
}

double ModelParams::rwa_ratio() const {
    const double denom = omega_s + delta_A;
    return std::abs(enhanced_couplings(g0, r).g_s_prime) / denom;
}

namespace {

void check_hermitian(const FockOperator& h) {
    const double defect = h.hermiticity_defect();
    if (defect > 1e-12) {
        throw Error(ErrorKind::Internal, "assembled Hamiltonian not Hermitian, defect " + std::to_string(defect));
    }
}

}  // namespace

FockOperator build_hamiltonian_lab(const ModelParams& params, HilbertDims dims) {
    if (params.frame != Frame::Lab) {
        throw Error(ErrorKind::InvalidConfig, "build_hamiltonian_lab called with squeezed-frame parameters");
    }
    const FockOperator a = destroy(dims);
    const FockOperator ad = a.adjoint();
    const AtomOperators at = atom_ops(dims);
    const Complex pump = 0.5 * params.omega_p_amp * std::polar(1.0, params.theta_p);
    const FockOperator a2 = a * a;

    Matrix h = params.delta_A * at.sigma_ee.matrix() + params.delta_c * (ad * a).matrix() + pump * a2.matrix() +
               std::conj(pump) * a2.matrix().adjoint();
    if (params.atom_present) {
        h += params.g0 * ((a * at.sigma_eg).matrix() + (ad * at.sigma_ge).matrix());
    }
    FockOperator out(dims, std::move(h), "H_lab");
    check_hermitian(out);
    return out;
}

FockOperator build_hamiltonian_squeezed(const ModelParams& params, HilbertDims dims) {
    if (params.frame != Frame::Squeezed) {
        throw Error(ErrorKind::InvalidConfig, "build_hamiltonian_squeezed called with lab-frame parameters");
    }
    const FockOperator a = destroy(dims);
    const FockOperator ad = a.adjoint();
    const AtomOperators at = atom_ops(dims);

    Matrix h = params.delta_A * at.sigma_ee.matrix() + params.omega_s * (ad * a).matrix();
    if (params.atom_present) {
        const double g_s = enhanced_couplings(params.g0, params.r).g_s;
        h += g_s * ((a * at.sigma_eg).matrix() + (ad * at.sigma_ge).matrix());
    }
    FockOperator out(dims, std::move(h), "H_s");
    check_hermitian(out);
    return out;
}

FockOperator build_hamiltonian(const ModelParams& params, HilbertDims dims) {
    return params.frame == Frame::Lab ? build_hamiltonian_lab(params, dims) : build_hamiltonian_squeezed(params, dims);
}

std::vector<DissipatorSpec> build_dissipators(const ModelParams& params, HilbertDims dims) {
    const FockOperator a = destroy(dims);
    const FockOperator ad = a.adjoint();
    const FockOperator sigma_ge = atom_ops(dims).sigma_ge;
    const double atom_rate = params.atom_present || params.gamma > 0.0 ? params.gamma : params.kappa;

    std::vector<DissipatorSpec> out;
    if (params.frame == Frame::Lab) {
        out.push_back({a, params.kappa, {}});
    } else {
        const auto [n_s, m_s] = noise_params(params.r);
        // +kappa M_s/2 [a^2 rho - 2 a rho a + rho a^2] and its M_s^* partner.
        std::vector<CrossTerm> cross{{a, ad, Complex(-params.kappa * m_s)}, {ad, a, Complex(-params.kappa * m_s)}};
        out.push_back({a, params.kappa * (n_s + 1.0), std::move(cross)});
        out.push_back({ad, params.kappa * n_s, {}});
    }
    out.push_back({sigma_ge, atom_rate, {}});
    return out;
}

DiagonalizationResidual diagonalization_residual(const ModelParams& params, HilbertDims dims,
                                                 std::optional<double> r_override) {
    require_below_threshold(params.delta_c, params.omega_p_amp);
    const double r = r_override.value_or(params.r);
    const int lower = std::max(1, 2 * dims.cavity_dim() / 3);

    // Columns S|n>, n < lower, on enough rows to hold them completely.
    int rows = static_cast<int>(std::ceil(0.65 * std::exp(2.0 * std::abs(r)) * (2.0 * lower + 1.0))) + 60;
    Matrix cols;
    for (;;) {
        cols = cavity::squeeze_block(r, params.theta_p, rows, lower);
        const double lost = (Eigen::VectorXd::Ones(lower) - cols.colwise().squaredNorm().transpose()).cwiseAbs().maxCoeff();
        if (lost < 1e-13) break;
        rows = rows * 3 / 2;
    }

    // H_NL on the padded rows; the top levels carry no amplitude of cols.
    const Complex pump = 0.5 * params.omega_p_amp * std::polar(1.0, params.theta_p);
    SparseMatrix h(rows, rows);
    std::vector<Eigen::Triplet<Complex>> trip;
    for (int n = 0; n < rows; ++n) {
        trip.emplace_back(n, n, params.delta_c * n);
        if (n >= 2) {
            const double amp = std::sqrt(static_cast<double>(n) * (n - 1));
            trip.emplace_back(n - 2, n, pump * amp);             // a^2
            trip.emplace_back(n, n - 2, std::conj(pump) * amp);  // a^dag^2
        }
    }
    h.setFromTriplets(trip.begin(), trip.end());

    const Matrix conj = cols.adjoint() * h * cols;
    Matrix target = params.omega_s * cavity::number(lower);
    const Complex offset = (conj - target).diagonal().mean();
    target.diagonal().array() += offset;
    return {(conj - target).cwiseAbs().maxCoeff(), offset.real()};
}

}  // namespace sqcav
