#include "sqcav/oracle.hpp"

#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include "sqcav/error.hpp"

namespace sqcav::oracle {

GaussianMoments empty_cavity_steady_moments(double delta_c, double omega_p_amp, double kappa) {
    if (!(omega_p_amp >= 0.0) || !(omega_p_amp < delta_c)) {
        throw Error(ErrorKind::Threshold, "moment oracle needs 0 <= omega_p < delta_c");
    }
    if (!(kappa > 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "moment oracle needs kappa > 0");
    }
    // Unknowns (n, u, v) with m = u + i v.
    Eigen::Matrix3d a;
    a << -kappa, 0.0, -2.0 * omega_p_amp,
         0.0, -kappa, 2.0 * delta_c,
         -2.0 * omega_p_amp, -2.0 * delta_c, -kappa;
    const Eigen::Vector3d b(0.0, 0.0, omega_p_amp);
    const Eigen::Vector3d x = a.fullPivLu().solve(b);
    return {x(0), {x(1), x(2)}};
}

namespace {

// Column-stacking: vec(A X B) = kron(B^T, A) vec(X).
Matrix dense_kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Matrix left_times(const Matrix& a) { return dense_kron(Matrix::Identity(a.rows(), a.rows()), a); }
Matrix right_times(const Matrix& b) { return dense_kron(b.transpose(), Matrix::Identity(b.rows(), b.rows())); }

}  // namespace

Matrix small_system_brute_force(const FockOperator& hamiltonian, const std::vector<DissipatorSpec>& dissipators,
                                const Matrix& rho0, double t) {
    const int d = hamiltonian.dims().dim();
    if (d > 8) {
        throw Error(ErrorKind::InvalidDims, "brute-force propagation limited to composite dimension 8");
    }
    if (rho0.rows() != d || rho0.cols() != d) {
        throw Error(ErrorKind::DimensionMismatch, "initial state does not match the Hamiltonian");
    }
    const Matrix& h = hamiltonian.matrix();
    const Complex i(0.0, 1.0);
    Matrix gen = i * (right_times(h) - left_times(h));
    auto add_term = [&](const Matrix& l, const Matrix& r, Complex c) {
        const Matrix rd = r.adjoint();
        gen += c * (left_times(l) * right_times(rd) - 0.5 * left_times(rd * l) - 0.5 * right_times(rd * l));
    };
    for (const auto& dsp : dissipators) {
        add_term(dsp.jump_operator.matrix(), dsp.jump_operator.matrix(), dsp.rate);
        for (const auto& c : dsp.cross_terms) add_term(c.left.matrix(), c.right.matrix(), c.coeff);
    }
    const Matrix prop = (t * gen).exp();
    const Vector v0 = Eigen::Map<const Vector>(rho0.data(), rho0.size());
    const Vector v = prop * v0;
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

}  // namespace sqcav::oracle
