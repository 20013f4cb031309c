#include "sqcav/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>
#ifdef SQCAV_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "sqcav/error.hpp"

namespace sqcav {

namespace {

struct RawTerm {
    Matrix left;
    Matrix right;
    Complex coeff;
};

std::vector<RawTerm> raw_terms(const std::vector<DissipatorSpec>& dissipators) {
    std::vector<RawTerm> out;
    for (const auto& d : dissipators) {
        if (d.rate < 0.0) {
            throw Error(ErrorKind::InvalidConfig, "dissipator rate must be nonnegative");
        }
        if (d.rate != 0.0) out.push_back({d.jump_operator.matrix(), d.jump_operator.matrix(), Complex(d.rate)});
        for (const auto& c : d.cross_terms) {
            if (c.coeff != Complex(0.0)) out.push_back({c.left.matrix(), c.right.matrix(), c.coeff});
        }
    }
    return out;
}

SparseMatrix assemble(const Matrix& h, const std::vector<RawTerm>& terms) {
    const Complex minus_i(0.0, -1.0);
    SparseMatrix l = minus_i * (spre(h) - spost(h));
    for (const auto& t : terms) {
        const Matrix right_dag = t.right.adjoint();
        const Matrix product = right_dag * t.left;
        l += t.coeff * (sprepost(t.left, right_dag) - 0.5 * spre(product) - 0.5 * spost(product));
    }
    l.makeCompressed();
    return l;
}

// Replaces equation `row` by the trace condition and solves.
Matrix bordered_solve(const SparseMatrix& l, int d, Eigen::Index row) {
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(static_cast<std::size_t>(l.nonZeros()) + static_cast<std::size_t>(d));
    for (int j = 0; j < l.outerSize(); ++j) {
        for (SparseMatrix::InnerIterator it(l, j); it; ++it) {
            if (it.row() != row) trip.emplace_back(it.row(), it.col(), it.value());
        }
    }
    for (int k = 0; k < d; ++k) trip.emplace_back(row, static_cast<Eigen::Index>(k) * d + k, Complex(1.0));
    SparseMatrix a(l.rows(), l.cols());
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();

#ifdef SQCAV_HAVE_UMFPACK
    Eigen::UmfPackLU<SparseMatrix> lu;
#else
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
#endif
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success) {
        throw Error(ErrorKind::DegenerateSteadyState, "bordered steady-state system is singular");
    }
    Vector rhs = Vector::Zero(l.rows());
    rhs(row) = 1.0;
    const Vector x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite()) {
        throw Error(ErrorKind::NonConvergence, "bordered steady-state solve failed");
    }
    return unvectorize_matrix(x);
}

Matrix normalize_state(Matrix rho) {
    rho /= rho.trace();
    return 0.5 * (rho + rho.adjoint());
}

Matrix steady_bordered(const SparseMatrix& l, int d) {
    const Matrix first = normalize_state(bordered_solve(l, d, 0));
    const Eigen::Index last_diag = static_cast<Eigen::Index>(d - 1) * d + (d - 1);
    const Matrix second = normalize_state(bordered_solve(l, d, last_diag));
    const double disagreement = (first - second).cwiseAbs().maxCoeff();
    if (disagreement > 1e-8) {
        throw Error(ErrorKind::DegenerateSteadyState,
                    "steady state depends on the eliminated equation (disagreement " + std::to_string(disagreement) +
                        "); the null space is not one-dimensional");
    }
    return first;
}

Matrix steady_dense_eigen(const SparseMatrix& l) {
    if (l.rows() > 4096) {
        throw Error(ErrorKind::InvalidConfig, "dense eigen steady-state method limited to 4096 unknowns");
    }
    Eigen::ComplexEigenSolver<Matrix> eig(Matrix(l), true);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorKind::NonConvergence, "eigendecomposition of the Liouvillian failed");
    }
    const auto& vals = eig.eigenvalues();
    int zero_count = 0;
    Eigen::Index best = 0;
    for (Eigen::Index k = 0; k < vals.size(); ++k) {
        if (std::abs(vals(k)) < 1e-8) ++zero_count;
        if (std::abs(vals(k)) < std::abs(vals(best))) best = k;
    }
    if (zero_count > 1) {
        throw Error(ErrorKind::DegenerateSteadyState,
                    std::to_string(zero_count) + " Liouvillian eigenvalues lie within 1e-8 of zero");
    }
    if (zero_count == 0) {
        throw Error(ErrorKind::NonConvergence, "no Liouvillian eigenvalue within 1e-8 of zero");
    }
    return normalize_state(unvectorize_matrix(eig.eigenvectors().col(best)));
}

MomentSet record_for(const Matrix& rho, HilbertDims dims, Frame frame) {
    return moments_cavity(partial_trace_atom(rho, dims), frame);
}

DensityMatrix checked_state(HilbertDims dims, const Matrix& rho, double t) {
    try {
        return DensityMatrix(dims, rho);
    } catch (const Error& e) {
        std::ostringstream msg;
        msg << "state at t=" << t << " left the physical set: " << e.what();
        throw Error(e.kind(), msg.str());
    }
}

constexpr double kHermitianDriftTol = 1e-8;

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = b1 - 5179.0 / 57600, e3 = b3 - 7571.0 / 16695, e4 = b4 - 393.0 / 640,
                 e5 = b5 + 92097.0 / 339200, e6 = b6 - 187.0 / 2100, e7 = -1.0 / 40;

class Stepper {
public:
    Stepper(const SparseMatrix& l, const EvolveOptions& opt) : l_(l), opt_(opt) {}

    // Advances y from t to t_end.
    void advance(Vector& y, double t, double t_end, Trajectory& traj) {
        if (opt_.fixed_step) {
            advance_rk4(y, t, t_end, traj);
        } else {
            advance_dopri(y, t, t_end, traj);
        }
    }

private:
    Vector f(const Vector& y) const { return l_ * y; }

    void advance_rk4(Vector& y, double t, double t_end, Trajectory& traj) {
        const double span = t_end - t;
        const long n = std::max(1L, static_cast<long>(std::ceil(span / *opt_.fixed_step - 1e-12)));
        const double h = span / static_cast<double>(n);
        for (long s = 0; s < n; ++s) {
            const Vector k1 = f(y);
            const Vector k2 = f(y + 0.5 * h * k1);
            const Vector k3 = f(y + 0.5 * h * k2);
            const Vector k4 = f(y + h * k3);
            y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            ++traj.accepted_steps;
        }
    }

    void advance_dopri(Vector& y, double t, double t_end, Trajectory& traj) {
        const Eigen::Index n = y.size();
        if (!have_k1_) {
            for (Vector* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &stage_, &y_new_}) v->resize(n);
            k1_.noalias() = l_ * y;
            have_k1_ = true;
        }
        if (h_ <= 0.0) h_ = opt_.initial_step;
        while (t < t_end) {
            if (traj.accepted_steps + traj.rejected_steps > opt_.max_steps) {
                throw Error(ErrorKind::StepSize, "integrator exceeded the step budget");
            }
            const bool last = t + h_ >= t_end;
            const double h = last ? t_end - t : h_;
            stage_ = y + (h * a21) * k1_;
            k2_.noalias() = l_ * stage_;
            stage_ = y + h * (a31 * k1_ + a32 * k2_);
            k3_.noalias() = l_ * stage_;
            stage_ = y + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
            k4_.noalias() = l_ * stage_;
            stage_ = y + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
            k5_.noalias() = l_ * stage_;
            stage_ = y + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
            k6_.noalias() = l_ * stage_;
            y_new_ = y + h * (b1 * k1_ + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
            k7_.noalias() = l_ * y_new_;
            // error vector reuses the stage buffer
            stage_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);

            // squared magnitudes avoid a hypot per element
            double err_sq = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double scale =
                    opt_.atol + opt_.rtol * std::sqrt(std::max(std::norm(y(i)), std::norm(y_new_(i))));
                err_sq = std::max(err_sq, std::norm(stage_(i)) / (scale * scale));
            }
            const double err_norm = std::sqrt(err_sq);
            const double factor =
                err_norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 5.0);
            if (err_norm <= 1.0) {
                t = last ? t_end : t + h;
                y.swap(y_new_);
                k1_.swap(k7_);
                ++traj.accepted_steps;
                // A shortened final step says nothing about the next one.
                if (!last || factor < 1.0) h_ = h * factor;
            } else {
                ++traj.rejected_steps;
                h_ = h * std::min(1.0, factor);
            }
            if (h_ < 1e-14 * std::max(1.0, std::abs(t))) {
                std::ostringstream msg;
                msg << "step size underflow at t=" << t;
                throw Error(ErrorKind::StepSize, msg.str());
            }
        }
    }

    const SparseMatrix& l_;
    const EvolveOptions& opt_;
    Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_, stage_, y_new_;
    bool have_k1_ = false;
    double h_ = 0.0;
};

}  // namespace

Matrix Liouvillian::apply(const Matrix& rho) const {
    if (rho.rows() != dims.dim() || rho.cols() != dims.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "state does not match the Liouvillian dimension");
    }
    return unvectorize_matrix(matrix * vectorize(rho));
}

Liouvillian build_liouvillian(const FockOperator& hamiltonian, const std::vector<DissipatorSpec>& dissipators,
                              Frame frame) {
    for (const auto& d : dissipators) {
        if (!(d.jump_operator.dims() == hamiltonian.dims())) {
            throw Error(ErrorKind::DimensionMismatch, "dissipator and Hamiltonian dimensions differ");
        }
        for (const auto& c : d.cross_terms) {
            if (!(c.left.dims() == hamiltonian.dims()) || !(c.right.dims() == hamiltonian.dims())) {
                throw Error(ErrorKind::DimensionMismatch, "cross-term and Hamiltonian dimensions differ");
            }
        }
    }
    return {hamiltonian.dims(), assemble(hamiltonian.matrix(), raw_terms(dissipators)), frame};
}

Liouvillian build_liouvillian(const ModelParams& params, HilbertDims dims) {
    return build_liouvillian(build_hamiltonian(params, dims), build_dissipators(params, dims), params.frame);
}

double liouvillian_residual(const Liouvillian& l, const Matrix& rho) { return l.apply(rho).cwiseAbs().maxCoeff(); }

Trajectory evolve(const DensityMatrix& rho0, const Liouvillian& l, const std::vector<double>& times,
                  const EvolveOptions& options) {
    if (!(rho0.dims() == l.dims)) {
        throw Error(ErrorKind::DimensionMismatch, "initial state and Liouvillian dimensions differ");
    }
    if (times.empty()) {
        throw Error(ErrorKind::InvalidConfig, "time grid is empty");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1])) {
            throw Error(ErrorKind::InvalidConfig, "time grid must be strictly increasing");
        }
    }
    if (options.fixed_step && !(*options.fixed_step > 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "fixed step must be positive");
    }

    Trajectory traj;
    const Complex trace0 = rho0.matrix().trace();
    Vector y = vectorize(rho0);
    Stepper stepper(l.matrix, options);
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (k > 0) stepper.advance(y, times[k - 1], times[k], traj);
        Matrix rho = unvectorize_matrix(y);
        // L preserves Hermiticity exactly; only roundoff breaks it, so it is
        // removed here and the integration continues from the symmetric part.
        const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
        if (herm > kHermitianDriftTol) {
            std::ostringstream msg;
            msg << "state at t=" << times[k] << " lost Hermiticity, defect " << herm;
            throw Error(ErrorKind::InvalidState, msg.str());
        }
        rho = 0.5 * (rho + rho.adjoint());
        y = vectorize(rho);
        traj.max_trace_drift = std::max(traj.max_trace_drift, std::abs(rho.trace() - trace0));
        DensityMatrix state = checked_state(l.dims, rho, times[k]);
        traj.times.push_back(times[k]);
        traj.records.push_back(record_for(rho, l.dims, l.frame));
        if (options.keep_states) traj.states.push_back(std::move(state));
    }
    if (traj.max_trace_drift > 1e-8) {
        throw Error(ErrorKind::NonConvergence, "trace drifted by " + std::to_string(traj.max_trace_drift));
    }
    return traj;
}

SteadyStateReport steady_state_report(const Liouvillian& l, SteadyStateMethod method) {
    const int d = l.dims.dim();
    Matrix rho;
    switch (method) {
        case SteadyStateMethod::BorderedLU:
            rho = steady_bordered(l.matrix, d);
            break;
        case SteadyStateMethod::DenseEigen:
            rho = steady_dense_eigen(l.matrix);
            break;
        case SteadyStateMethod::Integration: {
            EvolveOptions opt;
            opt.keep_states = false;
            opt.rtol = 1e-10;
            opt.atol = 1e-14;
            Vector y = vectorize(Matrix(Matrix::Identity(d, d) / static_cast<double>(d)));
            Trajectory scratch;
            Stepper stepper(l.matrix, opt);
            double t = 0.0;
            for (;;) {
                stepper.advance(y, t, t + 10.0, scratch);
                t += 10.0;
                if ((l.matrix * y).cwiseAbs().maxCoeff() < 0.1 * kSteadyResidualTol) break;
                if (t > 1e5) {
                    throw Error(ErrorKind::NonConvergence, "time integration did not reach the steady state");
                }
            }
            rho = normalize_state(unvectorize_matrix(y));
            break;
        }
    }
    const double residual = liouvillian_residual(l, rho);
    if (!(residual < kSteadyResidualTol)) {
        throw Error(ErrorKind::NonConvergence, "steady-state residual " + std::to_string(residual) + " above 1e-10");
    }
    DensityMatrix state(l.dims, std::move(rho));
    const double min_eig = state.min_eigenvalue();
    return {std::move(state), residual, min_eig, method};
}

DensityMatrix steady_state(const Liouvillian& l, SteadyStateMethod method) {
    return steady_state_report(l, method).state;
}

SteadyStateReport solve_model_steady_state(const ModelParams& params, HilbertDims dims) {
    const Liouvillian full = build_liouvillian(params, dims);
    if (params.atom_present) return steady_state_report(full);

    // The atom sits in |g> and never couples: keep only the ground block.
    const int n = dims.cavity_dim();
    const Matrix h = build_hamiltonian(params, dims).matrix().topLeftCorner(n, n);
    std::vector<RawTerm> cavity_terms;
    for (auto& t : raw_terms(build_dissipators(params, dims))) {
        Matrix left = t.left.topLeftCorner(n, n);
        Matrix right = t.right.topLeftCorner(n, n);
        if (left.isZero(0.0) || right.isZero(0.0)) continue;
        cavity_terms.push_back({std::move(left), std::move(right), t.coeff});
    }
    const Matrix rho_cavity = steady_bordered(assemble(h, cavity_terms), n);

    Matrix rho = Matrix::Zero(dims.dim(), dims.dim());
    rho.topLeftCorner(n, n) = rho_cavity;
    const double residual = liouvillian_residual(full, rho);
    if (!(residual < kSteadyResidualTol)) {
        throw Error(ErrorKind::NonConvergence, "steady-state residual " + std::to_string(residual) + " above 1e-10");
    }
    DensityMatrix state(dims, std::move(rho));
    const double min_eig = state.min_eigenvalue();
    return {std::move(state), residual, min_eig, SteadyStateMethod::BorderedLU};
}

}  // namespace sqcav
