#include "sqcav/operators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sqcav/error.hpp"

namespace sqcav {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidDims: return "invalid-dims";
        case ErrorKind::DimensionMismatch: return "dimension-mismatch";
        case ErrorKind::Threshold: return "threshold";
        case ErrorKind::Truncation: return "truncation";
        case ErrorKind::InvalidConfig: return "invalid-config";
        case ErrorKind::InvalidState: return "invalid-state";
        case ErrorKind::DegenerateSteadyState: return "degenerate-steady-state";
        case ErrorKind::NonConvergence: return "non-convergence";
        case ErrorKind::StepSize: return "step-size";
        case ErrorKind::Positivity: return "positivity";
        case ErrorKind::Internal: return "internal";
    }
    return "unknown";
}

HilbertDims::HilbertDims(int cutoff) : fock_cutoff(cutoff) {
    if (cutoff < 2) {
        throw Error(ErrorKind::InvalidDims, "fock_cutoff must be >= 2, got " + std::to_string(cutoff));
    }
}

namespace {

void require_same_dims(const HilbertDims& a, const HilbertDims& b) {
    if (!(a == b)) {
        throw Error(ErrorKind::DimensionMismatch,
                    "operators built for fock_cutoff " + std::to_string(a.fock_cutoff) + " and " +
                        std::to_string(b.fock_cutoff) + " cannot be combined");
    }
}

void require_square(const Matrix& m, int dim, const char* what) {
    if (m.rows() != dim || m.cols() != dim) {
        throw Error(ErrorKind::DimensionMismatch, std::string(what) + ": expected " + std::to_string(dim) +
                                                      " square matrix, got " + std::to_string(m.rows()) + "x" +
                                                      std::to_string(m.cols()));
    }
}

Matrix atom_identity() { return Matrix::Identity(HilbertDims::atom_dim, HilbertDims::atom_dim); }

Matrix on_cavity(HilbertDims, const Matrix& cavity_op) { return kron(atom_identity(), cavity_op); }

Matrix on_atom(HilbertDims dims, const Matrix& atom_op) {
    return kron(atom_op, Matrix::Identity(dims.cavity_dim(), dims.cavity_dim()));
}

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

constexpr double kLeakTol = 1e-14;
constexpr int kLeakRows = 20;
constexpr int kMaxPaddedDim = 6000;

// i^k for integer k >= 0, exactly.
Complex ipow(int k) {
    static const Complex table[4] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
    return table[k % 4];
}

// D(t) = exp(-i t X), X = i (a^dag - a). With phases i^n, X is the real
// chain with off-diagonal sqrt(n + 1).
cavity::ChainPropagator displacement_chain(int levels) {
    Eigen::VectorXd off(levels - 1);
    Vector phases(levels);
    for (int n = 0; n < levels; ++n) phases(n) = ipow(n);
    for (int n = 0; n + 1 < levels; ++n) off(n) = std::sqrt(n + 1.0);
    return {off, std::move(phases)};
}

// Number of Fock levels 2k + parity below `levels`.
int chain_length(int levels, int parity) { return std::max(0, (levels - parity + 1) / 2); }

// S = exp(-i r Y), Y = (i/2)(e^{-i theta} a^2 - e^{i theta} a^dag^2), restricted
// to the levels 2k + parity. Phases (-i e^{i theta})^k make Y real.
cavity::ChainPropagator squeeze_chain(int length, int parity, double theta) {
    Eigen::VectorXd off(length - 1);
    Vector phases(length);
    for (int k = 0; k < length; ++k) phases(k) = ipow(3 * (k % 4)) * std::polar(1.0, k * theta);
    for (int k = 1; k < length; ++k) {
        const double n = 2.0 * k + parity;
        off(k - 1) = 0.5 * std::sqrt(n * (n - 1.0));
    }
    return {off, std::move(phases)};
}

[[noreturn]] void padding_exhausted(const char* what) {
    throw Error(ErrorKind::Truncation,
                std::string(what) + " needs more than " + std::to_string(kMaxPaddedDim) + " Fock levels");
}

int squeeze_padding(double r, int rows, int cols) {
    const double tip = 0.5 * std::exp(2.0 * std::abs(r)) * (2.0 * cols + 1.0);
    return std::max(rows, static_cast<int>(std::ceil(1.3 * tip))) + 60;
}

int displacement_padding(double amplitude, int rows, int cols) {
    const double reach = amplitude + std::sqrt(static_cast<double>(cols) + 1.0);
    return std::max(rows, static_cast<int>(std::ceil(1.3 * reach * reach))) + 60;
}

}  // namespace

// ---------------------------------------------------------------------------
// FockOperator

FockOperator::FockOperator(HilbertDims dims, Matrix matrix, std::string label)
    : dims_(dims), matrix_(std::move(matrix)), label_(std::move(label)) {
    require_square(matrix_, dims_.dim(), "FockOperator");
}

FockOperator FockOperator::adjoint() const { return {dims_, matrix_.adjoint(), label_ + "^dag"}; }

double FockOperator::hermiticity_defect() const { return max_abs(matrix_ - matrix_.adjoint()); }

FockOperator FockOperator::operator*(const FockOperator& rhs) const {
    require_same_dims(dims_, rhs.dims_);
    return {dims_, matrix_ * rhs.matrix_, label_ + "*" + rhs.label_};
}

FockOperator FockOperator::operator+(const FockOperator& rhs) const {
    require_same_dims(dims_, rhs.dims_);
    return {dims_, matrix_ + rhs.matrix_, label_ + "+" + rhs.label_};
}

FockOperator FockOperator::operator-(const FockOperator& rhs) const {
    require_same_dims(dims_, rhs.dims_);
    return {dims_, matrix_ - rhs.matrix_, label_ + "-" + rhs.label_};
}

FockOperator FockOperator::operator*(Complex scale) const { return {dims_, scale * matrix_, label_}; }

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(HilbertDims dims, Matrix matrix) : dims_(dims), matrix_(std::move(matrix)) {
    require_square(matrix_, dims_.dim(), "DensityMatrix");
    const double herm = max_abs(matrix_ - matrix_.adjoint());
    if (herm > kHermitianTol) {
        std::ostringstream msg;
        msg << "density matrix not Hermitian, defect " << herm;
        throw Error(ErrorKind::InvalidState, msg.str());
    }
    const Complex tr = matrix_.trace();
    if (std::abs(tr - 1.0) > kTraceTol) {
        throw Error(ErrorKind::InvalidState, "density matrix trace " + std::to_string(tr.real()) + " != 1");
    }
    const Matrix herm_part = 0.5 * (matrix_ + matrix_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(herm_part, Eigen::EigenvaluesOnly);
    min_eigenvalue_ = eig.eigenvalues().minCoeff();
    if (min_eigenvalue_ < -kPositivityTol) {
        throw Error(ErrorKind::Positivity,
                    "density matrix has eigenvalue " + std::to_string(min_eigenvalue_) + " below -1e-8");
    }
}

DensityMatrix DensityMatrix::pure(HilbertDims dims, const Vector& psi) {
    if (psi.size() != dims.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "state vector has wrong length");
    }
    const Vector unit = psi / psi.norm();
    return {dims, unit * unit.adjoint()};
}

DensityMatrix DensityMatrix::basis_state(HilbertDims dims, int atom_level, int fock_level) {
    if (atom_level < 0 || atom_level > 1 || fock_level < 0 || fock_level > dims.fock_cutoff) {
        throw Error(ErrorKind::InvalidDims, "basis state outside the truncated space");
    }
    Matrix m = Matrix::Zero(dims.dim(), dims.dim());
    const int k = dims.index(atom_level, fock_level);
    m(k, k) = 1.0;
    return {dims, std::move(m)};
}

Complex DensityMatrix::expectation(const FockOperator& op) const {
    require_same_dims(dims_, op.dims());
    return (op.matrix().cwiseProduct(matrix_.transpose())).sum();
}

// ---------------------------------------------------------------------------
// Factories

FockOperator identity(HilbertDims dims) { return {dims, Matrix::Identity(dims.dim(), dims.dim()), "I"}; }

FockOperator destroy(HilbertDims dims) { return {dims, on_cavity(dims, cavity::destroy(dims.cavity_dim())), "a"}; }

FockOperator create(HilbertDims dims) {
    return {dims, on_cavity(dims, cavity::destroy(dims.cavity_dim()).adjoint()), "a^dag"};
}

FockOperator number(HilbertDims dims) { return {dims, on_cavity(dims, cavity::number(dims.cavity_dim())), "n"}; }

AtomOperators atom_ops(HilbertDims dims) {
    Matrix ee = Matrix::Zero(2, 2);
    ee(kExcited, kExcited) = 1.0;
    Matrix eg = Matrix::Zero(2, 2);
    eg(kExcited, kGround) = 1.0;
    return {FockOperator(dims, on_atom(dims, ee), "sigma_ee"), FockOperator(dims, on_atom(dims, eg), "sigma_eg"),
            FockOperator(dims, on_atom(dims, eg.adjoint()), "sigma_ge")};
}

namespace {

// The factories hold exact matrix elements <m|U|n> for m, n <= N_max. Columns
// whose image reaches past the cutoff are necessarily not unitary there, so
// the check asks only that the vacuum column keeps its norm.
void check_vacuum_column(const Matrix& block, const std::string& what, int cutoff) {
    const double lost = 1.0 - block.col(0).squaredNorm();
    if (lost > 1e-8) {
        std::ostringstream msg;
        msg << what << " is not resolved at fock_cutoff " << cutoff << " (vacuum column loses " << lost
            << " of its norm)";
        throw Error(ErrorKind::Truncation, msg.str());
    }
}

}  // namespace

FockOperator squeeze_operator(HilbertDims dims, double r, double theta) {
    const int n = dims.cavity_dim();
    const Matrix block = cavity::squeeze_block(r, theta, n, n);
    check_vacuum_column(block, "squeeze r=" + std::to_string(r), dims.fock_cutoff);
    return {dims, on_cavity(dims, block), "S"};
}

FockOperator displacement_operator(HilbertDims dims, Complex alpha) {
    const int n = dims.cavity_dim();
    const Matrix block = cavity::displacement_block(alpha, n, n);
    check_vacuum_column(block, "displacement |alpha|=" + std::to_string(std::abs(alpha)), dims.fock_cutoff);
    return {dims, on_cavity(dims, block), "D"};
}

// ---------------------------------------------------------------------------
// Vectorization and superoperators

Vector vectorize(const Matrix& rho) { return Eigen::Map<const Vector>(rho.data(), rho.size()); }

Vector vectorize(const DensityMatrix& rho) { return vectorize(rho.matrix()); }

Matrix unvectorize_matrix(const Vector& v) {
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(v.size()))));
    if (d * d != v.size()) {
        throw Error(ErrorKind::DimensionMismatch, "vector length " + std::to_string(v.size()) + " is not a square");
    }
    return Eigen::Map<const Matrix>(v.data(), d, d);
}

DensityMatrix unvectorize(HilbertDims dims, const Vector& v) {
    if (v.size() != static_cast<Eigen::Index>(dims.dim()) * dims.dim()) {
        throw Error(ErrorKind::DimensionMismatch, "vector length does not match the Hilbert space");
    }
    return {dims, unvectorize_matrix(v)};
}

SparseMatrix to_sparse(const Matrix& m) {
    std::vector<Eigen::Triplet<Complex>> trip;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (m(i, j) != Complex(0.0)) trip.emplace_back(i, j, m(i, j));
        }
    }
    SparseMatrix s(m.rows(), m.cols());
    s.setFromTriplets(trip.begin(), trip.end());
    return s;
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b) {
    std::vector<Eigen::Triplet<Complex>> trip;
    trip.reserve(static_cast<std::size_t>(a.nonZeros()) * static_cast<std::size_t>(b.nonZeros()));
    for (int ja = 0; ja < a.outerSize(); ++ja) {
        for (SparseMatrix::InnerIterator ia(a, ja); ia; ++ia) {
            for (int jb = 0; jb < b.outerSize(); ++jb) {
                for (SparseMatrix::InnerIterator ib(b, jb); ib; ++ib) {
                    trip.emplace_back(ia.row() * b.rows() + ib.row(), ia.col() * b.cols() + ib.col(),
                                      ia.value() * ib.value());
                }
            }
        }
    }
    SparseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    out.setFromTriplets(trip.begin(), trip.end());
    return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

SparseMatrix spre(const Matrix& a) {
    SparseMatrix id(a.rows(), a.rows());
    id.setIdentity();
    return kron(id, to_sparse(a));
}

SparseMatrix spost(const Matrix& b) {
    SparseMatrix id(b.rows(), b.rows());
    id.setIdentity();
    return kron(to_sparse(b.transpose()), id);
}

SparseMatrix sprepost(const Matrix& a, const Matrix& b) { return kron(to_sparse(b.transpose()), to_sparse(a)); }

// ---------------------------------------------------------------------------
// Reduced states

Matrix partial_trace_atom(const Matrix& rho, HilbertDims dims) {
    require_square(rho, dims.dim(), "partial_trace_atom");
    const int n = dims.cavity_dim();
    return rho.block(0, 0, n, n) + rho.block(n, n, n, n);
}

Matrix partial_trace_atom(const DensityMatrix& rho) { return partial_trace_atom(rho.matrix(), rho.dims()); }

double truncation_tail_cavity(const Matrix& rho_cavity) {
    const int cutoff = static_cast<int>(rho_cavity.rows()) - 1;
    const int edge = static_cast<int>(std::floor(0.8 * cutoff));
    double tail = 0.0;
    for (int n = edge + 1; n <= cutoff; ++n) tail += rho_cavity(n, n).real();
    return tail;
}

double truncation_tail(const DensityMatrix& rho) { return truncation_tail_cavity(partial_trace_atom(rho)); }

// ---------------------------------------------------------------------------
// Single-mode blocks

namespace cavity {

Matrix destroy(int n_levels) {
    Matrix a = Matrix::Zero(n_levels, n_levels);
    for (int n = 1; n < n_levels; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return a;
}

Matrix number(int n_levels) {
    Matrix n = Matrix::Zero(n_levels, n_levels);
    for (int k = 0; k < n_levels; ++k) n(k, k) = static_cast<double>(k);
    return n;
}

ChainPropagator::ChainPropagator(const Eigen::VectorXd& off_diagonal, Vector phases) : phases_(std::move(phases)) {
    const auto n = phases_.size();
    if (off_diagonal.size() + 1 != n) {
        throw Error(ErrorKind::DimensionMismatch, "chain generator sizes do not match");
    }
    if (n == 1) {
        vectors_ = Eigen::MatrixXd::Identity(1, 1);
        values_ = Eigen::VectorXd::Zero(1);
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(Eigen::VectorXd::Zero(n), off_diagonal, Eigen::ComputeEigenvectors);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorKind::NonConvergence, "eigendecomposition of operator generator failed");
    }
    vectors_ = eig.eigenvectors();
    values_ = eig.eigenvalues();
}

Matrix ChainPropagator::block(double t, int row0, int rows, int cols) const {
    const Eigen::VectorXd c = (-t * values_).array().cos();
    const Eigen::VectorXd s = (-t * values_).array().sin();
    const auto vr = vectors_.middleRows(row0, rows);
    const auto vc = vectors_.topRows(cols);
    const Eigen::MatrixXd re = vr * c.asDiagonal() * vc.transpose();
    const Eigen::MatrixXd im = vr * s.asDiagonal() * vc.transpose();
    Matrix out(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            out(i, j) = phases_(row0 + i) * Complex(re(i, j), im(i, j)) * std::conj(phases_(j));
        }
    }
    return out;
}

Matrix squeeze_block(double r, double theta, int rows, int cols) {
    if (r == 0.0) return Matrix::Identity(rows, cols);
    int padded = squeeze_padding(r, rows, cols);
    for (;;) {
        padded = std::max({padded, rows + 2 * kLeakRows, cols + 2 * kLeakRows});
        Matrix out = Matrix::Zero(rows, cols);
        bool leaks = false;
        // S only connects levels of equal parity.
        for (int parity = 0; parity < 2 && !leaks; ++parity) {
            const int len = chain_length(padded, parity);
            const int rows_p = chain_length(rows, parity);
            const int cols_p = chain_length(cols, parity);
            if (cols_p == 0) continue;
            const ChainPropagator prop = squeeze_chain(len, parity, theta);
            if (max_abs(prop.block(r, len - kLeakRows, kLeakRows, cols_p)) >= kLeakTol) {
                leaks = true;
                break;
            }
            const Matrix b = prop.block(r, 0, rows_p, cols_p);
            for (int j = 0; j < cols_p; ++j)
                for (int i = 0; i < rows_p; ++i) out(2 * i + parity, 2 * j + parity) = b(i, j);
        }
        if (!leaks) return out;
        if (padded >= kMaxPaddedDim) padding_exhausted("squeeze operator");
        padded = std::min(kMaxPaddedDim, padded * 3 / 2);
    }
}

Matrix displacement_block(Complex alpha, int rows, int cols) {
    const double amplitude = std::abs(alpha);
    if (amplitude == 0.0) return Matrix::Identity(rows, cols);
    int padded = displacement_padding(amplitude, rows, cols);
    for (;;) {
        padded = std::max({padded, rows + kLeakRows, cols + kLeakRows});
        const ChainPropagator prop = displacement_chain(padded);
        if (max_abs(prop.block(amplitude, padded - kLeakRows, kLeakRows, cols)) < kLeakTol) {
            Matrix block = prop.block(amplitude, 0, rows, cols);
            const double phi = std::arg(alpha);
            for (int m = 0; m < rows; ++m) {
                for (int n = 0; n < cols; ++n) block(m, n) *= std::polar(1.0, (m - n) * phi);
            }
            return block;
        }
        if (padded >= kMaxPaddedDim) padding_exhausted("displacement operator");
        padded = std::min(kMaxPaddedDim, padded * 3 / 2);
    }
}

Eigen::MatrixXd displacement_elements(double beta, int levels) {
    Eigen::MatrixXd out(levels, levels);
    if (beta == 0.0) {
        out.setIdentity();
        return out;
    }
    const double x = beta * beta;
    const double log_beta = std::log(beta);
    std::vector<double> lag(static_cast<std::size_t>(levels));
    for (int k = 0; k < levels; ++k) {
        // L_j^{(k)}(x) for j = 0 .. levels - 1 - k by the three-term recurrence
        const int top = levels - k;
        lag[0] = 1.0;
        if (top > 1) lag[1] = 1.0 + k - x;
        for (int j = 1; j + 1 < top; ++j) lag[j + 1] = ((2.0 * j + 1.0 + k - x) * lag[j] - (j + k) * lag[j - 1]) / (j + 1.0);
        for (int j = 0; j < top; ++j) {
            // <j+k| D |j> = sqrt(j!/(j+k)!) beta^k e^{-x/2} L_j^{(k)}(x); the transpose element has (-beta)^k
            const double log_f = 0.5 * (std::lgamma(j + 1.0) - std::lgamma(j + k + 1.0)) + k * log_beta - 0.5 * x;
            const double v = std::exp(log_f) * lag[j];
            out(j + k, j) = v;
            out(j, j + k) = (k % 2) ? -v : v;
        }
    }
    if (!out.allFinite()) {
        throw Error(ErrorKind::NonConvergence, "displacement elements overflow at |beta| = " + std::to_string(beta));
    }
    return out;
}

}  // namespace cavity

}  // namespace sqcav
