#pragma once

// Operators on the truncated atom (x) cavity Hilbert space.
//
// Tensor ordering is atom (x) cavity everywhere: the composite basis index of
// |atom, n> is atom * (N_max + 1) + n, with |g> = 0 and |e> = 1.
// Vectorization stacks columns: vec(rho)[j * d + i] = rho(i, j), so that
// vec(A rho B) = (B^T (x) A) vec(rho).

#include <complex>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace sqcav {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex>;

struct HilbertDims {
    static constexpr int atom_dim = 2;
    int fock_cutoff = 2;

    HilbertDims() = default;
    /// Throws ErrorKind::InvalidDims when fock_cutoff < 2.
    explicit HilbertDims(int cutoff);

    int cavity_dim() const { return fock_cutoff + 1; }
    int dim() const { return atom_dim * cavity_dim(); }
    int index(int atom_level, int fock_level) const { return atom_level * cavity_dim() + fock_level; }

    friend bool operator==(const HilbertDims&, const HilbertDims&) = default;
};

inline constexpr int kGround = 0;
inline constexpr int kExcited = 1;

class FockOperator {
public:
    FockOperator(HilbertDims dims, Matrix matrix, std::string label = {});

    const HilbertDims& dims() const { return dims_; }
    const Matrix& matrix() const { return matrix_; }
    const std::string& label() const { return label_; }

    FockOperator adjoint() const;
    double hermiticity_defect() const;

    FockOperator operator*(const FockOperator& rhs) const;
    FockOperator operator+(const FockOperator& rhs) const;
    FockOperator operator-(const FockOperator& rhs) const;
    FockOperator operator*(Complex scale) const;
    friend FockOperator operator*(Complex scale, const FockOperator& op) { return op * scale; }

private:
    HilbertDims dims_;
    Matrix matrix_;
    std::string label_;
};

/// Hermitian, unit-trace, positive semidefinite state. Construction validates
/// all three properties; the smallest eigenvalue is kept so that tiny
/// negative values stay visible to callers.
class DensityMatrix {
public:
    static constexpr double kHermitianTol = 1e-12;
    static constexpr double kTraceTol = 1e-10;
    static constexpr double kPositivityTol = 1e-8;

    DensityMatrix(HilbertDims dims, Matrix matrix);

    static DensityMatrix pure(HilbertDims dims, const Vector& psi);
    static DensityMatrix basis_state(HilbertDims dims, int atom_level, int fock_level);

    const HilbertDims& dims() const { return dims_; }
    const Matrix& matrix() const { return matrix_; }
    double min_eigenvalue() const { return min_eigenvalue_; }

    Complex expectation(const FockOperator& op) const;

private:
    HilbertDims dims_;
    Matrix matrix_;
    double min_eigenvalue_ = 0.0;
};

struct AtomOperators {
    FockOperator sigma_ee;
    FockOperator sigma_eg;  // |e><g|
    FockOperator sigma_ge;  // |g><e|
};

FockOperator identity(HilbertDims dims);
FockOperator destroy(HilbertDims dims);
FockOperator create(HilbertDims dims);
FockOperator number(HilbertDims dims);
AtomOperators atom_ops(HilbertDims dims);

/// S(r, theta) = exp[(r/2)(e^{-i theta} a^2 - e^{i theta} a^dag^2)] on the
/// cavity factor. With theta = 0, S^dag a S = a cosh r - a^dag sinh r.
/// Holds the exact matrix elements for m, n <= N_max (computed on a padded
/// Fock space and projected back). Columns whose image leaves the truncated
/// space are not unitary there; ErrorKind::Truncation is thrown when even the
/// vacuum column loses more than 1e-8 of its norm.
FockOperator squeeze_operator(HilbertDims dims, double r, double theta = 0.0);

/// D(alpha) = exp(alpha a^dag - conj(alpha) a) on the cavity factor, with the
/// same padding and truncation check as squeeze_operator.
FockOperator displacement_operator(HilbertDims dims, Complex alpha);

Vector vectorize(const Matrix& rho);
Vector vectorize(const DensityMatrix& rho);
Matrix unvectorize_matrix(const Vector& v);
DensityMatrix unvectorize(HilbertDims dims, const Vector& v);

/// Superoperators under the column-stacking convention.
SparseMatrix spre(const Matrix& a);                        // rho -> a rho
SparseMatrix spost(const Matrix& b);                       // rho -> rho b
SparseMatrix sprepost(const Matrix& a, const Matrix& b);   // rho -> a rho b

SparseMatrix to_sparse(const Matrix& m);
SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);
Matrix kron(const Matrix& a, const Matrix& b);

/// Reduced cavity state Tr_atom(rho), a (N_max+1) square matrix.
Matrix partial_trace_atom(const Matrix& rho, HilbertDims dims);
Matrix partial_trace_atom(const DensityMatrix& rho);

/// Cavity population above Fock level floor(0.8 N_max).
double truncation_tail(const DensityMatrix& rho);
double truncation_tail_cavity(const Matrix& rho_cavity);

inline constexpr double kTruncationTailTol = 1e-6;

namespace cavity {

// Single-mode building blocks on an n_levels dimensional Fock space.
Matrix destroy(int n_levels);
Matrix number(int n_levels);

/// exp(-i t G) for a generator on a chain of Fock levels that is real
/// symmetric tridiagonal up to diagonal phases: G = U T U^dag,
/// U = diag(phases), T with zero diagonal and the given off-diagonal.
class ChainPropagator {
public:
    ChainPropagator(const Eigen::VectorXd& off_diagonal, Vector phases);

    int dim() const { return static_cast<int>(values_.size()); }
    /// Rows [row0, row0+rows) and columns [0, cols) of exp(-i t G).
    Matrix block(double t, int row0, int rows, int cols) const;

private:
    Eigen::MatrixXd vectors_;
    Eigen::VectorXd values_;
    Vector phases_;
};

/// Columns 0..cols-1 of the squeeze operator, rows 0..rows-1, evaluated on a
/// padded space large enough that the requested block is exact to ~1e-13.
Matrix squeeze_block(double r, double theta, int rows, int cols);

/// Same for D(alpha).
Matrix displacement_block(Complex alpha, int rows, int cols);

/// <n|D(beta)|m> for real beta >= 0 and n, m < levels, from the associated
/// Laguerre closed form. D(beta e^{i phi})_{nm} = e^{i (n-m) phi} times this.
Eigen::MatrixXd displacement_elements(double beta, int levels);

}  // namespace cavity

}  // namespace sqcav
