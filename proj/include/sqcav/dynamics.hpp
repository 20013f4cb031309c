#pragma once

#include <optional>
#include <vector>

#include "sqcav/model.hpp"
#include "sqcav/observables.hpp"
#include "sqcav/operators.hpp"

namespace sqcav {

/// Generator of the master equation on column-stacked density matrices.
struct Liouvillian {
    HilbertDims dims;
    SparseMatrix matrix;
    Frame frame = Frame::Lab;

    Matrix apply(const Matrix& rho) const;
    Matrix dense() const { return Matrix(matrix); }
};

/// rho -> i[rho, H] + sum over dissipators of
///   rate D[L] rho + sum over cross terms coeff (A rho B^dag - 1/2 {B^dag A, rho}).
Liouvillian build_liouvillian(const FockOperator& hamiltonian, const std::vector<DissipatorSpec>& dissipators,
                              Frame frame = Frame::Lab);

Liouvillian build_liouvillian(const ModelParams& params, HilbertDims dims);

/// max |L(rho)|.
double liouvillian_residual(const Liouvillian& l, const Matrix& rho);

struct EvolveOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    /// Fixed-step classical RK4 when set; used for reproducible trajectory files.
    std::optional<double> fixed_step;
    double initial_step = 1e-3;
    long max_steps = 50'000'000;
    bool keep_states = true;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<DensityMatrix> states;  // empty when keep_states is false
    std::vector<MomentSet> records;     // moments of the frame's ladder operator
    double max_trace_drift = 0.0;
    long accepted_steps = 0;
    long rejected_steps = 0;
};

/// Integrates d rho / dt = L(rho) from times.front() (where rho = rho0) over
/// the grid. Dormand-Prince 5(4) with local error control by default.
/// Throws ErrorKind::StepSize if the step underflows and ErrorKind::Positivity
/// (with the offending time) if a state leaves the physical set. Roundoff
/// asymmetry is removed at every grid time; a Hermiticity defect above 1e-8
/// is ErrorKind::InvalidState.
Trajectory evolve(const DensityMatrix& rho0, const Liouvillian& l, const std::vector<double>& times,
                  const EvolveOptions& options = {});

enum class SteadyStateMethod {
    BorderedLU,   // sparse LU with the trace condition replacing one equation
    DenseEigen,   // null vector of the dense generator; small systems only
    Integration,  // long-time integration until the residual is below tolerance
};

struct SteadyStateReport {
    DensityMatrix state;
    double residual;       // max |L(rho_ss)|
    double min_eigenvalue;  // reported, never clipped
    SteadyStateMethod method;
};

inline constexpr double kSteadyResidualTol = 1e-10;

/// Unique state annihilated by L. Throws ErrorKind::DegenerateSteadyState
/// when more than one candidate exists and ErrorKind::NonConvergence when
/// the residual stays above 1e-10.
SteadyStateReport steady_state_report(const Liouvillian& l, SteadyStateMethod method = SteadyStateMethod::BorderedLU);
DensityMatrix steady_state(const Liouvillian& l, SteadyStateMethod method = SteadyStateMethod::BorderedLU);

/// Steady state of a model. The empty cavity is solved on the cavity factor
/// alone (atom pinned in |g>), which gives the same state as the full
/// Liouvillian at a quarter of the size.
SteadyStateReport solve_model_steady_state(const ModelParams& params, HilbertDims dims);

}  // namespace sqcav
