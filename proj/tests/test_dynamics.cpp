#include <cmath>
#include <random>

#include "doctest.h"
#include "sqcav/dynamics.hpp"
#include "sqcav/error.hpp"
#include "sqcav/model.hpp"
#include "sqcav/oracle.hpp"
#include "test_util.hpp"

using namespace sqcav;

namespace {

// Lindblad bracket  X rho - 2 A rho B + rho X, written out term by term.
Matrix bracket(const Matrix& x, const Matrix& a, const Matrix& b, const Matrix& rho) {
    return x * rho - 2.0 * a * rho * b + rho * x;
}

Matrix lab_rhs_by_hand(const ModelParams& p, HilbertDims dims, const Matrix& rho) {
    const Matrix h = build_hamiltonian_lab(p, dims).matrix();
    const Matrix a = destroy(dims).matrix();
    const Matrix ad = a.adjoint();
    const auto at = atom_ops(dims);
    const Matrix see = at.sigma_ee.matrix();
    const Matrix sge = at.sigma_ge.matrix();
    const Matrix seg = at.sigma_eg.matrix();
    const Complex i(0.0, 1.0);
    return i * (rho * h - h * rho) - 0.5 * p.gamma * bracket(see, sge, seg, rho) -
           0.5 * p.kappa * bracket(ad * a, a, ad, rho);
}

Matrix squeezed_rhs_by_hand(const ModelParams& p, HilbertDims dims, const Matrix& rho) {
    const Matrix h = build_hamiltonian_squeezed(p, dims).matrix();
    const Matrix a = destroy(dims).matrix();
    const Matrix ad = a.adjoint();
    const auto at = atom_ops(dims);
    const Matrix see = at.sigma_ee.matrix();
    const Matrix sge = at.sigma_ge.matrix();
    const Matrix seg = at.sigma_eg.matrix();
    const auto [ns, ms] = noise_params(p.r);
    const Complex i(0.0, 1.0);
    const double k = p.kappa;
    return i * (rho * h - h * rho) - 0.5 * p.gamma * bracket(see, sge, seg, rho) -
           0.5 * k * (ns + 1.0) * bracket(ad * a, a, ad, rho) - 0.5 * k * ns * bracket(a * ad, ad, a, rho) +
           0.5 * k * ms * bracket(a * a, a, a, rho) + 0.5 * k * ms * bracket(ad * ad, ad, ad, rho);
}

Matrix random_state(std::mt19937& rng, HilbertDims dims) { return test::random_density(rng, dims.dim()); }

}  // namespace

TEST_CASE("lab generator matches the master equation term by term") {
    std::mt19937 rng(3);
    const HilbertDims dims(2);
    for (double r : {0.0, 0.3, 0.9}) {
        const auto p = ModelParams::from_squeezing(Frame::Lab, 1.7, r, 0.8, 0.4, true, 1.3);
        const Matrix rho = random_state(rng, dims);
        const Matrix got = build_liouvillian(p, dims).apply(rho);
        CHECK(test::max_abs(got - lab_rhs_by_hand(p, dims, rho)) < 1e-12);
    }
}

TEST_CASE("squeezed generator matches the master equation term by term") {
    std::mt19937 rng(4);
    for (int n : {2, 5}) {
        const HilbertDims dims(n);
        for (double r : {0.0, 0.4, 1.1}) {
            const auto p = ModelParams::from_squeezing(Frame::Squeezed, 2.0, r, 1.5, 0.7, true, 0.9);
            const Matrix rho = random_state(rng, dims);
            const Matrix got = build_liouvillian(p, dims).apply(rho);
            CAPTURE(n);
            CAPTURE(r);
            CHECK(test::max_abs(got - squeezed_rhs_by_hand(p, dims, rho)) < 1e-12);
        }
    }
}

TEST_CASE("generator preserves trace and hermiticity") {
    std::mt19937 rng(5);
    const HilbertDims dims(6);
    for (Frame f : {Frame::Lab, Frame::Squeezed}) {
        const auto p = ModelParams::from_squeezing(f, 1.0, 0.6, 2.0, 0.5, true);
        const Liouvillian l = build_liouvillian(p, dims);
        const Matrix rho = random_state(rng, dims);
        const Matrix drho = l.apply(rho);
        CHECK(std::abs(drho.trace()) < 1e-12);
        CHECK(test::max_abs(drho - drho.adjoint()) < 1e-12);
    }
}

TEST_CASE("vacuum is stationary under pure decay") {
    const HilbertDims dims(5);
    const auto p = ModelParams::from_squeezing(Frame::Lab, 1.0, 0.0, 0.0, 1.0, false);
    const Liouvillian l = build_liouvillian(p, dims);
    const auto vac = DensityMatrix::basis_state(dims, kGround, 0);
    CHECK(test::max_abs(l.apply(vac.matrix())) < 1e-15);
    const auto ss = steady_state_report(l);
    CHECK(test::max_abs(ss.state.matrix() - vac.matrix()) < 1e-12);
}

TEST_CASE("one photon decays as exp(-kappa t)") {
    const HilbertDims dims(4);
    const double kappa = 0.7;
    const auto p = ModelParams::from_squeezing(Frame::Lab, 1.0, 0.0, 0.0, 1.0, false, kappa);
    const auto l = build_liouvillian(p, dims);
    const auto rho0 = DensityMatrix::basis_state(dims, kGround, 1);
    const std::vector<double> times{0.0, 0.5, 1.0, 2.0, 4.0};
    const auto traj = evolve(rho0, l, times);
    for (size_t k = 0; k < times.size(); ++k) {
        CHECK(std::abs(traj.records[k].mean_photon - std::exp(-kappa * times[k])) < 1e-6);
    }
    CHECK(traj.max_trace_drift < 1e-9);
}

TEST_CASE("zero generator leaves the state unchanged") {
    std::mt19937 rng(6);
    const HilbertDims dims(3);
    const FockOperator zero(dims, Matrix::Zero(dims.dim(), dims.dim()));
    const auto l = build_liouvillian(zero, {});
    const DensityMatrix rho0(dims, random_state(rng, dims));
    const auto traj = evolve(rho0, l, {0.0, 1.0, 5.0});
    for (const auto& s : traj.states) CHECK(test::max_abs(s.matrix() - rho0.matrix()) < 1e-14);
}

TEST_CASE("evolution agrees with the brute-force exponential") {
    std::mt19937 rng(7);
    const HilbertDims dims(2);
    for (Frame f : {Frame::Lab, Frame::Squeezed}) {
        const auto p = ModelParams::from_squeezing(f, 1.2, 0.5, 0.9, 0.6, true);
        const auto h = build_hamiltonian(p, dims);
        const auto dissip = build_dissipators(p, dims);
        const auto l = build_liouvillian(h, dissip, f);
        const DensityMatrix rho0(dims, random_state(rng, dims));
        EvolveOptions opt;
        opt.rtol = 1e-12;
        opt.atol = 1e-14;
        const std::vector<double> times{0.0, 0.3, 1.0, 2.5};
        const auto traj = evolve(rho0, l, times, opt);
        CHECK(test::max_abs(traj.states[0].matrix() - rho0.matrix()) == 0.0);
        for (size_t k = 1; k < times.size(); ++k) {
            const Matrix ref = oracle::small_system_brute_force(h, dissip, rho0.matrix(), times[k]);
            CHECK(test::max_abs(traj.states[k].matrix() - ref) < 1e-9);
        }
    }
}

TEST_CASE("semigroup property") {
    std::mt19937 rng(8);
    const HilbertDims dims(4);
    const auto p = ModelParams::from_squeezing(Frame::Squeezed, 1.0, 0.4, 1.0, 0.5, true);
    const auto l = build_liouvillian(p, dims);
    const DensityMatrix rho0(dims, random_state(rng, dims));
    EvolveOptions opt;
    opt.rtol = 1e-12;
    opt.atol = 1e-15;
    const auto direct = evolve(rho0, l, {0.0, 1.7}, opt);
    const auto first = evolve(rho0, l, {0.0, 0.6}, opt);
    const auto second = evolve(first.states.back(), l, {0.0, 1.1}, opt);
    CHECK(test::max_abs(direct.states.back().matrix() - second.states.back().matrix()) < 1e-10);
}

TEST_CASE("fixed-step integration tracks the adaptive one") {
    const HilbertDims dims(4);
    const auto p = ModelParams::from_squeezing(Frame::Squeezed, 1.0, 0.4, 1.0, 0.5, true);
    const auto l = build_liouvillian(p, dims);
    const auto rho0 = DensityMatrix::basis_state(dims, kGround, 0);
    EvolveOptions fixed;
    fixed.fixed_step = 0.01;
    const auto a = evolve(rho0, l, {0.0, 1.0, 2.0});
    const auto b = evolve(rho0, l, {0.0, 1.0, 2.0}, fixed);
    CHECK(test::max_abs(a.states.back().matrix() - b.states.back().matrix()) < 1e-7);
}

TEST_CASE("step-size underflow is reported") {
    const HilbertDims dims(4);
    const auto p = ModelParams::from_squeezing(Frame::Lab, 1.0, 0.0, 1.0, 1.0, true);
    const auto l = build_liouvillian(p, dims);
    EvolveOptions opt;
    opt.max_steps = 3;
    try {
        (void)evolve(DensityMatrix::basis_state(dims, kGround, 2), l, {0.0, 50.0}, opt);
        FAIL("expected a step-size error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::StepSize);
    }
}

TEST_CASE("steady-state methods agree") {
    const HilbertDims dims(6);
    for (Frame f : {Frame::Lab, Frame::Squeezed}) {
        const auto p = ModelParams::from_squeezing(f, 1.0, 0.3, 1.5, 0.5, true);
        const auto l = build_liouvillian(p, dims);
        const auto lu = steady_state_report(l, SteadyStateMethod::BorderedLU);
        const auto eig = steady_state_report(l, SteadyStateMethod::DenseEigen);
        const auto integ = steady_state_report(l, SteadyStateMethod::Integration);
        CHECK(lu.residual < kSteadyResidualTol);
        CHECK(test::max_abs(lu.state.matrix() - eig.state.matrix()) < 1e-8);
        CHECK(test::max_abs(lu.state.matrix() - integ.state.matrix()) < 1e-8);
        CHECK(lu.min_eigenvalue > -1e-10);
    }
}

TEST_CASE("the steady state does not depend on the initial state") {
    std::mt19937 rng(9);
    const HilbertDims dims(6);
    const auto p = ModelParams::from_squeezing(Frame::Squeezed, 1.0, 0.5, 1.0, 0.5, true);
    const auto l = build_liouvillian(p, dims);
    const auto ss = steady_state(l);
    for (int k = 0; k < 2; ++k) {
        const DensityMatrix rho0 = k == 0 ? DensityMatrix::basis_state(dims, kExcited, 3)
                                          : DensityMatrix(dims, random_state(rng, dims));
        const auto traj = evolve(rho0, l, {0.0, 60.0});
        CHECK(test::max_abs(traj.states.back().matrix() - ss.matrix()) < 1e-6);
    }
}

TEST_CASE("a generator without dissipation has no unique steady state") {
    const HilbertDims dims(3);
    const auto p = ModelParams::from_squeezing(Frame::Lab, 1.0, 0.0, 1.0, 1.0, true);
    const auto l = build_liouvillian(build_hamiltonian(p, dims), {});
    try {
        (void)steady_state(l);
        FAIL("expected a degenerate steady state");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateSteadyState);
    }
}

TEST_CASE("empty-cavity fast path equals the full solve") {
    const HilbertDims dims(20);
    for (Frame f : {Frame::Lab, Frame::Squeezed}) {
        for (double r : {0.0, 0.5}) {
            const auto p = ModelParams::from_squeezing(f, 1.0, r, 3.0, 1.0, false);
            const auto fast = solve_model_steady_state(p, dims);
            const auto full = steady_state_report(build_liouvillian(p, dims));
            CHECK(test::max_abs(fast.state.matrix() - full.state.matrix()) < 1e-10);
        }
    }
}

TEST_CASE("long evolution reaches the solver's steady state") {
    const double r = 0.8;
    {
        const HilbertDims dims(30);
        const auto p = ModelParams::from_squeezing(Frame::Squeezed, 0.5, r, 0.0, 1.0, false);
        const auto l = build_liouvillian(p, dims);
        const auto ss = solve_model_steady_state(p, dims);
        const auto traj = evolve(DensityMatrix::basis_state(dims, kGround, 0), l, {0.0, 50.0});
        const auto a = traj.records.back();
        const auto b = moments(ss.state, Frame::Squeezed);
        CHECK(std::abs(a.mean_photon - b.mean_photon) < 1e-6);
        CHECK(std::abs(a.second_moment - b.second_moment) < 1e-6);
    }
    {
        const HilbertDims dims(30);
        const auto p = ModelParams::from_squeezing(Frame::Squeezed, 0.5, r, 5.0, 1.0, true);
        const auto l = build_liouvillian(p, dims);
        const auto ss = solve_model_steady_state(p, dims);
        const auto traj = evolve(DensityMatrix::basis_state(dims, kGround, 0), l, {0.0, 50.0});
        const auto a = traj.records.back();
        const auto b = moments(ss.state, Frame::Squeezed);
        CHECK(std::abs(a.mean_photon - b.mean_photon) < 1e-5);
        CHECK(std::abs(a.second_moment - b.second_moment) < 1e-5);
    }
}
