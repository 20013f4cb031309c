#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "sqcav/dynamics.hpp"
#include "sqcav/error.hpp"
#include "sqcav/observables.hpp"
#include "sqcav/oracle.hpp"
#include "test_util.hpp"

using namespace sqcav;

namespace {

Matrix cavity_pure(const Vector& psi) { return psi * psi.adjoint(); }

Vector fock(int levels, int n) {
    Vector v = Vector::Zero(levels);
    v(n) = 1.0;
    return v;
}

// (2/pi) Tr[D(alpha) P D(alpha)^dag rho] with D from the padded matrix
// exponential; the intermediate sum runs over `wide` Fock levels.
double wigner_direct(const Matrix& rho, Complex alpha) {
    const int levels = static_cast<int>(rho.rows());
    const int wide = levels + 80;
    const Matrix d = cavity::displacement_block(alpha, levels, wide);
    Eigen::VectorXd parity(wide);
    for (int k = 0; k < wide; ++k) parity(k) = (k % 2) ? -1.0 : 1.0;
    const Matrix pi_alpha = d * parity.cast<Complex>().asDiagonal() * d.adjoint();
    return 2.0 / std::numbers::pi * (pi_alpha * rho).trace().real();
}

}  // namespace

TEST_CASE("moments of simple states") {
    const int levels = 121;
    const auto vac = moments_cavity(cavity_pure(fock(levels, 0)));
    CHECK(vac.mean_photon == 0.0);
    CHECK(std::abs(vac.second_moment) == 0.0);

    const auto two = moments_cavity(cavity_pure(fock(levels, 2)));
    CHECK(two.mean_photon == doctest::Approx(2.0));
    CHECK(std::abs(two.second_moment) < 1e-15);

    for (double r : {0.3, 1.0}) {
        const Vector sv = cavity::squeeze_block(r, 0.0, levels, 1).col(0);
        const auto m = moments_cavity(cavity_pure(sv));
        CHECK(std::abs(m.mean_photon - std::sinh(r) * std::sinh(r)) < 1e-10);
        CHECK(std::abs(m.second_moment - Complex(-std::sinh(r) * std::cosh(r))) < 1e-10);
        CHECK(m.satisfies_bound());
    }
}

TEST_CASE("lab moments from squeezed-frame moments") {
    const MomentSet zero{0.0, Complex(0.0), Frame::Squeezed};
    const auto lab = lab_moments_from_squeezed(zero, 1.0);
    CHECK(lab.frame == Frame::Lab);
    CHECK(lab.mean_photon == doctest::Approx(1.38110).epsilon(1e-5));
    CHECK(lab.abs_second_moment() == doctest::Approx(1.81343).epsilon(1e-5));

    const MomentSet some{0.7, Complex(0.2, -0.1), Frame::Squeezed};
    const auto same = lab_moments_from_squeezed(some, 0.0);
    CHECK(same.mean_photon == doctest::Approx(0.7));
    CHECK(std::abs(same.second_moment - some.second_moment) < 1e-15);

    CHECK_THROWS_AS(lab_moments_from_squeezed(MomentSet{0.0, Complex(0.0), Frame::Lab}, 1.0), Error);
}

TEST_CASE("the moment map agrees with conjugating the state") {
    std::mt19937 rng(21);
    const double r = 0.6;
    Matrix rho_s = Matrix::Zero(8, 8);
    rho_s.topLeftCorner(5, 5) = test::random_density(rng, 5);
    const auto ms = moments_cavity(rho_s, Frame::Squeezed);
    const auto mapped = lab_moments_from_squeezed(ms, r);
    const auto direct = moments_cavity(squeezed_to_lab_cavity(rho_s, r, 120));
    CHECK(std::abs(mapped.mean_photon - direct.mean_photon) < 1e-10);
    CHECK(std::abs(mapped.second_moment - direct.second_moment) < 1e-10);
}

TEST_CASE("output flux") {
    CHECK(output_flux(MomentSet{0.0, Complex(0.0), Frame::Lab}, 1.0) == 0.0);
    CHECK(output_flux(MomentSet{1.38110, Complex(0.0), Frame::Lab}, 1.0) == doctest::Approx(1.38110));
    CHECK(output_flux(MomentSet{0.5, Complex(0.0), Frame::Lab}, 2.0) <
          output_flux(MomentSet{0.6, Complex(0.0), Frame::Lab}, 2.0));
    CHECK_THROWS_AS(output_flux(MomentSet{0.5, Complex(0.0), Frame::Squeezed}, 1.0), Error);
}

TEST_CASE("Gaussian moment oracle") {
    const auto zero = oracle::empty_cavity_steady_moments(1.0, 0.0, 1.0);
    CHECK(zero.n == 0.0);
    CHECK(std::abs(zero.m) == 0.0);

    const auto base = oracle::empty_cavity_steady_moments(0.8, 0.5, 1.0);
    const auto scaled = oracle::empty_cavity_steady_moments(2.4, 1.5, 3.0);
    CHECK(std::abs(base.n - scaled.n) < 1e-14);
    CHECK(std::abs(std::abs(base.m) - std::abs(scaled.m)) < 1e-14);

    CHECK_THROWS_AS(oracle::empty_cavity_steady_moments(1.0, 1.0, 1.0), Error);
    CHECK_THROWS_AS(oracle::empty_cavity_steady_moments(1.0, 1.3, 1.0), Error);
}

TEST_CASE("Gaussian oracle matches the Liouvillian steady state") {
    struct Case {
        double delta_c, omega_p, kappa;
        int cutoff;
    };
    for (const Case& c : {Case{1.0, 0.3, 1.0, 30}, Case{0.5, 0.35, 1.0, 40}, Case{2.0, 1.5, 0.5, 60},
                          Case{10.0, 6.0, 1.0, 50}}) {
        const auto p = ModelParams::from_pump(Frame::Lab, c.delta_c, c.omega_p, 0.0, 1.0, false, c.kappa);
        const auto ss = solve_model_steady_state(p, HilbertDims(c.cutoff));
        const auto got = moments(ss.state);
        const auto ref = oracle::empty_cavity_steady_moments(c.delta_c, c.omega_p, c.kappa);
        CAPTURE(c.delta_c);
        CAPTURE(c.omega_p);
        CHECK(std::abs(got.mean_photon - ref.n) < 1e-8);
        CHECK(std::abs(got.second_moment - ref.m) < 1e-8);
    }
}

TEST_CASE("both frames give the same lab moments for the empty cavity") {
    for (double r : {0.2, 0.5, 0.8}) {
        const double delta_c = 1.0;
        const auto lab = ModelParams::from_squeezing(Frame::Lab, delta_c, r, 0.0, 1.0, false);
        const auto sq = ModelParams::from_squeezing(Frame::Squeezed, delta_c, r, 0.0, 1.0, false);
        const auto lab_m = moments(solve_model_steady_state(lab, HilbertDims(60)).state);
        const auto sq_m = lab_moments_from_squeezed(
            moments(solve_model_steady_state(sq, HilbertDims(60)).state, Frame::Squeezed), r);
        CAPTURE(r);
        CHECK(std::abs(lab_m.mean_photon - sq_m.mean_photon) < 1e-6);
        CHECK(std::abs(lab_m.abs_second_moment() - sq_m.abs_second_moment()) < 1e-6);
    }
}

TEST_CASE("squeezed-Fock photon distributions") {
    const int levels = 81;
    const Vector sv = cavity::squeeze_block(1.0, 0.0, levels, 1).col(0);
    const auto aligned = photon_distribution_cavity(cavity_pure(sv), DistributionBasis::SqueezedFock, 1.0);
    CHECK(aligned.probs[0] == doctest::Approx(1.0).epsilon(1e-10));
    for (int n = 1; n <= kDistributionReportMax; ++n) CHECK(aligned.probs[n] < 1e-10);

    const auto vac = photon_distribution_cavity(cavity_pure(fock(levels, 0)), DistributionBasis::SqueezedFock, 1.0);
    CHECK(vac.probs[0] == doctest::Approx(1.0 / std::cosh(1.0)).epsilon(1e-10));
    CHECK(vac.probs[0] == doctest::Approx(0.64805).epsilon(1e-5));
    CHECK(vac.probs[1] < 1e-12);
    // second series coefficient squared: (2! / (4 (1!)^2)) tanh^2(1) / cosh(1)
    const double p2 = 0.5 * std::pow(std::tanh(1.0), 2) / std::cosh(1.0);
    CHECK(std::abs(vac.probs[2] - p2) < 1e-10);
    CHECK(vac.probs[2] == doctest::Approx(0.187944).epsilon(1e-5));
    CHECK(vac.total() <= 1.0 + 1e-8);

    const auto bare = photon_distribution_cavity(cavity_pure(fock(levels, 3)), DistributionBasis::BareFock);
    CHECK(bare.probs[3] == 1.0);
}

TEST_CASE("distribution fails when the state reaches the cutoff") {
    const int levels = 11;
    try {
        (void)photon_distribution_cavity(cavity_pure(fock(levels, 9)), DistributionBasis::BareFock);
        FAIL("expected a truncation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Truncation);
    }
}

TEST_CASE("squeezed-Fock populations agree between the two solution paths") {
    const double r = 0.6;
    // empty cavity: lab solution projected on S|n> vs squeezed-frame populations
    const auto lab = ModelParams::from_squeezing(Frame::Lab, 1.0, r, 0.0, 1.0, false);
    const auto sq = ModelParams::from_squeezing(Frame::Squeezed, 1.0, r, 0.0, 1.0, false);
    const auto p_lab =
        photon_distribution(solve_model_steady_state(lab, HilbertDims(60)).state, DistributionBasis::SqueezedFock, r);
    const auto p_sq = photon_distribution(solve_model_steady_state(sq, HilbertDims(60)).state, DistributionBasis::BareFock);
    for (int n = 0; n <= kDistributionReportMax; ++n) CHECK(std::abs(p_lab.probs[n] - p_sq.probs[n]) < 1e-6);

    // atom present: squeezed-frame state mapped to the lab and projected back
    const auto at = ModelParams::from_squeezing(Frame::Squeezed, 1.0, r, 2.0, 1.0, true);
    const Matrix rho_s = partial_trace_atom(solve_model_steady_state(at, HilbertDims(30)).state);
    const auto direct = photon_distribution_cavity(rho_s, DistributionBasis::BareFock);
    const auto via_lab =
        photon_distribution_cavity(squeezed_to_lab_cavity(rho_s, r, 120), DistributionBasis::SqueezedFock, r);
    for (int n = 0; n <= kDistributionReportMax; ++n) CHECK(std::abs(direct.probs[n] - via_lab.probs[n]) < 1e-6);
}

TEST_CASE("Wigner function values") {
    const int levels = 41;
    const std::vector<double> origin{0.0};
    const auto vac = wigner_cavity(cavity_pure(fock(levels, 0)), origin, origin);
    CHECK(std::abs(vac.values(0, 0) - 2.0 / std::numbers::pi) < 1e-6);
    const auto one = wigner_cavity(cavity_pure(fock(levels, 1)), origin, origin);
    CHECK(std::abs(one.values(0, 0) + 2.0 / std::numbers::pi) < 1e-6);

    // coherent state |beta>: (2/pi) exp(-2 |alpha - beta|^2)
    const Complex beta(0.7, -0.4);
    const Vector coh = cavity::displacement_block(beta, levels, 1).col(0);
    const auto g = wigner_cavity(cavity_pure(coh), {0.7, 0.0}, {-0.4, 0.5});
    CHECK(std::abs(g.values(0, 0) - 2.0 / std::numbers::pi) < 1e-8);
    CHECK(std::abs(g.values(1, 1) - 2.0 / std::numbers::pi * std::exp(-2.0 * std::norm(Complex(0.0, 0.5) - beta))) <
          1e-8);
}

TEST_CASE("Wigner grid agrees with direct displaced-parity evaluation") {
    std::mt19937 rng(22);
    const int levels = 16;
    Matrix rho = Matrix::Zero(levels, levels);
    rho.topLeftCorner(6, 6) = test::random_density(rng, 6);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int k = 0; k < 5; ++k) {
        const double x = u(rng);
        const double p = u(rng);
        const auto w = wigner_cavity(rho, {x}, {p});
        CHECK(std::abs(w.values(0, 0) - wigner_direct(rho, Complex(x, p))) < 1e-8);
    }
}

TEST_CASE("Wigner grid of a squeezed vacuum") {
    const double r = 1.0;
    const Vector sv = cavity::squeeze_block(r, 0.0, 81, 1).col(0);
    const auto axis = linspace(-7.0, 7.0, 71);
    const auto grid = wigner_cavity(cavity_pure(sv), axis, axis);
    CHECK(std::abs(grid.integral() - 1.0) < 1e-2);
    CHECK(grid.values.maxCoeff() <= 2.0 / std::numbers::pi + 1e-9);
    CHECK(grid.values.minCoeff() >= -2.0 / std::numbers::pi - 1e-9);
    const auto q = grid.quadratures();
    CHECK(std::abs(q.var_minor / (std::exp(-2.0 * r) / 4.0) - 1.0) < 0.02);
    CHECK(std::abs(q.var_major / (std::exp(2.0 * r) / 4.0) - 1.0) < 0.02);
}

TEST_CASE("squeezed vacuum series") {
    const HilbertDims small(4);
    CHECK(test::max_abs(squeezed_vacuum_state(0.0, small).matrix() -
                        DensityMatrix::basis_state(small, kGround, 0).matrix()) == 0.0);

    for (double r : {0.3, 0.8, 1.2}) {
        const int n = 120;
        const Vector series = squeezed_vacuum_amplitudes(r, n);
        const Vector op = squeeze_operator(HilbertDims(n), r).matrix().col(0).head(n + 1);
        CAPTURE(r);
        CHECK(1.0 - std::norm(series.dot(op)) < 1e-8);
    }

    // At N = 40 and r = 1.2 the series keeps all but about 1e-4 of the norm,
    // so the state factory refuses that cutoff.
    const double loss = 1.0 - squeezed_vacuum_amplitudes(1.2, 40).squaredNorm();
    CHECK(loss > 1e-5);
    CHECK(loss < 1e-3);
    try {
        (void)squeezed_vacuum_state(1.2, HilbertDims(40));
        FAIL("expected a truncation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Truncation);
    }
    CHECK(1.0 - squeezed_vacuum_amplitudes(1.2, 90).squaredNorm() < 1e-6);
}
