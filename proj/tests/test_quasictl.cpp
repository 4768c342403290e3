#include "wavectl/quasictl.hpp"

#include <doctest.h>

#include <cmath>

using namespace wavectl;

namespace {

QuasiProblem small_problem(int n, double y0_amp, double dt = 4e-3) {
    const Domain d = Domain::interval(0, 1);
    const GeometrySpec g = gamma_setup(d, Point{-0.1, 0.0}, 0.6);
    QuasiProblem p;
    p.basis = build_basis(d, n);
    p.window = make_window(d, g.omega_hull(), 0.1);
    p.geometry = g;
    p.T = 2.4;
    p.dt = dt;
    p.y0 = Vec::Zero(n);
    p.y0(0) = y0_amp;
    p.y1 = Vec::Zero(n);
    return p;
}

Trajectory constant_trajectory(const Vec& q, const Vec& p, int nodes) {
    Trajectory tr;
    tr.dt = 0.1;
    for (int k = 0; k < nodes; ++k) {
        tr.times.push_back(0.1 * k);
        tr.states.push_back(State{q, p, 0.1 * k});
    }
    return tr;
}

}  // namespace

TEST_CASE("exponential transform") {
    Vec q(2), p(2);
    q << 1.0, -2.0;
    p << 0.5, 3.0;
    const State s0{q, p, 0.0};
    const State d0 = exp_transform(s0, ExpDirection::ToDamped);
    CHECK((d0.pos - q).norm() == 0.0);
    CHECK((d0.vel - (q + p)).norm() < 1e-15);

    const State s{q, p, 0.7};
    const State d = exp_transform(s, ExpDirection::ToDamped);
    CHECK((d.pos - std::exp(0.7) * q).norm() < 1e-14);
    const State back = exp_transform(d, ExpDirection::FromDamped);
    CHECK((back.pos - q).norm() < 1e-14);
    CHECK((back.vel - p).norm() < 1e-14);

    const State z{Vec::Zero(2), Vec::Zero(2), 1.3};
    CHECK(exp_transform(z, ExpDirection::ToDamped).pos.norm() == 0.0);
}

TEST_CASE("nonlinearity checks") {
    CHECK(check_quasi_nonlinearity(QuasiNonlinearity::zero(), 1).pass);
    CHECK(check_quasi_nonlinearity(QuasiNonlinearity::quad_gt(1.0), 1).pass);
    CHECK(check_quasi_nonlinearity(QuasiNonlinearity::eps_y_diffusion(0.05), 2).pass);

    QuasiNonlinearity lin = QuasiNonlinearity::zero();
    lin.g1 = [](const FieldArgs& a) { return a.yt; };
    lin.dg1_dyt = [](const FieldArgs&) { return 1.0; };
    CHECK_FALSE(check_quasi_nonlinearity(lin, 1).pass);

    QuasiNonlinearity offset = QuasiNonlinearity::zero();
    offset.g2 = [](const FieldArgs&) { return std::array<double, 3>{0.1, 0.0, 0.1}; };
    CHECK_FALSE(check_quasi_nonlinearity(offset, 1).pass);

    CHECK(check_full_nonlinearity(FullNonlinearity::vt_square(1.0), 1).pass);
    FullNonlinearity lf = FullNonlinearity::zero();
    lf.F = [](const FullArgs& a) { return a.v; };
    CHECK_FALSE(check_full_nonlinearity(lf, 1).pass);
}

TEST_CASE("frozen coefficients") {
    auto b = build_basis(Domain::interval(0, 1), 8);
    const int m = b->grid_size();

    SUBCASE("zero iterate gives the damped Klein-Gordon coefficients") {
        const Trajectory tr = constant_trajectory(Vec::Zero(8), Vec::Zero(8), 3);
        const FrozenCoefficients f = freeze_coefficients(QuasiNonlinearity::quad_gt(), *b, tr);
        CHECK(f.a_dev == 0.0);
        CHECK(f.b0_dev == 0.0);
        CHECK(f.b_dev == 0.0);
        CHECK(f.b_tilde_dev == 0.0);
    }

    SUBCASE("quadratic velocity term shifts the damping by y_t") {
        Vec p = Vec::Zero(8);
        p(0) = 0.2;
        const Trajectory tr = constant_trajectory(Vec::Zero(8), p, 2);
        const FrozenCoefficients f = freeze_coefficients(QuasiNonlinearity::quad_gt(1.0), *b, tr);
        const Vec yt = synthesize(p, *b);
        REQUIRE(f.fields.size() == 2);
        for (int i = 0; i < m; ++i) CHECK(f.fields[0].b0(i) == doctest::Approx(2.0 + yt(i)).epsilon(1e-12));
    }

    SUBCASE("diffusion term lowers a11 by eps y") {
        Vec q = Vec::Zero(8);
        q(0) = 0.3;
        const Trajectory tr = constant_trajectory(q, Vec::Zero(8), 2);
        const FrozenCoefficients f = freeze_coefficients(QuasiNonlinearity::eps_y_diffusion(0.05), *b, tr);
        const Vec y = synthesize(q, *b);
        for (int i = 0; i < m; ++i) CHECK(f.fields[1].a[0](i) == doctest::Approx(1.0 - 0.05 * y(i)).epsilon(1e-12));
        CHECK(f.a_dev == doctest::Approx(0.05 * y.cwiseAbs().maxCoeff()).epsilon(1e-12));
    }
}

TEST_CASE("zero data converges immediately with zero control") {
    const QuasiProblem p = small_problem(8, 0.0);
    const QuasiResult r = iterate_quasilinear(p, QuasiNonlinearity::eps_y_diffusion(0.05));
    CHECK(r.report.converged);
    CHECK(r.report.iterations == 1);
    CHECK(r.control.coeffs().norm() == 0.0);
}

TEST_CASE("vanishing nonlinearity drives the state to rest") {
    const QuasiProblem p = small_problem(8, 0.004);
    const QuasiResult r = iterate_quasilinear(p, QuasiNonlinearity::zero());
    CHECK(r.report.converged);
    const QuasiResimulation sim = resimulate_quasilinear(p, QuasiNonlinearity::zero(), p.basis, r.control);
    CHECK(sim.ratio <= 1e-8);
}

TEST_CASE("quasi-linear iteration contracts for small data") {
    const QuasiProblem p = small_problem(8, 0.004);
    QuasiOptions o;
    o.tol = 1e-8;
    const QuasiResult r = iterate_quasilinear(p, QuasiNonlinearity::eps_y_diffusion(0.05), o);
    CHECK(r.report.converged);
    CHECK(r.report.fitted_rate < 1.0);
    CHECK(r.report.telescoping_defect < 1e-10);
    CHECK(r.report.terminal_norm < 1e-6);
}

TEST_CASE("quasi-linear preconditions") {
    QuasiProblem p = small_problem(8, 1.0);
    CHECK_THROWS_AS(p.validate(), InvalidArgument);  // data above the smallness gate
    p = small_problem(8, 0.004);
    p.T = 0.5;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);  // shorter than T_min
    p = small_problem(8, 0.004);
    p.dt = 0.7;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("fully nonlinear control with F = 0 matches the linear damped system") {
    const QuasiProblem p = small_problem(8, 0.0);
    QuasiProblem q = p;
    q.y1(0) = 0.004;
    const FullyNonlinearResult r = fully_nonlinear_control(q, FullNonlinearity::zero());
    CHECK(r.report.iteration.converged);
    CHECK(r.report.terminal_ratio <= 1e-6);
    CHECK(r.report.v_consistency <= 1e-8);
}
