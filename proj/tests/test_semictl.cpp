#include "wavectl/semictl.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace wavectl;
using std::numbers::pi;

namespace {

SemilinearProblem small_problem(int basis_n, const VelocityNonlinearity& nl, double amp, double D = 50.0) {
    const Domain d = Domain::interval(0, 1);
    SemilinearProblem p;
    p.basis = build_basis(d, basis_n);
    p.window = make_window(d, Box::interval(0.7, 1), 0.1);
    p.T = 2.4;
    p.dt = 2e-3;
    p.y0 = Vec::Zero(basis_n);
    p.y0(0) = amp;
    p.y1 = Vec::Zero(basis_n);
    p.nonlinearity = nl;
    p.constants = compute_constants(nl.L, nl.L_tilde, D, p.window, *p.basis);
    return p;
}

Vec random_vec(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

}  // namespace

TEST_CASE("structural checks of velocity nonlinearities") {
    CHECK(check_nonlinearity(VelocityNonlinearity::linear(1.0, 1.0, 0.99)).pass);
    CHECK(check_nonlinearity(VelocityNonlinearity::lip_sin(2.0, 1.8)).pass);
    VelocityNonlinearity sq;
    sq.f = [](double v) { return v * v; };
    sq.L = 5.0;
    sq.L_tilde = 1.0;
    const NonlinearityCheck c = check_nonlinearity(sq);
    CHECK_FALSE(c.pass);
    CHECK(c.zero_ok);
    CHECK_FALSE(c.lipschitz_ok);
    REQUIRE(c.witness.has_value());
    const auto [a, b] = *c.witness;
    CHECK(std::abs(a * a - b * b) > 5.0 * std::abs(a - b));
}

TEST_CASE("semilinear constants") {
    const double L = 2.0, Lt = 1.9, D = 10.0;
    const SemilinearConstants c = compute_constants(L, Lt, D, 3.0, 40.0);
    CHECK(c.admissibility_lhs == doctest::Approx(std::pow(2.0 / 1.9 - 1.0, 2)));
    CHECK(c.admissibility_lhs == doctest::Approx(0.00277).epsilon(1e-3));
    CHECK(c.admissibility_rhs == doctest::Approx(0.1));
    const double C = (L * L + Lt * Lt) / (2 * (L - Lt)) * Lt * std::sqrt(D) / (Lt * std::sqrt(L) - (L - Lt) * std::sqrt(2 * D));
    CHECK(c.C_star == doctest::Approx(C).epsilon(1e-14));
    CHECK(c.D_star == doctest::Approx(c.C_star / c.delta).epsilon(1e-14));
    CHECK_THROWS_AS(compute_constants(2.0, 2.0, D, 3.0, 40.0), InvalidArgument);
    CHECK_THROWS_AS(compute_constants(2.0, 2.1, D, 3.0, 40.0), InvalidArgument);
    CHECK_THROWS_AS(compute_constants(2.0, 1.0, D, 3.0, 40.0), InvalidArgument);  // (L/L~ - 1)^2 = 1
}

TEST_CASE("delta from the Laplace ramp alone") {
    const double L = 2.0, Lt = 1.9, D = 10.0, lap = 40.0;
    const SemilinearConstants c = compute_constants(L, Lt, D, 0.0, lap);
    const double target = 0.5 * (1 / (2 * D) - (L - Lt) / (Lt * std::sqrt(2 * D * L)));
    CHECK(c.delta == doctest::Approx(target / (lap / (4 * L))).epsilon(1e-14));
}

TEST_CASE("galerkin_F without control or data") {
    const SemilinearProblem p = small_problem(8, VelocityNonlinearity::lip_sin(2.0, 1.9), 0.0);
    CHECK(galerkin_F(p, 4, Vec::Zero(8)).norm() == 0.0);
}

TEST_CASE("galerkin_F at x = 0 is the free flow") {
    const SemilinearProblem p = small_problem(8, VelocityNonlinearity::lip_sin(2.0, 1.9), 0.1);
    const Vec F = galerkin_F(p, 4, Vec::Zero(8));
    const BasisPtr sub = p.basis->truncated(4);
    const Trajectory tr = integrate(semilinear_forward_spec(sub, p.nonlinearity),
                                    State{p.y0.head(4), p.y1.head(4), 0.0}, 0.0, p.T, p.dt);
    CHECK((F.head(4) - tr.back().pos).norm() < 1e-12);
    CHECK((F.tail(4) - tr.back().vel).norm() < 1e-12);
}

TEST_CASE("galerkin_F is affine for linear f") {
    const SemilinearProblem p = small_problem(8, VelocityNonlinearity::linear(2.0, 2.0, 1.9), 0.1);
    std::mt19937_64 rng(9);
    const Vec x = 0.1 * random_vec(8, rng), y = 0.1 * random_vec(8, rng);
    const Vec F0 = galerkin_F(p, 4, Vec::Zero(8));
    const Vec d = galerkin_F(p, 4, x + y) - galerkin_F(p, 4, x) - galerkin_F(p, 4, y) + F0;
    CHECK(d.norm() < 1e-10 * (1 + F0.norm()));
}

TEST_CASE("tilde inner product") {
    auto b = build_basis(Domain::interval(0, 1), 4);
    const double l1 = 1 + pi * pi;
    const Vec e1 = Vec::Unit(8, 0);
    CHECK(tilde_inner(e1, e1, 1.0, *b) == doctest::Approx(l1 * l1 + l1).epsilon(1e-14));
    std::mt19937_64 rng(7);
    const Vec x = random_vec(8, rng), y = random_vec(8, rng), z = random_vec(8, rng);
    const double delta = 0.3;
    CHECK(tilde_inner(x, y, delta, *b) == doctest::Approx(tilde_inner(y, x, delta, *b)).epsilon(1e-12));
    CHECK(tilde_inner(2 * x + z, y, delta, *b) ==
          doctest::Approx(2 * tilde_inner(x, y, delta, *b) + tilde_inner(z, y, delta, *b)).epsilon(1e-12));
    Vec w(4);
    for (int j = 0; j < 4; ++j) w(j) = b->lambdas()(j) * b->lambdas()(j) / delta + b->lambdas()(j);
    const double r = tilde_norm(x, delta, *b) * tilde_norm(x, delta, *b) / x.squaredNorm();
    CHECK(r >= w.minCoeff() * (1 - 1e-12));
    CHECK(r <= w.maxCoeff() * (1 + 1e-12));
    CHECK(multiplier_pairing(x, y, delta, *b) == doctest::Approx(multiplier_pairing(y, x, delta, *b)).epsilon(1e-12));
}

TEST_CASE("zero data gives the zero control") {
    const SemilinearProblem p = small_problem(8, VelocityNonlinearity::lip_sin(2.0, 1.9), 0.0);
    auto [u, r] = solve_semilinear(p, 4);
    CHECK(r.converged);
    CHECK(r.x.norm() == 0.0);
    CHECK(u.coeffs().norm() == 0.0);
}

TEST_CASE("small semilinear solve and re-simulation") {
    const SemilinearProblem p = small_problem(12, VelocityNonlinearity::lip_sin(2.0, 1.9), 0.1);
    SemilinearOptions o;
    o.audit_radius = 1.0;
    o.audit_directions = 4;
    auto [u, r] = solve_semilinear(p, 6, o);
    CHECK(r.converged);
    CHECK(r.residual <= 1e-8);
    CHECK(r.audit.nonnegative);
    CHECK(r.control_bound_lhs <= r.control_bound_rhs);
    CHECK(r.printed_bound_lhs <= r.printed_bound_rhs);
    CHECK(r.energy_chain_lhs <= r.energy_chain_rhs);
    const SemilinearResimulation sim = resimulate_semilinear(p, p.basis, u);
    CHECK(sim.ratio < 1e-2);
}

TEST_CASE("semilinear preconditions") {
    SemilinearProblem p = small_problem(8, VelocityNonlinearity::lip_sin(2.0, 1.9), 0.1);
    p.dt = 0.7;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = small_problem(8, VelocityNonlinearity::lip_sin(2.0, 1.9), 0.1);
    CHECK_THROWS_AS(galerkin_F(p, 9, Vec::Zero(18)), InvalidArgument);
    CHECK_THROWS_AS(galerkin_F(p, 4, Vec::Zero(6)), InvalidArgument);
}
