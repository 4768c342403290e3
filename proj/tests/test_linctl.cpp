#include "wavectl/linctl.hpp"
#include "wavectl/obsv.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace wavectl;

namespace {

LinearProblem reference(int N, double y0_amp = 1.0) {
    const Domain d = Domain::interval(0, 1);
    LinearProblem p;
    p.basis = build_basis(d, N);
    p.geometry = gamma_setup(d, {-0.1, 0}, 0.3);
    p.window = make_window(d, Box::interval(0.7, 1), 0.1);
    p.T = 2.4;
    p.dt = 1e-3;
    p.y0 = Vec::Zero(N);
    p.y0(0) = y0_amp;
    p.y1 = Vec::Zero(N);
    return p;
}

Vec random_vec(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Vec v(n);
    for (int i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

}  // namespace

TEST_CASE("picard map of zero data is zero") {
    const LinearProblem p = reference(8, 0.0);
    auto [a, b] = picard_map(p, Vec::Zero(8), Vec::Zero(8));
    CHECK(a.norm() + b.norm() == 0.0);
}

TEST_CASE("picard map is linear for homogeneous data") {
    const LinearProblem p = reference(8, 0.0);
    std::mt19937_64 rng(1);
    const Vec a0 = random_vec(8, rng), a1 = random_vec(8, rng), b0 = random_vec(8, rng), b1 = random_vec(8, rng);
    auto [s0, s1] = picard_map(p, a0 + b0, a1 + b1);
    auto [x0, x1] = picard_map(p, a0, a1);
    auto [y0, y1] = picard_map(p, b0, b1);
    CHECK((s0 - x0 - y0).norm() < 1e-10 * (1 + s0.norm()));
    CHECK((s1 - x1 - y1).norm() < 1e-10 * (1 + s1.norm()));
}

TEST_CASE("picard map contracts below the empirical kappa") {
    const LinearProblem p = reference(16, 0.0);
    ObservabilityOptions o;
    o.samples = 20;
    o.seed = 4;
    o.variant_constants = false;
    const double kappa = estimate_observability(damped_spec(p.basis), p.window.omega(), p.T, p.dt, o).kappa_emp;
    REQUIRE(kappa < 1.0);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 3; ++i) {
        const Vec z0 = random_vec(16, rng).cwiseQuotient(p.basis->lambdas().cwiseSqrt()), z1 = random_vec(16, rng);
        auto [w0, w1] = picard_map(p, z0, z1);
        CHECK(h1l2_norm_sq(w0, w1, *p.basis) <= kappa * h1l2_norm_sq(z0, z1, *p.basis));
    }
}

TEST_CASE("picard synthesis with zero data") {
    const LinearProblem p = reference(8, 0.0);
    auto [u, r] = synthesize_picard(p);
    CHECK(r.converged);
    CHECK(r.iterations <= 1);
    CHECK(u.coeffs().norm() == 0.0);
}

TEST_CASE("picard synthesis on the reference problem") {
    const LinearProblem p = reference(16);
    auto [u, r] = synthesize_picard(p, 1e-8, 50);
    CHECK(r.converged);
    CHECK(r.iterations <= 50);
    for (double q : r.ratios) CHECK(q < 1.0);
    CHECK(verify_null(p, u).ratio <= 1e-8);
    const double kappa = r.kappa_bound, delta = picard_delta(kappa);
    CHECK((1 + delta) * kappa < 1.0);
    CHECK(h1l2_norm_sq(r.z0, r.z1, *p.basis) <= picard_ball_radius_sq(p, kappa, delta));
}

TEST_CASE("hum synthesis") {
    {
        const LinearProblem p = reference(8, 0.0);
        auto [u, r] = synthesize_hum(p);
        CHECK(u.coeffs().norm() == 0.0);
    }
    const LinearProblem p = reference(16);
    auto [u, r] = synthesize_hum(p);
    CHECK(r.converged);
    CHECK(verify_null(p, u).ratio <= 1e-6);
    CHECK(std::abs(r.observed - r.pairing) <= 1e-6 * std::abs(r.pairing));
    auto [up, rp] = synthesize_picard(p);
    CHECK((up.coeffs() - u.coeffs()).norm() > 1e-3 * u.coeffs().norm());
}

TEST_CASE("hum gramian is self-adjoint in the energy inner product") {
    const LinearProblem p = reference(8, 0.0);
    std::mt19937_64 rng(5);
    const Vec a0 = random_vec(8, rng), a1 = random_vec(8, rng), b0 = random_vec(8, rng), b1 = random_vec(8, rng);
    auto [ga0, ga1] = hum_gramian(p, a0, a1);
    auto [gb0, gb1] = hum_gramian(p, b0, b1);
    const double lhs = energy_inner(*p.basis, ga0, ga1, b0, b1);
    const double rhs = energy_inner(*p.basis, a0, a1, gb0, gb1);
    CHECK(std::abs(lhs - rhs) <= 1e-8 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("galerkin synthesis") {
    {
        const LinearProblem p = reference(8, 0.0);
        auto [u, r] = galerkin_linear(p, 8);
        CHECK(r.a.norm() + r.b.norm() == 0.0);
    }
    const LinearProblem p = reference(8);
    auto [u, r] = galerkin_linear(p, 8);
    CHECK(r.terminal_norm <= 1e-9);
    const TerminalReport t = verify_null(p, u);
    CHECK(std::sqrt(h1l2_norm_sq(t.terminal.pos, t.terminal.vel, *p.basis)) <= 1e-9);
}

TEST_CASE("galerkin control energy is resolution independent") {
    std::vector<double> c;
    for (int N : {4, 8, 16}) {
        const LinearProblem p = reference(N);
        auto [u, r] = galerkin_linear(p, N);
        c.push_back(r.control_energy / energy(p.initial_state(), EnergyKind::E, *p.basis));
    }
    const double lo = *std::min_element(c.begin(), c.end()), hi = *std::max_element(c.begin(), c.end());
    CHECK(hi / lo < 1.5);
}

TEST_CASE("verify_null baselines") {
    {
        const LinearProblem p = reference(8, 0.0);
        const TerminalReport t = verify_null(p, Control::zero(p.basis, p.window, time_grid(p.T, p.steps())));
        CHECK(t.ET == 0.0);
    }
    const LinearProblem p = reference(16);
    auto [u, r] = synthesize_picard(p);
    const double controlled = verify_null(p, u).ratio;
    const double free = verify_null(p, Control::zero(p.basis, p.window, u.times())).ratio;
    CHECK(free < 1.0);
    CHECK(free > 1e6 * controlled);
}

TEST_CASE("problem validation") {
    LinearProblem p = reference(8);
    p.T = 2.0;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = reference(8);
    p.dt = 0.7;
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
    p = reference(8);
    p.y0 = Vec::Zero(3);
    CHECK_THROWS_AS(p.validate(), InvalidArgument);
}
