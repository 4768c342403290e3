#include "wavectl/dynamics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace wavectl;
using std::numbers::pi;

namespace {

SystemSpec damped(const BasisPtr& b, double damping) {
    SystemSpec s;
    s.basis = b;
    s.damping = damping;
    s.mass_shift = 1.0;
    return s;
}

// g'' + 2 g' + (1 + pi^2) g = 0, g(0) = 1, g'(0) = 0.
double exact_mode(double t) { return std::exp(-t) * (std::cos(pi * t) + std::sin(pi * t) / pi); }

}  // namespace

TEST_CASE("single damped mode against the closed form") {
    auto b = build_basis(Domain::interval(0, 1), 1);
    const Trajectory tr = integrate(damped(b, 2.0), State{Vec::Ones(1), Vec::Zero(1), 0.0}, 0.0, 1.0, 1e-3);
    CHECK(tr.steps() == 1000);
    CHECK(std::abs(tr.back().pos(0) - exact_mode(1.0)) < 1e-6);
}

TEST_CASE("zero data stays zero") {
    auto b = build_basis(Domain::interval(0, 1), 4);
    const Trajectory tr = integrate(damped(b, 2.0), State::zero(4), 0.0, 0.5, 1e-2);
    for (const auto& s : tr.states) CHECK(s.pos.norm() + s.vel.norm() == 0.0);
}

TEST_CASE("backward integration inverts forward integration") {
    auto b = build_basis(Domain::interval(0, 1), 6);
    State x{Vec::LinSpaced(6, 1.0, 0.1), Vec::LinSpaced(6, -0.5, 0.5), 0.0};
    const Trajectory f = integrate(damped(b, 2.0), x, 0.0, 1.0, 2e-3);
    const Trajectory r = integrate(damped(b, 2.0), f.back(), 0.0, 1.0, 2e-3, Direction::Backward);
    CHECK((r.front().pos - x.pos).norm() < 1e-10);
    CHECK((r.front().vel - x.vel).norm() < 1e-10);
}

TEST_CASE("discrete energy law for forward damping and backward anti-damping") {
    auto b = build_basis(Domain::interval(0, 1), 8);
    const double dt = 1e-3;
    for (double beta : {2.0, -1.0}) {
        State x{Vec::LinSpaced(8, 0.5, 0.05), Vec::LinSpaced(8, 0.2, -0.2), 0.0};
        const Trajectory tr = integrate(damped(b, beta), x, 0.0, 0.5, dt);
        double worst = 0.0;
        for (int k = 0; k < tr.steps(); ++k) {
            const Vec pbar = 0.5 * (tr.states[k].vel + tr.states[k + 1].vel);
            const double dE = energy(tr.states[k + 1], EnergyKind::E, *b) - energy(tr.states[k], EnergyKind::E, *b);
            worst = std::max(worst, std::abs(dE + 2 * beta * dt * pbar.squaredNorm()));
        }
        CHECK(worst <= 10 * dt * dt);
    }
}

TEST_CASE("residual of sampled exact solution is second order") {
    auto b = build_basis(Domain::interval(0, 1), 1);
    auto sampled = [&](double dt) {
        Trajectory t;
        const int m = static_cast<int>(std::lround(1.0 / dt));
        t.dt = dt;
        for (int k = 0; k <= m; ++k) {
            const double tk = k * dt, h = 1e-6;
            t.times.push_back(tk);
            t.states.push_back(State{Vec::Constant(1, exact_mode(tk)),
                                     Vec::Constant(1, (exact_mode(tk + h) - exact_mode(tk - h)) / (2 * h)), tk});
        }
        return residual(t, damped(b, 2.0));
    };
    const double r1 = sampled(2e-3), r2 = sampled(1e-3);
    CHECK(r1 / r2 == doctest::Approx(4.0).epsilon(0.05));

    Trajectory zero = integrate(damped(b, 2.0), State::zero(1), 0.0, 0.1, 1e-2);
    CHECK(residual(zero, damped(b, 2.0)) == 0.0);

    Trajectory tr = integrate(damped(b, 2.0), State{Vec::Ones(1), Vec::Zero(1), 0.0}, 0.0, 1.0, 1e-2);
    const double clean = residual(tr, damped(b, 2.0));
    tr.states[50].pos(0) += 1e-3;
    CHECK(residual(tr, damped(b, 2.0)) > 100 * clean);
}

TEST_CASE("constant coefficient fields reproduce the default operator") {
    auto b = build_basis(Domain::interval(0, 1), 6);
    const State x{Vec::LinSpaced(6, 1.0, 0.1), Vec::Zero(6), 0.0};
    const Trajectory ref = integrate(damped(b, 2.0), x, 0.0, 0.5, 1e-2);
    const int G = b->grid_size();
    CoefficientFields f;
    f.a[0] = Vec::Ones(G);
    f.b0 = Vec::Constant(G, 2.0);
    f.b_tilde = Vec::Ones(G);
    f.b[0] = Vec::Zero(G);
    for (auto form : {PrincipalForm::Divergence, PrincipalForm::NonDivergence}) {
        SystemSpec s = damped(b, 2.0);
        s.form = form;
        s.fields = std::make_shared<const std::vector<CoefficientFields>>(51, f);
        const Trajectory tr = integrate(s, x, 0.0, 0.5, 1e-2);
        CHECK((tr.back().pos - ref.back().pos).norm() < 1e-8);
        CHECK((tr.back().vel - ref.back().vel).norm() < 1e-8);
    }
}

TEST_CASE("scaled diffusion coefficient shifts the mode frequency") {
    auto b = build_basis(Domain::interval(0, 1), 1);
    CoefficientFields f;
    f.a[0] = Vec::Constant(b->grid_size(), 2.0);
    SystemSpec s = damped(b, 0.0);
    s.mass_shift = 0.0;
    s.form = PrincipalForm::Divergence;
    s.fields = std::make_shared<const std::vector<CoefficientFields>>(1001, f);
    const Trajectory tr = integrate(s, State{Vec::Ones(1), Vec::Zero(1), 0.0}, 0.0, 1.0, 1e-3);
    CHECK(tr.back().pos(0) == doctest::Approx(std::cos(std::sqrt(2.0) * pi)).epsilon(1e-5));
}

TEST_CASE("a load equal to a mass term matches the mass shift") {
    auto b = build_basis(Domain::interval(0, 1), 4);
    SystemSpec with_load = damped(b, 2.0);
    with_load.mass_shift = 0.0;
    with_load.load = [](double, const Vec& q, const Vec&) { return Vec(q); };
    const State x{Vec::Ones(4), Vec::Zero(4), 0.0};
    const Trajectory a = integrate(with_load, x, 0.0, 0.5, 1e-3);
    const Trajectory c = integrate(damped(b, 2.0), x, 0.0, 0.5, 1e-3);
    CHECK((a.back().pos - c.back().pos).norm() < 1e-11);
}

TEST_CASE("preconditions") {
    auto b = build_basis(Domain::interval(0, 1), 2);
    CoefficientFields f;
    f.a[0] = Vec::Constant(b->grid_size(), 0.1);
    SystemSpec s = damped(b, 2.0);
    s.form = PrincipalForm::Divergence;
    s.fields = std::make_shared<const std::vector<CoefficientFields>>(11, f);
    CHECK_THROWS_AS(integrate(s, State::zero(2), 0.0, 0.1, 1e-2), InvalidArgument);
    CHECK_THROWS_AS(integrate(damped(b, 2.0), State::zero(3), 0.0, 0.1, 1e-2), InvalidArgument);
    CHECK_THROWS_AS(integrate(damped(b, 2.0), State::zero(2), 0.0, 0.1, -1e-2), InvalidArgument);
    State bad = State::zero(2);
    bad.pos(0) = NAN;
    CHECK_THROWS_AS(integrate(damped(b, 2.0), bad, 0.0, 0.1, 1e-2), IntegrationError);
}
