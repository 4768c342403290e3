#include "wavectl/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace wavectl;
using std::numbers::pi;

TEST_CASE("unit interval eigenvalues") {
    auto b = build_basis(Domain::interval(0, 1), 3);
    CHECK(b->lambdas()(0) == doctest::Approx(1 + pi * pi).epsilon(1e-14));
    CHECK(b->lambdas()(1) == doctest::Approx(1 + 4 * pi * pi).epsilon(1e-14));
    CHECK(b->lambdas()(2) == doctest::Approx(1 + 9 * pi * pi).epsilon(1e-14));
    CHECK((b->laplace_eigenvalues() - (b->lambdas().array() - 1).matrix()).norm() == 0.0);
}

TEST_CASE("unit square eigenvalues with a tie") {
    auto b = build_basis(Domain::rectangle(0, 1, 0, 1), 2);
    CHECK(b->lambdas()(0) == doctest::Approx(1 + 2 * pi * pi).epsilon(1e-14));
    CHECK(b->lambdas()(1) == doctest::Approx(1 + 5 * pi * pi).epsilon(1e-14));
}

TEST_CASE("rescaled interval") {
    auto b = build_basis(Domain::interval(0, 2), 1);
    CHECK(b->lambdas()(0) == doctest::Approx(1 + pi * pi / 4).epsilon(1e-14));
}

TEST_CASE("invalid basis requests") {
    CHECK_THROWS_AS(build_basis(Domain::interval(0, 1), 0), InvalidArgument);
    CHECK_THROWS_AS(build_basis(Domain::interval(1, 0), 4), InvalidArgument);
}

TEST_CASE("eigenfunctions are orthonormal on the quadrature grid") {
    for (auto dom : {Domain::interval(0, 1), Domain::rectangle(0, 1, 0, 2)}) {
        auto b = build_basis(dom, 10);
        const Mat G = b->values().transpose() * b->weights().asDiagonal() * b->values();
        CHECK((G - Mat::Identity(10, 10)).cwiseAbs().maxCoeff() < 1e-12);
        // Green's identity: (grad phi_i, grad phi_j) = mu_j delta_ij.
        Mat K = Mat::Zero(10, 10);
        for (int a = 0; a < dom.dim(); ++a)
            K += b->gradient(a).transpose() * b->weights().asDiagonal() * b->gradient(a);
        CHECK((K - Mat(b->laplace_eigenvalues().asDiagonal())).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("analyze picks out a single mode") {
    auto b = build_basis(Domain::interval(0, 1), 6);
    const Vec c = analyze(b->values().col(1), *b);
    Vec e = Vec::Zero(6);
    e(1) = 1;
    CHECK((c - e).norm() < 1e-13);
    CHECK(analyze(Vec::Zero(b->grid_size()), *b).norm() == 0.0);
}

TEST_CASE("analyze of x(1-x) against the exact projection") {
    auto b = build_basis(Domain::interval(0, 1), 1);
    Vec f(b->grid_size());
    for (int i = 0; i < b->grid_size(); ++i) f(i) = b->nodes()[i][0] * (1 - b->nodes()[i][0]);
    CHECK(analyze(f, *b)(0) == doctest::Approx(4 * std::sqrt(2.0) / std::pow(pi, 3)).epsilon(1e-13));
}

TEST_CASE("synthesize round trip") {
    auto b = build_basis(Domain::interval(0, 1), 8);
    CHECK(synthesize(Vec::Zero(8), *b).norm() == 0.0);
    CHECK((synthesize(Vec::Unit(8, 0), *b) - b->values().col(0)).norm() == 0.0);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Vec c(8);
    for (int i = 0; i < 8; ++i) c(i) = g(rng);
    CHECK((analyze(synthesize(c, *b), *b) - c).norm() / c.norm() < 1e-10);
}

TEST_CASE("sobolev norms") {
    auto b = build_basis(Domain::interval(0, 1), 2);
    CHECK(sobolev_norm(Vec::Unit(2, 0), 0, *b) == doctest::Approx(1.0));
    CHECK(sobolev_norm(Vec::Unit(2, 0), 2, *b) == doctest::Approx(1 + pi * pi));
    CHECK(sobolev_norm(Vec::Ones(2), 1, *b) == doctest::Approx(std::sqrt(2 + 5 * pi * pi)));
    const Vec c = (Vec(2) << 0.3, -1.2).finished();
    CHECK(sobolev_norm(c, 0, *b) == doctest::Approx(c.norm()));
}

TEST_CASE("energies of single modes") {
    auto b = build_basis(Domain::interval(0, 1), 3);
    const State zero = State::zero(3);
    for (auto k : {EnergyKind::E, EnergyKind::E0, EnergyKind::E1}) CHECK(energy(zero, k, *b) == 0.0);
    State s{Vec::Unit(3, 0), Vec::Zero(3), 0.0};
    CHECK(energy(s, EnergyKind::E, *b) == doctest::Approx(1 + pi * pi));
    CHECK(energy(s, EnergyKind::E0, *b) == doctest::Approx(pi * pi));
    CHECK(energy(s, EnergyKind::E1, *b) == doctest::Approx(std::pow(pi, 4)));
    State v{Vec::Zero(3), Vec::Unit(3, 0), 0.0};
    CHECK(energy(v, EnergyKind::E, *b) == doctest::Approx(1.0));
    CHECK(energy(v, EnergyKind::E0, *b) == doctest::Approx(1.0));
    CHECK(energy(v, EnergyKind::E1, *b) == doctest::Approx(pi * pi));
}

TEST_CASE("control window values") {
    const Domain d = Domain::interval(0, 1);
    const ControlWindow w = make_window(d, Box::interval(0.4, 0.6), 0.1);
    CHECK(w.value({0.5, 0}) == 1.0);
    CHECK(w.value({0.2, 0}) == 0.0);
    CHECK(w.value({0.75, 0}) == 0.0);
    CHECK(w.value({0.35, 0}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(w.value({0.65, 0}) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(smoothstep(0.5) == doctest::Approx(0.5));
    CHECK_THROWS_AS(make_window(d, Box::interval(0.4, 0.6), 0.0), InvalidArgument);
}

TEST_CASE("2D window vanishes at Euclidean distance w") {
    const Domain d = Domain::rectangle(0, 1, 0, 1);
    const ControlWindow w = make_window(d, Box::rectangle(0.4, 0.6, 0.4, 0.6), 0.1);
    CHECK(w.value({0.5, 0.5}) == 1.0);
    const double s = 0.1 / std::sqrt(2.0);
    CHECK(w.value({0.6 + s, 0.6 + s}) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(w.value({0.75, 0.5}) == 0.0);
}

TEST_CASE("window mass matrix is symmetric and bounded by the identity") {
    auto b = build_basis(Domain::interval(0, 1), 12);
    const Mat M = window_mass(*b, make_window(b->domain(), Box::interval(0.7, 1), 0.1));
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    CHECK(es.eigenvalues().maxCoeff() < 1 + 1e-12);
}

TEST_CASE("gamma setup in 1D") {
    const Domain d = Domain::interval(0, 1);
    const GeometrySpec g = gamma_setup(d, {-0.1, 0}, 0.3);
    CHECK(g.T_min == doctest::Approx(2.2));
    REQUIRE(g.gamma0.size() == 1);
    CHECK(g.gamma0[0] == std::array<int, 2>{0, 1});
    CHECK(g.omega_hull().lo[0] == doctest::Approx(0.7));
    CHECK(g.omega_hull().hi[0] == doctest::Approx(1.0));
    const GeometrySpec h = gamma_setup(d, {1.5, 0}, 0.3);
    CHECK(h.T_min == doctest::Approx(3.0));
    REQUIRE(h.gamma0.size() == 1);
    CHECK(h.gamma0[0] == std::array<int, 2>{0, 0});
}

TEST_CASE("gamma setup in 2D") {
    const GeometrySpec g = gamma_setup(Domain::rectangle(0, 1, 0, 1), {-0.5, 0.5}, 0.2);
    CHECK(g.T_min == doctest::Approx(2 * std::sqrt(1.5 * 1.5 + 0.5 * 0.5)));
    bool has_right = false;
    for (const auto& f : g.gamma0) has_right = has_right || (f[0] == 0 && f[1] == 1);
    CHECK(has_right);
    CHECK(g.omega_contains({0.9, 0.5}));
    CHECK_FALSE(g.omega_contains({0.5, 0.5}));
}
