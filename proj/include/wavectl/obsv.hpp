#pragma once

#include "wavectl/dynamics.hpp"
#include "wavectl/polynomial.hpp"

#include <gmpxx.h>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace wavectl {

// ---------------------------------------------------------------------------
// Empirical observability constants

enum class DecayProfile { Flat = 0, InverseLambda = 1, InverseLambdaSq = 2 };

struct ObservabilityEstimate {
    double D_emp = 0.0;
    double kappa_emp = 0.0;
    int samples = 0;
    std::uint64_t seed = 0;
    std::vector<double> per_sample_ratios;
    std::vector<int> decay_profiles;
    /// Variant with min{int int_omega |z_t|^2, int int_omega |grad z|^2} in the denominator.
    double D_min_variant = 0.0;
    /// Variant (1/2)(|grad z_t|^2 + |Laplace z|^2) at the far end over int int_omega |grad z_t|^2,
    /// sampled on H2 x H1 data.
    double D_gradient_variant = 0.0;
    /// Index of the first sample with (numerically) zero observation, if any.
    std::optional<int> failure_witness;
    /// Some ratio exceeded 1e3 (expected when omega and T violate the geometric condition).
    bool geometry_warning = false;
};

struct ObservabilityOptions {
    int samples = 20;
    std::uint64_t seed = 0;
    /// Forward: data at t = 0. Backward: data at t = T, integrated towards 0.
    Direction direction = Direction::Forward;
    bool variant_constants = true;
};

/// Samples random unit-norm data (sum k_j q_j^2 + p_j^2 = 1 with k_j the
/// stiffness eigenvalues of the dual spec), integrates the dual system and
/// records (norm^2) / int_0^T int_omega |z_t|^2.
ObservabilityEstimate estimate_observability(const SystemSpec& dual, const Box& omega, double T, double dt,
                                             const ObservabilityOptions& options = {});

/// Random data of unit norm sum k_j q^2 + p^2 with the given decay profile.
State sample_unit_data(const Vec& stiffness, const Vec& lambdas, DecayProfile profile, std::uint64_t& state_seed);

// ---------------------------------------------------------------------------
// Weight-function checks and the Carleman weight

using Mat2 = Eigen::Matrix2d;

/// Scalar field with analytic first and second derivatives (unused axes ignored in 1D).
struct ScalarField {
    std::function<double(const Point&)> value;
    std::function<std::array<double, 2>(const Point&)> gradient;
    /// Hessian entries (xx, xy, yy).
    std::function<std::array<double, 3>(const Point&)> hessian;

    /// c |x - x0|^2 + b.
    static ScalarField squared_distance(const Point& x0, int dim, double scale = 1.0, double shift = 0.0);
    static ScalarField constant(double c);
    /// Scaled copy a psi + b.
    ScalarField affine(double a, double b) const;
};

/// Symmetric coefficient matrix a^{jk}(x) with spatial derivatives.
struct MatrixField {
    std::function<Mat2(const Point&)> value;
    /// d/dx_axis of the matrix.
    std::function<Mat2(const Point&, int axis)> derivative;

    static MatrixField identity();
};

struct PsiCheck {
    bool pass = false;
    bool gradient_ok = false;
    bool mu0_ok = false;
    bool normalization_ok = false;
    double min_gradient = 0.0;
    /// min over nodes and directions of the quadratic form ratio.
    double mu0_measured = 0.0;
    Point worst_node{0.0, 0.0};
    std::string witness;
};

/// Checks min |grad psi| > 0, the mu0 quadratic-form condition over n canonical
/// and 8 random directions per node, and the normalization
/// (1/4) a grad psi . grad psi >= max psi >= min psi >= 0.
PsiCheck check_psi(const Domain& domain, const ScalarField& psi, const MatrixField& a, double mu0_target,
                   int points_per_axis = 33, std::uint64_t seed = 0);

struct MinimalTime {
    double T1 = 0.0;
    double kappa1 = 0.0;
    double s0 = 0.0;
};

/// T1 = max{2 sqrt(kappa1), 1 + 100 s0 (n + 2) sqrt(n)} with kappa1 = max a grad psi . grad psi
/// over the closed domain and s0 = max over the boundary of a grad psi . n.
MinimalTime minimal_time(const Domain& domain, const ScalarField& psi, const MatrixField& a,
                         int points_per_axis = 65);

/// phi = psi - c1 (t - T/2)^2, theta = exp(lambda phi),
/// Psi = -lambda [div(a grad psi) - 2 c1 - c0].
struct CarlemanWeight {
    ScalarField psi;
    MatrixField a;
    double c0 = 0.5, c1 = 0.5, lambda = 1.0, T = 1.0;

    double phi(double t, const Point& x) const;
    double theta(double t, const Point& x) const;
    double Psi(const Point& x) const;
    /// max over the sampled domain of phi at t = 0 and t = T (negative when the endcaps are cut off).
    double endcap_max(const Domain& domain, int points_per_axis = 33) const;
};

// ---------------------------------------------------------------------------
// Exact verification of the fundamental weighted identity

using Rational = mpq_class;
using RationalPoly = Polynomial<Rational>;

enum class FuMutation { None, A, B, C, V };

struct FuInstance {
    int m = 1;
    RationalPoly v, l, Psi;
    std::vector<std::vector<RationalPoly>> a;  ///< symmetric m x m
};

struct FuCheck {
    Rational max_residual;
    bool exact_zero = false;  ///< the residual polynomial cancels identically
    std::size_t residual_terms = 0;
};

/// Builds both sides of the identity
///   I1 theta P z + div V = I1^2 + B v^2 - sum a^{jk} Psi_j v_k v + sum c^{jk} v_j v_k
/// with v = theta z treated as the independent polynomial, and returns the
/// maximum absolute residual over `points` (and whether it cancels exactly).
FuCheck check_fu_identity(const FuInstance& inst, const std::vector<std::vector<Rational>>& points,
                          FuMutation mutation = FuMutation::None);

/// Random instance with rational coefficients: v of degree v_degree, l and Psi
/// of degree 2, a of degree 1 (a = identity + perturbation).
FuInstance random_fu_instance(int m, std::uint64_t seed, int v_degree = 3, int l_degree = 2, int a_degree = 1);
std::vector<std::vector<Rational>> random_rational_points(int m, int count, std::uint64_t seed);

}  // namespace wavectl
