#pragma once

#include "wavectl/linctl.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace wavectl {

// ---------------------------------------------------------------------------
// Exponential change of variables y~ = e^t y, u~ = e^t u

enum class ExpDirection { ToDamped, FromDamped };

/// ToDamped: (e^t y, e^t (y + y_t)); FromDamped inverts it. Uses state.t.
State exp_transform(const State& s, ExpDirection dir);
/// Scales control coefficients column k by e^{+-t_k}.
Mat exp_transform_control(const Mat& coeffs, const std::vector<double>& times, ExpDirection dir);

// ---------------------------------------------------------------------------
// Quasi-linear nonlinearities f = g1(t, x, y, y_t, grad y) + sum d_j (g2^{ij} d_i y)

/// Pointwise arguments of the nonlinearity hooks.
struct FieldArgs {
    double t = 0.0;
    Point x{0.0, 0.0};
    double y = 0.0;
    double yt = 0.0;
    std::array<double, 2> grad{0.0, 0.0};
};

struct QuasiNonlinearity {
    std::string name;
    /// g1 and its partial derivatives; an empty g1 means g1 = 0.
    std::function<double(const FieldArgs&)> g1;
    std::function<double(const FieldArgs&)> dg1_dy;
    std::function<double(const FieldArgs&)> dg1_dyt;
    std::function<std::array<double, 2>(const FieldArgs&)> dg1_dgrad;
    /// g2^{11}, g2^{12}, g2^{22} (symmetric by construction); empty means g2 = 0.
    std::function<std::array<double, 3>(const FieldArgs&)> g2;

    static QuasiNonlinearity zero();
    /// g1 = c y_t^2.
    static QuasiNonlinearity quad_gt(double c = 1.0);
    /// g2^{ij} = eps y delta_ij.
    static QuasiNonlinearity eps_y_diffusion(double eps);
};

struct QuasiCheck {
    bool pass = false;
    std::string message;
};

/// Sampled checks: g1(0) = 0 and g1 = O(quadratic), g2(0) = 0 and g2 = O(linear) near 0.
QuasiCheck check_quasi_nonlinearity(const QuasiNonlinearity& nl, int dim, std::uint64_t seed = 0);

/// Frozen coefficient fields per time node plus the deviation norms from the
/// damped Klein-Gordon coefficients (a = I, b0 = 2, b = 0, b~ = 1).
struct FrozenCoefficients {
    std::vector<CoefficientFields> fields;
    double a_dev = 0.0, b0_dev = 0.0, b_dev = 0.0, b_tilde_dev = 0.0;
};

/// a = I - g2(iterate); b0, b_k, b~ from 8-point Gauss-Legendre tau-integrals of the
/// partials of g1 along the telescoping path (y_t first, then grad y, then y).
FrozenCoefficients freeze_coefficients(const QuasiNonlinearity& nl, const EigenBasis& basis,
                                       const Trajectory& iterate);

/// y_tt + b0 y_t - sum d_j (a^{ij} y_{x_i}) + sum b_k y_{x_k} + b~ y = chi u with the
/// coefficients of the damped Klein-Gordon system perturbed by the nonlinearity.
struct QuasiProblem {
    BasisPtr basis;
    ControlWindow window;
    double T = 0.0;
    double dt = 1e-3;
    Vec y0, y1;
    std::optional<GeometrySpec> geometry;
    /// Gate on |y0|_{H^s} + |y1|_{H^{s-1}}.
    double epsilon_gate = 0.1;
    double sobolev_order = 2.0;
    PrincipalForm form = PrincipalForm::Divergence;

    void validate() const;
    int steps() const;
    double data_size() const;
};

struct QuasiOptions {
    int max_alpha = 400;
    double tol = 1e-9;
    /// Sobolev orders k for the diff norms (the first one drives the stopping rule).
    std::vector<int> orders{1, 2};
};

struct ConvergenceReport {
    std::vector<int> alphas;
    /// diff_v[i][a], diff_z[i][a]: sup_t |(V, V_t)|_{H^k x H^{k-1}} for orders[i].
    std::vector<int> orders;
    std::vector<std::vector<double>> diff_v, diff_z;
    /// |V^{(a+1)}| / |V^{(a)}| in the first order.
    std::vector<double> ratios;
    double fitted_rate = 0.0;
    double fit_r2 = 0.0;
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
    /// |(v(T), v_t(T))|_{H1 x L2} of the last iterate.
    double terminal_norm = 0.0;
    double epsilon_gate = 0.0;
    double data_size = 0.0;
    /// max over alpha of |z^a(T) - (v^{a-1}(T) + z^{a-1}(T))|.
    double telescoping_defect = 0.0;
    /// Per alpha: max |a - I| of the frozen coefficients and sup_t |v^{a-1}|_{H1 x L2}.
    std::vector<double> a_dev, iterate_size;
};

struct QuasiResult {
    Control control;       ///< u = -2 z_t (pre-cutoff coefficients)
    Trajectory v, z;       ///< last iterates
    ConvergenceReport report;
};

/// Alternating coefficient-freezing scheme from (z, v) = 0. Throws std::runtime_error on
/// divergence or when max_alpha is exhausted, after filling `report_out` if given.
QuasiResult iterate_quasilinear(const QuasiProblem& problem, const QuasiNonlinearity& nl,
                                const QuasiOptions& options = {}, ConvergenceReport* report_out = nullptr);

/// Full quasi-linear system with state-dependent coefficients.
SystemSpec quasi_system_spec(const BasisPtr& basis, const QuasiNonlinearity& nl, PrincipalForm form);

struct QuasiResimulation {
    double E_initial = 0.0, E_terminal = 0.0, ratio = 0.0;
    Trajectory trajectory;
    double pde_residual = 0.0;
};

/// Integrates the full quasi-linear system on `basis` under the given control.
QuasiResimulation resimulate_quasilinear(const QuasiProblem& problem, const QuasiNonlinearity& nl,
                                         const BasisPtr& basis, const Control& control);

// ---------------------------------------------------------------------------
// Fully nonlinear systems y_tt + 2 y_t - Laplace y + y = F(y, y_t, grad y, grad^2 y) + chi u

struct FullArgs {
    double t = 0.0;
    Point x{0.0, 0.0};
    double y = 0.0;
    double v = 0.0;  ///< y_t
    std::array<double, 2> grad{0.0, 0.0};
    std::array<double, 3> hess{0.0, 0.0, 0.0};  ///< (xx, xy, yy)
};

struct FullNonlinearity {
    std::string name;
    std::function<double(const FullArgs&)> F;
    std::function<double(const FullArgs&)> dF_dy;
    std::function<double(const FullArgs&)> dF_dv;
    std::function<std::array<double, 2>(const FullArgs&)> dF_dgrad;
    std::function<std::array<double, 3>(const FullArgs&)> dF_dhess;

    static FullNonlinearity zero();
    /// F = c y_t^2.
    static FullNonlinearity vt_square(double c = 1.0);
};

/// Sampled check that F(0) = 0 and F = O(quadratic) near 0.
QuasiCheck check_full_nonlinearity(const FullNonlinearity& F, int dim, std::uint64_t seed = 0);

struct FullyNonlinearReport {
    ConvergenceReport iteration;
    /// |y_t(T)| + |y_tt(T)| and the same at t = 0, from the full nonlinear re-simulation.
    double terminal_size = 0.0, initial_size = 0.0, terminal_ratio = 0.0;
    /// max_t |v - y_t|_{L2} between the iterate and the re-simulated velocity.
    double v_consistency = 0.0;
    /// max_t |y_reconstructed - y_simulated|_{L2}.
    double reconstruction_drift = 0.0;
};

struct FullyNonlinearResult {
    Control control;  ///< u = -2 (z - z(0)) (pre-cutoff coefficients)
    Trajectory v, y;
    FullyNonlinearReport report;
};

/// Controls (y_t, y_tt) to zero by running the freezing scheme on v = y_t.
FullyNonlinearResult fully_nonlinear_control(const QuasiProblem& problem, const FullNonlinearity& F,
                                             const QuasiOptions& options = {},
                                             FullyNonlinearReport* report_out = nullptr);

/// Full nonlinear system spec (F applied pseudo-spectrally through the load hook).
SystemSpec fully_nonlinear_spec(const BasisPtr& basis, const FullNonlinearity& F);

}  // namespace wavectl
