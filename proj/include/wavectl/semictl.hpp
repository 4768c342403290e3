#pragma once

#include "wavectl/linctl.hpp"
#include "wavectl/obsv.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace wavectl {

/// Velocity nonlinearity f(y_t) with |f(a) - f(b)| <= L |a - b| and
/// (a - b)(f(a) - f(b)) >= L~ (a - b)^2.
struct VelocityNonlinearity {
    std::function<double(double)> f;
    double L = 1.0;
    double L_tilde = 1.0;
    std::string description;

    /// f(v) = slope v.
    static VelocityNonlinearity linear(double slope, double L, double L_tilde);
    /// f(v) = (L + L~)/2 v + (L - L~)/2 sin v.
    static VelocityNonlinearity lip_sin(double L, double L_tilde);
};

struct NonlinearityCheck {
    bool pass = false;
    bool zero_ok = false;
    bool lipschitz_ok = false;
    bool monotone_ok = false;
    /// First violating pair, if any.
    std::optional<std::pair<double, double>> witness;
    std::string violated;
};

/// Monte-Carlo check of f(0) = 0 and both pair inequalities on uniform pairs from [lo, hi].
NonlinearityCheck check_nonlinearity(const VelocityNonlinearity& nl, int samples = 1000, double lo = -10.0,
                                     double hi = 10.0, std::uint64_t seed = 0);

struct SemilinearConstants {
    double L = 0.0, L_tilde = 0.0, D = 0.0;
    double delta1 = 0.0, delta2 = 0.0;
    double delta = 0.0;
    double C_star = 0.0;
    double D_star = 0.0;
    double grad_sup = 0.0, lap_sup = 0.0;
    /// (L / L~ - 1)^2 and L / (2 D).
    double admissibility_lhs = 0.0, admissibility_rhs = 0.0;
};

/// Constants of the semilinear construction from measured sup norms of grad chi and Laplace chi.
SemilinearConstants compute_constants(double L, double L_tilde, double D, double grad_sup, double lap_sup);
SemilinearConstants compute_constants(double L, double L_tilde, double D, const ControlWindow& chi,
                                      const EigenBasis& basis);

/// y_tt - Laplace y + f(y_t) = chi u on (0, T), (y, y_t)(0) = (y0, y1).
struct SemilinearProblem {
    BasisPtr basis;
    ControlWindow window;
    double T = 0.0;
    double dt = 1e-3;
    Vec y0, y1;
    VelocityNonlinearity nonlinearity;
    SemilinearConstants constants;

    void validate() const;
    int steps() const;
    State initial_state() const { return State{y0, y1, 0.0}; }
    SemilinearProblem scaled(double s) const;
};

/// Backward dual v_tt - Laplace v - L v_t = 0 on the given basis.
SystemSpec semilinear_dual_spec(const BasisPtr& basis, double L);
/// Forward system y_tt - Laplace y + f(y_t) on the given basis (no source).
SystemSpec semilinear_forward_spec(const BasisPtr& basis, const VelocityNonlinearity& nl);

/// F_N together with the trajectories that produced it.
struct SemilinearEval {
    Vec F;
    Trajectory v;
    Trajectory y;
};

SemilinearEval semilinear_eval(const SemilinearProblem& problem, int N, const Vec& x);
/// x = (a, b) terminal data of the dual on the leading N modes -> (y_N(T), y_N'(T)).
Vec galerkin_F(const SemilinearProblem& problem, int N, const Vec& x);

/// sum_j (lambda_j^2 / delta + lambda_j) x_j y_j over both blocks of R^{2N}.
double tilde_inner(const Vec& x, const Vec& y, double delta, const EigenBasis& basis);
double tilde_norm(const Vec& x, double delta, const EigenBasis& basis);
/// Pairing produced by the energy multiplier: (1/delta)(p p' + mu q q') + mu p p' + mu^2 q q'
/// with mu the Laplace eigenvalues.
double multiplier_pairing(const Vec& x, const Vec& y, double delta, const EigenBasis& basis);

struct SignAudit {
    double radius = 0.0;
    int directions = 0;
    double min_tilde = 0.0;       ///< min <x, F_N(x)>_{l~2(delta)} over the sphere
    double min_multiplier = 0.0;  ///< same with the multiplier pairing
    /// The sign condition in the multiplier pairing (the one the energy identity controls).
    bool nonnegative = false;
};

/// Samples `directions` unit directions (H1 x L2 energy norm), scales them to `radius`
/// and evaluates both pairings with F_N.
SignAudit sign_audit(const SemilinearProblem& problem, int N, double radius, int directions = 64,
                     std::uint64_t seed = 0);

struct SemilinearReport {
    int N = 0;
    int iterations = 0;
    bool converged = false;
    bool used_fallback = false;
    double residual = 0.0;         ///< |F_N(x)|_{l~2(delta)}
    double residual_euclid = 0.0;
    std::vector<double> residuals;
    Vec x;
    SignAudit audit;
    double E0_initial = 0.0, E1_initial = 0.0;
    /// delta int int_omega |grad u|^2 + 1/2 int int_omega |u|^2 and C* [E0 + delta E1].
    double control_bound_lhs = 0.0, control_bound_rhs = 0.0;
    /// int int_omega |grad u|^2 + |u|^2 and D* [E0 + E1].
    double printed_bound_lhs = 0.0, printed_bound_rhs = 0.0;
    /// int int |y_t|^2 and (1/L~) E0(y(0)) + (1/L~^2) int int chi^2 |v_t|^2.
    double energy_chain_lhs = 0.0, energy_chain_rhs = 0.0;
    double terminal_energy_ratio = 0.0;  ///< E0(y_N(T)) / E0(y_N(0)) of the Galerkin system
};

struct SemilinearOptions {
    double tol = 1e-8;
    int max_iter = 30;
    /// Sphere radius for the sign audit in the H1 x L2 energy norm; 0 disables the audit.
    double audit_radius = 0.0;
    int audit_directions = 64;
    std::uint64_t seed = 0;
};

/// Damped Newton on F_N(x) = 0 with a forward-difference Jacobian; falls back to
/// Anderson-accelerated chord iteration if the line search stalls. Throws
/// std::runtime_error when no zero is found, after filling `report_out` if given.
std::pair<Control, SemilinearReport> solve_semilinear(const SemilinearProblem& problem, int N,
                                                      const SemilinearOptions& options = {},
                                                      SemilinearReport* report_out = nullptr);

/// Audit radius: square root of the Picard ball bound with kappa = 1 - 2/D.
double semilinear_audit_radius(const SemilinearProblem& problem, double D);

struct SemilinearResimulation {
    double E0_initial = 0.0, E0_terminal = 0.0, ratio = 0.0;
    Trajectory trajectory;
};

/// Integrates the full nonlinear system on `basis` (which must extend the control's basis).
SemilinearResimulation resimulate_semilinear(const SemilinearProblem& problem, const BasisPtr& basis,
                                             const Control& control);

}  // namespace wavectl
