#pragma once

#include "wavectl/spectral.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace wavectl {

/// Raised when a time step cannot be completed.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, int step, double residual)
        : std::runtime_error(what), step_(step), residual_(residual) {}
    int step() const { return step_; }
    double residual() const { return residual_; }

private:
    int step_;
    double residual_;
};

enum class PrincipalForm { Laplacian, Divergence, NonDivergence };
enum class Direction { Forward, Backward };

/// Variable coefficients sampled on the basis quadrature grid. Empty vectors
/// select the constant defaults of the owning SystemSpec.
struct CoefficientFields {
    /// a11, a12, a22 (a12 and a22 only in 2D). All empty means the identity.
    std::array<Vec, 3> a;
    Vec b0;
    std::array<Vec, 2> b;
    Vec b_tilde;

    bool has_principal() const { return a[0].size() > 0; }
    bool empty() const;
    /// Componentwise (x + y) / 2; empty slots stay empty only if empty in both.
    static CoefficientFields midpoint(const CoefficientFields& x, const CoefficientFields& y);
};

/// Smallest eigenvalue of (a^{ij}) over the grid; 1 when a is the identity.
double min_principal_eigenvalue(const CoefficientFields& f, int dim);

/// y_tt + b0 y_t - sum (a^{ij} y_{x_i})_{x_j} + sum b_k y_{x_k} + b~ y + f(y_t) + load = source
///
/// The principal part is the Laplacian unless coefficient fields provide a^{ij};
/// the NonDivergence form replaces the divergence operator by sum a^{ij} y_{x_i x_j}.
struct SystemSpec {
    BasisPtr basis;
    double damping = 2.0;
    double mass_shift = 1.0;
    PrincipalForm form = PrincipalForm::Laplacian;

    /// Coefficient fields per node of the integration time grid (node 0 = t_a).
    std::shared_ptr<const std::vector<CoefficientFields>> fields;
    /// Coefficients depending on the current state, evaluated at the step midpoint.
    std::function<void(double t, const Vec& q, const Vec& p, CoefficientFields& out)> state_fields;

    /// Pointwise velocity nonlinearity f(y_t), applied pseudo-spectrally.
    std::function<double(double)> nonlinearity;
    /// General state-dependent term in coefficient space, added to the left side.
    std::function<Vec(double t, const Vec& q, const Vec& p)> load;

    /// Forcing coefficients per time node (N x (M+1)), aligned like `fields`.
    std::shared_ptr<const Mat> source_nodes;
    /// Forcing coefficients as a function of time.
    std::function<Vec(double t)> source;
    /// Optional windowed control: adds (chi u, phi_i) with u given per time node by `control_nodes`.
    std::optional<ControlWindow> window;
    std::shared_ptr<const Mat> control_nodes;

    double min_ellipticity = 0.5;

    bool is_nonlinear() const { return bool(nonlinearity) || bool(load) || bool(state_fields); }
};

/// Uniform-step trajectory of Galerkin states.
struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    double dt = 0.0;

    int steps() const { return static_cast<int>(states.size()) - 1; }
    const State& front() const { return states.front(); }
    const State& back() const { return states.back(); }
    /// Position (or velocity) coefficients as an N x (M+1) matrix.
    Mat positions() const;
    Mat velocities() const;
};

/// Stiffness and damping matrices of the Galerkin system for the given fields.
struct GalerkinOperator {
    Mat A;
    Mat B;
};
GalerkinOperator assemble(const SystemSpec& spec, const CoefficientFields& fields);

/// Implicit-midpoint integration of c'' + B c' + A(t) c + N(c, c') = F(t) over
/// [t_a, t_b]. Forward runs start from `data` at t_a, backward runs from t_b;
/// the returned trajectory is always ordered by increasing time.
Trajectory integrate(const SystemSpec& spec, const State& data, double t_a, double t_b, double dt,
                     Direction direction = Direction::Forward);

/// Max over interior nodes of the L2 norm of the central-difference PDE residual.
double residual(const Trajectory& traj, const SystemSpec& spec);

/// dt sum over steps of pbar^T M pbar with pbar the step average of velocities
/// (or positions when `velocity` is false).
double time_quadratic(const Trajectory& traj, const Mat& m, bool velocity = true);
/// Same with M = identity restricted to the leading rows of the state.
double time_l2_sq(const Trajectory& traj, bool velocity = true);

/// Writes t, E, E0, E1 (and c_j, c'_j when `with_modes`) at 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const EigenBasis& basis,
                          bool with_modes = false);

}  // namespace wavectl
