#pragma once

#include "wavectl/dynamics.hpp"

#include <optional>
#include <utility>

namespace wavectl {

/// Uniform time nodes k T / m, k = 0..m.
std::vector<double> time_grid(double T, int m);
/// Node-averaged time rule sum_k dt |(c_k + c_{k+1}) / 2|^2_W for an N x (M+1) coefficient trajectory.
double node_average_sq(const Mat& coeffs, const Mat& gram, const std::vector<double>& times);

/// y_tt + 2 y_t - Laplace y + y = chi u on (0, T), (y, y_t)(0) = (y0, y1).
struct LinearProblem {
    BasisPtr basis;
    ControlWindow window;
    double T = 0.0;
    double dt = 1e-3;
    Vec y0, y1;
    std::optional<GeometrySpec> geometry;

    /// Checks sizes, T >= T_min and that the window covers the geometric control region.
    void validate() const;
    int steps() const;
    State initial_state() const { return State{y0, y1, 0.0}; }
    /// Same problem with initial data scaled by s.
    LinearProblem scaled(double s) const;
};

/// A control field u(t, x) = sum_j c_j(t) phi_j(x) acting through chi.
///
/// Coefficients are stored per time node before multiplication by chi; the
/// forcing in the Galerkin system is the chi-weighted mass matrix applied to them.
class Control {
public:
    Control() = default;
    Control(BasisPtr basis, ControlWindow window, std::vector<double> times, Mat coeffs);

    static Control zero(BasisPtr basis, ControlWindow window, std::vector<double> times);

    const BasisPtr& basis() const { return basis_; }
    const ControlWindow& window() const { return window_; }
    const std::vector<double>& times() const { return times_; }
    /// N x (M+1) coefficient trajectory of u before the cutoff.
    const Mat& coeffs() const { return coeffs_; }
    /// chi u on the basis grid per time node (vanishes where chi = 0).
    const std::vector<Vec>& values() const { return values_; }
    /// int_0^T int |chi u|^2 by the grid rule in space and step averages in time.
    double norm_l2() const { return norm_l2_; }
    /// int_0^T int_omega |grad u|^2 and int_0^T int_omega |u|^2 over the window's core box.
    double omega_gradient_sq() const;
    double omega_l2_sq() const;

    /// Galerkin forcing (chi u, phi_i) for the leading modes of `target`, per time node.
    Mat forcing_nodes(const EigenBasis& target) const;
    Control scaled(double s) const;

private:
    BasisPtr basis_;
    ControlWindow window_;
    std::vector<double> times_;
    Mat coeffs_;
    std::vector<Vec> values_;
    double norm_l2_ = 0.0;
};

struct TerminalReport {
    double E0 = 0.0;          ///< E(y(0))
    double ET = 0.0;          ///< E(y(T))
    double ratio = 0.0;       ///< E(T) / E(0), or E(T) when E(0) = 0
    State terminal;
    Trajectory trajectory;
};

struct PicardReport {
    std::vector<double> iterates;     ///< |z^k|_{H1 x L2}
    std::vector<double> differences;  ///< |z^{k+1} - z^k|
    std::vector<double> ratios;       ///< squared successive-difference ratios
    double kappa_bound = 0.0;         ///< max ratio
    bool converged = false;
    int iterations = 0;
    Vec z0, z1;                       ///< dual data used for the control
    double terminal_defect = 0.0;     ///< |F(z) - z| for the returned z
};

/// Result of the Picard map together with the trajectories it integrated.
struct PicardEval {
    Vec w_T, minus_wt_T;
    Trajectory z;   ///< anti-damped dual from the given data at t = 0
    Mat control;    ///< u(t) = sqrt(2) z_t(T - t) per node
};

PicardEval picard_eval(const LinearProblem& problem, const Vec& z0, const Vec& z1);
std::pair<Vec, Vec> picard_map(const LinearProblem& problem, const Vec& z0, const Vec& z1);

std::pair<Control, PicardReport> synthesize_picard(const LinearProblem& problem, double tol = 1e-8,
                                                   int max_iter = 50);

/// Picard iterate-size bound (1 + 1/delta)/(1 - (1 + delta) kappa) (|y1|^2 + |y0|^2_{H1}).
double picard_ball_radius_sq(const LinearProblem& problem, double kappa, double delta);
/// delta with (1 + delta) kappa = (1 + kappa)/2.
double picard_delta(double kappa);

struct HumReport {
    int iterations = 0;
    bool converged = false;
    double relative_residual = 0.0;
    std::vector<double> residuals;
    double smallest_ritz = 0.0;
    double largest_ritz = 0.0;
    Vec z0, z1;
    double observed = 0.0;  ///< int int chi |z_t|^2
    double pairing = 0.0;   ///< <z, (y0, y1)>_{H1 x L2}
};

/// Gramian action (z0, z1) -> (y(0), y_t(0)) of the duality map.
std::pair<Vec, Vec> hum_gramian(const LinearProblem& problem, const Vec& z0, const Vec& z1);
/// <x, y>_{H1 x L2} = sum lambda q_x q_y + p_x p_y.
double energy_inner(const EigenBasis& basis, const Vec& q1, const Vec& p1, const Vec& q2, const Vec& p2);

std::pair<Control, HumReport> synthesize_hum(const LinearProblem& problem, double tol = 1e-10,
                                             int max_iter = 500);

struct GalerkinReport {
    int N = 0;
    int rank = 0;
    Vec a, b;                  ///< solved terminal data of the dual
    double terminal_norm = 0.0;
    double control_energy = 0.0;  ///< int int chi |v_t|^2
    double condition = 0.0;
};

std::pair<Control, GalerkinReport> galerkin_linear(const LinearProblem& problem, int N = 0);

TerminalReport verify_null(const LinearProblem& problem, const Control& control);

/// Damped linear system with the problem's basis (b0 = 2, Laplacian, shift 1).
SystemSpec damped_spec(const BasisPtr& basis, double damping = 2.0);

}  // namespace wavectl
