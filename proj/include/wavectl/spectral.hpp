#pragma once

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace wavectl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Point = std::array<double, 2>;

/// Raised for violated preconditions and malformed inputs across the library.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Axis-aligned box in one or two dimensions.
struct Box {
    int dim = 1;
    Point lo{0.0, 0.0};
    Point hi{1.0, 1.0};

    static Box interval(double a, double b);
    static Box rectangle(double ax, double bx, double ay, double by);

    double length(int axis) const { return hi[axis] - lo[axis]; }
    bool contains(const Point& x) const;
    bool contains(const Box& other) const;
    /// Euclidean distance from x to the closed box (0 inside).
    double distance(const Point& x) const;
    bool empty() const;
};

/// Computational domain: an open interval or rectangle with a composite
/// Gauss-Legendre quadrature grid (8 nodes per cell).
struct Domain {
    Box bounds;
    /// Quadrature nodes per axis. Zero selects a resolution from the basis size.
    std::array<int, 2> grid_points{0, 0};

    static Domain interval(double a, double b, int grid_points = 0);
    static Domain rectangle(double ax, double bx, double ay, double by, int grid_points = 0);

    int dim() const { return bounds.dim; }
};

/// Gauss-Legendre order per quadrature cell.
inline constexpr int kQuadratureOrder = 8;

/// Nodes and weights of the 8-point Gauss-Legendre rule on [-1, 1].
const std::array<double, kQuadratureOrder>& gauss_legendre_nodes();
const std::array<double, kQuadratureOrder>& gauss_legendre_weights();

/// Composite Gauss-Legendre rule on [a, b] with `cells` equal cells.
void composite_rule(double a, double b, int cells, std::vector<double>& nodes,
                    std::vector<double>& weights);

/// Dirichlet eigenpairs of (-Laplace + 1), truncated to N modes, together with
/// tabulated basis functions on the quadrature grid.
///
/// Eigenfunctions are L2-orthonormal sine products. Table rows index grid
/// nodes, columns index modes.
class EigenBasis {
public:
    EigenBasis(const Domain& domain, int n);

    const Domain& domain() const { return domain_; }
    int size() const { return n_; }
    int dim() const { return domain_.dim(); }
    const Vec& lambdas() const { return lambdas_; }
    /// (-Laplace) eigenvalues, lambda_j - 1.
    Vec laplace_eigenvalues() const { return lambdas_.array() - 1.0; }
    const std::vector<std::array<int, 2>>& modes() const { return modes_; }

    int grid_size() const { return static_cast<int>(weights_.size()); }
    const std::vector<Point>& nodes() const { return nodes_; }
    const Vec& weights() const { return weights_; }
    const std::array<int, 2>& grid_points() const { return grid_points_; }

    const Mat& values() const { return phi_; }
    const Mat& gradient(int axis) const { return dphi_[axis]; }
    /// Second derivative table for (axis_a, axis_b).
    const Mat& hessian(int a, int b) const { return d2phi_[a + b]; }

    /// Evaluates all basis functions at an arbitrary point.
    Vec evaluate(const Point& x) const;
    /// Evaluates d/dx_axis of all basis functions at a point.
    Vec evaluate_gradient(const Point& x, int axis) const;

    /// Basis restricted to the leading `n` modes (same domain and grid).
    std::shared_ptr<const EigenBasis> truncated(int n) const;

    /// True if this basis' modes are the leading modes of `other`.
    bool is_prefix_of(const EigenBasis& other) const;

private:
    EigenBasis() = default;
    void tabulate();

    Domain domain_;
    int n_ = 0;
    Vec lambdas_;
    std::vector<std::array<int, 2>> modes_;
    std::array<int, 2> grid_points_{0, 0};
    std::vector<Point> nodes_;
    Vec weights_;
    Mat phi_;
    std::array<Mat, 2> dphi_;
    std::array<Mat, 3> d2phi_;
};

using BasisPtr = std::shared_ptr<const EigenBasis>;

BasisPtr build_basis(const Domain& domain, int n);

/// Position and velocity coefficients at one time.
struct State {
    Vec pos;
    Vec vel;
    double t = 0.0;

    static State zero(int n, double t = 0.0);
    int size() const { return static_cast<int>(pos.size()); }
    bool finite() const { return pos.allFinite() && vel.allFinite(); }
};

/// L2 projection of grid samples onto the basis.
Vec analyze(const Vec& samples, const EigenBasis& basis);
/// Pointwise evaluation of a coefficient vector on the quadrature grid.
Vec synthesize(const Vec& coeffs, const EigenBasis& basis);
/// d/dx_axis of the expansion on the grid.
Vec synthesize_gradient(const Vec& coeffs, const EigenBasis& basis, int axis);
/// Quadrature L2 norm of a grid field.
double grid_l2_norm(const Vec& samples, const EigenBasis& basis);

/// (sum lambda_j^s c_j^2)^(1/2).
double sobolev_norm(const Vec& coeffs, double s, const EigenBasis& basis);

enum class EnergyKind { E, E0, E1 };

/// E  = |v_t|^2 + |v|^2 + |grad v|^2,
/// E0 = |v_t|^2 + |grad v|^2,
/// E1 = |grad v_t|^2 + |Laplace v|^2, all integrated over the domain.
double energy(const State& state, EnergyKind kind, const EigenBasis& basis);

/// H1 x L2 norm squared with the full H1 norm: sum lambda_j q_j^2 + p_j^2.
double h1l2_norm_sq(const Vec& q, const Vec& p, const EigenBasis& basis);

/// Smooth cutoff chi with chi = 1 on omega, built from the quintic smoothstep.
///
/// In two dimensions chi is a product of per-axis ramps of width w / sqrt(2),
/// so chi vanishes whenever the Euclidean distance to omega reaches w.
class ControlWindow {
public:
    ControlWindow() = default;
    ControlWindow(const Domain& domain, const Box& omega, double smoothing_width);

    const Box& omega() const { return omega_; }
    double smoothing_width() const { return width_; }

    double value(const Point& x) const;
    double gradient(const Point& x, int axis) const;
    double laplacian(const Point& x) const;

    /// chi sampled on the basis quadrature grid.
    Vec sample(const EigenBasis& basis) const;
    /// max |grad chi| and max |Laplace chi| over the basis grid.
    double gradient_sup(const EigenBasis& basis) const;
    double laplacian_sup(const EigenBasis& basis) const;

private:
    double ramp_width() const;

    Domain domain_;
    Box omega_;
    double width_ = 0.0;
};

ControlWindow make_window(const Domain& domain, const Box& omega, double smoothing_width);

/// Quintic smoothstep s(r) = 6r^5 - 15r^4 + 10r^3 clamped to [0, 1].
double smoothstep(double r);
double smoothstep_d1(double r);
double smoothstep_d2(double r);

/// Galerkin matrix (chi phi_j, phi_i).
Mat weighted_mass(const EigenBasis& basis, const Vec& weight_samples);
Mat window_mass(const EigenBasis& basis, const ControlWindow& window);

/// Gram matrix of the basis restricted to a sub-box, integrated with its own
/// composite Gauss-Legendre rule so that box edges need not align with cells.
Mat subdomain_gram(const EigenBasis& basis, const Box& region, int cells_per_axis = 0);
/// Gram matrices of the gradient components on a sub-box, summed over axes.
Mat subdomain_gradient_gram(const EigenBasis& basis, const Box& region, int cells_per_axis = 0);

/// Multiplier-method geometry for the Gamma-condition.
struct GeometrySpec {
    Point x0{0.0, 0.0};
    double eps0 = 0.0;
    double T_min = 0.0;
    /// Boundary faces with (x - x0) . n > 0, encoded as (axis, side) with side 0 = lo.
    std::vector<std::array<int, 2>> gamma0;
    /// omega = Omega intersected with the eps0-neighbourhood of Gamma0, as a union of strips.
    std::vector<Box> omega;

    bool omega_contains(const Point& x) const;
    /// Smallest box containing the control region.
    Box omega_hull() const;
};

GeometrySpec gamma_setup(const Domain& domain, const Point& x0, double eps0);

}  // namespace wavectl
