#include "wavectl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace wavectl {

namespace {

constexpr double kPi = std::numbers::pi;

// Values of d^order/dx^order of sqrt(2/l) sin(k pi (x - a)/l), k = 1..kmax,
// at the given abscissae. Rows index points, columns index k - 1.
Mat sine_table(double a, double l, int kmax, const std::vector<double>& xs, int order) {
    Mat t(xs.size(), kmax);
    const double amp = std::sqrt(2.0 / l);
    for (int k = 1; k <= kmax; ++k) {
        const double w = k * kPi / l;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double arg = w * (xs[i] - a);
            double v = 0.0;
            switch (order) {
                case 0: v = std::sin(arg); break;
                case 1: v = w * std::cos(arg); break;
                case 2: v = -w * w * std::sin(arg); break;
                default: throw InvalidArgument("sine_table: derivative order above 2");
            }
            t(i, k - 1) = amp * v;
        }
    }
    return t;
}

std::array<int, 2> max_mode_index(const std::vector<std::array<int, 2>>& modes) {
    std::array<int, 2> m{1, 1};
    for (const auto& md : modes) {
        m[0] = std::max(m[0], md[0]);
        m[1] = std::max(m[1], md[1]);
    }
    return m;
}

// Tabulates basis values (or a derivative) at a tensor set of points given
// per-axis abscissae; points are ordered with axis 0 fastest.
Mat tensor_eval(const EigenBasis& basis, const std::array<std::vector<double>, 2>& xs,
                std::array<int, 2> order) {
    const auto& b = basis.domain().bounds;
    const auto kmax = max_mode_index(basis.modes());
    const int n = basis.size();
    const Mat tx = sine_table(b.lo[0], b.length(0), kmax[0], xs[0], order[0]);
    if (basis.dim() == 1) {
        Mat out(xs[0].size(), n);
        for (int j = 0; j < n; ++j) out.col(j) = tx.col(basis.modes()[j][0] - 1);
        return out;
    }
    const Mat ty = sine_table(b.lo[1], b.length(1), kmax[1], xs[1], order[1]);
    const Eigen::Index nx = static_cast<Eigen::Index>(xs[0].size());
    const Eigen::Index ny = static_cast<Eigen::Index>(xs[1].size());
    Mat out(nx * ny, n);
    for (int j = 0; j < n; ++j) {
        const int ix = basis.modes()[j][0] - 1;
        const int iy = basis.modes()[j][1] - 1;
        for (Eigen::Index q = 0; q < ny; ++q)
            out.col(j).segment(q * nx, nx) = tx.col(ix) * ty(q, iy);
    }
    return out;
}

// Composite rule on [a, b] whose cell boundaries include every breakpoint in
// (a, b); each resulting interval is split into `cells` equal cells.
void aligned_rule(double a, double b, std::vector<double> breaks, int cells,
                  std::vector<double>& nodes, std::vector<double>& weights) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    nodes.clear();
    weights.clear();
    std::vector<double> n1, w1;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = std::max(a, breaks[i]);
        const double hi = std::min(b, breaks[i + 1]);
        if (hi - lo <= 1e-15 * (b - a)) continue;
        composite_rule(lo, hi, cells, n1, w1);
        nodes.insert(nodes.end(), n1.begin(), n1.end());
        weights.insert(weights.end(), w1.begin(), w1.end());
    }
}

}  // namespace

Box Box::interval(double a, double b) {
    Box box;
    box.dim = 1;
    box.lo = {a, 0.0};
    box.hi = {b, 0.0};
    return box;
}

Box Box::rectangle(double ax, double bx, double ay, double by) {
    Box box;
    box.dim = 2;
    box.lo = {ax, ay};
    box.hi = {bx, by};
    return box;
}

bool Box::contains(const Point& x) const {
    for (int a = 0; a < dim; ++a)
        if (x[a] < lo[a] || x[a] > hi[a]) return false;
    return true;
}

bool Box::contains(const Box& other) const {
    for (int a = 0; a < dim; ++a)
        if (other.lo[a] < lo[a] - 1e-14 || other.hi[a] > hi[a] + 1e-14) return false;
    return true;
}

double Box::distance(const Point& x) const {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double d = std::max({lo[a] - x[a], x[a] - hi[a], 0.0});
        s += d * d;
    }
    return std::sqrt(s);
}

bool Box::empty() const {
    for (int a = 0; a < dim; ++a)
        if (!(hi[a] > lo[a])) return true;
    return false;
}

Domain Domain::interval(double a, double b, int grid_points) {
    Domain d;
    d.bounds = Box::interval(a, b);
    d.grid_points = {grid_points, 0};
    return d;
}

Domain Domain::rectangle(double ax, double bx, double ay, double by, int grid_points) {
    Domain d;
    d.bounds = Box::rectangle(ax, bx, ay, by);
    d.grid_points = {grid_points, grid_points};
    return d;
}

const std::array<double, kQuadratureOrder>& gauss_legendre_nodes() {
    static const std::array<double, kQuadratureOrder> x = {
        -0.96028985649753623168, -0.79666647741362673959, -0.52553240991632898582,
        -0.18343464249564980494, 0.18343464249564980494,  0.52553240991632898582,
        0.79666647741362673959,  0.96028985649753623168};
    return x;
}

const std::array<double, kQuadratureOrder>& gauss_legendre_weights() {
    static const std::array<double, kQuadratureOrder> w = {
        0.10122853629037625915, 0.22238103445337447054, 0.31370664587788728734,
        0.36268378337836198297, 0.36268378337836198297, 0.31370664587788728734,
        0.22238103445337447054, 0.10122853629037625915};
    return w;
}

void composite_rule(double a, double b, int cells, std::vector<double>& nodes,
                    std::vector<double>& weights) {
    if (cells < 1 || !(b > a)) throw InvalidArgument("composite_rule: need b > a and cells >= 1");
    const auto& gx = gauss_legendre_nodes();
    const auto& gw = gauss_legendre_weights();
    nodes.resize(static_cast<std::size_t>(cells) * kQuadratureOrder);
    weights.resize(nodes.size());
    const double h = (b - a) / cells;
    for (int c = 0; c < cells; ++c) {
        const double mid = a + (c + 0.5) * h;
        for (int q = 0; q < kQuadratureOrder; ++q) {
            nodes[c * kQuadratureOrder + q] = mid + 0.5 * h * gx[q];
            weights[c * kQuadratureOrder + q] = 0.5 * h * gw[q];
        }
    }
}

EigenBasis::EigenBasis(const Domain& domain, int n) : domain_(domain), n_(n) {
    if (n < 1) throw InvalidArgument("build_basis: N must be >= 1");
    const int dim = domain.dim();
    if (dim != 1 && dim != 2) throw InvalidArgument("build_basis: dim must be 1 or 2");
    if (domain.bounds.empty()) throw InvalidArgument("build_basis: empty domain");

    struct Cand {
        double lambda;
        int i, j;
    };
    std::vector<Cand> cand;
    const double lx = domain.bounds.length(0);
    if (dim == 1) {
        for (int i = 1; i <= n; ++i) cand.push_back({1.0 + std::pow(i * kPi / lx, 2), i, 1});
    } else {
        const double ly = domain.bounds.length(1);
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j)
                cand.push_back({1.0 + std::pow(i * kPi / lx, 2) + std::pow(j * kPi / ly, 2), i, j});
        // Ties within round-off are broken by index so the ordering is reproducible.
        std::sort(cand.begin(), cand.end(), [](const Cand& p, const Cand& q) {
            const double tol = 1e-12 * std::max(p.lambda, q.lambda);
            if (std::abs(p.lambda - q.lambda) > tol) return p.lambda < q.lambda;
            if (p.i != q.i) return p.i < q.i;
            return p.j < q.j;
        });
    }
    lambdas_.resize(n);
    modes_.resize(n);
    for (int k = 0; k < n; ++k) {
        lambdas_(k) = cand[k].lambda;
        modes_[k] = {cand[k].i, dim == 1 ? 0 : cand[k].j};
    }

    const auto kmax = max_mode_index(modes_);
    for (int a = 0; a < dim; ++a) {
        int gp = domain.grid_points[a];
        if (gp == 0) gp = kQuadratureOrder * std::max(2 * kmax[a], 16);
        if (gp < 4) throw InvalidArgument("build_basis: grid_points must be >= 4 per axis");
        if (gp % kQuadratureOrder != 0) {
            std::ostringstream os;
            os << "build_basis: grid_points (" << gp << ") must be a multiple of "
               << kQuadratureOrder;
            throw InvalidArgument(os.str());
        }
        if (gp < 2 * kmax[a]) {
            std::ostringstream os;
            os << "build_basis: N = " << n << " needs at least " << 2 * kmax[a]
               << " grid points on axis " << a << " (4 per wavelength), got " << gp;
            throw InvalidArgument(os.str());
        }
        grid_points_[a] = gp;
    }
    tabulate();
}

void EigenBasis::tabulate() {
    const int dim = domain_.dim();
    std::array<std::vector<double>, 2> xs, ws;
    for (int a = 0; a < dim; ++a)
        composite_rule(domain_.bounds.lo[a], domain_.bounds.hi[a],
                       grid_points_[a] / kQuadratureOrder, xs[a], ws[a]);
    if (dim == 1) {
        xs[1] = {0.0};
        ws[1] = {1.0};
    }
    const std::size_t nx = xs[0].size(), ny = xs[1].size();
    nodes_.resize(nx * ny);
    weights_.resize(static_cast<Eigen::Index>(nx * ny));
    for (std::size_t q = 0; q < ny; ++q)
        for (std::size_t p = 0; p < nx; ++p) {
            nodes_[q * nx + p] = {xs[0][p], xs[1][q]};
            weights_(static_cast<Eigen::Index>(q * nx + p)) = ws[0][p] * ws[1][q];
        }
    phi_ = tensor_eval(*this, xs, {0, 0});
    dphi_[0] = tensor_eval(*this, xs, {1, 0});
    d2phi_[0] = tensor_eval(*this, xs, {2, 0});
    if (dim == 2) {
        dphi_[1] = tensor_eval(*this, xs, {0, 1});
        d2phi_[1] = tensor_eval(*this, xs, {1, 1});
        d2phi_[2] = tensor_eval(*this, xs, {0, 2});
    }
}

Vec EigenBasis::evaluate(const Point& x) const {
    std::array<std::vector<double>, 2> xs{std::vector<double>{x[0]}, std::vector<double>{x[1]}};
    return tensor_eval(*this, xs, {0, 0}).row(0).transpose();
}

Vec EigenBasis::evaluate_gradient(const Point& x, int axis) const {
    std::array<std::vector<double>, 2> xs{std::vector<double>{x[0]}, std::vector<double>{x[1]}};
    std::array<int, 2> order{0, 0};
    order[axis] = 1;
    return tensor_eval(*this, xs, order).row(0).transpose();
}

std::shared_ptr<const EigenBasis> EigenBasis::truncated(int n) const {
    if (n < 1 || n > n_) throw InvalidArgument("EigenBasis::truncated: need 1 <= n <= N");
    auto b = std::shared_ptr<EigenBasis>(new EigenBasis());
    b->domain_ = domain_;
    b->n_ = n;
    b->lambdas_ = lambdas_.head(n);
    b->modes_.assign(modes_.begin(), modes_.begin() + n);
    b->grid_points_ = grid_points_;
    b->nodes_ = nodes_;
    b->weights_ = weights_;
    b->phi_ = phi_.leftCols(n);
    for (int a = 0; a < 2; ++a)
        if (dphi_[a].size()) b->dphi_[a] = dphi_[a].leftCols(n);
    for (int a = 0; a < 3; ++a)
        if (d2phi_[a].size()) b->d2phi_[a] = d2phi_[a].leftCols(n);
    return b;
}

bool EigenBasis::is_prefix_of(const EigenBasis& other) const {
    if (dim() != other.dim() || n_ > other.n_) return false;
    for (int a = 0; a < dim(); ++a)
        if (domain_.bounds.lo[a] != other.domain_.bounds.lo[a] ||
            domain_.bounds.hi[a] != other.domain_.bounds.hi[a])
            return false;
    for (int k = 0; k < n_; ++k)
        if (modes_[k] != other.modes_[k]) return false;
    return true;
}

BasisPtr build_basis(const Domain& domain, int n) { return std::make_shared<EigenBasis>(domain, n); }

State State::zero(int n, double t) { return State{Vec::Zero(n), Vec::Zero(n), t}; }

Vec analyze(const Vec& samples, const EigenBasis& basis) {
    if (samples.size() != basis.grid_size()) {
        std::ostringstream os;
        os << "analyze: grid mismatch (" << samples.size() << " samples, grid has "
           << basis.grid_size() << " nodes)";
        throw InvalidArgument(os.str());
    }
    return basis.values().transpose() * basis.weights().cwiseProduct(samples);
}

Vec synthesize(const Vec& coeffs, const EigenBasis& basis) {
    if (coeffs.size() != basis.size()) throw InvalidArgument("synthesize: coefficient length != N");
    return basis.values() * coeffs;
}

Vec synthesize_gradient(const Vec& coeffs, const EigenBasis& basis, int axis) {
    if (coeffs.size() != basis.size())
        throw InvalidArgument("synthesize_gradient: coefficient length != N");
    return basis.gradient(axis) * coeffs;
}

double grid_l2_norm(const Vec& samples, const EigenBasis& basis) {
    return std::sqrt(basis.weights().dot(samples.cwiseAbs2()));
}

double sobolev_norm(const Vec& coeffs, double s, const EigenBasis& basis) {
    if (s < 0) throw InvalidArgument("sobolev_norm: order must be >= 0");
    if (coeffs.size() > basis.size()) throw InvalidArgument("sobolev_norm: too many coefficients");
    const Eigen::Index n = coeffs.size();
    return std::sqrt((basis.lambdas().head(n).array().pow(s) * coeffs.array().square()).sum());
}

double energy(const State& state, EnergyKind kind, const EigenBasis& basis) {
    const Eigen::Index n = state.pos.size();
    if (state.vel.size() != n || n > basis.size())
        throw InvalidArgument("energy: state size does not match basis");
    const auto lam = basis.lambdas().head(n).array();
    const auto q2 = state.pos.array().square();
    const auto p2 = state.vel.array().square();
    switch (kind) {
        case EnergyKind::E: return (p2 + lam * q2).sum();
        case EnergyKind::E0: return (p2 + (lam - 1.0) * q2).sum();
        case EnergyKind::E1: return ((lam - 1.0) * p2 + (lam - 1.0).square() * q2).sum();
    }
    return 0.0;
}

double h1l2_norm_sq(const Vec& q, const Vec& p, const EigenBasis& basis) {
    const Eigen::Index n = q.size();
    return (basis.lambdas().head(n).array() * q.array().square()).sum() + p.squaredNorm();
}

double smoothstep(double r) {
    r = std::clamp(r, 0.0, 1.0);
    return r * r * r * (10.0 + r * (-15.0 + 6.0 * r));
}

double smoothstep_d1(double r) {
    if (r <= 0.0 || r >= 1.0) return 0.0;
    return 30.0 * r * r * (1.0 - r) * (1.0 - r);
}

double smoothstep_d2(double r) {
    if (r <= 0.0 || r >= 1.0) return 0.0;
    return 60.0 * r * (2.0 * r - 1.0) * (r - 1.0);
}

ControlWindow::ControlWindow(const Domain& domain, const Box& omega, double smoothing_width)
    : domain_(domain), omega_(omega), width_(smoothing_width) {
    if (omega.dim != domain.dim()) throw InvalidArgument("make_window: omega dimension mismatch");
    if (omega.empty()) throw InvalidArgument("make_window: empty omega");
    if (!(smoothing_width > 0)) throw InvalidArgument("make_window: smoothing_width must be > 0");
    if (!domain.bounds.contains(omega)) throw InvalidArgument("make_window: omega not inside domain");
}

double ControlWindow::ramp_width() const { return width_ / std::sqrt(double(omega_.dim)); }

namespace {

struct AxisRamp {
    double value, d1, d2;
};

AxisRamp axis_ramp(double x, double lo, double hi, double w) {
    double d = 0.0, sign = 0.0;
    if (x < lo) {
        d = lo - x;
        sign = -1.0;
    } else if (x > hi) {
        d = x - hi;
        sign = 1.0;
    }
    const double r = 1.0 - d / w;
    // dr/dx = -sign / w
    return {smoothstep(r), smoothstep_d1(r) * (-sign / w), smoothstep_d2(r) / (w * w)};
}

}  // namespace

double ControlWindow::value(const Point& x) const {
    double v = 1.0;
    for (int a = 0; a < omega_.dim; ++a) v *= axis_ramp(x[a], omega_.lo[a], omega_.hi[a], ramp_width()).value;
    return v;
}

double ControlWindow::gradient(const Point& x, int axis) const {
    double v = 1.0;
    for (int a = 0; a < omega_.dim; ++a) {
        const auto r = axis_ramp(x[a], omega_.lo[a], omega_.hi[a], ramp_width());
        v *= (a == axis) ? r.d1 : r.value;
    }
    return v;
}

double ControlWindow::laplacian(const Point& x) const {
    double sum = 0.0;
    for (int axis = 0; axis < omega_.dim; ++axis) {
        double v = 1.0;
        for (int a = 0; a < omega_.dim; ++a) {
            const auto r = axis_ramp(x[a], omega_.lo[a], omega_.hi[a], ramp_width());
            v *= (a == axis) ? r.d2 : r.value;
        }
        sum += v;
    }
    return sum;
}

Vec ControlWindow::sample(const EigenBasis& basis) const {
    Vec out(basis.grid_size());
    for (int i = 0; i < basis.grid_size(); ++i) out(i) = value(basis.nodes()[i]);
    return out;
}

double ControlWindow::gradient_sup(const EigenBasis& basis) const {
    double m = 0.0;
    for (const auto& x : basis.nodes()) {
        double s = 0.0;
        for (int a = 0; a < omega_.dim; ++a) s += std::pow(gradient(x, a), 2);
        m = std::max(m, std::sqrt(s));
    }
    return m;
}

double ControlWindow::laplacian_sup(const EigenBasis& basis) const {
    double m = 0.0;
    for (const auto& x : basis.nodes()) m = std::max(m, std::abs(laplacian(x)));
    return m;
}

ControlWindow make_window(const Domain& domain, const Box& omega, double smoothing_width) {
    return ControlWindow(domain, omega, smoothing_width);
}

Mat weighted_mass(const EigenBasis& basis, const Vec& weight_samples) {
    if (weight_samples.size() != basis.grid_size()) throw InvalidArgument("weighted_mass: grid mismatch");
    const Mat& phi = basis.values();
    return phi.transpose() * basis.weights().cwiseProduct(weight_samples).asDiagonal() * phi;
}

Mat window_mass(const EigenBasis& basis, const ControlWindow& window) {
    // chi is piecewise polynomial between the ramp breakpoints, so a rule aligned
    // with them integrates chi phi_i phi_j to round-off independently of N.
    const Box& b = basis.domain().bounds;
    const Box& om = window.omega();
    const double rw = window.smoothing_width() / std::sqrt(double(basis.dim()));
    const auto kmax = max_mode_index(basis.modes());
    std::array<std::vector<double>, 2> xs, ws;
    for (int a = 0; a < basis.dim(); ++a) {
        std::vector<double> breaks{om.lo[a] - rw, om.lo[a], om.hi[a], om.hi[a] + rw};
        breaks.erase(std::remove_if(breaks.begin(), breaks.end(),
                                    [&](double v) { return v <= b.lo[a] || v >= b.hi[a]; }),
                     breaks.end());
        aligned_rule(b.lo[a], b.hi[a], breaks, std::max(4, kmax[a]), xs[a], ws[a]);
    }
    if (basis.dim() == 1) {
        xs[1] = {0.0};
        ws[1] = {1.0};
    }
    const Mat phi = tensor_eval(basis, xs, {0, 0});
    Vec w(phi.rows());
    const std::size_t nx = xs[0].size();
    for (std::size_t q = 0; q < xs[1].size(); ++q)
        for (std::size_t p = 0; p < nx; ++p)
            w(static_cast<Eigen::Index>(q * nx + p)) =
                ws[0][p] * ws[1][q] * window.value({xs[0][p], xs[1][q]});
    return phi.transpose() * w.asDiagonal() * phi;
}

namespace {

void region_rule(const EigenBasis& basis, const Box& region, int cells,
                 std::array<std::vector<double>, 2>& xs, Vec& w) {
    if (!basis.domain().bounds.contains(region) || region.empty())
        throw InvalidArgument("subdomain_gram: region must be a nonempty sub-box of the domain");
    const auto kmax = max_mode_index(basis.modes());
    std::array<std::vector<double>, 2> ws;
    for (int a = 0; a < basis.dim(); ++a) {
        const int c = cells > 0 ? cells : std::max(4, kmax[a]);
        composite_rule(region.lo[a], region.hi[a], c, xs[a], ws[a]);
    }
    if (basis.dim() == 1) {
        xs[1] = {0.0};
        ws[1] = {1.0};
    }
    const std::size_t nx = xs[0].size();
    w.resize(static_cast<Eigen::Index>(nx * xs[1].size()));
    for (std::size_t q = 0; q < xs[1].size(); ++q)
        for (std::size_t p = 0; p < nx; ++p) w(static_cast<Eigen::Index>(q * nx + p)) = ws[0][p] * ws[1][q];
}

}  // namespace

Mat subdomain_gram(const EigenBasis& basis, const Box& region, int cells_per_axis) {
    std::array<std::vector<double>, 2> xs;
    Vec w;
    region_rule(basis, region, cells_per_axis, xs, w);
    const Mat phi = tensor_eval(basis, xs, {0, 0});
    return phi.transpose() * w.asDiagonal() * phi;
}

Mat subdomain_gradient_gram(const EigenBasis& basis, const Box& region, int cells_per_axis) {
    std::array<std::vector<double>, 2> xs;
    Vec w;
    region_rule(basis, region, cells_per_axis, xs, w);
    Mat g = Mat::Zero(basis.size(), basis.size());
    for (int a = 0; a < basis.dim(); ++a) {
        std::array<int, 2> order{0, 0};
        order[a] = 1;
        const Mat d = tensor_eval(basis, xs, order);
        g += d.transpose() * w.asDiagonal() * d;
    }
    return g;
}

bool GeometrySpec::omega_contains(const Point& x) const {
    for (const auto& b : omega)
        if (b.contains(x)) return true;
    return false;
}

Box GeometrySpec::omega_hull() const {
    if (omega.empty()) throw InvalidArgument("GeometrySpec: empty control region");
    Box h = omega.front();
    for (const auto& b : omega)
        for (int a = 0; a < b.dim; ++a) {
            h.lo[a] = std::min(h.lo[a], b.lo[a]);
            h.hi[a] = std::max(h.hi[a], b.hi[a]);
        }
    return h;
}

GeometrySpec gamma_setup(const Domain& domain, const Point& x0, double eps0) {
    const Box& b = domain.bounds;
    const int dim = domain.dim();
    if (b.contains(x0)) throw InvalidArgument("gamma_setup: x0 must lie outside the closed domain");
    if (!(eps0 > 0)) throw InvalidArgument("gamma_setup: eps0 must be > 0");
    GeometrySpec g;
    g.x0 = x0;
    g.eps0 = eps0;

    // The farthest point of a box from x0 is a corner.
    double rmax = 0.0;
    const int corners = 1 << dim;
    for (int c = 0; c < corners; ++c) {
        double s = 0.0;
        for (int a = 0; a < dim; ++a) {
            const double xc = (c >> a & 1) ? b.hi[a] : b.lo[a];
            s += (xc - x0[a]) * (xc - x0[a]);
        }
        rmax = std::max(rmax, std::sqrt(s));
    }
    g.T_min = 2.0 * rmax;

    // On a flat face (x - x0).n depends only on the face coordinate, so each
    // face lies in Gamma0 entirely or not at all.
    for (int a = 0; a < dim; ++a) {
        for (int side = 0; side < 2; ++side) {
            const double face = side ? b.hi[a] : b.lo[a];
            const double normal = side ? 1.0 : -1.0;
            if ((face - x0[a]) * normal <= 0.0) continue;
            g.gamma0.push_back({a, side});
            Box strip = b;
            const double depth = std::min(eps0, b.length(a));
            if (side)
                strip.lo[a] = b.hi[a] - depth;
            else
                strip.hi[a] = b.lo[a] + depth;
            g.omega.push_back(strip);
        }
    }
    if (g.omega.empty()) throw InvalidArgument("gamma_setup: Gamma0 is empty");
    return g;
}

}  // namespace wavectl
