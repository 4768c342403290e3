#include "wavectl/dynamics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace wavectl {

namespace {

Vec avg(const Vec& x, const Vec& y) {
    if (x.size() == 0 || y.size() == 0) {
        if (x.size() != y.size()) throw InvalidArgument("CoefficientFields: slot present at one node only");
        return Vec();
    }
    return 0.5 * (x + y);
}

void check_grid(const Vec& v, const EigenBasis& basis, const char* name) {
    if (v.size() != 0 && v.size() != basis.grid_size()) {
        std::ostringstream os;
        os << "SystemSpec: coefficient field " << name << " has " << v.size()
           << " samples, grid has " << basis.grid_size();
        throw InvalidArgument(os.str());
    }
}

Mat weighted_product(const EigenBasis& basis, const Mat& left, const Vec& field, const Mat& right) {
    return left.transpose() * basis.weights().cwiseProduct(field).asDiagonal() * right;
}

}  // namespace

bool CoefficientFields::empty() const {
    return a[0].size() == 0 && b0.size() == 0 && b[0].size() == 0 && b[1].size() == 0 &&
           b_tilde.size() == 0;
}

CoefficientFields CoefficientFields::midpoint(const CoefficientFields& x, const CoefficientFields& y) {
    CoefficientFields m;
    for (int k = 0; k < 3; ++k) m.a[k] = avg(x.a[k], y.a[k]);
    m.b0 = avg(x.b0, y.b0);
    for (int k = 0; k < 2; ++k) m.b[k] = avg(x.b[k], y.b[k]);
    m.b_tilde = avg(x.b_tilde, y.b_tilde);
    return m;
}

double min_principal_eigenvalue(const CoefficientFields& f, int dim) {
    if (!f.has_principal()) return 1.0;
    if (dim == 1) return f.a[0].minCoeff();
    double m = INFINITY;
    for (Eigen::Index i = 0; i < f.a[0].size(); ++i) {
        const double p = f.a[0](i), q = f.a[1](i), r = f.a[2](i);
        const double mean = 0.5 * (p + r);
        const double rad = std::sqrt(0.25 * (p - r) * (p - r) + q * q);
        m = std::min(m, mean - rad);
    }
    return m;
}

GalerkinOperator assemble(const SystemSpec& spec, const CoefficientFields& f) {
    const EigenBasis& basis = *spec.basis;
    const int n = basis.size();
    const int dim = basis.dim();
    for (int k = 0; k < 3; ++k) check_grid(f.a[k], basis, "a");
    check_grid(f.b0, basis, "b0");
    check_grid(f.b[0], basis, "b");
    check_grid(f.b[1], basis, "b");
    check_grid(f.b_tilde, basis, "b_tilde");

    GalerkinOperator op;
    if (!f.has_principal() || spec.form == PrincipalForm::Laplacian) {
        op.A = basis.laplace_eigenvalues().asDiagonal();
    } else {
        const double lmin = min_principal_eigenvalue(f, dim);
        if (!(lmin >= spec.min_ellipticity)) {
            std::ostringstream os;
            os << "SystemSpec: principal coefficients lose ellipticity (min eigenvalue " << lmin
               << " < " << spec.min_ellipticity << ")";
            throw InvalidArgument(os.str());
        }
        op.A = Mat::Zero(n, n);
        // Index of a^{kl} in the packed (a11, a12, a22) layout.
        auto slot = [](int k, int l) { return k + l; };
        for (int k = 0; k < dim; ++k)
            for (int l = 0; l < dim; ++l) {
                const Vec& akl = f.a[slot(k, l)];
                if (spec.form == PrincipalForm::Divergence)
                    op.A += weighted_product(basis, basis.gradient(l), akl, basis.gradient(k));
                else
                    op.A -= weighted_product(basis, basis.values(), akl, basis.hessian(k, l));
            }
    }
    for (int k = 0; k < dim; ++k)
        if (f.b[k].size()) op.A += weighted_product(basis, basis.values(), f.b[k], basis.gradient(k));
    if (f.b_tilde.size())
        op.A += weighted_product(basis, basis.values(), f.b_tilde, basis.values());
    else
        op.A.diagonal().array() += spec.mass_shift;

    if (f.b0.size())
        op.B = weighted_product(basis, basis.values(), f.b0, basis.values());
    else
        op.B = spec.damping * Mat::Identity(n, n);
    return op;
}

Mat Trajectory::positions() const {
    Mat m(states.front().size(), states.size());
    for (std::size_t k = 0; k < states.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = states[k].pos;
    return m;
}

Mat Trajectory::velocities() const {
    Mat m(states.front().size(), states.size());
    for (std::size_t k = 0; k < states.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = states[k].vel;
    return m;
}

namespace {

// Per-run cached data shared by every step.
struct StepContext {
    const SystemSpec& spec;
    const EigenBasis& basis;
    int n;
    bool constant_operator;
    bool diagonal;
    GalerkinOperator base;
    Mat window_mass;

    explicit StepContext(const SystemSpec& s)
        : spec(s), basis(*s.basis), n(s.basis->size()) {
        constant_operator = !s.fields && !s.state_fields;
        if (constant_operator) base = assemble(s, CoefficientFields{});
        diagonal = constant_operator && s.form == PrincipalForm::Laplacian;
        if (s.window) {
            window_mass = wavectl::window_mass(basis, *s.window);
            if (!s.control_nodes) throw InvalidArgument("SystemSpec: window given without control_nodes");
        }
    }

    Vec forcing(int node, double t) const {
        Vec s = Vec::Zero(n);
        if (spec.source_nodes) s += spec.source_nodes->col(node);
        if (spec.source) s += spec.source(t);
        if (spec.window) s += window_mass * spec.control_nodes->col(node);
        return s;
    }

    Vec nonlinear_load(double t, const Vec& q, const Vec& p) const {
        Vec r = Vec::Zero(n);
        if (spec.nonlinearity) {
            Vec v = basis.values() * p;
            for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = spec.nonlinearity(v(i));
            r += basis.values().transpose() * basis.weights().cwiseProduct(v);
        }
        if (spec.load) r += spec.load(t, q, p);
        return r;
    }

    CoefficientFields node_fields(int node) const {
        return spec.fields ? (*spec.fields)[static_cast<std::size_t>(node)] : CoefficientFields{};
    }
};

void check_sizes(const SystemSpec& spec, int nodes) {
    if (!spec.basis) throw InvalidArgument("SystemSpec: basis not set");
    const int n = spec.basis->size();
    if (spec.fields && static_cast<int>(spec.fields->size()) != nodes)
        throw InvalidArgument("SystemSpec: coefficient fields do not match the time grid");
    if (spec.source_nodes && (spec.source_nodes->rows() != n || spec.source_nodes->cols() != nodes))
        throw InvalidArgument("SystemSpec: source_nodes must be N x (M+1)");
    if (spec.control_nodes && (spec.control_nodes->rows() != n || spec.control_nodes->cols() != nodes))
        throw InvalidArgument("SystemSpec: control_nodes must be N x (M+1)");
}

int step_count(double t_a, double t_b, double dt) {
    if (!(dt > 0) || !(t_b > t_a)) throw InvalidArgument("integrate: need dt > 0 and t_b > t_a");
    const double m = (t_b - t_a) / dt;
    const long steps = std::lround(m);
    if (steps < 1 || std::abs(m - double(steps)) > 1e-8 * std::max(1.0, m)) {
        std::ostringstream os;
        os << "integrate: dt = " << dt << " does not divide the horizon " << (t_b - t_a);
        throw InvalidArgument(os.str());
    }
    return static_cast<int>(steps);
}

constexpr double kSweepTol = 1e-12;
constexpr int kMaxSweeps = 50;

}  // namespace

Trajectory integrate(const SystemSpec& spec, const State& data, double t_a, double t_b, double dt,
                     Direction direction) {
    const int m = step_count(t_a, t_b, dt);
    check_sizes(spec, m + 1);
    const int n = spec.basis->size();
    if (data.pos.size() != n || data.vel.size() != n)
        throw InvalidArgument("integrate: initial state size does not match basis");
    if (!data.finite()) throw IntegrationError("integrate: non-finite initial state", 0, INFINITY);

    StepContext ctx(spec);
    Trajectory traj;
    traj.dt = (t_b - t_a) / m;
    traj.times.resize(m + 1);
    for (int k = 0; k <= m; ++k) traj.times[k] = t_a + k * traj.dt;
    traj.states.resize(m + 1);

    const bool fwd = direction == Direction::Forward;
    const double h = fwd ? traj.dt : -traj.dt;
    int from = fwd ? 0 : m;
    traj.states[from] = State{data.pos, data.vel, traj.times[from]};

    const Vec lap = spec.basis->laplace_eigenvalues();
    for (int s = 0; s < m; ++s) {
        const int to = fwd ? from + 1 : from - 1;
        const State& x0 = traj.states[from];
        const double tm = 0.5 * (traj.times[from] + traj.times[to]);
        const Vec sbar = 0.5 * (ctx.forcing(from, traj.times[from]) + ctx.forcing(to, traj.times[to]));

        GalerkinOperator op;
        CoefficientFields frozen;
        if (!ctx.constant_operator && spec.fields) {
            frozen = CoefficientFields::midpoint(ctx.node_fields(from), ctx.node_fields(to));
            if (!spec.state_fields) op = assemble(spec, frozen);
        }

        Vec pbar = x0.vel;
        Vec qbar = x0.pos;
        double change = 0.0;
        int sweep = 0;
        Eigen::PartialPivLU<Mat> lu;
        for (;; ++sweep) {
            if (spec.state_fields) {
                CoefficientFields f = frozen;
                spec.state_fields(tm, qbar, pbar, f);
                op = assemble(spec, f);
            }
            const GalerkinOperator& g = ctx.constant_operator ? ctx.base : op;
            Vec rhs = 2.0 * x0.vel - h * (g.A * x0.pos) + h * sbar;
            if (spec.is_nonlinear() && (spec.nonlinearity || spec.load)) rhs -= h * ctx.nonlinear_load(tm, qbar, pbar);
            Vec next;
            if (ctx.diagonal) {
                const Vec diag = (2.0 + h * spec.damping) + 0.5 * h * h * (lap.array() + spec.mass_shift);
                next = rhs.cwiseQuotient(diag);
            } else {
                if (sweep == 0 || spec.state_fields) lu.compute(2.0 * Mat::Identity(n, n) + h * g.B + 0.5 * h * h * g.A);
                next = lu.solve(rhs);
            }
            change = (next - pbar).norm();
            pbar = std::move(next);
            qbar = x0.pos + 0.5 * h * pbar;
            if (!spec.is_nonlinear()) break;
            if (sweep > 0 && change <= kSweepTol * (1.0 + pbar.norm())) break;
            if (sweep + 1 >= kMaxSweeps) {
                std::ostringstream os;
                os << "integrate: inner sweep did not converge at step " << s << " (t = " << tm
                   << ", residual " << change << ")";
                throw IntegrationError(os.str(), s, change);
            }
        }
        State& x1 = traj.states[to];
        x1.pos = x0.pos + h * pbar;
        x1.vel = 2.0 * pbar - x0.vel;
        x1.t = traj.times[to];
        if (!x1.finite()) {
            std::ostringstream os;
            os << "integrate: non-finite state at step " << s << " (t = " << x1.t << ")";
            throw IntegrationError(os.str(), s, INFINITY);
        }
        from = to;
    }
    return traj;
}

double residual(const Trajectory& traj, const SystemSpec& spec) {
    const int m = traj.steps();
    if (m < 2) return 0.0;
    check_sizes(spec, m + 1);
    StepContext ctx(spec);
    const double dt = traj.dt;
    double worst = 0.0;
    for (int k = 1; k < m; ++k) {
        const Vec& qm = traj.states[k - 1].pos;
        const Vec& q0 = traj.states[k].pos;
        const Vec& qp = traj.states[k + 1].pos;
        const Vec v = (qp - qm) / (2.0 * dt);
        GalerkinOperator op;
        if (ctx.constant_operator) {
            op = ctx.base;
        } else {
            CoefficientFields f = ctx.node_fields(k);
            if (spec.state_fields) spec.state_fields(traj.times[k], q0, v, f);
            op = assemble(spec, f);
        }
        Vec r = (qp - 2.0 * q0 + qm) / (dt * dt) + op.B * v + op.A * q0 - ctx.forcing(k, traj.times[k]);
        if (spec.nonlinearity || spec.load) r += ctx.nonlinear_load(traj.times[k], q0, v);
        worst = std::max(worst, r.norm());
    }
    return worst;
}

double time_quadratic(const Trajectory& traj, const Mat& m, bool velocity) {
    double s = 0.0;
    const Eigen::Index n = m.rows();
    for (int k = 0; k < traj.steps(); ++k) {
        const Vec& a = velocity ? traj.states[k].vel : traj.states[k].pos;
        const Vec& b = velocity ? traj.states[k + 1].vel : traj.states[k + 1].pos;
        const Vec bar = 0.5 * (a.head(n) + b.head(n));
        s += bar.dot(m * bar);
    }
    return traj.dt * s;
}

double time_l2_sq(const Trajectory& traj, bool velocity) {
    double s = 0.0;
    for (int k = 0; k < traj.steps(); ++k) {
        const Vec& a = velocity ? traj.states[k].vel : traj.states[k].pos;
        const Vec& b = velocity ? traj.states[k + 1].vel : traj.states[k + 1].pos;
        s += (0.5 * (a + b)).squaredNorm();
    }
    return traj.dt * s;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const EigenBasis& basis,
                          bool with_modes) {
    const int n = traj.states.empty() ? 0 : traj.states.front().size();
    os << "t,E,E0,E1";
    if (with_modes) {
        for (int j = 1; j <= n; ++j) os << ",c" << j;
        for (int j = 1; j <= n; ++j) os << ",dc" << j;
    }
    os << '\n';
    const auto old = os.precision(17);
    for (const auto& s : traj.states) {
        os << s.t << ',' << energy(s, EnergyKind::E, basis) << ',' << energy(s, EnergyKind::E0, basis)
           << ',' << energy(s, EnergyKind::E1, basis);
        if (with_modes) {
            for (int j = 0; j < n; ++j) os << ',' << s.pos(j);
            for (int j = 0; j < n; ++j) os << ',' << s.vel(j);
        }
        os << '\n';
    }
    os.precision(old);
}

}  // namespace wavectl
