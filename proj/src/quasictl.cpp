#include "wavectl/quasictl.hpp"

#include "wavectl/parallel.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace wavectl {

State exp_transform(const State& s, ExpDirection dir) {
    const double e = std::exp(s.t);
    if (dir == ExpDirection::ToDamped) return State{e * s.pos, e * (s.pos + s.vel), s.t};
    const Vec y = s.pos / e;
    return State{y, s.vel / e - y, s.t};
}

Mat exp_transform_control(const Mat& coeffs, const std::vector<double>& times, ExpDirection dir) {
    if (coeffs.cols() != static_cast<Eigen::Index>(times.size()))
        throw InvalidArgument("exp_transform_control: one column per time node expected");
    Mat out = coeffs;
    const double sign = dir == ExpDirection::ToDamped ? 1.0 : -1.0;
    for (std::size_t k = 0; k < times.size(); ++k) out.col(static_cast<Eigen::Index>(k)) *= std::exp(sign * times[k]);
    return out;
}

// ---------------------------------------------------------------------------
// Registry nonlinearities

QuasiNonlinearity QuasiNonlinearity::zero() {
    QuasiNonlinearity nl;
    nl.name = "zero";
    return nl;
}

QuasiNonlinearity QuasiNonlinearity::quad_gt(double c) {
    QuasiNonlinearity nl;
    nl.name = "quad_gt";
    nl.g1 = [c](const FieldArgs& a) { return c * a.yt * a.yt; };
    nl.dg1_dy = [](const FieldArgs&) { return 0.0; };
    nl.dg1_dyt = [c](const FieldArgs& a) { return 2.0 * c * a.yt; };
    nl.dg1_dgrad = [](const FieldArgs&) { return std::array<double, 2>{0.0, 0.0}; };
    return nl;
}

QuasiNonlinearity QuasiNonlinearity::eps_y_diffusion(double eps) {
    QuasiNonlinearity nl;
    nl.name = "eps_y_diffusion";
    nl.g2 = [eps](const FieldArgs& a) { return std::array<double, 3>{eps * a.y, 0.0, eps * a.y}; };
    return nl;
}

FullNonlinearity FullNonlinearity::zero() {
    FullNonlinearity F;
    F.name = "zero";
    F.F = [](const FullArgs&) { return 0.0; };
    return F;
}

FullNonlinearity FullNonlinearity::vt_square(double c) {
    FullNonlinearity F;
    F.name = "vt_square";
    F.F = [c](const FullArgs& a) { return c * a.v * a.v; };
    F.dF_dv = [c](const FullArgs& a) { return 2.0 * c * a.v; };
    return F;
}

namespace {

template <class Args, class Fn>
bool order_test(const Fn& fn, int order, const std::vector<Args>& samples, const std::function<Args(const Args&, double)>& scale,
                std::string& message, const char* what) {
    Args zero = samples.front();
    zero = scale(zero, 0.0);
    if (std::abs(fn(zero)) > 1e-14) {
        message = std::string(what) + " does not vanish at zero";
        return false;
    }
    for (const Args& a : samples) {
        const double r1 = std::abs(fn(scale(a, 1e-2))) / std::pow(1e-2, order);
        const double r2 = std::abs(fn(scale(a, 1e-3))) / std::pow(1e-3, order);
        if (!(r2 <= 2.0 * r1 + 1e-9)) {
            std::ostringstream os;
            os << what << " is not O(|arg|^" << order << ") near zero (ratio " << r1 << " -> " << r2 << ")";
            message = os.str();
            return false;
        }
    }
    return true;
}

}  // namespace

QuasiCheck check_quasi_nonlinearity(const QuasiNonlinearity& nl, int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0), X(0.0, 1.0);
    std::vector<FieldArgs> samples(32);
    for (auto& a : samples) {
        a.t = X(rng);
        a.x = {X(rng), dim > 1 ? X(rng) : 0.0};
        a.y = U(rng);
        a.yt = U(rng);
        a.grad = {U(rng), dim > 1 ? U(rng) : 0.0};
    }
    const std::function<FieldArgs(const FieldArgs&, double)> scale = [](const FieldArgs& a, double s) {
        FieldArgs b = a;
        b.y *= s;
        b.yt *= s;
        b.grad = {s * a.grad[0], s * a.grad[1]};
        return b;
    };
    QuasiCheck c;
    c.pass = true;
    if (nl.g1) c.pass = order_test(nl.g1, 2, samples, scale, c.message, "g1");
    if (c.pass && nl.g2)
        for (int k = 0; k < 3 && c.pass; ++k)
            c.pass = order_test([&](const FieldArgs& a) { return nl.g2(a)[k]; }, 1, samples, scale, c.message, "g2");
    if (c.pass && nl.g1 && !(nl.dg1_dy && nl.dg1_dyt && nl.dg1_dgrad)) {
        c.pass = false;
        c.message = "g1 is missing partial-derivative hooks";
    }
    return c;
}

QuasiCheck check_full_nonlinearity(const FullNonlinearity& F, int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0), X(0.0, 1.0);
    std::vector<FullArgs> samples(32);
    for (auto& a : samples) {
        a.t = X(rng);
        a.x = {X(rng), dim > 1 ? X(rng) : 0.0};
        a.y = U(rng);
        a.v = U(rng);
        a.grad = {U(rng), dim > 1 ? U(rng) : 0.0};
        a.hess = {U(rng), dim > 1 ? U(rng) : 0.0, dim > 1 ? U(rng) : 0.0};
    }
    const std::function<FullArgs(const FullArgs&, double)> scale = [](const FullArgs& a, double s) {
        FullArgs b = a;
        b.y *= s;
        b.v *= s;
        for (double& g : b.grad) g *= s;
        for (double& h : b.hess) h *= s;
        return b;
    };
    QuasiCheck c;
    if (!F.F) {
        c.message = "F not set";
        return c;
    }
    c.pass = order_test(F.F, 2, samples, scale, c.message, "F");
    return c;
}

// ---------------------------------------------------------------------------
// Coefficient freezing

namespace {

// Grid samples of an iterate state.
struct GridState {
    Vec y, yt;
    std::array<Vec, 2> grad;
    std::array<Vec, 3> hess;
};

GridState grid_state(const EigenBasis& basis, const Vec& q, const Vec& p, bool with_hessian) {
    GridState g;
    g.y = basis.values() * q;
    g.yt = basis.values() * p;
    for (int a = 0; a < basis.dim(); ++a) g.grad[a] = basis.gradient(a) * q;
    if (with_hessian) {
        g.hess[0] = basis.hessian(0, 0) * q;
        if (basis.dim() > 1) {
            g.hess[1] = basis.hessian(0, 1) * q;
            g.hess[2] = basis.hessian(1, 1) * q;
        }
    }
    return g;
}

FieldArgs field_args(const EigenBasis& basis, const GridState& g, int i, double t) {
    FieldArgs a;
    a.t = t;
    a.x = basis.nodes()[i];
    a.y = g.y(i);
    a.yt = g.yt(i);
    a.grad = {g.grad[0](i), basis.dim() > 1 ? g.grad[1](i) : 0.0};
    return a;
}

// Frozen fields at one node from grid samples.
CoefficientFields freeze_node(const QuasiNonlinearity& nl, const EigenBasis& basis, const GridState& g, double t) {
    const int G = basis.grid_size(), dim = basis.dim();
    const auto& xi = gauss_legendre_nodes();
    const auto& wi = gauss_legendre_weights();
    CoefficientFields f;
    if (nl.g2) {
        f.a[0].resize(G);
        if (dim > 1) {
            f.a[1].resize(G);
            f.a[2].resize(G);
        }
        for (int i = 0; i < G; ++i) {
            const auto g2 = nl.g2(field_args(basis, g, i, t));
            f.a[0](i) = 1.0 - g2[0];
            if (dim > 1) {
                f.a[1](i) = -g2[1];
                f.a[2](i) = 1.0 - g2[2];
            }
        }
    }
    if (nl.g1) {
        f.b0.resize(G);
        f.b_tilde.resize(G);
        for (int a = 0; a < dim; ++a) f.b[a].resize(G);
        for (int i = 0; i < G; ++i) {
            const FieldArgs full = field_args(basis, g, i, t);
            double b0 = 2.0, bt = 1.0, bk[2] = {0.0, 0.0};
            for (int q = 0; q < kQuadratureOrder; ++q) {
                const double tau = 0.5 * (1.0 + xi[q]), w = 0.5 * wi[q];
                // g1(y, y_t, grad) - g1(y, 0, grad): scale y_t.
                FieldArgs a = full;
                a.yt = tau * full.yt;
                b0 += w * nl.dg1_dyt(a);
                // g1(y, 0, grad) - g1(y, 0, 0): scale grad.
                a = full;
                a.yt = 0.0;
                a.grad = {tau * full.grad[0], tau * full.grad[1]};
                const auto dg = nl.dg1_dgrad(a);
                bk[0] += w * dg[0];
                bk[1] += w * dg[1];
                // g1(y, 0, 0) - g1(0, 0, 0): scale y.
                a = full;
                a.yt = 0.0;
                a.grad = {0.0, 0.0};
                a.y = tau * full.y;
                bt += w * nl.dg1_dy(a);
            }
            f.b0(i) = b0;
            f.b_tilde(i) = bt;
            for (int k = 0; k < dim; ++k) f.b[k](i) = bk[k];
        }
    }
    return f;
}

double max_dev(const Vec& v, double ref) { return v.size() ? (v.array() - ref).abs().maxCoeff() : 0.0; }

void check_finite(const CoefficientFields& f) {
    bool ok = true;
    for (const auto& a : f.a) ok = ok && a.allFinite();
    for (const auto& b : f.b) ok = ok && b.allFinite();
    ok = ok && f.b0.allFinite() && f.b_tilde.allFinite();
    if (!ok) throw std::runtime_error("freeze_coefficients: non-finite coefficient from a nonlinearity hook");
}

void deviations(FrozenCoefficients& out, int dim) {
    for (const auto& f : out.fields) {
        double a = max_dev(f.a[0], 1.0);
        if (dim > 1) a = std::max({a, max_dev(f.a[1], 0.0), max_dev(f.a[2], 1.0)});
        out.a_dev = std::max(out.a_dev, a);
        out.b0_dev = std::max(out.b0_dev, max_dev(f.b0, 2.0));
        out.b_dev = std::max({out.b_dev, max_dev(f.b[0], 0.0), max_dev(f.b[1], 0.0)});
        out.b_tilde_dev = std::max(out.b_tilde_dev, max_dev(f.b_tilde, 1.0));
    }
}

}  // namespace

FrozenCoefficients freeze_coefficients(const QuasiNonlinearity& nl, const EigenBasis& basis,
                                       const Trajectory& iterate) {
    if (iterate.states.empty()) throw InvalidArgument("freeze_coefficients: empty iterate");
    for (const auto& s : iterate.states)
        if (!s.finite()) throw InvalidArgument("freeze_coefficients: non-finite iterate");
    FrozenCoefficients out;
    out.fields.resize(iterate.states.size());
    parallel_for(static_cast<int>(iterate.states.size()), [&](int k) {
        const State& s = iterate.states[k];
        out.fields[k] = freeze_node(nl, basis, grid_state(basis, s.pos, s.vel, false), iterate.times[k]);
        check_finite(out.fields[k]);
    });
    deviations(out, basis.dim());
    return out;
}

// ---------------------------------------------------------------------------
// Problem

void QuasiProblem::validate() const {
    if (!basis) throw InvalidArgument("QuasiProblem: basis not set");
    if (y0.size() != basis->size() || y1.size() != basis->size())
        throw InvalidArgument("QuasiProblem: initial data size does not match basis");
    if (!(T > 0) || !(dt > 0)) throw InvalidArgument("QuasiProblem: need T > 0 and dt > 0");
    if (!y0.allFinite() || !y1.allFinite()) throw InvalidArgument("QuasiProblem: non-finite initial data");
    if (geometry && T < geometry->T_min) {
        std::ostringstream os;
        os << "geometry: T = " << T << " is below T_min = " << geometry->T_min;
        throw InvalidArgument(os.str());
    }
    const double size = data_size();
    if (size > epsilon_gate) {
        std::ostringstream os;
        os << "QuasiProblem: data size " << size << " in H^" << sobolev_order << " x H^" << sobolev_order - 1
           << " exceeds the smallness gate " << epsilon_gate;
        throw InvalidArgument(os.str());
    }
    steps();
}

int QuasiProblem::steps() const {
    const double m = T / dt;
    const long k = std::lround(m);
    if (k < 1 || std::abs(m - double(k)) > 1e-8 * std::max(1.0, m))
        throw InvalidArgument("QuasiProblem: dt must divide T");
    return static_cast<int>(k);
}

double QuasiProblem::data_size() const {
    return sobolev_norm(y0, sobolev_order, *basis) + sobolev_norm(y1, sobolev_order - 1.0, *basis);
}

// ---------------------------------------------------------------------------
// Alternating scheme

namespace {

double hk_norm(const Vec& q, const Vec& p, int k, const EigenBasis& basis) {
    const Vec lam = basis.lambdas().head(q.size());
    return std::sqrt((lam.array().pow(k) * q.array().square() + lam.array().pow(k - 1) * p.array().square()).sum());
}

double sup_diff(const Trajectory& a, const Trajectory& b, int k, const EigenBasis& basis) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.states.size(); ++i)
        s = std::max(s, hk_norm(a.states[i].pos - b.states[i].pos, a.states[i].vel - b.states[i].vel, k, basis));
    return s;
}

Trajectory zero_trajectory(int n, double T, int m) {
    Trajectory t;
    t.dt = T / m;
    t.times = time_grid(T, m);
    t.states.resize(m + 1);
    for (int k = 0; k <= m; ++k) t.states[k] = State::zero(n, t.times[k]);
    return t;
}

struct Scheme {
    BasisPtr basis;
    Mat chi;
    double T = 0.0, dt = 0.0;
    int m = 0;
    State init;
    PrincipalForm form = PrincipalForm::Divergence;
    /// Coefficient fields for the next v-solve from the previous v-iterate.
    std::function<std::vector<CoefficientFields>(const Trajectory&)> freeze;
    /// max |a - I| of a field set (for the smallness surrogate).
    std::function<double(const std::vector<CoefficientFields>&)> a_dev;
};

struct SchemeResult {
    Trajectory v, z;
    ConvergenceReport rep;
};

// Least-squares fit of log(values) against index; returns (rate, R^2).
std::pair<double, double> log_linear_fit(const std::vector<double>& y, std::size_t first) {
    std::vector<double> xs, ls;
    for (std::size_t i = first; i < y.size(); ++i)
        if (y[i] > 0) {
            xs.push_back(double(i));
            ls.push_back(std::log(y[i]));
        }
    const std::size_t n = xs.size();
    if (n < 3) return {0.0, 0.0};
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ls[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ls[i] - my);
        syy += (ls[i] - my) * (ls[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return {std::exp(slope), r2};
}

SchemeResult run_scheme(const Scheme& s, const QuasiOptions& opt, ConvergenceReport* report_out) {
    if (opt.orders.empty()) throw InvalidArgument("iterate_quasilinear: need at least one Sobolev order");
    if (!(opt.tol > 0) || opt.max_alpha < 1) throw InvalidArgument("iterate_quasilinear: need tol > 0, max_alpha >= 1");
    const int n = s.basis->size();
    const EigenBasis& basis = *s.basis;

    SchemeResult r;
    ConvergenceReport& rep = r.rep;
    rep.orders = opt.orders;
    rep.diff_v.assign(opt.orders.size(), {});
    rep.diff_z.assign(opt.orders.size(), {});

    Trajectory v_prev = zero_trajectory(n, s.T, s.m), z_prev = v_prev;
    State w = State::zero(n, s.T);
    int increases = 0;
    double last_sum = INFINITY;

    for (int alpha = 1; alpha <= opt.max_alpha; ++alpha) {
        std::vector<CoefficientFields> fields = s.freeze(v_prev);
        rep.a_dev.push_back(s.a_dev(fields));
        double size = 0.0;
        for (const auto& st : v_prev.states) size = std::max(size, std::sqrt(h1l2_norm_sq(st.pos, st.vel, basis)));
        rep.iterate_size.push_back(size);

        SystemSpec zs;
        zs.basis = s.basis;
        zs.damping = -2.0;
        zs.form = s.form;
        SystemSpec vs = zs;
        vs.damping = 2.0;
        if (!fields.empty()) {
            auto zf = fields;
            for (auto& f : zf)
                if (f.b0.size()) f.b0 = -f.b0;
            zs.fields = std::make_shared<const std::vector<CoefficientFields>>(std::move(zf));
            vs.fields = std::make_shared<const std::vector<CoefficientFields>>(std::move(fields));
        }
        Trajectory z = integrate(zs, w, 0.0, s.T, s.dt, Direction::Backward);
        vs.source_nodes = std::make_shared<const Mat>(-2.0 * s.chi * z.velocities());
        Trajectory v = integrate(vs, s.init, 0.0, s.T, s.dt);

        rep.alphas.push_back(alpha);
        for (std::size_t i = 0; i < opt.orders.size(); ++i) {
            rep.diff_v[i].push_back(sup_diff(v, v_prev, opt.orders[i], basis));
            rep.diff_z[i].push_back(sup_diff(z, z_prev, opt.orders[i], basis));
        }
        const double dv = rep.diff_v[0].back(), dz = rep.diff_z[0].back();

        const double tel = std::max((z.back().pos - w.pos).cwiseAbs().maxCoeff(),
                                    (z.back().vel - w.vel).cwiseAbs().maxCoeff());
        rep.telescoping_defect = std::max(rep.telescoping_defect, tel);
        // Terminal data for the next dual solve.
        State w_next{v.back().pos + z.back().pos, v.back().vel + z.back().vel, s.T};

        v_prev = std::move(v);
        z_prev = std::move(z);
        w = std::move(w_next);
        rep.iterations = alpha;
        rep.terminal_norm = std::sqrt(h1l2_norm_sq(v_prev.back().pos, v_prev.back().vel, basis));

        const double sum = dv + dz;
        if (sum < opt.tol) {
            rep.converged = true;
            break;
        }
        increases = sum > last_sum ? increases + 1 : 0;
        last_sum = sum;
        if (increases >= 3) {
            rep.diverged = true;
            break;
        }
    }

    const auto& dv = rep.diff_v[0];
    for (std::size_t i = 1; i < dv.size(); ++i) rep.ratios.push_back(dv[i - 1] > 0 ? dv[i] / dv[i - 1] : 0.0);
    // alpha = 1 is the free flow (Z = 0); the fit starts at alpha = 2.
    std::tie(rep.fitted_rate, rep.fit_r2) = log_linear_fit(dv, 1);

    if (report_out) *report_out = rep;
    if (rep.diverged) {
        std::ostringstream os;
        os << "iterate_quasilinear: diverged (difference norms increased 3 times in a row at alpha = "
           << rep.iterations << ")";
        throw std::runtime_error(os.str());
    }
    if (!rep.converged) {
        std::ostringstream os;
        os << "iterate_quasilinear: not converged after " << rep.iterations << " iterations (last difference "
           << last_sum << ")";
        throw std::runtime_error(os.str());
    }
    r.v = std::move(v_prev);
    r.z = std::move(z_prev);
    return r;
}

double fields_a_dev(const std::vector<CoefficientFields>& fields, int dim) {
    FrozenCoefficients fc;
    fc.fields = fields;
    deviations(fc, dim);
    return fc.a_dev;
}

}  // namespace

QuasiResult iterate_quasilinear(const QuasiProblem& problem, const QuasiNonlinearity& nl, const QuasiOptions& opt,
                                ConvergenceReport* report_out) {
    problem.validate();
    Scheme s;
    s.basis = problem.basis;
    s.chi = window_mass(*problem.basis, problem.window);
    s.T = problem.T;
    s.dt = problem.dt;
    s.m = problem.steps();
    s.init = State{problem.y0, problem.y1, 0.0};
    s.form = problem.form;
    const bool linear = !nl.g1 && !nl.g2;
    s.freeze = [&](const Trajectory& v) {
        if (linear) return std::vector<CoefficientFields>{};
        return freeze_coefficients(nl, *problem.basis, v).fields;
    };
    const int dim = problem.basis->dim();
    s.a_dev = [dim](const std::vector<CoefficientFields>& f) { return fields_a_dev(f, dim); };

    ConvergenceReport rep;
    SchemeResult r;
    try {
        r = run_scheme(s, opt, &rep);
    } catch (...) {
        rep.epsilon_gate = problem.epsilon_gate;
        rep.data_size = problem.data_size();
        if (report_out) *report_out = rep;
        throw;
    }
    r.rep.epsilon_gate = problem.epsilon_gate;
    r.rep.data_size = problem.data_size();
    if (report_out) *report_out = r.rep;
    QuasiResult out;
    out.control = Control(problem.basis, problem.window, r.z.times, -2.0 * r.z.velocities());
    out.v = std::move(r.v);
    out.z = std::move(r.z);
    out.report = std::move(r.rep);
    return out;
}

SystemSpec quasi_system_spec(const BasisPtr& basis, const QuasiNonlinearity& nl, PrincipalForm form) {
    SystemSpec spec;
    spec.basis = basis;
    spec.damping = 2.0;
    spec.mass_shift = 1.0;
    spec.form = form;
    const EigenBasis* b = basis.get();
    if (nl.g2) {
        spec.state_fields = [b, nl](double t, const Vec& q, const Vec& p, CoefficientFields& out) {
            const GridState g = grid_state(*b, q, p, false);
            const int G = b->grid_size(), dim = b->dim();
            out.a[0].resize(G);
            if (dim > 1) {
                out.a[1].resize(G);
                out.a[2].resize(G);
            }
            for (int i = 0; i < G; ++i) {
                const auto g2 = nl.g2(field_args(*b, g, i, t));
                out.a[0](i) = 1.0 - g2[0];
                if (dim > 1) {
                    out.a[1](i) = -g2[1];
                    out.a[2](i) = 1.0 - g2[2];
                }
            }
        };
    }
    if (nl.g1) {
        spec.load = [b, nl](double t, const Vec& q, const Vec& p) {
            const GridState g = grid_state(*b, q, p, false);
            Vec s(b->grid_size());
            for (int i = 0; i < b->grid_size(); ++i) s(i) = nl.g1(field_args(*b, g, i, t));
            return Vec(b->values().transpose() * b->weights().cwiseProduct(s));
        };
    }
    return spec;
}

QuasiResimulation resimulate_quasilinear(const QuasiProblem& problem, const QuasiNonlinearity& nl,
                                         const BasisPtr& basis, const Control& control) {
    const int n = basis->size();
    const int k = std::min<int>(n, static_cast<int>(problem.y0.size()));
    State init = State::zero(n);
    init.pos.head(k) = problem.y0.head(k);
    init.vel.head(k) = problem.y1.head(k);
    SystemSpec spec = quasi_system_spec(basis, nl, problem.form);
    spec.source_nodes = std::make_shared<const Mat>(control.forcing_nodes(*basis));
    QuasiResimulation r;
    r.trajectory = integrate(spec, init, 0.0, problem.T, problem.dt);
    r.E_initial = energy(r.trajectory.front(), EnergyKind::E, *basis);
    r.E_terminal = energy(r.trajectory.back(), EnergyKind::E, *basis);
    r.ratio = r.E_initial > 0 ? r.E_terminal / r.E_initial : r.E_terminal;
    r.pde_residual = residual(r.trajectory, spec);
    return r;
}

// ---------------------------------------------------------------------------
// Fully nonlinear reduction

namespace {

FullArgs full_args(const EigenBasis& basis, const GridState& g, int i, double t) {
    FullArgs a;
    a.t = t;
    a.x = basis.nodes()[i];
    a.y = g.y(i);
    a.v = g.yt(i);
    a.grad = {g.grad[0](i), basis.dim() > 1 ? g.grad[1](i) : 0.0};
    a.hess = {g.hess[0](i), basis.dim() > 1 ? g.hess[1](i) : 0.0, basis.dim() > 1 ? g.hess[2](i) : 0.0};
    return a;
}

// Projection (F, phi_i) of F evaluated on the grid.
Vec project_F(const EigenBasis& basis, const FullNonlinearity& F, const Vec& q, const Vec& p, double t) {
    const GridState g = grid_state(basis, q, p, true);
    Vec s(basis.grid_size());
    for (int i = 0; i < basis.grid_size(); ++i) s(i) = F.F(full_args(basis, g, i, t));
    return basis.values().transpose() * basis.weights().cwiseProduct(s);
}

// Coefficients of the v = y_t system along (y, v) at one node.
CoefficientFields full_node_fields(const FullNonlinearity& F, const EigenBasis& basis, const GridState& g, double t) {
    const int G = basis.grid_size(), dim = basis.dim();
    CoefficientFields f;
    if (F.dF_dv) {
        f.b0.resize(G);
        for (int i = 0; i < G; ++i) f.b0(i) = 2.0 - F.dF_dv(full_args(basis, g, i, t));
    }
    if (F.dF_dy) {
        f.b_tilde.resize(G);
        for (int i = 0; i < G; ++i) f.b_tilde(i) = 1.0 - F.dF_dy(full_args(basis, g, i, t));
    }
    if (F.dF_dgrad) {
        for (int a = 0; a < dim; ++a) f.b[a].resize(G);
        for (int i = 0; i < G; ++i) {
            const auto d = F.dF_dgrad(full_args(basis, g, i, t));
            for (int a = 0; a < dim; ++a) f.b[a](i) = -d[a];
        }
    }
    if (F.dF_dhess) {
        f.a[0].resize(G);
        if (dim > 1) {
            f.a[1].resize(G);
            f.a[2].resize(G);
        }
        for (int i = 0; i < G; ++i) {
            const auto d = F.dF_dhess(full_args(basis, g, i, t));
            f.a[0](i) = 1.0 + d[0];
            if (dim > 1) {
                // y_xy appears once in F but twice in sum a_ij v_{x_i x_j}.
                f.a[1](i) = 0.5 * d[1];
                f.a[2](i) = 1.0 + d[2];
            }
        }
    }
    return f;
}

// y(t_k) = y0 + trapezoidal integral of v.
Mat reconstruct_positions(const Vec& y0, const Trajectory& v) {
    Mat y(y0.size(), v.states.size());
    y.col(0) = y0;
    for (std::size_t k = 1; k < v.states.size(); ++k)
        y.col(static_cast<Eigen::Index>(k)) = y.col(static_cast<Eigen::Index>(k - 1)) +
                                             0.5 * (v.times[k] - v.times[k - 1]) * (v.states[k - 1].pos + v.states[k].pos);
    return y;
}

}  // namespace

SystemSpec fully_nonlinear_spec(const BasisPtr& basis, const FullNonlinearity& F) {
    if (!F.F) throw InvalidArgument("fully_nonlinear_spec: F not set");
    SystemSpec spec;
    spec.basis = basis;
    spec.damping = 2.0;
    spec.mass_shift = 1.0;
    const EigenBasis* b = basis.get();
    spec.load = [b, F](double t, const Vec& q, const Vec& p) { return Vec(-project_F(*b, F, q, p, t)); };
    return spec;
}

FullyNonlinearResult fully_nonlinear_control(const QuasiProblem& problem, const FullNonlinearity& F,
                                             const QuasiOptions& opt, FullyNonlinearReport* report_out) {
    problem.validate();
    const QuasiCheck fc = check_full_nonlinearity(F, problem.basis->dim());
    if (!fc.pass) throw InvalidArgument("fully_nonlinear_control: " + fc.message);
    const BasisPtr& basis = problem.basis;
    const EigenBasis& B = *basis;

    // v = y_t starts from (y1, -2 y1 + Laplace y0 - y0 + F(y0, y1, ...)).
    const Vec vt0 = -2.0 * problem.y1 - B.lambdas().cwiseProduct(problem.y0) +
                    project_F(B, F, problem.y0, problem.y1, 0.0);

    Scheme s;
    s.basis = basis;
    s.chi = window_mass(B, problem.window);
    s.T = problem.T;
    s.dt = problem.dt;
    s.m = problem.steps();
    s.init = State{problem.y1, vt0, 0.0};
    s.form = PrincipalForm::NonDivergence;
    const bool constant = !F.dF_dv && !F.dF_dy && !F.dF_dgrad && !F.dF_dhess;
    s.freeze = [&](const Trajectory& v) {
        if (constant) return std::vector<CoefficientFields>{};
        const Mat y = reconstruct_positions(problem.y0, v);
        std::vector<CoefficientFields> out(v.states.size());
        parallel_for(static_cast<int>(v.states.size()), [&](int k) {
            // Grid state of (y, y_t) = (y, v).
            const GridState g = grid_state(B, y.col(k), v.states[k].pos, true);
            out[k] = full_node_fields(F, B, g, v.times[k]);
            check_finite(out[k]);
        });
        return out;
    };
    const int dim = B.dim();
    s.a_dev = [dim](const std::vector<CoefficientFields>& f) { return fields_a_dev(f, dim); };

    FullyNonlinearReport rep;
    SchemeResult r;
    try {
        r = run_scheme(s, opt, &rep.iteration);
    } catch (...) {
        rep.iteration.epsilon_gate = problem.epsilon_gate;
        rep.iteration.data_size = problem.data_size();
        if (report_out) *report_out = rep;
        throw;
    }
    rep.iteration = r.rep;
    rep.iteration.epsilon_gate = problem.epsilon_gate;
    rep.iteration.data_size = problem.data_size();

    // u = -2 (z - z(0)), so that u_t = -2 z_t drives the v-system.
    const Mat zpos = r.z.positions();
    const Mat u = -2.0 * (zpos.colwise() - zpos.col(0));
    FullyNonlinearResult out;
    out.control = Control(basis, problem.window, r.z.times, u);

    SystemSpec ys = fully_nonlinear_spec(basis, F);
    const Mat forcing = out.control.forcing_nodes(B);
    ys.source_nodes = std::make_shared<const Mat>(forcing);
    out.y = integrate(ys, State{problem.y0, problem.y1, 0.0}, 0.0, problem.T, problem.dt);

    auto ytt = [&](const State& st, Eigen::Index k) {
        return Vec(-2.0 * st.vel - B.lambdas().cwiseProduct(st.pos) + project_F(B, F, st.pos, st.vel, st.t) +
                   forcing.col(k));
    };
    const Eigen::Index last = forcing.cols() - 1;
    rep.initial_size = out.y.front().vel.norm() + ytt(out.y.front(), 0).norm();
    rep.terminal_size = out.y.back().vel.norm() + ytt(out.y.back(), last).norm();
    rep.terminal_ratio = rep.initial_size > 0 ? rep.terminal_size / rep.initial_size : rep.terminal_size;

    const Mat y_rec = reconstruct_positions(problem.y0, r.v);
    for (std::size_t k = 0; k < out.y.states.size(); ++k) {
        rep.v_consistency = std::max(rep.v_consistency, (r.v.states[k].pos - out.y.states[k].vel).norm());
        rep.reconstruction_drift =
            std::max(rep.reconstruction_drift, (y_rec.col(static_cast<Eigen::Index>(k)) - out.y.states[k].pos).norm());
    }
    out.v = std::move(r.v);
    out.report = rep;
    if (report_out) *report_out = rep;
    return out;
}

}  // namespace wavectl
