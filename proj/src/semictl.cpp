#include "wavectl/semictl.hpp"

#include "wavectl/parallel.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace wavectl {

VelocityNonlinearity VelocityNonlinearity::linear(double slope, double L, double L_tilde) {
    VelocityNonlinearity nl;
    nl.f = [slope](double v) { return slope * v; };
    nl.L = L;
    nl.L_tilde = L_tilde;
    std::ostringstream os;
    os << "linear(" << slope << ")";
    nl.description = os.str();
    return nl;
}

VelocityNonlinearity VelocityNonlinearity::lip_sin(double L, double L_tilde) {
    VelocityNonlinearity nl;
    const double a = 0.5 * (L + L_tilde), b = 0.5 * (L - L_tilde);
    nl.f = [a, b](double v) { return a * v + b * std::sin(v); };
    nl.L = L;
    nl.L_tilde = L_tilde;
    std::ostringstream os;
    os << "lip_sin(L=" << L << ", L_tilde=" << L_tilde << ")";
    nl.description = os.str();
    return nl;
}

NonlinearityCheck check_nonlinearity(const VelocityNonlinearity& nl, int samples, double lo, double hi,
                                     std::uint64_t seed) {
    if (!nl.f) throw InvalidArgument("check_nonlinearity: f not set");
    if (samples < 1000) throw InvalidArgument("check_nonlinearity: need at least 1000 samples");
    if (!(hi > lo)) throw InvalidArgument("check_nonlinearity: empty sampling range");
    NonlinearityCheck c;
    c.zero_ok = std::abs(nl.f(0.0)) <= 1e-14;
    if (!c.zero_ok) {
        c.witness = std::make_pair(0.0, 0.0);
        c.violated = "f(0) = 0";
    }
    if (!(nl.L_tilde > 0.0 && nl.L_tilde < nl.L) && c.violated.empty()) c.violated = "0 < L_tilde < L";

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(lo, hi);
    c.lipschitz_ok = c.monotone_ok = true;
    for (int i = 0; i < samples; ++i) {
        const double a = U(rng), b = U(rng);
        const double d = a - b, df = nl.f(a) - nl.f(b);
        const double slack = 1e-12 * (1.0 + std::abs(a) + std::abs(b)) * std::max(1.0, nl.L);
        const bool lip = std::abs(df) <= nl.L * std::abs(d) + slack;
        const bool mono = d * df >= nl.L_tilde * d * d - slack * std::abs(d);
        if (!lip && c.lipschitz_ok) {
            c.lipschitz_ok = false;
            if (!c.witness) {
                c.witness = std::make_pair(a, b);
                c.violated = "|f(a) - f(b)| <= L |a - b|";
            }
        }
        if (!mono && c.monotone_ok) {
            c.monotone_ok = false;
            if (!c.witness) {
                c.witness = std::make_pair(a, b);
                c.violated = "(a - b)(f(a) - f(b)) >= L_tilde (a - b)^2";
            }
        }
    }
    c.pass = c.zero_ok && c.lipschitz_ok && c.monotone_ok && c.violated.empty();
    return c;
}

SemilinearConstants compute_constants(double L, double Lt, double D, double grad_sup, double lap_sup) {
    if (!(Lt > 0.0) || !(Lt < L)) {
        std::ostringstream os;
        os << "compute_constants: need 0 < L_tilde < L (got L = " << L << ", L_tilde = " << Lt << ")";
        throw InvalidArgument(os.str());
    }
    if (!(D > 0.0)) throw InvalidArgument("compute_constants: need D > 0");
    SemilinearConstants c;
    c.L = L;
    c.L_tilde = Lt;
    c.D = D;
    c.grad_sup = grad_sup;
    c.lap_sup = lap_sup;
    c.admissibility_lhs = std::pow(L / Lt - 1.0, 2);
    c.admissibility_rhs = L / (2.0 * D);
    if (!(c.admissibility_lhs < c.admissibility_rhs)) {
        std::ostringstream os;
        os << "compute_constants: admissibility violated: (L/L_tilde - 1)^2 = " << c.admissibility_lhs
           << " is not below L/(2D) = " << c.admissibility_rhs;
        throw InvalidArgument(os.str());
    }
    c.delta1 = Lt * std::sqrt(D / L);
    c.delta2 = Lt * std::sqrt(D / (2.0 * L));
    const double coef =
        lap_sup / (4.0 * L) + (L - Lt) / (2.0 * L * Lt) * std::sqrt(D / (2.0 * L)) * grad_sup * grad_sup;
    const double target = 0.5 * (1.0 / (2.0 * D) - (L - Lt) / (Lt * std::sqrt(2.0 * D * L)));
    if (!(coef > 0.0))
        throw InvalidArgument("compute_constants: cutoff has no ramp (grad and Laplace sup are zero), delta is unbounded");
    c.delta = target / coef;
    c.C_star = (L * L + Lt * Lt) / (2.0 * (L - Lt)) * Lt * std::sqrt(D) /
               (Lt * std::sqrt(L) - (L - Lt) * std::sqrt(2.0 * D));
    c.D_star = c.C_star / c.delta;
    return c;
}

SemilinearConstants compute_constants(double L, double L_tilde, double D, const ControlWindow& chi,
                                      const EigenBasis& basis) {
    return compute_constants(L, L_tilde, D, chi.gradient_sup(basis), chi.laplacian_sup(basis));
}

void SemilinearProblem::validate() const {
    if (!basis) throw InvalidArgument("SemilinearProblem: basis not set");
    if (y0.size() != basis->size() || y1.size() != basis->size())
        throw InvalidArgument("SemilinearProblem: initial data size does not match basis");
    if (!(T > 0) || !(dt > 0)) throw InvalidArgument("SemilinearProblem: need T > 0 and dt > 0");
    if (!std::isfinite(sobolev_norm(y0, 2.0, *basis)) || !std::isfinite(sobolev_norm(y1, 1.0, *basis)))
        throw InvalidArgument("SemilinearProblem: initial data not in H2 x H1");
    if (!nonlinearity.f) throw InvalidArgument("SemilinearProblem: nonlinearity not set");
    if (!(constants.delta > 0) || !(constants.C_star > 0) ||
        !(constants.admissibility_lhs < constants.admissibility_rhs))
        throw InvalidArgument("SemilinearProblem: constants not admissible");
    steps();
}

int SemilinearProblem::steps() const {
    const double m = T / dt;
    const long k = std::lround(m);
    if (k < 1 || std::abs(m - double(k)) > 1e-8 * std::max(1.0, m))
        throw InvalidArgument("SemilinearProblem: dt must divide T");
    return static_cast<int>(k);
}

SemilinearProblem SemilinearProblem::scaled(double s) const {
    SemilinearProblem p = *this;
    p.y0 *= s;
    p.y1 *= s;
    return p;
}

SystemSpec semilinear_dual_spec(const BasisPtr& basis, double L) {
    SystemSpec s;
    s.basis = basis;
    s.damping = -L;
    s.mass_shift = 0.0;
    return s;
}

SystemSpec semilinear_forward_spec(const BasisPtr& basis, const VelocityNonlinearity& nl) {
    SystemSpec s;
    s.basis = basis;
    s.damping = 0.0;
    s.mass_shift = 0.0;
    s.nonlinearity = nl.f;
    return s;
}

namespace {

// Leading-N data shared by every evaluation of F_N.
struct GalerkinContext {
    BasisPtr sub;
    Mat chi;
    State y_init;
    int N = 0;

    GalerkinContext(const SemilinearProblem& p, int n) : N(n) {
        if (N < 1 || N > p.basis->size()) throw InvalidArgument("galerkin_F: need 1 <= N <= basis size");
        sub = N == p.basis->size() ? p.basis : p.basis->truncated(N);
        chi = window_mass(*sub, p.window);
        y_init = State{p.y0.head(N), p.y1.head(N), 0.0};
    }

    SemilinearEval eval(const SemilinearProblem& p, const Vec& x) const {
        if (x.size() != 2 * N) throw InvalidArgument("galerkin_F: x must have length 2N");
        if (!x.allFinite()) throw InvalidArgument("galerkin_F: non-finite x");
        SemilinearEval e;
        e.v = integrate(semilinear_dual_spec(sub, p.nonlinearity.L), State{x.head(N), x.tail(N), p.T}, 0.0, p.T,
                        p.dt, Direction::Backward);
        SystemSpec ys = semilinear_forward_spec(sub, p.nonlinearity);
        ys.source_nodes = std::make_shared<const Mat>(chi * e.v.velocities());
        e.y = integrate(ys, y_init, 0.0, p.T, p.dt);
        e.F.resize(2 * N);
        e.F << e.y.back().pos, e.y.back().vel;
        return e;
    }
};

Vec tilde_weights(int N, double delta, const EigenBasis& basis) {
    if (!(delta > 0)) throw InvalidArgument("tilde_inner: need delta > 0");
    if (N > basis.size()) throw InvalidArgument("tilde_inner: vector longer than twice the basis");
    const Vec lam = basis.lambdas().head(N);
    return lam.array().square() / delta + lam.array();
}

// Energy-norm unit direction: sum lambda q^2 + p^2 = 1.
Vec energy_unit(const Vec& g, const EigenBasis& basis) {
    const int N = static_cast<int>(g.size()) / 2;
    const double n = std::sqrt(h1l2_norm_sq(g.head(N), g.tail(N), *basis.truncated(N)));
    return g / n;
}

}  // namespace

SemilinearEval semilinear_eval(const SemilinearProblem& problem, int N, const Vec& x) {
    return GalerkinContext(problem, N).eval(problem, x);
}

Vec galerkin_F(const SemilinearProblem& problem, int N, const Vec& x) { return semilinear_eval(problem, N, x).F; }

double tilde_inner(const Vec& x, const Vec& y, double delta, const EigenBasis& basis) {
    if (x.size() != y.size() || x.size() % 2 != 0) throw InvalidArgument("tilde_inner: need equal even lengths");
    const int N = static_cast<int>(x.size()) / 2;
    const Vec w = tilde_weights(N, delta, basis);
    return (w.array() * x.head(N).array() * y.head(N).array()).sum() +
           (w.array() * x.tail(N).array() * y.tail(N).array()).sum();
}

double tilde_norm(const Vec& x, double delta, const EigenBasis& basis) {
    return std::sqrt(tilde_inner(x, x, delta, basis));
}

double multiplier_pairing(const Vec& x, const Vec& y, double delta, const EigenBasis& basis) {
    if (x.size() != y.size() || x.size() % 2 != 0) throw InvalidArgument("multiplier_pairing: need equal even lengths");
    if (!(delta > 0)) throw InvalidArgument("multiplier_pairing: need delta > 0");
    const int N = static_cast<int>(x.size()) / 2;
    const Vec mu = basis.laplace_eigenvalues().head(N);
    const Vec wq = mu.array() / delta + mu.array().square();
    const Vec wp = 1.0 / delta + mu.array();
    return (wq.array() * x.head(N).array() * y.head(N).array()).sum() +
           (wp.array() * x.tail(N).array() * y.tail(N).array()).sum();
}

SignAudit sign_audit(const SemilinearProblem& problem, int N, double radius, int directions, std::uint64_t seed) {
    if (!(radius > 0) || directions < 1) throw InvalidArgument("sign_audit: need radius > 0 and directions >= 1");
    const GalerkinContext ctx(problem, N);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> G;
    std::vector<Vec> xs(directions);
    for (auto& x : xs) {
        Vec g(2 * N);
        for (int j = 0; j < 2 * N; ++j) g(j) = G(rng);
        x = radius * energy_unit(g, *ctx.sub);
    }
    std::vector<double> pt(directions), pm(directions);
    const double delta = problem.constants.delta;
    parallel_for(directions, [&](int i) {
        const Vec F = ctx.eval(problem, xs[i]).F;
        pt[i] = tilde_inner(xs[i], F, delta, *ctx.sub);
        pm[i] = multiplier_pairing(xs[i], F, delta, *ctx.sub);
    });
    SignAudit a;
    a.radius = radius;
    a.directions = directions;
    a.min_tilde = *std::min_element(pt.begin(), pt.end());
    a.min_multiplier = *std::min_element(pm.begin(), pm.end());
    a.nonnegative = a.min_multiplier >= 0.0;
    return a;
}

double semilinear_audit_radius(const SemilinearProblem& problem, double D) {
    if (!(D > 2.0)) throw InvalidArgument("semilinear_audit_radius: need D > 2");
    const double kappa = 1.0 - 2.0 / D;
    const double dp = picard_delta(kappa);
    const double data = h1l2_norm_sq(problem.y0, problem.y1, *problem.basis);
    return std::sqrt((1.0 + 1.0 / dp) / (1.0 - (1.0 + dp) * kappa) * data);
}

std::pair<Control, SemilinearReport> solve_semilinear(const SemilinearProblem& problem, int N,
                                                      const SemilinearOptions& opt,
                                                      SemilinearReport* report_out) {
    problem.validate();
    if (!(opt.tol > 0)) throw InvalidArgument("solve_semilinear: need tol > 0");
    const GalerkinContext ctx(problem, N);
    const EigenBasis& sub = *ctx.sub;
    const double delta = problem.constants.delta;
    const int n2 = 2 * N;

    SemilinearReport rep;
    rep.N = N;
    Vec x = Vec::Zero(n2);
    SemilinearEval cur = ctx.eval(problem, x);
    double res = tilde_norm(cur.F, delta, sub);
    rep.residuals.push_back(res);

    auto jacobian = [&](const Vec& x0, const Vec& F0) {
        Mat J(n2, n2);
        parallel_for(n2, [&](int j) {
            const double h = 1e-6 * (1.0 + std::abs(x0(j)));
            Vec xp = x0;
            xp(j) += h;
            J.col(j) = (ctx.eval(problem, xp).F - F0) / h;
        });
        return J;
    };

    // Damped Newton.
    Eigen::ColPivHouseholderQR<Mat> qr;
    int it = 0;
    bool stalled = false;
    while (res > opt.tol && it < opt.max_iter) {
        ++it;
        qr.compute(jacobian(x, cur.F));
        const Vec dx = qr.solve(-cur.F);
        double alpha = 1.0;
        bool accepted = false;
        for (int k = 0; k < 12; ++k, alpha *= 0.5) {
            const Vec xn = x + alpha * dx;
            SemilinearEval trial = ctx.eval(problem, xn);
            const double rn = tilde_norm(trial.F, delta, sub);
            if (rn < (1.0 - 1e-4 * alpha) * res) {
                x = xn;
                cur = std::move(trial);
                res = rn;
                accepted = true;
                break;
            }
        }
        rep.residuals.push_back(res);
        if (!accepted) {
            stalled = true;
            break;
        }
    }

    // Anderson-accelerated chord iteration with the last Jacobian as preconditioner.
    if (stalled && res > opt.tol) {
        rep.used_fallback = true;
        const int depth = 5;
        std::vector<Vec> X, R;
        while (res > opt.tol && it < opt.max_iter) {
            ++it;
            const Vec r = qr.solve(-cur.F);
            X.push_back(x);
            R.push_back(r);
            if (static_cast<int>(X.size()) > depth + 1) {
                X.erase(X.begin());
                R.erase(R.begin());
            }
            Vec xn = x + r;
            const int m = static_cast<int>(X.size()) - 1;
            if (m > 0) {
                Mat dR(n2, m), dX(n2, m);
                for (int k = 0; k < m; ++k) {
                    dR.col(k) = R[k + 1] - R[k];
                    dX.col(k) = X[k + 1] - X[k];
                }
                const Vec gamma = dR.colPivHouseholderQr().solve(r);
                xn -= (dX + dR) * gamma;
            }
            x = xn;
            cur = ctx.eval(problem, x);
            res = tilde_norm(cur.F, delta, sub);
            rep.residuals.push_back(res);
        }
    }

    rep.iterations = it;
    rep.x = x;
    rep.residual = res;
    rep.residual_euclid = cur.F.norm();
    rep.converged = res <= opt.tol;

    const std::vector<double> times = time_grid(problem.T, problem.steps());
    Control u(ctx.sub, problem.window, times, cur.v.velocities());

    rep.E0_initial = energy(ctx.y_init, EnergyKind::E0, sub);
    rep.E1_initial = energy(ctx.y_init, EnergyKind::E1, sub);
    const double g2 = u.omega_gradient_sq(), l2 = u.omega_l2_sq();
    const auto& c = problem.constants;
    rep.control_bound_lhs = c.delta * g2 + 0.5 * l2;
    rep.control_bound_rhs = c.C_star * (rep.E0_initial + c.delta * rep.E1_initial);
    rep.printed_bound_lhs = g2 + l2;
    rep.printed_bound_rhs = c.D_star * (rep.E0_initial + rep.E1_initial);
    const Vec chi = problem.window.sample(sub);
    rep.energy_chain_lhs = time_l2_sq(cur.y);
    rep.energy_chain_rhs = rep.E0_initial / c.L_tilde +
                           time_quadratic(cur.v, weighted_mass(sub, chi.cwiseAbs2())) / (c.L_tilde * c.L_tilde);
    const double e0T = energy(cur.y.back(), EnergyKind::E0, sub);
    rep.terminal_energy_ratio = rep.E0_initial > 0 ? e0T / rep.E0_initial : e0T;

    if (opt.audit_radius > 0) rep.audit = sign_audit(problem, N, opt.audit_radius, opt.audit_directions, opt.seed);

    if (report_out) *report_out = rep;
    if (!rep.converged) {
        std::ostringstream os;
        os << "solve_semilinear: no zero of F_N found in " << it << " iterations (best residual " << res << ")";
        if (opt.audit_radius > 0) os << "; sphere audit minimum " << rep.audit.min_multiplier;
        throw std::runtime_error(os.str());
    }
    return {std::move(u), std::move(rep)};
}

SemilinearResimulation resimulate_semilinear(const SemilinearProblem& problem, const BasisPtr& basis,
                                             const Control& control) {
    const int n = basis->size();
    const int k = std::min<int>(n, static_cast<int>(problem.y0.size()));
    State init = State::zero(n);
    init.pos.head(k) = problem.y0.head(k);
    init.vel.head(k) = problem.y1.head(k);
    SystemSpec spec = semilinear_forward_spec(basis, problem.nonlinearity);
    spec.source_nodes = std::make_shared<const Mat>(control.forcing_nodes(*basis));
    SemilinearResimulation r;
    r.trajectory = integrate(spec, init, 0.0, problem.T, problem.dt);
    r.E0_initial = energy(r.trajectory.front(), EnergyKind::E0, *basis);
    r.E0_terminal = energy(r.trajectory.back(), EnergyKind::E0, *basis);
    r.ratio = r.E0_initial > 0 ? r.E0_terminal / r.E0_initial : r.E0_terminal;
    return r;
}

}  // namespace wavectl
