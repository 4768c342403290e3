#include "wavectl/obsv.hpp"

#include "wavectl/parallel.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace wavectl {

// ---------------------------------------------------------------------------
// Observability

State sample_unit_data(const Vec& stiffness, const Vec& lambdas, DecayProfile profile, std::uint64_t& state_seed) {
    std::mt19937_64 rng(state_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const Eigen::Index n = stiffness.size();
    const double e = static_cast<int>(profile);
    State s = State::zero(static_cast<int>(n));
    double norm = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        const double decay = std::pow(lambdas(j), -e);
        // Components in energy coordinates (sqrt(k) q, p).
        const double a = gauss(rng) * decay, b = gauss(rng) * decay;
        s.pos(j) = stiffness(j) > 0 ? a / std::sqrt(stiffness(j)) : 0.0;
        s.vel(j) = b;
        norm += (stiffness(j) > 0 ? a * a : 0.0) + b * b;
    }
    state_seed = rng();
    norm = std::sqrt(norm);
    s.pos /= norm;
    s.vel /= norm;
    return s;
}

namespace {

// Rescales data so that sum mu p^2 + mu^2 q^2 = 1 (mu = lambda - 1), i.e. unit H2 x H1 energy.
State to_unit_second_energy(State s, const Vec& lambdas) {
    const Vec mu = lambdas.array() - 1.0;
    const double norm = std::sqrt((mu.array() * s.vel.array().square()).sum() +
                                  (mu.array().square() * s.pos.array().square()).sum());
    s.pos /= norm;
    s.vel /= norm;
    return s;
}

}  // namespace

ObservabilityEstimate estimate_observability(const SystemSpec& dual, const Box& omega, double T, double dt,
                                             const ObservabilityOptions& options) {
    if (options.samples < 10) throw InvalidArgument("estimate_observability: samples must be >= 10");
    if (!dual.basis) throw InvalidArgument("estimate_observability: dual spec has no basis");
    const EigenBasis& basis = *dual.basis;
    const Vec lambdas = basis.lambdas();
    const Vec stiffness = basis.laplace_eigenvalues().array() + dual.mass_shift;
    const Mat gram = subdomain_gram(basis, omega);
    const Mat grad_gram = subdomain_gradient_gram(basis, omega);
    const bool fwd = options.direction == Direction::Forward;

    ObservabilityEstimate est;
    est.samples = options.samples;
    est.seed = options.seed;
    std::vector<State> data(options.samples), data2(options.samples);
    // One generator seed per sample; modes are drawn in order, so a sample's
    // leading coefficients do not depend on the truncation N.
    std::mt19937_64 master(options.seed);
    for (int i = 0; i < options.samples; ++i) {
        const auto profile = static_cast<DecayProfile>(i % 3);
        est.decay_profiles.push_back(i % 3);
        std::uint64_t s1 = master(), s2 = master();
        data[i] = sample_unit_data(stiffness, lambdas, profile, s1);
        data2[i] = to_unit_second_energy(sample_unit_data(stiffness, lambdas, profile, s2), lambdas);
    }

    std::vector<double> obs_t(options.samples), obs_grad(options.samples), ratio2(options.samples, 0.0);
    parallel_for(options.samples, [&](int i) {
        State d = data[i];
        d.t = fwd ? 0.0 : T;
        const Trajectory z = integrate(dual, d, 0.0, T, dt, options.direction);
        obs_t[i] = time_quadratic(z, gram, true);
        obs_grad[i] = time_quadratic(z, grad_gram, false);
        if (options.variant_constants) {
            State d2 = data2[i];
            d2.t = d.t;
            const Trajectory z2 = integrate(dual, d2, 0.0, T, dt, options.direction);
            const State& far = fwd ? z2.back() : z2.front();
            const double num = 0.5 * energy(far, EnergyKind::E1, basis);
            const double den = time_quadratic(z2, grad_gram, true);
            ratio2[i] = den > 0 ? num / den : INFINITY;
        }
    });

    for (int i = 0; i < options.samples; ++i) {
        const double r = obs_t[i] > 1e-14 ? 1.0 / obs_t[i] : INFINITY;
        if (obs_t[i] <= 1e-14 && !est.failure_witness) est.failure_witness = i;
        est.per_sample_ratios.push_back(r);
        est.D_emp = std::max(est.D_emp, r);
        const double mn = std::min(obs_t[i], obs_grad[i]);
        est.D_min_variant = std::max(est.D_min_variant, mn > 1e-14 ? 1.0 / mn : INFINITY);
        est.D_gradient_variant = std::max(est.D_gradient_variant, ratio2[i]);
    }
    est.kappa_emp = 1.0 - 2.0 / est.D_emp;
    est.geometry_warning = est.D_emp > 1e3;
    return est;
}

// ---------------------------------------------------------------------------
// Weight-function checks

ScalarField ScalarField::squared_distance(const Point& x0, int dim, double scale, double shift) {
    ScalarField f;
    f.value = [=](const Point& x) {
        double s = 0.0;
        for (int a = 0; a < dim; ++a) s += (x[a] - x0[a]) * (x[a] - x0[a]);
        return scale * s + shift;
    };
    f.gradient = [=](const Point& x) {
        std::array<double, 2> g{0.0, 0.0};
        for (int a = 0; a < dim; ++a) g[a] = 2.0 * scale * (x[a] - x0[a]);
        return g;
    };
    f.hessian = [=](const Point&) {
        return std::array<double, 3>{2.0 * scale, 0.0, dim == 2 ? 2.0 * scale : 0.0};
    };
    return f;
}

ScalarField ScalarField::constant(double c) {
    ScalarField f;
    f.value = [=](const Point&) { return c; };
    f.gradient = [](const Point&) { return std::array<double, 2>{0.0, 0.0}; };
    f.hessian = [](const Point&) { return std::array<double, 3>{0.0, 0.0, 0.0}; };
    return f;
}

ScalarField ScalarField::affine(double a, double b) const {
    ScalarField f;
    auto v = value;
    auto g = gradient;
    auto h = hessian;
    f.value = [=](const Point& x) { return a * v(x) + b; };
    f.gradient = [=](const Point& x) {
        auto r = g(x);
        return std::array<double, 2>{a * r[0], a * r[1]};
    };
    f.hessian = [=](const Point& x) {
        auto r = h(x);
        return std::array<double, 3>{a * r[0], a * r[1], a * r[2]};
    };
    return f;
}

MatrixField MatrixField::identity() {
    MatrixField m;
    m.value = [](const Point&) { return Mat2::Identity(); };
    m.derivative = [](const Point&, int) { return Mat2::Zero(); };
    return m;
}

namespace {

std::vector<Point> lattice(const Domain& domain, int per_axis) {
    const Box& b = domain.bounds;
    std::vector<Point> pts;
    const int ny = domain.dim() == 2 ? per_axis : 1;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < per_axis; ++i) {
            Point x{b.lo[0] + b.length(0) * i / (per_axis - 1), 0.0};
            if (domain.dim() == 2) x[1] = b.lo[1] + b.length(1) * j / (per_axis - 1);
            pts.push_back(x);
        }
    return pts;
}

Mat2 hessian_matrix(const std::array<double, 3>& h) {
    Mat2 m;
    m << h[0], h[1], h[1], h[2];
    return m;
}

// sum_{j,k,j',k'} 2 a^{jk'} (a^{j'k} psi_{j'})_{k'} xi^j xi^k as a matrix in (j, k).
Mat2 mu0_form(const Point& x, const ScalarField& psi, const MatrixField& a, int dim) {
    const Mat2 A = a.value(x);
    const auto g = psi.gradient(x);
    const Mat2 H = hessian_matrix(psi.hessian(x));
    // D(k', k) = d/dx_{k'} (sum_j' a^{j'k} psi_{j'})
    Mat2 D = Mat2::Zero();
    for (int kp = 0; kp < dim; ++kp) {
        const Mat2 dA = a.derivative(x, kp);
        for (int k = 0; k < dim; ++k)
            for (int jp = 0; jp < dim; ++jp) D(kp, k) += dA(jp, k) * g[jp] + A(jp, k) * H(jp, kp);
    }
    Mat2 Q = Mat2::Zero();
    for (int j = 0; j < dim; ++j)
        for (int k = 0; k < dim; ++k)
            for (int kp = 0; kp < dim; ++kp) Q(j, k) += 2.0 * A(j, kp) * D(kp, k);
    return 0.5 * (Q + Q.transpose());
}

}  // namespace

PsiCheck check_psi(const Domain& domain, const ScalarField& psi, const MatrixField& a, double mu0_target,
                   int points_per_axis, std::uint64_t seed) {
    const int dim = domain.dim();
    const auto pts = lattice(domain, points_per_axis);
    std::vector<Eigen::Vector2d> dirs;
    for (int k = 0; k < dim; ++k) dirs.push_back(Eigen::Vector2d::Unit(k));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    for (int r = 0; r < 8; ++r) {
        Eigen::Vector2d d(gauss(rng), dim == 2 ? gauss(rng) : 0.0);
        if (d.norm() == 0) d = Eigen::Vector2d::Unit(0);
        dirs.push_back(d.normalized());
    }

    PsiCheck out;
    out.min_gradient = INFINITY;
    out.mu0_measured = INFINITY;
    double pmax = -INFINITY, pmin = INFINITY, norm_min = INFINITY;
    Point norm_worst{0, 0};
    for (const auto& x : pts) {
        const auto g = psi.gradient(x);
        const double gn = std::hypot(g[0], dim == 2 ? g[1] : 0.0);
        if (gn < out.min_gradient) {
            out.min_gradient = gn;
            if (gn == 0.0 && out.witness.empty()) {
                out.worst_node = x;
                out.witness = "grad psi vanishes";
            }
        }
        const Mat2 A = a.value(x);
        const Mat2 Q = mu0_form(x, psi, a, dim);
        for (const auto& d : dirs) {
            const Eigen::Vector2d xi = dim == 2 ? d : Eigen::Vector2d(d(0) == 0 ? 1.0 : d(0), 0.0);
            const double den = xi.dot(A * xi);
            const double ratio = xi.dot(Q * xi) / den;
            if (ratio < out.mu0_measured) {
                out.mu0_measured = ratio;
                if (out.witness.empty() || out.witness.rfind("mu0", 0) == 0) out.worst_node = x;
            }
        }
        const double pv = psi.value(x);
        pmax = std::max(pmax, pv);
        pmin = std::min(pmin, pv);
        Eigen::Vector2d gv(g[0], dim == 2 ? g[1] : 0.0);
        const double q = 0.25 * gv.dot(A * gv);
        if (q < norm_min) {
            norm_min = q;
            norm_worst = x;
        }
    }
    out.gradient_ok = out.min_gradient > 0;
    out.mu0_ok = out.mu0_measured >= mu0_target;
    out.normalization_ok = norm_min >= pmax && pmin >= 0;
    out.pass = out.gradient_ok && out.mu0_ok && out.normalization_ok;
    if (out.witness.empty()) {
        std::ostringstream os;
        if (!out.mu0_ok) {
            os << "mu0 form ratio " << out.mu0_measured << " < " << mu0_target;
        } else if (!out.normalization_ok) {
            os << "normalization: (1/4) a grad psi . grad psi = " << norm_min << " vs max psi " << pmax
               << ", min psi " << pmin;
            out.worst_node = norm_worst;
        }
        out.witness = os.str();
    }
    return out;
}

MinimalTime minimal_time(const Domain& domain, const ScalarField& psi, const MatrixField& a, int points_per_axis) {
    const int dim = domain.dim();
    const Box& b = domain.bounds;
    MinimalTime r;
    r.s0 = -INFINITY;
    for (const auto& x : lattice(domain, points_per_axis)) {
        const auto g = psi.gradient(x);
        Eigen::Vector2d gv(g[0], dim == 2 ? g[1] : 0.0);
        const Mat2 A = a.value(x);
        r.kappa1 = std::max(r.kappa1, gv.dot(A * gv));
        for (int axis = 0; axis < dim; ++axis)
            for (int side = 0; side < 2; ++side) {
                const double face = side ? b.hi[axis] : b.lo[axis];
                if (x[axis] != face) continue;
                Eigen::Vector2d n = Eigen::Vector2d::Zero();
                n(axis) = side ? 1.0 : -1.0;
                r.s0 = std::max(r.s0, gv.dot(A * n));
            }
    }
    const double nd = dim;
    r.T1 = std::max(2.0 * std::sqrt(r.kappa1), 1.0 + 100.0 * r.s0 * (nd + 2.0) * std::sqrt(nd));
    return r;
}

double CarlemanWeight::phi(double t, const Point& x) const {
    return psi.value(x) - c1 * (t - 0.5 * T) * (t - 0.5 * T);
}

double CarlemanWeight::theta(double t, const Point& x) const { return std::exp(lambda * phi(t, x)); }

double CarlemanWeight::Psi(const Point& x) const {
    // div(a grad psi) = sum_{j,k} (d_k a^{jk}) psi_j + a^{jk} psi_{jk}
    const auto g = psi.gradient(x);
    const Mat2 H = hessian_matrix(psi.hessian(x));
    const Mat2 A = a.value(x);
    double div = 0.0;
    for (int k = 0; k < 2; ++k) {
        const Mat2 dA = a.derivative(x, k);
        for (int j = 0; j < 2; ++j) div += dA(j, k) * g[j] + A(j, k) * H(j, k);
    }
    return -lambda * (div - 2.0 * c1 - c0);
}

double CarlemanWeight::endcap_max(const Domain& domain, int points_per_axis) const {
    double m = -INFINITY;
    for (const auto& x : lattice(domain, points_per_axis)) m = std::max({m, phi(0.0, x), phi(T, x)});
    return m;
}

// ---------------------------------------------------------------------------
// Fundamental identity

FuCheck check_fu_identity(const FuInstance& inst, const std::vector<std::vector<Rational>>& points,
                          FuMutation mutation) {
    const int m = inst.m;
    const auto& a = inst.a;
    const RationalPoly& v = inst.v;
    const RationalPoly& l = inst.l;
    const RationalPoly& Psi = inst.Psi;
    auto d = [](const RationalPoly& f, int i) { return f.diff(i); };
    const RationalPoly zero(m, v.max_degree());
    const RationalPoly one = RationalPoly::constant(m, Rational(1), v.max_degree());

    std::vector<RationalPoly> vj(m), lj(m), Pj(m);
    for (int j = 0; j < m; ++j) {
        vj[j] = d(v, j);
        lj[j] = d(l, j);
        Pj[j] = d(Psi, j);
    }

    // theta P z with z = exp(-l) v:  sum_k d_k(a^{jk}(v_j - l_j v)) - l_k a^{jk}(v_j - l_j v)
    RationalPoly thetaPz = zero;
    for (int j = 0; j < m; ++j) {
        const RationalPoly w = vj[j] - lj[j] * v;
        for (int k = 0; k < m; ++k) {
            const RationalPoly aw = a[j][k] * w;
            thetaPz += d(aw, k);
            thetaPz -= lj[k] * aw;
        }
    }

    RationalPoly A = zero;
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
            A += a[j][k] * lj[j] * lj[k];
            A -= d(a[j][k] * lj[j], k);
        }
    A -= Psi;
    if (mutation == FuMutation::A) A += one;

    RationalPoly I1 = A * v;
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) I1 += d(a[j][k] * vj[j], k);

    RationalPoly B = A * Psi;
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) B += d(a[j][k] * lj[j] * A, k);
    if (mutation == FuMutation::B) B += one;

    RationalPoly divV = zero;
    for (int k = 0; k < m; ++k) {
        RationalPoly Vk = zero;
        for (int j = 0; j < m; ++j) {
            for (int jp = 0; jp < m; ++jp)
                for (int kp = 0; kp < m; ++kp) {
                    const RationalPoly coef = Rational(2) * a[j][kp] * a[jp][k] - a[j][k] * a[jp][kp];
                    Vk += coef * lj[j] * vj[jp] * vj[kp];
                }
            Vk -= a[j][k] * (Psi * vj[j] * v - A * lj[j] * v * v);
        }
        if (mutation == FuMutation::V && k == 0) Vk += RationalPoly::variable(m, 0, v.max_degree()) * v * v;
        divV += d(Vk, k);
    }

    RationalPoly cterm = zero;
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) {
            RationalPoly c = zero;
            for (int jp = 0; jp < m; ++jp)
                for (int kp = 0; kp < m; ++kp) {
                    c += Rational(2) * a[j][kp] * d(a[jp][k] * lj[jp], kp);
                    c -= d(a[j][k] * a[jp][kp] * lj[jp], kp);
                }
            c -= a[j][k] * Psi;
            if (mutation == FuMutation::C && j == 0 && k == 0) c += one;
            cterm += c * vj[j] * vj[k];
        }

    RationalPoly lhs = I1 * thetaPz + divV;
    RationalPoly rhs = I1 * I1 + B * v * v + cterm;
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) rhs -= a[j][k] * Pj[j] * vj[k] * v;

    const RationalPoly res = lhs - rhs;
    FuCheck out;
    out.exact_zero = res.is_zero();
    out.residual_terms = res.size();
    out.max_residual = 0;
    for (const auto& p : points) {
        Rational r = abs(res.evaluate(p));
        if (r > out.max_residual) out.max_residual = r;
    }
    return out;
}

namespace {

RationalPoly random_poly(int m, int degree, std::mt19937_64& rng, int max_degree) {
    std::uniform_int_distribution<int> num(-5, 5), den(1, 4);
    RationalPoly p(m, max_degree);
    std::vector<int> e(m, 0);
    // Enumerate all exponent vectors of total degree <= degree.
    std::function<void(int, int)> rec = [&](int i, int left) {
        if (i == m) {
            Rational c(num(rng), den(rng));
            c.canonicalize();
            p.add_term(e, c);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            e[i] = k;
            rec(i + 1, left - k);
        }
        e[i] = 0;
    };
    rec(0, degree);
    return p;
}

}  // namespace

FuInstance random_fu_instance(int m, std::uint64_t seed, int v_degree, int l_degree, int a_degree) {
    if (m < 1 || m > 2) throw InvalidArgument("random_fu_instance: m must be 1 or 2");
    if (v_degree > 6) throw InvalidArgument("random_fu_instance: v degree must be <= 6");
    std::mt19937_64 rng(seed);
    const int cap = 20;
    FuInstance inst;
    inst.m = m;
    inst.v = random_poly(m, v_degree, rng, cap);
    inst.l = random_poly(m, l_degree, rng, cap);
    inst.Psi = random_poly(m, l_degree, rng, cap);
    inst.a.assign(m, std::vector<RationalPoly>(m));
    for (int j = 0; j < m; ++j)
        for (int k = j; k < m; ++k) {
            RationalPoly p = random_poly(m, a_degree, rng, cap);
            if (j == k) p += RationalPoly::constant(m, Rational(4), cap);
            inst.a[j][k] = p;
            inst.a[k][j] = p;
        }
    return inst;
}

std::vector<std::vector<Rational>> random_rational_points(int m, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> num(-7, 7), den(1, 5);
    std::vector<std::vector<Rational>> pts(count, std::vector<Rational>(m));
    for (auto& p : pts)
        for (auto& x : p) {
            x = Rational(num(rng), den(rng));
            x.canonicalize();
        }
    return pts;
}

}  // namespace wavectl
