#include "wavectl/linctl.hpp"

#include "wavectl/parallel.hpp"

#include <cmath>
#include <sstream>

namespace wavectl {

SystemSpec damped_spec(const BasisPtr& basis, double damping) {
    SystemSpec s;
    s.basis = basis;
    s.damping = damping;
    s.mass_shift = 1.0;
    return s;
}

void LinearProblem::validate() const {
    if (!basis) throw InvalidArgument("LinearProblem: basis not set");
    if (y0.size() != basis->size() || y1.size() != basis->size())
        throw InvalidArgument("LinearProblem: initial data size does not match basis");
    if (!(T > 0) || !(dt > 0)) throw InvalidArgument("LinearProblem: need T > 0 and dt > 0");
    if (!y0.allFinite() || !y1.allFinite()) throw InvalidArgument("LinearProblem: non-finite initial data");
    if (geometry) {
        if (T < geometry->T_min) {
            std::ostringstream os;
            os << "geometry: T = " << T << " is below T_min = " << geometry->T_min;
            throw InvalidArgument(os.str());
        }
        for (const auto& strip : geometry->omega)
            if (!window.omega().contains(strip))
                throw InvalidArgument("geometry: window omega does not cover the control region");
    }
    steps();
}

int LinearProblem::steps() const {
    const double m = T / dt;
    const long k = std::lround(m);
    if (k < 1 || std::abs(m - double(k)) > 1e-8 * std::max(1.0, m))
        throw InvalidArgument("LinearProblem: dt must divide T");
    return static_cast<int>(k);
}

LinearProblem LinearProblem::scaled(double s) const {
    LinearProblem p = *this;
    p.y0 *= s;
    p.y1 *= s;
    return p;
}

std::vector<double> time_grid(double T, int m) {
    std::vector<double> t(m + 1);
    for (int k = 0; k <= m; ++k) t[k] = k * (T / m);
    return t;
}

double node_average_sq(const Mat& coeffs, const Mat& gram, const std::vector<double>& times) {
    double s = 0.0;
    for (Eigen::Index k = 0; k + 1 < coeffs.cols(); ++k) {
        const Vec bar = 0.5 * (coeffs.col(k) + coeffs.col(k + 1));
        s += (times[k + 1] - times[k]) * bar.dot(gram * bar);
    }
    return s;
}

Control::Control(BasisPtr basis, ControlWindow window, std::vector<double> times, Mat coeffs)
    : basis_(std::move(basis)), window_(std::move(window)), times_(std::move(times)), coeffs_(std::move(coeffs)) {
    if (!basis_) throw InvalidArgument("Control: basis not set");
    if (coeffs_.rows() != basis_->size() || coeffs_.cols() != static_cast<Eigen::Index>(times_.size()))
        throw InvalidArgument("Control: coefficients must be N x (number of time nodes)");
    const Vec chi = window_.sample(*basis_);
    values_.resize(times_.size());
    for (std::size_t k = 0; k < times_.size(); ++k)
        values_[k] = chi.cwiseProduct(basis_->values() * coeffs_.col(static_cast<Eigen::Index>(k)));
    norm_l2_ = 0.0;
    for (std::size_t k = 0; k + 1 < times_.size(); ++k) {
        const Vec bar = 0.5 * (values_[k] + values_[k + 1]);
        norm_l2_ += (times_[k + 1] - times_[k]) * basis_->weights().dot(bar.cwiseAbs2());
    }
}

Control Control::zero(BasisPtr basis, ControlWindow window, std::vector<double> times) {
    const int n = basis->size();
    const auto m = static_cast<Eigen::Index>(times.size());
    return Control(std::move(basis), std::move(window), std::move(times), Mat::Zero(n, m));
}

double Control::omega_gradient_sq() const {
    return node_average_sq(coeffs_, subdomain_gradient_gram(*basis_, window_.omega()), times_);
}

double Control::omega_l2_sq() const {
    return node_average_sq(coeffs_, subdomain_gram(*basis_, window_.omega()), times_);
}

Mat Control::forcing_nodes(const EigenBasis& target) const {
    const int nt = target.size(), nc = basis_->size();
    Mat mass;
    if (basis_->is_prefix_of(target))
        mass = window_mass(target, window_).leftCols(nc);
    else if (target.is_prefix_of(*basis_))
        mass = window_mass(*basis_, window_).topRows(nt);
    else
        throw InvalidArgument("Control: target basis does not share the control's leading modes");
    return mass * coeffs_;
}

Control Control::scaled(double s) const { return Control(basis_, window_, times_, s * coeffs_); }

TerminalReport verify_null(const LinearProblem& problem, const Control& control) {
    problem.validate();
    const int m = problem.steps();
    if (static_cast<int>(control.times().size()) != m + 1)
        throw InvalidArgument("verify_null: control time grid does not match the problem");
    SystemSpec spec = damped_spec(problem.basis);
    spec.source_nodes = std::make_shared<const Mat>(control.forcing_nodes(*problem.basis));
    TerminalReport r;
    r.trajectory = integrate(spec, problem.initial_state(), 0.0, problem.T, problem.dt);
    r.terminal = r.trajectory.back();
    r.E0 = energy(r.trajectory.front(), EnergyKind::E, *problem.basis);
    r.ET = energy(r.terminal, EnergyKind::E, *problem.basis);
    r.ratio = r.E0 > 0 ? r.ET / r.E0 : r.ET;
    return r;
}

// ---------------------------------------------------------------------------
// Picard contraction

PicardEval picard_eval(const LinearProblem& problem, const Vec& z0, const Vec& z1) {
    const int m = problem.steps();
    const int n = problem.basis->size();
    PicardEval out;
    // z is anti-damped forward from t = 0, so zeta(t) = z(T - t) solves the
    // damped equation and y = w - zeta solves the controlled system when w is
    // driven by chi u.
    out.z = integrate(damped_spec(problem.basis, -2.0), State{z0, z1, 0.0}, 0.0, problem.T, problem.dt);

    Mat control(n, m + 1);
    for (int k = 0; k <= m; ++k) control.col(k) = std::sqrt(2.0) * out.z.states[m - k].vel;
    out.control = std::move(control);

    const Mat chi = window_mass(*problem.basis, problem.window);
    SystemSpec w_spec = damped_spec(problem.basis);
    w_spec.source_nodes = std::make_shared<Mat>(chi * out.control);
    const State& zT = out.z.back();
    const State w0{zT.pos + problem.y0, -zT.vel + problem.y1, 0.0};
    const Trajectory w = integrate(w_spec, w0, 0.0, problem.T, problem.dt);
    out.w_T = w.back().pos;
    out.minus_wt_T = -w.back().vel;
    return out;
}

std::pair<Vec, Vec> picard_map(const LinearProblem& problem, const Vec& z0, const Vec& z1) {
    auto e = picard_eval(problem, z0, z1);
    return {std::move(e.w_T), std::move(e.minus_wt_T)};
}

double picard_delta(double kappa) {
    if (!(kappa > 0 && kappa < 1)) throw InvalidArgument("picard_delta: need 0 < kappa < 1");
    return (1.0 - kappa) / (2.0 * kappa);
}

double picard_ball_radius_sq(const LinearProblem& problem, double kappa, double delta) {
    if (!((1.0 + delta) * kappa < 1.0) || !(delta > 0))
        throw InvalidArgument("picard_ball_radius_sq: need delta > 0 and (1 + delta) kappa < 1");
    const double data = h1l2_norm_sq(problem.y0, problem.y1, *problem.basis);
    return (1.0 + 1.0 / delta) / (1.0 - (1.0 + delta) * kappa) * data;
}

std::pair<Control, PicardReport> synthesize_picard(const LinearProblem& problem, double tol, int max_iter) {
    problem.validate();
    if (!(tol > 0)) throw InvalidArgument("synthesize_picard: tol must be > 0");
    if (max_iter < 1) throw InvalidArgument("synthesize_picard: max_iter must be >= 1");
    const EigenBasis& basis = *problem.basis;
    const int n = basis.size();
    const double data = std::sqrt(h1l2_norm_sq(problem.y0, problem.y1, basis));

    PicardReport rep;
    Vec z0 = Vec::Zero(n), z1 = Vec::Zero(n);
    rep.iterates.push_back(0.0);
    PicardEval eval = picard_eval(problem, z0, z1);
    for (int k = 0; k < max_iter; ++k) {
        const Vec d0 = eval.w_T - z0, d1 = eval.minus_wt_T - z1;
        const double diff = std::sqrt(h1l2_norm_sq(d0, d1, basis));
        rep.differences.push_back(diff);
        rep.terminal_defect = diff;
        rep.iterations = k + 1;
        if (rep.differences.size() >= 2) {
            const double prev = rep.differences[rep.differences.size() - 2];
            if (prev > 0) rep.ratios.push_back(diff * diff / (prev * prev));
        }
        if (diff <= tol * std::max(data, 1e-300) || diff == 0.0) {
            rep.converged = true;
            break;
        }
        z0 = eval.w_T;
        z1 = eval.minus_wt_T;
        rep.iterates.push_back(std::sqrt(h1l2_norm_sq(z0, z1, basis)));
        eval = picard_eval(problem, z0, z1);
    }
    for (double r : rep.ratios) rep.kappa_bound = std::max(rep.kappa_bound, r);
    if (rep.converged && !rep.ratios.empty() && rep.ratios.back() >= 1.0) rep.converged = false;
    rep.z0 = z0;
    rep.z1 = z1;

    const int m = problem.steps();
    Control u(problem.basis, problem.window, time_grid(problem.T, m), eval.control);
    return {std::move(u), std::move(rep)};
}

// ---------------------------------------------------------------------------
// HUM

double energy_inner(const EigenBasis& basis, const Vec& q1, const Vec& p1, const Vec& q2, const Vec& p2) {
    const Eigen::Index n = q1.size();
    return (basis.lambdas().head(n).array() * q1.array() * q2.array()).sum() + p1.dot(p2);
}

namespace {

struct HumPass {
    Vec y0, y1;
    Trajectory z;
};

HumPass hum_pass(const LinearProblem& problem, const Mat& chi, const Vec& z0, const Vec& z1) {
    HumPass out;
    out.z = integrate(damped_spec(problem.basis, -2.0), State{z0, z1, 0.0}, 0.0, problem.T, problem.dt);
    SystemSpec y_spec = damped_spec(problem.basis);
    y_spec.source_nodes = std::make_shared<Mat>(-chi * out.z.velocities());
    const int n = problem.basis->size();
    const Trajectory y = integrate(y_spec, State::zero(n, problem.T), 0.0, problem.T, problem.dt, Direction::Backward);
    out.y0 = y.front().pos;
    out.y1 = y.front().vel;
    return out;
}

}  // namespace

std::pair<Vec, Vec> hum_gramian(const LinearProblem& problem, const Vec& z0, const Vec& z1) {
    const Mat chi = window_mass(*problem.basis, problem.window);
    auto p = hum_pass(problem, chi, z0, z1);
    return {std::move(p.y0), std::move(p.y1)};
}

std::pair<Control, HumReport> synthesize_hum(const LinearProblem& problem, double tol, int max_iter) {
    problem.validate();
    if (!(tol > 0)) throw InvalidArgument("synthesize_hum: tol must be > 0");
    const EigenBasis& basis = *problem.basis;
    const int n = basis.size();
    const int m = problem.steps();
    const Mat chi = window_mass(basis, problem.window);
    auto ip = [&](const Vec& a0, const Vec& a1, const Vec& b0, const Vec& b1) {
        return energy_inner(basis, a0, a1, b0, b1);
    };

    HumReport rep;
    Vec x0 = Vec::Zero(n), x1 = Vec::Zero(n);
    Vec r0 = problem.y0, r1 = problem.y1;
    const double bnorm = std::sqrt(ip(r0, r1, r0, r1));
    if (bnorm == 0.0) {
        rep.converged = true;
        rep.z0 = x0;
        rep.z1 = x1;
        return {Control::zero(problem.basis, problem.window, time_grid(problem.T, m)), rep};
    }
    Vec d0 = r0, d1 = r1;
    double rr = ip(r0, r1, r0, r1);
    std::vector<double> alphas, betas;
    double best_rel = 1.0;
    int stagnant = 0;
    for (int k = 0; k < max_iter; ++k) {
        auto [q0, q1] = hum_gramian(problem, d0, d1);
        const double dq = ip(d0, d1, q0, q1);
        if (!(dq > 0)) break;
        const double alpha = rr / dq;
        x0 += alpha * d0;
        x1 += alpha * d1;
        r0 -= alpha * q0;
        r1 -= alpha * q1;
        const double rr_new = ip(r0, r1, r0, r1);
        const double beta = rr_new / rr;
        alphas.push_back(alpha);
        betas.push_back(beta);
        rr = rr_new;
        rep.iterations = k + 1;
        const double rel = std::sqrt(rr) / bnorm;
        rep.residuals.push_back(rel);
        rep.relative_residual = rel;
        if (rel <= tol) {
            rep.converged = true;
            break;
        }
        if (rel < 0.999 * best_rel) {
            best_rel = rel;
            stagnant = 0;
        } else if (++stagnant >= 20) {
            break;
        }
        d0 = r0 + beta * d0;
        d1 = r1 + beta * d1;
    }

    // Lanczos tridiagonal from the CG coefficients; its eigenvalues are Ritz values of the Gramian.
    const int kk = static_cast<int>(alphas.size());
    if (kk > 0) {
        Mat tri = Mat::Zero(kk, kk);
        for (int i = 0; i < kk; ++i) {
            tri(i, i) = 1.0 / alphas[i] + (i > 0 ? betas[i - 1] / alphas[i - 1] : 0.0);
            if (i + 1 < kk) tri(i, i + 1) = tri(i + 1, i) = std::sqrt(betas[i]) / alphas[i];
        }
        Eigen::SelfAdjointEigenSolver<Mat> es(tri, Eigen::EigenvaluesOnly);
        rep.smallest_ritz = es.eigenvalues().minCoeff();
        rep.largest_ritz = es.eigenvalues().maxCoeff();
    }
    if (!rep.converged) {
        std::ostringstream os;
        os << "synthesize_hum: CG stagnated at relative residual " << rep.relative_residual << " after "
           << rep.iterations << " iterations; ill-conditioned Gramian (smallest Ritz value "
           << rep.smallest_ritz << ")";
        throw std::runtime_error(os.str());
    }

    rep.z0 = x0;
    rep.z1 = x1;
    const HumPass pass = hum_pass(problem, chi, x0, x1);
    rep.observed = time_quadratic(pass.z, chi);
    rep.pairing = ip(x0, x1, problem.y0, problem.y1);
    Control u(problem.basis, problem.window, time_grid(problem.T, m), -pass.z.velocities());
    return {std::move(u), std::move(rep)};
}

// ---------------------------------------------------------------------------
// Galerkin affine solve

std::pair<Control, GalerkinReport> galerkin_linear(const LinearProblem& problem, int N) {
    problem.validate();
    const EigenBasis& full = *problem.basis;
    if (N == 0) N = full.size();
    if (N < 1 || N > full.size()) throw InvalidArgument("galerkin_linear: need 1 <= N <= basis size");
    const BasisPtr sub = N == full.size() ? problem.basis : full.truncated(N);
    const Mat chi = window_mass(*sub, problem.window);
    const double T = problem.T, dt = problem.dt;
    const int m = problem.steps();

    // Terminal state of y_N driven by chi d/dt v_N, v_N anti-damped backward from x at T.
    auto terminal = [&](const Vec& x, const State& y_init, Mat* vt_out) {
        const Trajectory v = integrate(damped_spec(sub, -2.0), State{x.head(N), x.tail(N), T}, 0.0, T, dt,
                                       Direction::Backward);
        SystemSpec ys = damped_spec(sub);
        const Mat vt = v.velocities();
        ys.source_nodes = std::make_shared<Mat>(chi * vt);
        const Trajectory y = integrate(ys, y_init, 0.0, T, dt);
        if (vt_out) *vt_out = vt;
        Vec out(2 * N);
        out << y.back().pos, y.back().vel;
        return out;
    };

    const State y_init{problem.y0.head(N), problem.y1.head(N), 0.0};
    const Vec f0 = terminal(Vec::Zero(2 * N), y_init, nullptr);
    Mat G(2 * N, 2 * N);
    parallel_for(2 * N, [&](int j) {
        G.col(j) = terminal(Vec::Unit(2 * N, j), State::zero(N), nullptr);
    });

    GalerkinReport rep;
    rep.N = N;
    Eigen::FullPivLU<Mat> lu(G);
    rep.rank = static_cast<int>(lu.rank());
    Eigen::JacobiSVD<Mat> svd(G);
    const Vec sv = svd.singularValues();
    rep.condition = sv(0) / sv(sv.size() - 1);
    if (rep.rank < 2 * N) {
        std::ostringstream os;
        os << "galerkin_linear: assembled matrix is rank deficient (rank " << rep.rank << " of " << 2 * N << ")";
        throw std::runtime_error(os.str());
    }
    const Vec x = lu.solve(-f0);
    rep.a = x.head(N);
    rep.b = x.tail(N);
    Mat vt;
    const Vec term = terminal(x, y_init, &vt);
    rep.terminal_norm = term.norm();
    const std::vector<double> times = time_grid(T, m);
    Control u(sub, problem.window, times, vt);
    rep.control_energy = node_average_sq(vt, chi, times);
    return {std::move(u), std::move(rep)};
}

}  // namespace wavectl
