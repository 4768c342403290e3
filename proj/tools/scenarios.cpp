#include "scenarios.hpp"

#include "wavectl/linctl.hpp"
#include "wavectl/obsv.hpp"
#include "wavectl/parallel.hpp"
#include "wavectl/quasictl.hpp"
#include "wavectl/semictl.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>

#ifndef WAVECTL_VERSION
#define WAVECTL_VERSION "0.0.0"
#endif

namespace wavectl::cli {

using nlohmann::ordered_json;

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
    out << '\n';
    char buf[40];
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            out << (i ? "," : "") << buf;
        }
        out << '\n';
    }
}

namespace {

void write_json(const std::filesystem::path& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

ordered_json to_json(const std::vector<double>& v) { return ordered_json(v); }

// Runs a validation step, reporting failures against the given config block.
void validated(const std::string& block, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const InvalidArgument& e) {
        throw ConfigError(block, e.what());
    }
}

struct Setup {
    BasisPtr basis;
    ControlWindow window;
    Vec y0, y1;
};

Setup make_setup(const RunConfig& c) {
    Setup s;
    validated("discretization", [&] { s.basis = build_basis(c.domain, c.N); });
    validated(c.geometry ? "geometry" : "window", [&] { s.window = make_window(c.domain, c.omega, c.smoothing); });
    const int n = c.N;
    s.y0 = Vec::Zero(n);
    s.y1 = Vec::Zero(n);
    if (c.data.kind == "modes") {
        s.y0(c.data.y0_mode - 1) = c.data.y0_amplitude;
        s.y1(c.data.y1_mode - 1) = c.data.y1_amplitude;
    } else {
        std::uint64_t state = c.seed;
        const State d = sample_unit_data(s.basis->lambdas(), s.basis->lambdas(),
                                         static_cast<DecayProfile>(c.data.profile), state);
        s.y0 = c.data.amplitude * d.pos;
        s.y1 = c.data.amplitude * d.vel;
    }
    return s;
}

// |chi u(t_k)|_{L2} per node.
std::vector<double> control_profile(const Control& u) {
    std::vector<double> out;
    for (const Vec& v : u.values()) out.push_back(std::sqrt(u.basis()->weights().dot(v.cwiseAbs2())));
    return out;
}

CsvTable energy_table(const Trajectory& traj, const EigenBasis& basis, EnergyKind kind, const std::string& column) {
    CsvTable t{"energies.csv", {"t", column}, {}};
    for (const auto& s : traj.states) t.rows.push_back({s.t, energy(s, kind, basis)});
    return t;
}

CsvTable control_table(const std::vector<double>& times, const std::vector<std::pair<std::string, Control>>& controls) {
    CsvTable t{"control.csv", {"t"}, {}};
    std::vector<std::vector<double>> cols;
    for (const auto& [name, u] : controls) {
        t.header.push_back(name + "_chi_u_l2");
        cols.push_back(control_profile(u));
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::vector<double> row{times[k]};
        for (const auto& c : cols) row.push_back(c[k]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---------------------------------------------------------------------------

void run_linear(const RunConfig& c, ScenarioOutput& out) {
    const Setup s = make_setup(c);
    LinearProblem p;
    p.basis = s.basis;
    p.window = s.window;
    p.T = c.T;
    p.dt = c.dt;
    p.y0 = s.y0;
    p.y1 = s.y1;
    p.geometry = c.geometry;
    validated(c.geometry ? "geometry" : "data", [&] { p.validate(); });

    const std::string method = block_string(c, "method");
    const double gate = block_double(c, "gate"), secondary = block_double(c, "secondary_gate");
    auto& rep = out.report;
    rep["method"] = method;
    bool pass = true;
    std::vector<std::pair<std::string, Control>> controls;
    std::vector<std::pair<std::string, TerminalReport>> terminals;
    ordered_json methods = ordered_json::object();

    if (method == "picard" || method == "all") {
        auto [u, r] = synthesize_picard(p, block_double(c, "tol"), block_int(c, "max_iter"));
        const TerminalReport t = verify_null(p, u);
        bool ratios_ok = true;
        for (double q : r.ratios) ratios_ok = ratios_ok && q < 1.0;
        const bool ok = r.converged && ratios_ok && t.ratio <= gate;
        methods["picard"] = {{"converged", r.converged},
                             {"iterations", r.iterations},
                             {"max_contraction_ratio", r.kappa_bound},
                             {"contraction_ratios", to_json(r.ratios)},
                             {"terminal_energy_ratio", t.ratio},
                             {"control_l2", std::sqrt(u.norm_l2())},
                             {"gate", gate},
                             {"pass", ok}};
        pass = pass && ok;
        CsvTable it{"iterates.csv", {"iteration", "iterate_norm", "difference", "contraction_ratio"}, {}};
        for (std::size_t k = 0; k < r.iterates.size(); ++k)
            it.rows.push_back({double(k + 1), r.iterates[k], k < r.differences.size() ? r.differences[k] : NAN,
                               k < r.ratios.size() ? r.ratios[k] : NAN});
        out.tables.push_back(std::move(it));
        controls.emplace_back("picard", u);
        terminals.emplace_back("picard", t);
    }
    if (method == "hum" || method == "all") {
        auto [u, r] = synthesize_hum(p, block_double(c, "hum_tol"), block_int(c, "hum_max_iter"));
        const TerminalReport t = verify_null(p, u);
        const bool ok = r.converged && t.ratio <= (method == "hum" ? gate : secondary);
        methods["hum"] = {{"converged", r.converged},
                          {"iterations", r.iterations},
                          {"relative_residual", r.relative_residual},
                          {"observed", r.observed},
                          {"pairing", r.pairing},
                          {"terminal_energy_ratio", t.ratio},
                          {"control_l2", std::sqrt(u.norm_l2())},
                          {"pass", ok}};
        pass = pass && ok;
        controls.emplace_back("hum", u);
        terminals.emplace_back("hum", t);
    }
    if (method == "galerkin" || method == "all") {
        auto [u, r] = galerkin_linear(p, block_int(c, "galerkin_N"));
        const TerminalReport t = verify_null(p, u);
        const bool ok = t.ratio <= (method == "galerkin" ? gate : secondary);
        methods["galerkin"] = {{"N", r.N},
                               {"rank", r.rank},
                               {"condition", r.condition},
                               {"terminal_energy_ratio", t.ratio},
                               {"control_l2", std::sqrt(u.norm_l2())},
                               {"pass", ok}};
        pass = pass && ok;
        controls.emplace_back("galerkin", u);
        terminals.emplace_back("galerkin", t);
    }
    rep["methods"] = methods;
    rep["terminal_energy_ratio"] = terminals.front().second.ratio;
    if (terminals.size() > 1) {
        double worst = 0.0;
        for (std::size_t i = 0; i < terminals.size(); ++i)
            for (std::size_t j = i + 1; j < terminals.size(); ++j) {
                const State& a = terminals[i].second.terminal;
                const State& b = terminals[j].second.terminal;
                worst = std::max(worst, std::sqrt(h1l2_norm_sq(a.pos - b.pos, a.vel - b.vel, *p.basis)));
            }
        const bool ok = worst <= block_double(c, "agreement");
        rep["terminal_agreement"] = worst;
        pass = pass && ok;
    }

    CsvTable en{"energies.csv", {"t"}, {}};
    for (const auto& [name, t] : terminals) en.header.push_back(name + "_E");
    const auto& times = terminals.front().second.trajectory.times;
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::vector<double> row{times[k]};
        for (const auto& [name, t] : terminals) row.push_back(energy(t.trajectory.states[k], EnergyKind::E, *p.basis));
        en.rows.push_back(std::move(row));
    }
    out.tables.push_back(std::move(en));
    out.tables.push_back(control_table(times, controls));
    out.pass = pass;
}

// ---------------------------------------------------------------------------

VelocityNonlinearity velocity_nonlinearity(const std::string& name, double L, double Lt) {
    if (name == "identity") {
        VelocityNonlinearity nl = VelocityNonlinearity::linear(1.0, L, Lt);
        nl.description = "identity";
        return nl;
    }
    return VelocityNonlinearity::lip_sin(L, Lt);
}

void run_semilinear(const RunConfig& c, ScenarioOutput& out) {
    const Setup s = make_setup(c);
    const double L = block_double(c, "L"), Lt = block_double(c, "L_tilde");
    const VelocityNonlinearity nl = velocity_nonlinearity(block_string(c, "nonlinearity"), L, Lt);
    auto& rep = out.report;
    const NonlinearityCheck chk = check_nonlinearity(nl, 1000, -10.0, 10.0, c.seed);
    if (!chk.pass) throw ConfigError("semilinear.nonlinearity", "fails the structural check: " + chk.violated);

    double D = block_double(c, "D");
    if (D == 0.0) {
        ObservabilityOptions o;
        o.samples = block_int(c, "observability_samples");
        o.seed = c.seed;
        o.direction = Direction::Backward;
        o.variant_constants = false;
        const ObservabilityEstimate est = estimate_observability(semilinear_dual_spec(s.basis, L), c.omega, c.T, c.dt, o);
        D = block_double(c, "D_safety") * est.D_emp;
        rep["D_emp"] = est.D_emp;
    }
    rep["D"] = D;
    SemilinearConstants k;
    try {
        k = compute_constants(L, Lt, D, s.window, *s.basis);
    } catch (const InvalidArgument& e) {
        if (block_double(c, "D") > 0) throw ConfigError("semilinear.D", e.what());
        throw std::runtime_error(e.what());
    }
    rep["constants"] = {{"delta", k.delta},
                        {"delta1", k.delta1},
                        {"delta2", k.delta2},
                        {"C_star", k.C_star},
                        {"D_star", k.D_star},
                        {"admissibility_lhs", k.admissibility_lhs},
                        {"admissibility_rhs", k.admissibility_rhs}};

    SemilinearProblem p;
    p.basis = s.basis;
    p.window = s.window;
    p.T = c.T;
    p.dt = c.dt;
    p.y0 = s.y0;
    p.y1 = s.y1;
    p.nonlinearity = nl;
    p.constants = k;
    validated("data", [&] { p.validate(); });

    SemilinearOptions o;
    o.tol = block_double(c, "tol");
    o.max_iter = block_int(c, "max_iter");
    o.audit_directions = block_int(c, "audit_directions");
    o.audit_radius = o.audit_directions > 0 ? semilinear_audit_radius(p, D) : 0.0;
    o.seed = c.seed;
    const int gN = block_int(c, "galerkin_N");
    SemilinearReport r;
    CsvTable it{"iterates.csv", {"iteration", "residual"}, {}};
    try {
        auto result = solve_semilinear(p, gN, o, &r);
        const Control& u = result.first;
        const int rN = block_int(c, "resim_N");
        const BasisPtr rb = rN == c.N ? s.basis : build_basis(c.domain, rN);
        const SemilinearResimulation sim = resimulate_semilinear(p, rb, u);
        const double gate = block_double(c, "gate");
        const bool bound_ok = r.control_bound_lhs <= r.control_bound_rhs && r.printed_bound_lhs <= r.printed_bound_rhs;
        const bool audit_ok = o.audit_directions == 0 || r.audit.nonnegative;
        rep["resimulation"] = {{"N", rN}, {"terminal_energy_ratio", sim.ratio}, {"gate", gate}};
        rep["terminal_energy_ratio"] = sim.ratio;
        out.pass = r.converged && r.residual <= o.tol && sim.ratio <= gate && bound_ok && audit_ok;
        out.tables.push_back(energy_table(sim.trajectory, *rb, EnergyKind::E0, "E0"));
        out.tables.push_back(control_table(u.times(), {{"semilinear", u}}));
    } catch (const std::runtime_error&) {
        r.N = gN;
        rep["solver"] = {{"converged", false}, {"iterations", r.iterations}, {"residuals", to_json(r.residuals)}};
        for (std::size_t i = 0; i < r.residuals.size(); ++i) it.rows.push_back({double(i), r.residuals[i]});
        out.tables.insert(out.tables.begin(), std::move(it));
        throw;
    }
    rep["solver"] = {{"N", r.N},
                     {"converged", r.converged},
                     {"iterations", r.iterations},
                     {"used_fallback", r.used_fallback},
                     {"residual", r.residual},
                     {"residual_euclid", r.residual_euclid}};
    rep["control_bound"] = {{"lhs", r.control_bound_lhs}, {"rhs", r.control_bound_rhs}};
    rep["printed_control_bound"] = {{"lhs", r.printed_bound_lhs}, {"rhs", r.printed_bound_rhs}};
    rep["energy_chain"] = {{"lhs", r.energy_chain_lhs}, {"rhs", r.energy_chain_rhs}};
    if (o.audit_directions > 0)
        rep["sign_audit"] = {{"radius", r.audit.radius},
                             {"directions", r.audit.directions},
                             {"min_multiplier_pairing", r.audit.min_multiplier},
                             {"min_tilde_pairing", r.audit.min_tilde},
                             {"nonnegative", r.audit.nonnegative}};
    for (std::size_t i = 0; i < r.residuals.size(); ++i) it.rows.push_back({double(i), r.residuals[i]});
    out.tables.insert(out.tables.begin(), std::move(it));
}

// ---------------------------------------------------------------------------

ordered_json convergence_json(const ConvergenceReport& r) {
    return {{"iterations", r.iterations},
            {"converged", r.converged},
            {"diverged", r.diverged},
            {"fitted_rate", r.fitted_rate},
            {"fit_r2", r.fit_r2},
            {"terminal_norm", r.terminal_norm},
            {"data_size", r.data_size},
            {"epsilon_gate", r.epsilon_gate},
            {"telescoping_defect", r.telescoping_defect}};
}

CsvTable iterates_table(const ConvergenceReport& r) {
    CsvTable t{"iterates.csv", {"alpha"}, {}};
    for (int k : r.orders) t.header.push_back("diff_v_H" + std::to_string(k));
    for (int k : r.orders) t.header.push_back("diff_z_H" + std::to_string(k));
    t.header.push_back("a_deviation");
    t.header.push_back("iterate_size");
    for (std::size_t a = 0; a < r.alphas.size(); ++a) {
        std::vector<double> row{double(r.alphas[a])};
        for (const auto& d : r.diff_v) row.push_back(d[a]);
        for (const auto& d : r.diff_z) row.push_back(d[a]);
        row.push_back(r.a_dev[a]);
        row.push_back(r.iterate_size[a]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

QuasiProblem quasi_problem(const RunConfig& c, const Setup& s) {
    QuasiProblem p;
    p.basis = s.basis;
    p.window = s.window;
    p.T = c.T;
    p.dt = c.dt;
    p.y0 = s.y0;
    p.y1 = s.y1;
    p.geometry = c.geometry;
    p.epsilon_gate = block_double(c, "epsilon_gate");
    p.sobolev_order = block_double(c, "sobolev_order");
    validated("data", [&] { p.validate(); });
    return p;
}

void run_quasilinear(const RunConfig& c, ScenarioOutput& out) {
    const Setup s = make_setup(c);
    QuasiProblem p = quasi_problem(c, s);
    p.form = block_string(c, "form") == "divergence" ? PrincipalForm::Divergence : PrincipalForm::NonDivergence;
    const std::string g = block_string(c, "g");
    const QuasiNonlinearity nl = g == "eps_y_diffusion" ? QuasiNonlinearity::eps_y_diffusion(block_double(c, "eps"))
                                 : g == "quad_gt"       ? QuasiNonlinearity::quad_gt(block_double(c, "c"))
                                                        : QuasiNonlinearity::zero();
    const QuasiCheck chk = check_quasi_nonlinearity(nl, c.domain.dim(), c.seed);
    if (!chk.pass) throw ConfigError("quasilinear.g", chk.message);

    QuasiOptions o;
    o.tol = block_double(c, "tol");
    o.max_alpha = block_int(c, "max_alpha");
    ConvergenceReport r;
    auto& rep = out.report;
    try {
        const QuasiResult res = iterate_quasilinear(p, nl, o, &r);
        const int rN = block_int(c, "resim_N");
        const BasisPtr rb = rN == c.N ? s.basis : build_basis(c.domain, rN);
        const QuasiResimulation sim = resimulate_quasilinear(p, nl, rb, res.control);
        const double tg = block_double(c, "terminal_gate"), rg = block_double(c, "resim_gate");
        rep["iteration"] = convergence_json(r);
        rep["resimulation"] = {{"N", rN}, {"terminal_energy_ratio", sim.ratio}, {"pde_residual", sim.pde_residual}};
        rep["terminal_energy_ratio"] = sim.ratio;
        out.pass = r.converged && r.terminal_norm <= tg && sim.ratio <= rg;
        out.tables.push_back(iterates_table(r));
        out.tables.push_back(energy_table(sim.trajectory, *rb, EnergyKind::E, "E"));
        out.tables.push_back(control_table(res.control.times(), {{"quasilinear", res.control}}));
    } catch (const std::runtime_error&) {
        rep["iteration"] = convergence_json(r);
        out.tables.push_back(iterates_table(r));
        throw;
    }
}

void run_fully_nonlinear(const RunConfig& c, ScenarioOutput& out) {
    const Setup s = make_setup(c);
    const QuasiProblem p = quasi_problem(c, s);
    const std::string name = block_string(c, "F");
    const FullNonlinearity F = name == "vt_square" ? FullNonlinearity::vt_square(block_double(c, "c"))
                                                   : FullNonlinearity::zero();
    QuasiOptions o;
    o.tol = block_double(c, "tol");
    o.max_alpha = block_int(c, "max_alpha");
    FullyNonlinearReport r;
    auto& rep = out.report;
    try {
        const FullyNonlinearResult res = fully_nonlinear_control(p, F, o, &r);
        const double rg = block_double(c, "ratio_gate"), cg = block_double(c, "consistency_gate");
        rep["iteration"] = convergence_json(r.iteration);
        rep["initial_size"] = r.initial_size;
        rep["terminal_size"] = r.terminal_size;
        rep["terminal_ratio"] = r.terminal_ratio;
        rep["v_consistency"] = r.v_consistency;
        rep["reconstruction_drift"] = r.reconstruction_drift;
        out.pass = r.iteration.converged && r.terminal_ratio <= rg && r.v_consistency <= cg;
        out.tables.push_back(iterates_table(r.iteration));
        CsvTable en{"energies.csv", {"t", "yt_l2", "E"}, {}};
        for (const auto& st : res.y.states) en.rows.push_back({st.t, st.vel.norm(), energy(st, EnergyKind::E, *s.basis)});
        out.tables.push_back(std::move(en));
        out.tables.push_back(control_table(res.control.times(), {{"fully_nonlinear", res.control}}));
    } catch (const std::runtime_error&) {
        rep["iteration"] = convergence_json(r.iteration);
        out.tables.push_back(iterates_table(r.iteration));
        throw;
    }
}

// ---------------------------------------------------------------------------

void run_observability(const RunConfig& c, ScenarioOutput& out) {
    BasisPtr basis;
    validated("discretization", [&] { basis = build_basis(c.domain, c.N); });
    const bool semi = block_string(c, "dual") == "semilinear";
    const SystemSpec dual = semi ? semilinear_dual_spec(basis, block_double(c, "L")) : damped_spec(basis);
    ObservabilityOptions o;
    o.samples = block_int(c, "samples");
    o.seed = c.seed;
    o.direction = block_string(c, "direction") == "forward" ? Direction::Forward : Direction::Backward;
    o.variant_constants = block_string(c, "variant_constants") == "true";
    const ObservabilityEstimate est = estimate_observability(dual, c.omega, c.T, c.dt, o);
    auto& rep = out.report;
    rep["D_emp"] = est.D_emp;
    rep["kappa_emp"] = est.kappa_emp;
    rep["samples"] = est.samples;
    rep["seed"] = est.seed;
    rep["per_sample_ratios"] = to_json(est.per_sample_ratios);
    rep["decay_profiles"] = est.decay_profiles;
    if (o.variant_constants) {
        rep["D_min_variant"] = est.D_min_variant;
        rep["D_gradient_variant"] = est.D_gradient_variant;
    }
    rep["failure_witness"] = est.failure_witness ? ordered_json(*est.failure_witness) : ordered_json(nullptr);
    rep["geometry_warning"] = est.geometry_warning;
    const bool violated = est.geometry_warning || est.failure_witness.has_value();
    rep["expect"] = block_string(c, "expect");
    out.pass = block_string(c, "expect") == "violated" ? violated : !violated && std::isfinite(est.D_emp);
    CsvTable t{"samples.csv", {"sample", "decay_profile", "ratio"}, {}};
    for (std::size_t i = 0; i < est.per_sample_ratios.size(); ++i)
        t.rows.push_back({double(i), double(est.decay_profiles[i]), est.per_sample_ratios[i]});
    out.tables.push_back(std::move(t));
}

void run_carleman(const RunConfig& c, ScenarioOutput& out) {
    std::vector<double> x0v, dims;
    {
        std::istringstream in(block_string(c, "psi_x0"));
        for (double v; in >> v;) x0v.push_back(v);
        std::istringstream d(block_string(c, "fu_dims"));
        for (double v; d >> v;) dims.push_back(v);
    }
    const int dim = c.domain.dim();
    const Point x0{x0v[0], dim > 1 ? x0v[1] : 0.0};
    const ScalarField psi = ScalarField::squared_distance(x0, dim, block_double(c, "psi_scale"), block_double(c, "psi_shift"));
    const MatrixField a = MatrixField::identity();
    auto& rep = out.report;

    const PsiCheck pc = check_psi(c.domain, psi, a, block_double(c, "mu0"), 33, c.seed);
    const bool psi_expected = (block_string(c, "expect_psi") == "pass") == pc.pass;
    rep["psi_check"] = {{"pass", pc.pass},
                        {"gradient_ok", pc.gradient_ok},
                        {"mu0_ok", pc.mu0_ok},
                        {"normalization_ok", pc.normalization_ok},
                        {"min_gradient", pc.min_gradient},
                        {"mu0_measured", pc.mu0_measured},
                        {"worst_node", pc.worst_node},
                        {"witness", pc.witness},
                        {"as_expected", psi_expected}};
    const MinimalTime mt = minimal_time(c.domain, psi, a);
    rep["minimal_time"] = {{"T1", mt.T1}, {"kappa1", mt.kappa1}, {"s0", mt.s0}};

    CarlemanWeight w;
    w.psi = psi;
    w.a = a;
    w.c0 = block_double(c, "c0");
    w.c1 = block_double(c, "c1");
    w.lambda = block_double(c, "lambda");
    w.T = block_double(c, "T");
    double phi_mid = 0.0;
    for (double x : {0.1, 0.37, 0.5, 0.83}) {
        const Point p{c.domain.bounds.lo[0] + x * c.domain.bounds.length(0),
                      dim > 1 ? c.domain.bounds.lo[1] + x * c.domain.bounds.length(1) : 0.0};
        phi_mid = std::max(phi_mid, std::abs(w.phi(0.5 * w.T, p) - psi.value(p)));
    }
    rep["carleman_weight"] = {{"endcap_max_phi", w.endcap_max(c.domain)}, {"midtime_phi_minus_psi", phi_mid}};

    const int instances = block_int(c, "fu_instances"), npts = block_int(c, "fu_points");
    bool all_zero = true, mutations_ok = true;
    CsvTable t{"identity.csv", {"instance", "m", "exact_zero", "residual_terms"}, {}};
    ordered_json probes = ordered_json::array();
    std::size_t checked = 0;
    for (double md : dims) {
        const int m = static_cast<int>(md);
        std::vector<FuCheck> checks(instances);
        parallel_for(instances, [&](int i) {
            const std::uint64_t sd = c.seed * 1000003ULL + static_cast<std::uint64_t>(i) * 2 + static_cast<std::uint64_t>(m);
            const FuInstance inst = random_fu_instance(m, sd);
            checks[i] = check_fu_identity(inst, random_rational_points(m, npts, sd));
        });
        for (int i = 0; i < instances; ++i) {
            all_zero = all_zero && checks[i].exact_zero;
            t.rows.push_back({double(i), double(m), checks[i].exact_zero ? 1.0 : 0.0, double(checks[i].residual_terms)});
            ++checked;
        }
        const FuInstance inst = random_fu_instance(m, c.seed * 1000003ULL + static_cast<std::uint64_t>(m));
        const auto pts = random_rational_points(m, npts, c.seed + 17);
        for (auto [mut, name] : std::vector<std::pair<FuMutation, const char*>>{
                 {FuMutation::A, "A"}, {FuMutation::B, "B"}, {FuMutation::C, "c"}, {FuMutation::V, "V"}}) {
            const FuCheck fc = check_fu_identity(inst, pts, mut);
            const bool detected = !fc.exact_zero;
            mutations_ok = mutations_ok && detected;
            probes.push_back({{"m", m}, {"mutation", name}, {"detected", detected},
                              {"max_residual", fc.max_residual.get_str()}});
        }
    }
    rep["identity"] = {{"instances", checked}, {"all_exact_zero", all_zero}, {"mutation_probes", probes}};
    out.pass = psi_expected && all_zero && mutations_ok;
    out.tables.push_back(std::move(t));
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

}  // namespace

ScenarioOutput execute(const RunConfig& c) {
    ScenarioOutput out;
    out.report["scenario"] = c.scenario;
    out.report["seed"] = c.seed;
    try {
        if (c.scenario == "linear") run_linear(c, out);
        else if (c.scenario == "semilinear") run_semilinear(c, out);
        else if (c.scenario == "quasilinear") run_quasilinear(c, out);
        else if (c.scenario == "fully_nonlinear") run_fully_nonlinear(c, out);
        else if (c.scenario == "observability") run_observability(c, out);
        else run_carleman(c, out);
    } catch (const ConfigError&) {
        throw;
    } catch (const InvalidArgument& e) {
        throw ConfigError(c.scenario, e.what());
    } catch (const std::exception& e) {
        out.pass = false;
        out.report["error"] = e.what();
    }
    out.report["status"] = out.pass ? "pass" : "fail";
    return out;
}

RunOutcome run_config(RunConfig c, const RunOptions& options) {
    RunOutcome outcome;
    if (options.seed) {
        c.seed = *options.seed;
        c.resolved["run.seed"] = std::to_string(c.seed);
    }
    namespace fs = std::filesystem;
    const fs::path dir = options.output_dir  ? fs::path(*options.output_dir)
                         : !c.output_dir.empty() ? fs::path(c.output_dir)
                                               : fs::path("runs") / fs::path(c.source).stem();
    outcome.directory = dir;
    try {
        fs::create_directories(dir);
        ordered_json manifest;
        manifest["tool"] = "wavectl";
        manifest["version"] = WAVECTL_VERSION;
        manifest["config"] = fs::path(c.source).filename().string();
        manifest["scenario"] = c.scenario;
        manifest["seed"] = c.seed;
        manifest["threads"] = thread_count();
        manifest["build"] = {{"compiler", __VERSION__},
                             {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                           "." + std::to_string(EIGEN_MINOR_VERSION)},
                             {"cxx", __cplusplus}};
        manifest["resolved"] = c.resolved;
        manifest["timestamp"] = utc_timestamp();
        write_json(dir / "manifest.json", manifest);

        const ScenarioOutput out = execute(c);
        write_json(dir / "report.json", out.report);
        for (const auto& t : out.tables) write_csv(dir / t.name, t);
        outcome.status = out.pass ? kPass : kScenarioFailure;
        outcome.message = out.pass ? "pass" : out.report.contains("error")
                                                  ? "scenario failed: " + out.report["error"].get<std::string>()
                                                  : "scenario failed: an acceptance gate did not pass";
    } catch (const ConfigError& e) {
        outcome.status = kConfigError;
        outcome.message = std::string("config error: ") + e.what();
    } catch (const std::exception& e) {
        outcome.status = kScenarioFailure;
        outcome.message = e.what();
    }
    return outcome;
}

RunOutcome run_config_file(const std::string& config_path, const RunOptions& options) {
    try {
        return run_config(load_config(config_path), options);
    } catch (const ConfigError& e) {
        RunOutcome o;
        o.status = kConfigError;
        o.message = std::string("config error: ") + e.what();
        return o;
    }
}

}  // namespace wavectl::cli
