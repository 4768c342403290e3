#include "run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace wavectl::cli {

namespace pt = boost::property_tree;

const std::vector<RegistryEntry>& registry() {
    static const std::vector<RegistryEntry> entries{
        {"f", "identity", "L, L_tilde (L >= 1 >= L_tilde)", "f(v) = v"},
        {"f", "lip_sin", "L, L_tilde", "f(v) = (L + L_tilde)/2 v + (L - L_tilde)/2 sin v"},
        {"g", "quad_gt", "c", "g1 = c y_t^2"},
        {"g", "eps_y_diffusion", "eps", "g2^{ij} = eps y delta_ij"},
        {"F", "zero", "", "F = 0"},
        {"F", "vt_square", "c", "F = c y_t^2"},
    };
    return entries;
}

bool registry_contains(const std::string& kind, const std::string& name) {
    return std::any_of(registry().begin(), registry().end(),
                       [&](const RegistryEntry& e) { return e.kind == kind && e.name == name; });
}

std::string registry_names(const std::string& kind) {
    std::string out;
    for (const auto& e : registry())
        if (e.kind == kind) out += (out.empty() ? "" : ", ") + e.name;
    return out;
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names{"linear",          "semilinear",    "quasilinear",
                                                "fully_nonlinear", "observability", "carleman_check"};
    return names;
}

namespace {

// Shortest representation that reads back to the same double.
std::string format_double(double v) {
    char buf[40];
    for (int p = 1; p <= 17; ++p) {
        std::snprintf(buf, sizeof buf, "%.*g", p, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

void flatten(const pt::ptree& tree, const std::string& prefix, std::map<std::string, std::string>& out) {
    for (const auto& [key, child] : tree) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (child.empty()) {
            // Strip trailing ';' or '#' comments.
            std::string v = child.data();
            const auto c = v.find_first_of(";#");
            if (c != std::string::npos) v = v.substr(0, c);
            out[path] = trim(v);
        } else {
            flatten(child, path, out);
        }
    }
}

std::map<std::string, std::string> table_from_stream(std::istream& in, const std::string& origin) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(origin, e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    std::map<std::string, std::string> raw;
    flatten(tree, "", raw);
    return raw;
}

}  // namespace

ConfigTable ConfigTable::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    ConfigTable t;
    t.raw_ = table_from_stream(in, "config");
    return t;
}

ConfigTable ConfigTable::from_string(const std::string& text) {
    std::istringstream in(text);
    ConfigTable t;
    t.raw_ = table_from_stream(in, "config");
    return t;
}

bool ConfigTable::has(const std::string& key) const { return raw_.count(key) > 0; }

std::string ConfigTable::get_string(const std::string& key, const std::optional<std::string>& fallback) {
    auto it = raw_.find(key);
    std::string v;
    if (it != raw_.end()) {
        read_[key] = true;
        v = it->second;
    } else if (fallback) {
        v = *fallback;
    } else {
        throw ConfigError(key, "required key is missing");
    }
    resolved_[key] = v;
    return v;
}

double ConfigTable::get_double(const std::string& key, const std::optional<double>& fallback) {
    if (!has(key) && fallback) {
        resolved_[key] = format_double(*fallback);
        return *fallback;
    }
    const std::string s = get_string(key);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || trim(s.substr(pos)) != "" || !std::isfinite(v)) throw ConfigError(key, "expected a number, got '" + s + "'");
    resolved_[key] = format_double(v);
    return v;
}

int ConfigTable::get_int(const std::string& key, const std::optional<int>& fallback) {
    if (!has(key) && fallback) {
        resolved_[key] = std::to_string(*fallback);
        return *fallback;
    }
    const std::string s = get_string(key);
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || trim(s.substr(pos)) != "") throw ConfigError(key, "expected an integer, got '" + s + "'");
    resolved_[key] = std::to_string(v);
    return static_cast<int>(v);
}

std::uint64_t ConfigTable::get_seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) {
        resolved_[key] = std::to_string(fallback);
        return fallback;
    }
    const std::string s = get_string(key);
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || trim(s.substr(pos)) != "" || s.front() == '-')
        throw ConfigError(key, "expected a non-negative integer, got '" + s + "'");
    return v;
}

bool ConfigTable::get_bool(const std::string& key, bool fallback) {
    const std::string s = get_string(key, fallback ? "true" : "false");
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + s + "'");
}

std::vector<double> ConfigTable::get_list(const std::string& key, const std::optional<std::vector<double>>& fallback) {
    std::vector<double> out;
    if (!has(key) && fallback) {
        out = *fallback;
    } else {
        std::istringstream in(get_string(key));
        std::string tok;
        while (in >> tok) {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != tok.size()) throw ConfigError(key, "expected a list of numbers, got '" + tok + "'");
            out.push_back(v);
        }
    }
    std::string joined;
    for (double v : out) joined += (joined.empty() ? "" : " ") + format_double(v);
    resolved_[key] = joined;
    return out;
}

void ConfigTable::reject_unread() const {
    for (const auto& [key, value] : raw_)
        if (!read_.count(key)) throw ConfigError(key, "unknown key");
}

// ---------------------------------------------------------------------------

namespace {

Box box_from(const std::vector<double>& v, int dim, const std::string& key) {
    if (static_cast<int>(v.size()) != 2 * dim)
        throw ConfigError(key, "expected " + std::to_string(2 * dim) + " numbers for a " +
                                   (dim == 1 ? "interval" : "rectangle"));
    Box b = dim == 1 ? Box::interval(v[0], v[1]) : Box::rectangle(v[0], v[1], v[2], v[3]);
    if (b.empty()) throw ConfigError(key, "empty box");
    return b;
}

Point point_from(const std::vector<double>& v, int dim, const std::string& key) {
    if (static_cast<int>(v.size()) != dim) throw ConfigError(key, "expected " + std::to_string(dim) + " coordinates");
    return Point{v[0], dim > 1 ? v[1] : 0.0};
}

void require(bool ok, const std::string& key, const std::string& message) {
    if (!ok) throw ConfigError(key, message);
}

// Reads the scenario block with defaults and keeps the resolved strings.
void read_block(ConfigTable& t, RunConfig& c) {
    const std::string s = c.scenario;
    auto num = [&](const std::string& key, double def) {
        const double v = t.get_double(s + "." + key, def);
        c.block[key] = t.resolved().at(s + "." + key);
        return v;
    };
    auto integer = [&](const std::string& key, int def) {
        const int v = t.get_int(s + "." + key, def);
        c.block[key] = std::to_string(v);
        return v;
    };
    auto str = [&](const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
        const std::string v = t.get_string(s + "." + key, def);
        if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw ConfigError(s + "." + key, "unknown value '" + v + "' (expected one of: " + list + ")");
        }
        c.block[key] = v;
        return v;
    };
    auto positive = [&](const std::string& key, double v) { require(v > 0, s + "." + key, "must be positive"); };
    auto named = [&](const std::string& key, const std::string& kind, const std::string& def) {
        const std::string v = t.get_string(s + "." + key, def);
        if (!registry_contains(kind, v))
            throw ConfigError(s + "." + key, "unknown nonlinearity '" + v + "' (registry: " + registry_names(kind) + ")");
        c.block[key] = v;
        return v;
    };

    if (s == "linear") {
        str("method", "all", {"picard", "hum", "galerkin", "all"});
        positive("tol", num("tol", 1e-8));
        require(integer("max_iter", 50) >= 1, s + ".max_iter", "must be >= 1");
        positive("hum_tol", num("hum_tol", 1e-10));
        require(integer("hum_max_iter", 500) >= 1, s + ".hum_max_iter", "must be >= 1");
        require(integer("galerkin_N", 0) >= 0, s + ".galerkin_N", "must be >= 0");
        positive("gate", num("gate", 1e-8));
        positive("secondary_gate", num("secondary_gate", 1e-6));
        positive("agreement", num("agreement", 1e-6));
    } else if (s == "semilinear") {
        const std::string f = named("nonlinearity", "f", "lip_sin");
        const double L = num("L", 2.0), Lt = num("L_tilde", 1.9);
        require(L > Lt && Lt > 0, s + ".L", "need L > L_tilde > 0");
        if (f == "identity") require(L >= 1.0 && Lt <= 1.0, s + ".L", "identity needs L >= 1 >= L_tilde");
        const int gN = integer("galerkin_N", 12);
        require(gN >= 1 && gN <= c.N, s + ".galerkin_N", "must be in [1, discretization.N]");
        require(integer("resim_N", c.N) >= gN, s + ".resim_N", "must be >= galerkin_N");
        require(num("D", 0.0) >= 0, s + ".D", "must be >= 0 (0 estimates it)");
        positive("D_safety", num("D_safety", 1.5));
        require(integer("observability_samples", 20) >= 10, s + ".observability_samples", "must be >= 10");
        require(integer("audit_directions", 64) >= 0, s + ".audit_directions", "must be >= 0");
        positive("tol", num("tol", 1e-8));
        require(integer("max_iter", 30) >= 1, s + ".max_iter", "must be >= 1");
        positive("gate", num("gate", 1e-5));
    } else if (s == "quasilinear") {
        const std::string g = named("g", "g", "eps_y_diffusion");
        if (g == "eps_y_diffusion") num("eps", 0.05);
        if (g == "quad_gt") num("c", 1.0);
        positive("epsilon_gate", num("epsilon_gate", 0.1));
        require(num("sobolev_order", 2.0) >= 1, s + ".sobolev_order", "must be >= 1");
        str("form", "divergence", {"divergence", "nondivergence"});
        positive("tol", num("tol", 1e-9));
        require(integer("max_alpha", 400) >= 2, s + ".max_alpha", "must be >= 2");
        require(integer("resim_N", 2 * c.N) >= c.N, s + ".resim_N", "must be >= discretization.N");
        positive("terminal_gate", num("terminal_gate", 1e-6));
        positive("resim_gate", num("resim_gate", 1e-5));
    } else if (s == "fully_nonlinear") {
        const std::string F = named("F", "F", "vt_square");
        if (F == "vt_square") num("c", 1.0);
        positive("epsilon_gate", num("epsilon_gate", 0.1));
        require(num("sobolev_order", 3.0) >= 1, s + ".sobolev_order", "must be >= 1");
        positive("tol", num("tol", 1e-9));
        require(integer("max_alpha", 400) >= 2, s + ".max_alpha", "must be >= 2");
        positive("ratio_gate", num("ratio_gate", 1e-4));
        positive("consistency_gate", num("consistency_gate", 1e-6));
    } else if (s == "observability") {
        require(integer("samples", 20) >= 10, s + ".samples", "must be >= 10");
        const std::string dual = str("dual", "damped", {"damped", "semilinear"});
        if (dual == "semilinear") positive("L", num("L", 2.0));
        str("direction", dual == "damped" ? "forward" : "backward", {"forward", "backward"});
        str("variant_constants", "true", {"true", "false"});
        str("expect", "observable", {"observable", "violated"});
    } else if (s == "carleman_check") {
        const auto x0 = t.get_list(s + ".psi_x0", std::vector<double>(c.domain.dim(), -0.1));
        point_from(x0, c.domain.dim(), s + ".psi_x0");
        c.block["psi_x0"] = t.resolved().at(s + ".psi_x0");
        positive("psi_scale", num("psi_scale", 1.0));
        num("psi_shift", 0.0);
        positive("mu0", num("mu0", 4.0));
        str("expect_psi", "pass", {"pass", "fail"});
        const double c0 = num("c0", 0.5), c1 = num("c1", 0.5);
        require(c0 > 0 && c0 < 1, s + ".c0", "must lie in (0, 1)");
        require(c1 > 0 && c1 < 1, s + ".c1", "must lie in (0, 1)");
        positive("lambda", num("lambda", 1.0));
        positive("T", num("T", 1.0));
        require(integer("fu_instances", 100) >= 1, s + ".fu_instances", "must be >= 1");
        require(integer("fu_points", 5) >= 1, s + ".fu_points", "must be >= 1");
        const auto dims = t.get_list(s + ".fu_dims", std::vector<double>{1.0, 2.0});
        for (double d : dims) require(d == 1.0 || d == 2.0, s + ".fu_dims", "entries must be 1 or 2");
        c.block["fu_dims"] = t.resolved().at(s + ".fu_dims");
    }
}

}  // namespace

RunConfig parse_config(ConfigTable t, const std::string& source) {
    RunConfig c;
    c.source = source;
    c.scenario = t.get_string("run.scenario");
    if (std::find(scenario_names().begin(), scenario_names().end(), c.scenario) == scenario_names().end()) {
        std::string list;
        for (const auto& s : scenario_names()) list += (list.empty() ? "" : ", ") + s;
        throw ConfigError("run.scenario", "unknown scenario '" + c.scenario + "' (expected one of: " + list + ")");
    }
    c.seed = t.get_seed("run.seed", 0);
    c.output_dir = t.get_string("run.output_dir", "");

    // Domain
    const std::string type = t.get_string("domain.type", "interval");
    require(type == "interval" || type == "rectangle", "domain.type", "expected interval or rectangle");
    const int dim = type == "interval" ? 1 : 2;
    const Box bounds = box_from(t.get_list("domain.bounds", dim == 1 ? std::vector<double>{0, 1}
                                                                     : std::vector<double>{0, 1, 0, 1}),
                                dim, "domain.bounds");
    const int gp = t.get_int("domain.grid_points", 0);
    require(gp >= 0, "domain.grid_points", "must be >= 0 (0 selects automatically)");
    c.domain = dim == 1 ? Domain::interval(bounds.lo[0], bounds.hi[0], gp)
                        : Domain::rectangle(bounds.lo[0], bounds.hi[0], bounds.lo[1], bounds.hi[1], gp);

    // Discretization
    c.N = t.get_int("discretization.N", 16);
    require(c.N >= 1 && c.N <= 256, "discretization.N", "must be in [1, 256]");
    c.dt = t.get_double("discretization.dt", 1e-3);
    require(c.dt > 0, "discretization.dt", "must be positive");

    const bool needs_window = c.scenario != "carleman_check";
    if (needs_window) {
        const bool geo = t.has("geometry.x0") || t.has("geometry.eps0") || t.has("geometry.T");
        const bool win = t.has("window.omega") || t.has("window.T");
        if (geo == win)
            throw ConfigError("geometry", "give exactly one of a [geometry] block (x0, eps0, T) or a [window] block (omega, T)");
        const std::string blk = geo ? "geometry" : "window";
        c.T = t.get_double(blk + ".T");
        require(c.T > 0, blk + ".T", "must be positive");
        c.smoothing = t.get_double(blk + ".smoothing", 0.1);
        require(c.smoothing > 0, blk + ".smoothing", "must be positive");
        if (geo) {
            const Point x0 = point_from(t.get_list("geometry.x0"), dim, "geometry.x0");
            const double eps0 = t.get_double("geometry.eps0");
            require(eps0 > 0, "geometry.eps0", "must be positive");
            try {
                c.geometry = gamma_setup(c.domain, x0, eps0);
            } catch (const InvalidArgument& e) {
                throw ConfigError("geometry", e.what());
            }
            if (c.T < c.geometry->T_min)
                throw ConfigError("geometry", "T = " + format_double(c.T) + " is below T_min = " +
                                                  format_double(c.geometry->T_min) + " for x0 and eps0");
            c.omega = c.geometry->omega_hull();
        } else {
            c.omega = box_from(t.get_list("window.omega"), dim, "window.omega");
            require(bounds.contains(c.omega), "window.omega", "must lie inside domain.bounds");
        }
        const double steps = c.T / c.dt;
        require(std::abs(steps - std::round(steps)) <= 1e-8 * std::max(1.0, steps), "discretization.dt",
                "must divide T");

        // Initial data
        c.data.kind = t.get_string("data.kind", "modes");
        if (c.data.kind == "modes") {
            c.data.y0_mode = t.get_int("data.y0_mode", 1);
            c.data.y0_amplitude = t.get_double("data.y0_amplitude", 0.0);
            c.data.y1_mode = t.get_int("data.y1_mode", 1);
            c.data.y1_amplitude = t.get_double("data.y1_amplitude", 0.0);
            require(c.data.y0_mode >= 1 && c.data.y0_mode <= c.N, "data.y0_mode", "must be in [1, discretization.N]");
            require(c.data.y1_mode >= 1 && c.data.y1_mode <= c.N, "data.y1_mode", "must be in [1, discretization.N]");
        } else if (c.data.kind == "random") {
            c.data.amplitude = t.get_double("data.amplitude");
            const std::string prof = t.get_string("data.profile", "inverse_lambda");
            if (prof == "flat") c.data.profile = 0;
            else if (prof == "inverse_lambda") c.data.profile = 1;
            else if (prof == "inverse_lambda_sq") c.data.profile = 2;
            else throw ConfigError("data.profile", "expected flat, inverse_lambda or inverse_lambda_sq");
        } else {
            throw ConfigError("data.kind", "expected modes or random");
        }
    }

    read_block(t, c);
    t.reject_unread();
    c.resolved = t.resolved();
    return c;
}

RunConfig load_config(const std::string& path) { return parse_config(ConfigTable::from_file(path), path); }

double block_double(const RunConfig& c, const std::string& key) { return std::stod(c.block.at(key)); }
int block_int(const RunConfig& c, const std::string& key) { return std::stoi(c.block.at(key)); }
const std::string& block_string(const RunConfig& c, const std::string& key) { return c.block.at(key); }

}  // namespace wavectl::cli
