#include "hysterelax/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

#include "hysterelax/error.hpp"

namespace hysterelax {

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string quoted(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out + "\"";
}

[[noreturn]] void bad(const std::string& where, const std::string& what) {
    throw ConfigError(fmt::format("config [{}]: {}", where, what));
}

void check_keys(const toml::table& t, const std::string& where, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : t) {
        const std::string k(key.str());
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
            bad(where, fmt::format("unknown key '{}'", k));
        }
    }
}

const toml::table* section(const toml::table& root, const char* name) {
    const toml::node* n = root.get(name);
    if (!n) return nullptr;
    if (!n->is_table()) bad(name, "must be a table");
    return n->as_table();
}

double get_double(const toml::table& t, const std::string& where, const char* key, double fallback) {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    if (auto v = n->value<double>()) return *v;
    bad(where, fmt::format("'{}' must be a number", key));
}

int get_int(const toml::table& t, const std::string& where, const char* key, int fallback) {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    if (auto v = n->value<int64_t>()) return static_cast<int>(*v);
    bad(where, fmt::format("'{}' must be an integer", key));
}

bool get_bool(const toml::table& t, const std::string& where, const char* key, bool fallback) {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    if (auto v = n->value<bool>()) return *v;
    bad(where, fmt::format("'{}' must be a boolean", key));
}

std::string get_string(const toml::table& t, const std::string& where, const char* key, std::string fallback) {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    if (auto v = n->value<std::string>()) return *v;
    bad(where, fmt::format("'{}' must be a string", key));
}

std::vector<double> number_array(const toml::node& n, const std::string& where, const char* key) {
    const toml::array* a = n.as_array();
    if (!a) bad(where, fmt::format("'{}' must be an array of numbers", key));
    std::vector<double> out;
    for (const auto& e : *a) {
        auto v = e.value<double>();
        if (!v) bad(where, fmt::format("'{}' must contain numbers only", key));
        out.push_back(*v);
    }
    return out;
}

std::vector<double> get_array(const toml::table& t, const std::string& where, const char* key,
                              std::vector<double> fallback) {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    return number_array(*n, where, key);
}

FieldSource get_source(const toml::table& t, const std::string& where, const char* key, FieldSource fallback) {
    const toml::node* n = t.get(key);
    if (!n) return fallback;
    if (auto s = n->value<std::string>()) return {Expression(*s), {}};
    if (n->is_number()) return {Expression(num(*n->value<double>())), {}};
    if (n->is_array()) {
        FieldSource f{Expression(), number_array(*n, where, key)};
        if (f.table.empty()) bad(where, fmt::format("'{}' table is empty", key));
        return f;
    }
    bad(where, fmt::format("'{}' must be an expression string, a number or an array", key));
}

void write_source(std::ostream& os, const char* key, const FieldSource& f) {
    os << key << " = ";
    if (f.is_table()) {
        os << "[";
        for (std::size_t k = 0; k < f.table.size(); ++k) os << (k ? ", " : "") << num(f.table[k]);
        os << "]\n";
    } else {
        os << quoted(f.expr.source()) << "\n";
    }
}

void write_array(std::ostream& os, const char* key, const std::vector<double>& v) {
    os << key << " = [";
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? ", " : "") << num(v[k]);
    os << "]\n";
}

void validate(const RunConfig& c) {
    if (c.grid.dim != 1 && c.grid.dim != 2) bad("grid", "dim must be 1 or 2");
    if (!(c.grid.lx > 0.0) || (c.grid.dim == 2 && !(c.grid.ly > 0.0))) bad("grid", "extents must be positive");
    if (c.grid.nx < 2 || (c.grid.dim == 2 && c.grid.ny < 2)) bad("grid", "need at least 2 nodes per direction");
    if (c.grid.dim == 1 && c.grid.ny != 1) bad("grid", "ny must be 1 in one dimension");
    if (!(c.time.final_time > 0.0) || !std::isfinite(c.time.final_time)) bad("time", "final must be positive");
    if (c.time.steps < 1) bad("time", "steps must be at least 1");
    const std::set<std::string> kinds{"constant", "gaussian", "table"};
    if (!kinds.count(c.density.kind)) bad("density", "kind must be constant, gaussian or table");
    if (c.density.kind == "table" && c.density.table_file.empty()) bad("density", "kind table needs 'file'");
    if (c.density.alpha_r.size() != c.density.alpha_values.size()) {
        bad("density", "alpha_r and alpha_values must have the same length");
    }
    const std::set<std::string> memories{"virgin", "saturated", "turning"};
    if (!memories.count(c.initial.memory)) bad("initial", "memory must be virgin, saturated or turning");
    if (c.initial.sign < -1 || c.initial.sign > 1) bad("initial", "sign must be -1, 0 or 1");
    if (!(c.initial.L > 0.0)) bad("initial", "L must be positive");
    if (!(c.initial.memory_support > 0.0)) bad("initial", "memory_support must be positive");
    if (c.initial.u0.expr.source().empty() && !c.initial.u0.is_table()) bad("initial", "u0 is empty");
    if (!c.initial.u0.expr.time_independent() || !c.initial.r0.expr.time_independent() ||
        !c.grid.b.expr.time_independent()) {
        throw ConfigError("config: u0, r0 and b must not depend on t");
    }
    if (!(c.solver.tol > 0.0) || c.solver.max_iter < 1 || c.solver.threads < 1 || c.solver.quad_order < 1 ||
        !(c.solver.margin > 0.0) || !(c.solver.robin_tol > 0.0)) {
        bad("solver", "tolerances, iteration and thread counts must be positive");
    }
    for (double q : c.q_list) {
        if (!(q >= 1.0)) bad("monitors", "exponents q must be >= 1");
    }
    if (c.output.stride < 1) bad("output", "stride must be at least 1");
    if (c.loops.samples < 1) bad("loops", "samples must be at least 1");
    const std::size_t nodes = static_cast<std::size_t>(c.grid.nx) * (c.grid.dim == 2 ? c.grid.ny : 1);
    for (const FieldSource* f : {&c.grid.b, &c.initial.u0, &c.initial.r0, &c.h, &c.ustar}) {
        if (f->is_table() && f->table.size() != nodes) {
            throw ConfigError(fmt::format("config: a table has {} values but the grid has {} nodes",
                                          f->table.size(), nodes));
        }
    }
}

// Nearest node index for coordinates on the configured grid.
std::size_t node_at(const GridSpec& g, double x, double y) {
    const double hx = g.lx / (g.nx - 1);
    const auto i = static_cast<std::size_t>(std::clamp<long>(std::lround(x / hx), 0, g.nx - 1));
    if (g.dim == 1) return i;
    const double hy = g.ly / (g.ny - 1);
    const auto j = static_cast<std::size_t>(std::clamp<long>(std::lround(y / hy), 0, g.ny - 1));
    return j * g.nx + i;
}

SpaceTimeFunction to_function(const RunConfig& c, const FieldSource& f) {
    if (f.is_table()) {
        return [g = c.grid, table = f.table](double x, double y, double) { return table[node_at(g, x, y)]; };
    }
    return [expr = f.expr](double x, double y, double t) { return expr(x, y, t); };
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    toml::table root;
    try {
        root = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << e.description() << " (line " << e.source().begin.line << ")";
        throw ConfigError("config: " + os.str());
    }
    check_keys(root, "root", {"grid", "time", "density", "initial", "sources", "solver", "monitors", "output",
                              "loops", "convexify"});
    RunConfig c;
    c.base_dir = base_dir;

    if (const auto* t = section(root, "grid")) {
        check_keys(*t, "grid", {"dim", "lx", "ly", "nx", "ny", "b"});
        c.grid.dim = get_int(*t, "grid", "dim", c.grid.dim);
        c.grid.lx = get_double(*t, "grid", "lx", c.grid.lx);
        c.grid.ly = get_double(*t, "grid", "ly", c.grid.ly);
        c.grid.nx = get_int(*t, "grid", "nx", c.grid.nx);
        c.grid.ny = get_int(*t, "grid", "ny", c.grid.dim == 2 ? c.grid.nx : 1);
        c.grid.b = get_source(*t, "grid", "b", c.grid.b);
    }
    if (const auto* t = section(root, "time")) {
        check_keys(*t, "time", {"final", "steps", "tau"});
        c.time.final_time = get_double(*t, "time", "final", c.time.final_time);
        if (t->get("steps") && t->get("tau")) bad("time", "give either steps or tau, not both");
        c.time.steps = get_int(*t, "time", "steps", c.time.steps);
        if (t->get("tau")) {
            const double tau = get_double(*t, "time", "tau", 0.0);
            if (!(tau > 0.0)) bad("time", "tau must be positive");
            const double n = std::round(c.time.final_time / tau);
            if (n < 1.0 || std::abs(n * tau - c.time.final_time) > 1e-9 * c.time.final_time) {
                bad("time", "final must be an integer multiple of tau");
            }
            c.time.steps = static_cast<int>(n);
        }
    }
    if (const auto* t = section(root, "density")) {
        check_keys(*t, "density", {"kind", "alpha", "alpha_r", "alpha_values", "support", "beta", "v_support",
                                   "gbar", "file", "lambda_support"});
        c.density.kind = get_string(*t, "density", "kind", c.density.kind);
        c.density.alpha = get_double(*t, "density", "alpha", c.density.alpha);
        c.density.alpha_r = get_array(*t, "density", "alpha_r", {});
        c.density.alpha_values = get_array(*t, "density", "alpha_values", {});
        c.density.support = get_double(*t, "density", "support", c.density.support);
        c.density.beta = get_double(*t, "density", "beta", c.density.beta);
        c.density.v_support = get_double(*t, "density", "v_support", c.density.v_support);
        c.density.gbar = get_double(*t, "density", "gbar", c.density.gbar);
        c.density.table_file = get_string(*t, "density", "file", "");
        // alias of initial.memory_support; an explicit [initial] value wins
        c.initial.memory_support = get_double(*t, "density", "lambda_support", c.initial.memory_support);
    }
    if (const auto* t = section(root, "initial")) {
        check_keys(*t, "initial", {"u0", "memory", "r0", "sign", "memory_support", "L"});
        c.initial.u0 = get_source(*t, "initial", "u0", c.initial.u0);
        c.initial.memory = get_string(*t, "initial", "memory", c.initial.memory);
        c.initial.r0 = get_source(*t, "initial", "r0", c.initial.r0);
        c.initial.sign = get_int(*t, "initial", "sign", c.initial.sign);
        c.initial.memory_support = get_double(*t, "initial", "memory_support", c.initial.memory_support);
        c.initial.L = get_double(*t, "initial", "L", c.initial.L);
    }
    if (const auto* t = section(root, "sources")) {
        check_keys(*t, "sources", {"h", "ustar"});
        c.h = get_source(*t, "sources", "h", c.h);
        c.ustar = get_source(*t, "sources", "ustar", c.ustar);
    }
    if (const auto* t = section(root, "solver")) {
        check_keys(*t, "solver", {"tol", "max_iter", "threads", "quad_order", "max_panel", "backward_step",
                                  "margin", "robin_tol"});
        c.solver.tol = get_double(*t, "solver", "tol", c.solver.tol);
        c.solver.max_iter = get_int(*t, "solver", "max_iter", c.solver.max_iter);
        c.solver.threads = get_int(*t, "solver", "threads", c.solver.threads);
        c.solver.quad_order = get_int(*t, "solver", "quad_order", c.solver.quad_order);
        c.solver.max_panel = get_double(*t, "solver", "max_panel", c.solver.max_panel);
        c.solver.backward_step = get_bool(*t, "solver", "backward_step", c.solver.backward_step);
        c.solver.margin = get_double(*t, "solver", "margin", c.solver.margin);
        c.solver.robin_tol = get_double(*t, "solver", "robin_tol", c.solver.robin_tol);
    }
    if (const auto* t = section(root, "monitors")) {
        check_keys(*t, "monitors", {"q"});
        c.q_list = get_array(*t, "monitors", "q", {});
    }
    if (const auto* t = section(root, "output")) {
        check_keys(*t, "output", {"dir", "stride", "probes"});
        c.output.dir = get_string(*t, "output", "dir", c.output.dir);
        c.output.stride = get_int(*t, "output", "stride", c.output.stride);
        if (const toml::node* n = t->get("probes")) {
            const toml::array* a = n->as_array();
            if (!a) bad("output", "probes must be an array");
            for (const auto& e : *a) {
                if (auto v = e.value<double>()) {
                    c.output.probes.push_back({*v, 0.0});
                } else if (e.is_array()) {
                    const auto xy = number_array(e, "output", "probes");
                    if (xy.empty() || xy.size() > 2) bad("output", "a probe has one or two coordinates");
                    c.output.probes.push_back({xy[0], xy.size() == 2 ? xy[1] : 0.0});
                } else {
                    bad("output", "probes must hold numbers or coordinate pairs");
                }
            }
        }
    }
    if (const auto* t = section(root, "loops")) {
        check_keys(*t, "loops", {"sequence", "samples"});
        c.loops.sequence = get_array(*t, "loops", "sequence", c.loops.sequence);
        c.loops.samples = get_int(*t, "loops", "samples", c.loops.samples);
    }
    if (const auto* t = section(root, "convexify")) {
        check_keys(*t, "convexify", {"range"});
        c.convexify_range = get_double(*t, "convexify", "range", c.convexify_range);
    }
    validate(c);
    if (c.density.kind == "table") {
        std::filesystem::path path = c.density.table_file;
        if (path.is_relative()) path = base_dir / path;
        if (!std::filesystem::exists(path)) {
            throw ConfigError(fmt::format("config [density]: table file '{}' does not exist", path.string()));
        }
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::string to_toml(const RunConfig& c) {
    std::ostringstream os;
    os << "[grid]\n"
       << "dim = " << c.grid.dim << "\nlx = " << num(c.grid.lx) << "\nly = " << num(c.grid.ly)
       << "\nnx = " << c.grid.nx << "\nny = " << c.grid.ny << "\n";
    write_source(os, "b", c.grid.b);

    os << "\n[time]\nfinal = " << num(c.time.final_time) << "\nsteps = " << c.time.steps << "\n";

    os << "\n[density]\nkind = " << quoted(c.density.kind) << "\nalpha = " << num(c.density.alpha) << "\n";
    write_array(os, "alpha_r", c.density.alpha_r);
    write_array(os, "alpha_values", c.density.alpha_values);
    os << "support = " << num(c.density.support) << "\nbeta = " << num(c.density.beta)
       << "\nv_support = " << num(c.density.v_support) << "\ngbar = " << num(c.density.gbar)
       << "\nfile = " << quoted(c.density.table_file) << "\n";

    os << "\n[initial]\n";
    write_source(os, "u0", c.initial.u0);
    os << "memory = " << quoted(c.initial.memory) << "\n";
    write_source(os, "r0", c.initial.r0);
    os << "sign = " << c.initial.sign << "\nmemory_support = " << num(c.initial.memory_support)
       << "\nL = " << num(c.initial.L) << "\n";

    os << "\n[sources]\n";
    write_source(os, "h", c.h);
    write_source(os, "ustar", c.ustar);

    os << "\n[solver]\ntol = " << num(c.solver.tol) << "\nmax_iter = " << c.solver.max_iter
       << "\nthreads = " << c.solver.threads << "\nquad_order = " << c.solver.quad_order
       << "\nmax_panel = " << num(c.solver.max_panel)
       << "\nbackward_step = " << (c.solver.backward_step ? "true" : "false")
       << "\nmargin = " << num(c.solver.margin) << "\nrobin_tol = " << num(c.solver.robin_tol) << "\n";

    os << "\n[monitors]\n";
    write_array(os, "q", c.q_list);

    os << "\n[output]\ndir = " << quoted(c.output.dir) << "\nstride = " << c.output.stride << "\nprobes = [";
    for (std::size_t k = 0; k < c.output.probes.size(); ++k) {
        os << (k ? ", " : "") << "[" << num(c.output.probes[k][0]) << ", " << num(c.output.probes[k][1]) << "]";
    }
    os << "]\n";

    os << "\n[loops]\n";
    write_array(os, "sequence", c.loops.sequence);
    os << "samples = " << c.loops.samples << "\n";

    os << "\n[convexify]\nrange = " << num(c.convexify_range) << "\n";
    return os.str();
}

Grid build_grid(const RunConfig& c) {
    const FieldSource& b = c.grid.b;
    Grid::Coefficient coeff;
    if (b.is_table()) {
        coeff = [&c, &b](double x, double y) { return b.table[node_at(c.grid, x, y)]; };
    } else {
        coeff = [&b](double x, double y) { return b.expr(x, y, 0.0); };
    }
    if (c.grid.dim == 1) return Grid::line(c.grid.lx, c.grid.nx, coeff);
    return Grid::rectangle(c.grid.lx, c.grid.ly, c.grid.nx, c.grid.ny, coeff);
}

DensityModel build_density(const RunConfig& c) {
    const DensitySpec& d = c.density;
    if (d.kind == "table") {
        std::filesystem::path path = d.table_file;
        if (path.is_relative()) path = c.base_dir / path;
        std::ifstream in(path);
        if (!in) throw ConfigError(fmt::format("cannot open density table '{}'", path.string()));
        std::map<std::pair<double, double>, double> cells;
        std::set<double> rs;
        std::set<double> vs;
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#' || line.rfind("r,", 0) == 0) continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            double r, v, rho;
            if (!(ls >> r >> v >> rho)) {
                throw ConfigError(fmt::format("density table '{}': bad row at line {}", path.string(), lineno));
            }
            cells[{r, v}] = rho;
            rs.insert(r);
            vs.insert(v);
        }
        if (cells.size() != rs.size() * vs.size()) {
            throw ConfigError(fmt::format("density table '{}' is not a full rectangular grid", path.string()));
        }
        std::vector<double> values;
        for (double r : rs) {
            for (double v : vs) values.push_back(cells.at({r, v}));
        }
        try {
            return DensityModel::tabulated({rs.begin(), rs.end()}, {vs.begin(), vs.end()}, std::move(values), d.gbar);
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("density table: ") + e.what());
        }
    }
    try {
        const RadialProfile alpha = d.alpha_r.empty() ? RadialProfile::constant(d.alpha, d.support)
                                                       : RadialProfile::table(d.alpha_r, d.alpha_values, d.support);
        if (d.kind == "constant") return DensityModel::constant_in_v(alpha, d.v_support, d.gbar);
        return DensityModel::gaussian(alpha, d.beta, d.gbar);
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config [density]: ") + e.what());
    }
}

Problem build_problem(const RunConfig& c) {
    Grid grid = build_grid(c);
    auto density = std::make_shared<const DensityModel>(build_density(c));
    const SpaceTimeFunction u0f = to_function(c, c.initial.u0);
    const Field u0 = to_field(grid.sample([&](double x, double y) { return u0f(x, y, 0.0); }));
    if (!u0.allFinite()) throw ConfigError("config [initial]: u0 is not finite");

    Problem p{grid, {std::vector<MemoryCurve>(grid.size()), density}, u0, to_function(c, c.h),
              to_function(c, c.ustar)};
    p.final_time = c.time.final_time;
    p.steps = c.time.steps;
    p.L = c.initial.L;
    p.memory_support = c.initial.memory_support;

    const std::string& kind = c.initial.memory;
    try {
        if (kind == "saturated") {
            for (std::size_t k = 0; k < grid.size(); ++k) p.memory.curves[k] = curve_saturated(u0[k]);
        } else if (kind == "turning") {
            Field T = Field::Zero(u0.size());
            if (c.initial.sign == 0) {
                const RobinOperator op = assemble(grid);
                const Field h0 = to_field(grid.sample([&](double x, double y) { return p.h(x, y, 0.0); }));
                const Field s0 = to_field(grid.sample([&](double x, double y) { return p.ustar(x, y, 0.0); }));
                T = discrete_laplacian(op, u0, s0) + h0;
            }
            const SpaceTimeFunction r0f = to_function(c, c.initial.r0);
            for (std::size_t k = 0; k < grid.size(); ++k) {
                const auto e = static_cast<Eigen::Index>(k);
                const int s = c.initial.sign != 0 ? c.initial.sign : (T[e] < 0.0 ? -1 : 1);
                p.memory.curves[k] = curve_turning(u0[e], r0f(grid.x(k), grid.y(k), 0.0), s, p.memory_support);
            }
        }
    } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("config [initial]: ") + e.what());
    }
    return p;
}

RunOptions build_run_options(const RunConfig& c, int threads) {
    RunOptions o;
    o.solver.tol = c.solver.tol;
    o.solver.max_iter = c.solver.max_iter;
    o.solver.threads = threads;
    o.solver.quad.order = c.solver.quad_order;
    o.solver.quad.max_panel = c.solver.max_panel;
    o.compatibility.robin_tol = c.solver.robin_tol;
    o.backward_step = c.solver.backward_step;
    o.margin = c.solver.margin;
    o.q_list = c.q_list;
    return o;
}

std::vector<std::size_t> probe_nodes(const RunConfig& c, const Grid& grid) {
    std::vector<std::size_t> out;
    for (const auto& p : c.output.probes) out.push_back(node_at(c.grid, p[0], p[1]));
    if (out.empty()) out.push_back(node_at(c.grid, 0.5 * grid.length_x(), 0.5 * grid.length_y()));
    return out;
}

}  // namespace hysterelax
