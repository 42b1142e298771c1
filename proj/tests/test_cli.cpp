#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include <unistd.h>

#include "hysterelax/commands.hpp"
#include "hysterelax/config.hpp"
#include "hysterelax/error.hpp"
#include "hysterelax/expression.hpp"
#include "hysterelax/preisach.hpp"

using namespace hysterelax;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& tag) {
    static std::atomic<int> counter{0};
    const fs::path p = fs::temp_directory_path() /
                       ("hysterelax_cli_" + std::to_string(::getpid()) + "_" + tag + "_" + std::to_string(counter++));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const fs::path p = dir / "config.toml";
    std::ofstream(p) << text;
    return p;
}

const char* rest_config = R"toml(
[grid]
dim = 1
nx = 17

[time]
final = 1.0
steps = 8

[density]
kind = "gaussian"

[initial]
u0 = "0"

[sources]
h = "0"
ustar = "0"

[output]
stride = 2
)toml";

const char* forced_config = R"toml(
[grid]
dim = 1
nx = 17

[time]
final = 1.0
steps = 20

[density]
kind = "gaussian"

[initial]
u0 = "0"
memory = "virgin"

[sources]
h = "sin(2*pi*x) * sin(t)"
ustar = "0"

[output]
stride = 5
probes = [[0.25], [0.5]]
)toml";

const char* turning_config = R"toml(
[grid]
dim = 1
nx = 17

[time]
final = 0.5
tau = 0.05

[density]
kind = "constant"
alpha = 1.0
support = 2.0

[initial]
u0 = "0"
memory = "turning"
r0 = "1"

[sources]
h = "0.5"
ustar = "0"
)toml";

const char* virgin_config = R"toml(
[grid]
dim = 1
nx = 9

[time]
final = 1.0
steps = 4

[initial]
u0 = "0"
memory = "virgin"

[sources]
h = "1"
)toml";

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

template <class F>
Outcome invoke(F command, const CommandOptions& o) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = command(o, out, err);
    return {code, out.str(), err.str()};
}

CommandOptions options_for(const fs::path& config, const fs::path& out, int threads = 1) {
    CommandOptions o;
    o.config = config;
    o.out_dir = out;
    o.threads = threads;
    return o;
}

}  // namespace

TEST_CASE("expression evaluation") {
    CHECK(Expression()(0.3, 0.4, 0.5) == 0.0);
    CHECK(Expression("1 + 2*3")(0, 0, 0) == 7.0);
    CHECK(Expression("(1 + 2)*3")(0, 0, 0) == 9.0);
    CHECK(Expression("2^3^2")(0, 0, 0) == 512.0);
    CHECK(Expression("-2^2")(0, 0, 0) == -4.0);
    CHECK(Expression("8/4/2")(0, 0, 0) == 1.0);
    CHECK(Expression("1 - 2 - 3")(0, 0, 0) == -4.0);
    CHECK(Expression("x*y + t")(2.0, 3.0, 0.5) == 6.5);
    CHECK(Expression("1e-3 * 2.5E2")(0, 0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(Expression("sin(pi/2)")(0, 0, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(Expression("exp(log(3))")(0, 0, 0) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(Expression("sqrt(abs(-16))")(0, 0, 0) == 4.0);
    CHECK(Expression("min(x, y) + max(x, y)")(1.0, -2.0, 0) == -1.0);
    CHECK(Expression("step(x)")(0.0, 0, 0) == 0.0);
    CHECK(Expression("step(x)")(1e-300, 0, 0) == 1.0);
    CHECK(Expression("sin(2*pi*x)*sin(t)")(0.25, 0, 1.0) == doctest::Approx(std::sin(1.0)).epsilon(1e-15));
    CHECK(Expression("cos(x) + tan(y) + tanh(t)")(0.1, 0.2, 0.3) ==
          doctest::Approx(std::cos(0.1) + std::tan(0.2) + std::tanh(0.3)).epsilon(1e-15));

    CHECK(Expression("sin(x) + y").time_independent());
    CHECK_FALSE(Expression("x * t").time_independent());
    CHECK(Expression("x + 1") == Expression("x + 1"));
}

TEST_CASE("expression syntax errors") {
    for (const char* bad : {"1 +", "foo(1)", "(1", "2 3", "z", "min(1)", "sin 1", "", "1 ** 2", "3)"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(Expression{bad}, ConfigError);
    }
}

TEST_CASE("config defaults and round trip") {
    const RunConfig c = parse_config(forced_config);
    CHECK(c.grid.nx == 17);
    CHECK(c.time.steps == 20);
    CHECK(c.output.probes.size() == 2);
    CHECK(c.initial.memory == "virgin");
    CHECK(parse_config(to_toml(c)) == c);

    const RunConfig t = parse_config(turning_config);
    CHECK(t.time.steps == 10);
    CHECK(parse_config(to_toml(t)) == t);

    RunConfig tables = c;
    tables.initial.u0 = FieldSource{Expression(), std::vector<double>(17, 0.125)};
    tables.q_list = {1.0, 1.25};
    tables.density.alpha_r = {0.0, 1.0};
    tables.density.alpha_values = {1.0, 0.5};
    tables.output.probes = {{0.1, 0.0}};
    tables.loops.sequence = {0.3, -0.7};
    CHECK(parse_config(to_toml(tables)) == tables);

    const RunConfig alias = parse_config("[density]\nlambda_support = 1.5\n");
    CHECK(alias.initial.memory_support == 1.5);
}

TEST_CASE("config rejects invalid input") {
    const char* cases[] = {
        "[grid]\nfoo = 1\n",
        "[nonsense]\nx = 1\n",
        "[grid]\ndim = 3\n",
        "[grid]\nnx = 1\n",
        "[time]\nfinal = 1.0\ntau = 0.3\n",
        "[time]\nsteps = 10\ntau = 0.1\n",
        "[time]\nsteps = 0\n",
        "[density]\nkind = \"table\"\n",
        "[density]\nkind = \"lorentzian\"\n",
        "[density]\nkind = \"table\"\nfile = \"does-not-exist.csv\"\n",
        "[sources]\nh = \"sin(\"\n",
        "[initial]\nmemory = \"mystery\"\n",
        "[initial]\nL = 0\n",
        "[monitors]\nq = [0.5]\n",
        "[grid]\nnx = \"many\"\n",
        "grid = 5\n",
        "not toml at all = = =\n",
    };
    for (const char* text : cases) {
        CAPTURE(text);
        CHECK_THROWS_AS(parse_config(text), ConfigError);
    }
    CHECK_THROWS_AS(parse_config("[grid]\nnx = 5\n[initial]\nu0 = [0.0, 0.0]\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/hysterelax.toml"), ConfigError);
}

TEST_CASE("probe nodes snap to the nearest node") {
    const RunConfig c = parse_config(forced_config);
    const Grid g = build_grid(c);
    const auto probes = probe_nodes(c, g);
    REQUIRE(probes.size() == 2);
    CHECK(probes[0] == 4);
    CHECK(probes[1] == 8);
    const RunConfig rest = parse_config(rest_config);
    CHECK(probe_nodes(rest, build_grid(rest)) == std::vector<std::size_t>{8});
}

TEST_CASE("loop traces of the unit density") {
    const DensityModel pi = DensityModel::constant_in_v(RadialProfile::constant(1.0, 4.0));

    const LoopTrace major = trace_loops(pi, {1.0, 0.0, 1.0}, 16);
    REQUIRE(major.u.size() == 49);
    CHECK(major.G[16] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(major.G[32] == doctest::Approx(0.25).epsilon(1e-12));
    REQUIRE(major.loops.size() == 1);
    CHECK(major.loops[0].begin == 16);
    CHECK(major.loops[0].end == 48);
    CHECK(major.loops[0].signed_area > 0.0);

    const LoopTrace still = trace_loops(pi, {0.0, 0.0}, 16);
    CHECK(still.u.size() == 1);
    CHECK(still.loops.empty());

    // the trace passes (0, 0) again at index 32, but with a different memory
    const LoopTrace minor = trace_loops(pi, {1.0, -1.0, 0.5, 0.0, 0.5}, 8);
    CHECK(minor.G[32] == doctest::Approx(0.0).epsilon(1e-12));
    REQUIRE(minor.loops.size() == 1);
    const auto& loop = minor.loops[0];
    CHECK(minor.u[loop.end] == minor.u[loop.begin]);
    CHECK(minor.G[loop.end] == minor.G[loop.begin]);
    CHECK(loop.signed_area > 0.0);

    CHECK_THROWS_AS(trace_loops(pi, {1.0}, 0), InvalidArgument);
}

TEST_CASE("shoelace area of a unit square") {
    const std::vector<double> u{0, 1, 1, 0, 0};
    const std::vector<double> G{0, 0, 1, 1, 0};
    CHECK(signed_area(u, G, 0, 4) == 1.0);
    const std::vector<double> ur(u.rbegin(), u.rend());
    const std::vector<double> Gr(G.rbegin(), G.rend());
    CHECK(signed_area(ur, Gr, 0, 4) == -1.0);
}

TEST_CASE("operator self-test passes in one and two dimensions") {
    const auto one = assembly_self_test(Grid::line(2.0, 33, [](double x, double) { return 1.0 + x; }));
    CHECK(one["passed"].get<bool>());
    const auto two = assembly_self_test(Grid::rectangle(1.0, 0.5, 17, 9, [](double, double) { return 2.0; }));
    CHECK(two["passed"].get<bool>());
    const auto neumann = assembly_self_test(Grid::line(1.0, 9, [](double, double) { return 0.0; }));
    CHECK_FALSE(neumann["positive_definite"].get<bool>());
}

TEST_CASE("run on the rest state writes an all-zero trajectory") {
    const fs::path dir = scratch_dir("rest");
    const fs::path out = dir / "out";
    CommandOptions o = options_for(write_config(dir, rest_config), out);
    o.check_assembly = true;
    const Outcome r = invoke(cmd_run, o);
    INFO(r.err);
    REQUIRE(r.code == exit_ok);
    for (const char* f : {"summary.json", "monitors.csv", "probes.csv", "snapshots.csv", "timing.json",
                          "effective-config.toml", "compatibility.json", "assembly.json", "memory_8.csv"}) {
        CHECK(fs::exists(out / f));
    }
    std::istringstream snaps(slurp(out / "snapshots.csv"));
    std::string line;
    std::getline(snaps, line);
    CHECK(line == "step,t,x,u,G");
    int rows = 0;
    while (std::getline(snaps, line)) {
        ++rows;
        const auto last = line.rfind(',');
        const auto prev = line.rfind(',', last - 1);
        CHECK(std::stod(line.substr(prev + 1, last - prev - 1)) == 0.0);
    }
    CHECK(rows == 5 * 17);

    const Json summary = Json::parse(slurp(out / "summary.json"));
    CHECK(summary["max_principle"]["sup_u"].get<double>() == 0.0);
    CHECK(summary["max_principle"]["holds"].get<bool>());
    CHECK(summary["steps"].get<int>() == 8);
    for (const auto& v : summary["monitors"]["energy_sum"]) CHECK(v.get<double>() == 0.0);

    CHECK(parse_config(slurp(out / "effective-config.toml")) == load_config(o.config));
}

TEST_CASE("virgin memory with nonzero forcing exits with code 2") {
    const fs::path dir = scratch_dir("virgin");
    const Outcome r = invoke(cmd_run, options_for(write_config(dir, virgin_config), dir / "out"));
    CHECK(r.code == exit_compatibility);
    CHECK(r.err.find("memory_depth") != std::string::npos);
    CHECK(r.err.find("node 0") != std::string::npos);
    CHECK(r.err.find("node 8") != std::string::npos);
    const Json report = Json::parse(slurp(dir / "out" / "compatibility.json"));
    CHECK_FALSE(report["clean"].get<bool>());
    CHECK(report["violations"].size() >= 9);
    CHECK_FALSE(fs::exists(dir / "out" / "summary.json"));
}

TEST_CASE("input errors exit with code 1") {
    const fs::path dir = scratch_dir("input");
    const Outcome missing = invoke(cmd_run, options_for(dir / "absent.toml", dir / "out"));
    CHECK(missing.code == exit_input);
    CHECK_FALSE(missing.err.empty());
    const Outcome broken = invoke(cmd_check, options_for(write_config(dir, "[grid]\nnx = -3\n"), dir / "out"));
    CHECK(broken.code == exit_input);
}

TEST_CASE("forced run records the maximum principle") {
    const fs::path dir = scratch_dir("forced");
    const Outcome r = invoke(cmd_run, options_for(write_config(dir, forced_config), dir / "out"));
    REQUIRE(r.code == exit_ok);
    const Json summary = Json::parse(slurp(dir / "out" / "summary.json"));
    const double sup = summary["max_principle"]["sup_u"].get<double>();
    CHECK(sup > 0.0);
    CHECK(sup <= summary["Ubar"].get<double>());
    CHECK(summary["monitors"]["time"].size() == 20);
    CHECK(summary["q"].size() == 2);
    const std::string probes = slurp(dir / "out" / "probes.csv");
    CHECK(probes.rfind("t,u_linear_4,u_constant_4,G_linear_4,u_linear_8,u_constant_8,G_linear_8\n", 0) == 0);
    CHECK(std::count(probes.begin(), probes.end(), '\n') == 1 + 2 * 20 + 1);
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
    const fs::path dir = scratch_dir("determinism");
    const fs::path config = write_config(dir, forced_config);
    REQUIRE(invoke(cmd_run, options_for(config, dir / "a", 1)).code == exit_ok);
    REQUIRE(invoke(cmd_run, options_for(config, dir / "b", 1)).code == exit_ok);
    REQUIRE(invoke(cmd_run, options_for(config, dir / "c", 4)).code == exit_ok);
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        const std::string name = entry.path().filename().string();
        if (name == "timing.json") continue;
        CAPTURE(name);
        const std::string ref = slurp(entry.path());
        CHECK(ref == slurp(dir / "b" / name));
        CHECK(ref == slurp(dir / "c" / name));
        ++compared;
    }
    CHECK(compared >= 7);
}

TEST_CASE("refinement of the rest state shows no differences") {
    const fs::path dir = scratch_dir("refine_rest");
    CommandOptions o = options_for(write_config(dir, rest_config), dir / "out");
    o.levels = 3;
    const Outcome r = invoke(cmd_refine, o);
    REQUIRE(r.code == exit_ok);
    const Json report = Json::parse(slurp(dir / "out" / "refine.json"));
    REQUIRE(report["levels"].size() == 3);
    CHECK(report["levels"][2]["steps"].get<int>() == 32);
    REQUIRE(report["differences"].size() == 2);
    for (const auto& d : report["differences"]) {
        CHECK(d["max"].get<double>() == 0.0);
        for (const auto& [q, v] : d["lq"].items()) CHECK(v.get<double>() == 0.0);
    }
    CHECK(report["monitors_within_factor_3"].get<bool>());
    CHECK(fs::exists(dir / "out" / "refine.csv"));
}

TEST_CASE("refinement of a forced run converges") {
    const fs::path dir = scratch_dir("refine_forced");
    CommandOptions o = options_for(write_config(dir, forced_config), dir / "out");
    o.levels = 3;
    REQUIRE(invoke(cmd_refine, o).code == exit_ok);
    const Json report = Json::parse(slurp(dir / "out" / "refine.json"));
    const double d0 = report["differences"][0]["max"].get<double>();
    const double d1 = report["differences"][1]["max"].get<double>();
    CHECK(d0 > 0.0);
    CHECK(d1 < d0);
    CHECK(report["differences_decreasing"].get<bool>());
    CHECK(report["monitors_within_factor_3"].get<bool>());
}

TEST_CASE("refinement of incompatible data exits with code 2") {
    const fs::path dir = scratch_dir("refine_virgin");
    CHECK(invoke(cmd_refine, options_for(write_config(dir, virgin_config), dir / "out")).code == exit_compatibility);
}

TEST_CASE("check reports compatibility, step size and convexifier") {
    const fs::path dir = scratch_dir("check");

    CommandOptions gauss = options_for(write_config(dir, forced_config), dir / "gauss");
    gauss.check_assembly = true;
    const Outcome g = invoke(cmd_check, gauss);
    REQUIRE(g.code == exit_ok);
    const Json gj = Json::parse(g.out);
    CHECK(gj["compatible"].get<bool>());
    CHECK(gj["tau_warning"].get<bool>());
    CHECK(gj["convexifier"]["density"].get<std::string>() == "gaussian_decay");
    CHECK(gj["convexifier"]["kappa"].get<double>() == 2.0);
    CHECK(gj["convexifier"]["accepted"].get<bool>());
    CHECK(gj["convexifier"]["C"].get<double>() > 0.0);
    CHECK(gj["convexifier"]["beta_estimate"].get<double>() > 0.0);
    CHECK(gj["assembly"]["passed"].get<bool>());
    CHECK(slurp(dir / "gauss" / "check.json") == g.out);

    const fs::path tdir = scratch_dir("check_turning");
    const Outcome t = invoke(cmd_check, options_for(write_config(tdir, turning_config), tdir / "out"));
    REQUIRE(t.code == exit_ok);
    const Json tj = Json::parse(t.out);
    CHECK(tj["compatible"].get<bool>());
    CHECK(tj["backward_step_needed"].get<bool>());
    CHECK(tj["tau0"].get<double>() == 0.5);
    CHECK_FALSE(tj["tau_warning"].get<bool>());
    CHECK(tj["compatibility"]["minimal_L"].get<double>() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-12));

    const fs::path vdir = scratch_dir("check_virgin");
    const Outcome v = invoke(cmd_check, options_for(write_config(vdir, virgin_config), vdir / "out"));
    CHECK(v.code == exit_ok);
    CHECK_FALSE(Json::parse(v.out)["compatible"].get<bool>());
}

TEST_CASE("convexifier check for constant and gaussian densities") {
    const fs::path dir = scratch_dir("convexify");
    const Outcome c = invoke(cmd_check_convexify, options_for(write_config(dir, turning_config), dir / "c"));
    REQUIRE(c.code == exit_ok);
    const Json cj = Json::parse(c.out);
    CHECK(cj["kappa"].get<double>() == 0.0);
    CHECK(cj["C"].get<double>() == 1.0);
    CHECK(cj["ode_residual"].get<double>() == 0.0);

    const fs::path gdir = scratch_dir("convexify_gauss");
    const std::string text = std::string(forced_config) + "\n[convexify]\nrange = 1.0\n";
    const Outcome g = invoke(cmd_check_convexify, options_for(write_config(gdir, text), gdir / "g"));
    REQUIRE(g.code == exit_ok);
    const Json gj = Json::parse(g.out);
    CHECK(gj["range"].get<double>() == 1.0);
    CHECK(gj["kappa"].get<double>() == 2.0);
    CHECK(gj["ode_residual"].get<double>() <= 1e-6);
    CHECK(gj["min_second_difference"].get<double>() >= -1e-8);
}

TEST_CASE("turning memory run computes the backward step") {
    const fs::path dir = scratch_dir("turning");
    const Outcome r = invoke(cmd_run, options_for(write_config(dir, turning_config), dir / "out"));
    INFO(r.err);
    REQUIRE(r.code == exit_ok);
    const Json s = Json::parse(slurp(dir / "out" / "summary.json"));
    REQUIRE(s["backward_step"].is_object());
    CHECK(s["backward_step"]["round_trip_exact"].get<bool>());
    CHECK(s["backward_step"]["max_rate"].get<double>() <= s["backward_step"]["rate_bound"].get<double>());
    CHECK(s["tau_below_tau0"].get<bool>());
}

TEST_CASE("loops command writes the trace") {
    const fs::path dir = scratch_dir("loops");
    const char* text = R"toml(
[density]
kind = "gaussian"

[loops]
sequence = [1.5, -1.5, 1.5]
samples = 32
)toml";
    const Outcome r = invoke(cmd_loops, options_for(write_config(dir, text), dir / "out"));
    REQUIRE(r.code == exit_ok);
    const Json j = Json::parse(slurp(dir / "out" / "loops.json"));
    CHECK(j["points"].get<int>() == 97);
    REQUIRE(j["loops"].size() == 1);
    CHECK(j["loops"][0]["signed_area"].get<double>() > 0.0);
    CHECK(j["counterclockwise"].get<bool>());
    const std::string csv = slurp(dir / "out" / "loops.csv");
    CHECK(csv.rfind("index,u,G\n0,0,0\n", 0) == 0);
}
