#pragma once

#include <array>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "hysterelax/density.hpp"
#include "hysterelax/expression.hpp"
#include "hysterelax/scheme.hpp"

namespace hysterelax {

/// A field given either as an expression in x, y, t or as one value per node.
struct FieldSource {
    Expression expr;
    std::vector<double> table;

    bool is_table() const { return !table.empty(); }
    bool operator==(const FieldSource&) const = default;
};

struct GridSpec {
    int dim = 1;
    double lx = 1.0;
    double ly = 1.0;
    int nx = 33;
    int ny = 1;
    FieldSource b{Expression("1"), {}};
    bool operator==(const GridSpec&) const = default;
};

struct TimeSpec {
    double final_time = 1.0;
    int steps = 100;  ///< tau = final_time / steps
    bool operator==(const TimeSpec&) const = default;
};

struct DensitySpec {
    std::string kind = "gaussian";  ///< "constant", "gaussian" or "table"
    double alpha = 1.0;             ///< constant threshold weight
    std::vector<double> alpha_r;    ///< optional knots of a tabulated alpha(r)
    std::vector<double> alpha_values;
    double support = 2.0;           ///< alpha vanishes for r >= support
    double beta = 1.0;
    double v_support = std::numeric_limits<double>::infinity();
    double gbar = 0.0;
    std::string table_file;  ///< CSV with columns r,v,rho on a rectangular grid
    bool operator==(const DensitySpec&) const = default;
};

struct InitialSpec {
    FieldSource u0{};
    std::string memory = "virgin";  ///< "virgin", "saturated" or "turning"
    FieldSource r0{};               ///< depth of the turning memory
    int sign = 0;                   ///< slope direction of the turning memory; 0 follows sign(T)
    double memory_support = 2.0;
    double L = 1.0;
    bool operator==(const InitialSpec&) const = default;
};

struct SolverSpec {
    double tol = 1e-11;
    int max_iter = 60;
    int threads = 1;
    int quad_order = 6;
    double max_panel = 0.0;
    bool backward_step = true;
    double margin = 0.05;
    double robin_tol = 1e-6;
    bool operator==(const SolverSpec&) const = default;
};

struct OutputSpec {
    std::string dir = "out";
    int stride = 10;
    std::vector<std::array<double, 2>> probes;  ///< probe coordinates, snapped to nodes
    bool operator==(const OutputSpec&) const = default;
};

struct LoopSpec {
    std::vector<double> sequence{1.0, -1.0, 1.0};
    int samples = 64;  ///< points per monotone segment
    bool operator==(const LoopSpec&) const = default;
};

struct RunConfig {
    GridSpec grid;
    TimeSpec time;
    DensitySpec density;
    InitialSpec initial;
    FieldSource h{};
    FieldSource ustar{};
    SolverSpec solver;
    std::vector<double> q_list;  ///< empty selects {1, 1 + 1/N}
    OutputSpec output;
    LoopSpec loops;
    double convexify_range = 0.0;  ///< U for the convexifier; 0 uses Ubar
    std::filesystem::path base_dir;  ///< relative file names resolve against this

    bool operator==(const RunConfig& o) const {
        return grid == o.grid && time == o.time && density == o.density && initial == o.initial &&
               h == o.h && ustar == o.ustar && solver == o.solver && q_list == o.q_list &&
               output == o.output && loops == o.loops && convexify_range == o.convexify_range;
    }
};

/// Parses TOML text. Throws ConfigError on syntax errors, unknown keys or invalid values.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
/// Every field written out explicitly; parse_config(to_toml(c)) == c.
std::string to_toml(const RunConfig& config);

Grid build_grid(const RunConfig& config);
DensityModel build_density(const RunConfig& config);
/// Grid, density, initial data and memory, sources. Turning memory with sign 0
/// follows the sign of T = Lap_h u0 + h(., 0) at every node (+1 where T = 0).
Problem build_problem(const RunConfig& config);
RunOptions build_run_options(const RunConfig& config, int threads);
/// Node indices nearest to the probe coordinates; the grid centre if none are given.
std::vector<std::size_t> probe_nodes(const RunConfig& config, const Grid& grid);

}  // namespace hysterelax
