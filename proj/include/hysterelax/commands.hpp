#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "hysterelax/config.hpp"
#include "hysterelax/density.hpp"
#include "hysterelax/grid.hpp"
#include "hysterelax/report.hpp"
#include "hysterelax/scheme.hpp"

namespace hysterelax {

enum ExitCode : int { exit_ok = 0, exit_input = 1, exit_compatibility = 2, exit_solver = 3 };

struct CommandOptions {
    std::filesystem::path config;
    std::filesystem::path out_dir;  ///< empty uses the config's output.dir
    int levels = 3;
    int threads = 0;  ///< 0 uses the config value; HYSTERELAX_THREADS overrides both
    bool check_assembly = false;
};

/// Input-output trace of a scalar Preisach operator along a piecewise monotone input.
struct LoopTrace {
    struct Loop {
        std::size_t begin = 0;  ///< first point of the closed loop
        std::size_t end = 0;    ///< point that returns to the first one
        double signed_area = 0.0;
    };
    std::vector<double> u;
    std::vector<double> G;
    std::vector<Loop> loops;
};

/// Starts from the virgin state at u = 0 and visits `sequence` in turn with
/// `samples` equally spaced inputs per monotone segment. A loop is recorded
/// whenever a turning point restores the memory curve of an earlier one; its
/// signed area is positive for counterclockwise traversal.
LoopTrace trace_loops(const DensityModel& d, const std::vector<double>& sequence, int samples,
                      const QuadratureSpec& quad = {});

/// Shoelace area of the closed polygon through (u[k], G[k]), begin <= k <= end.
double signed_area(const std::vector<double>& u, const std::vector<double>& G, std::size_t begin,
                   std::size_t end);

/// Symmetry, row sums, exactness on linear and quadratic fields, and
/// factorizability of the assembled Robin operator.
Json assembly_self_test(const Grid& grid);

/// Same problem with the number of time steps multiplied by 2^k, k < levels.
struct RefinementStudy {
    std::vector<RunResult> runs;
    std::vector<std::size_t> probes;
    /// max over probes and common times of |u_k - u_{k+1}|, one entry per consecutive pair
    std::vector<double> max_differences;
    /// per consecutive pair and q: (tau_k sum over common times |u_k - u_{k+1}|^q)^(1/q), max over probes
    std::vector<std::vector<double>> lq_differences;
    /// max / min over levels of each final monitor value
    std::vector<std::pair<std::string, double>> monitor_ratios;
};

RefinementStudy refinement_study(const Problem& base, const RunOptions& options, int levels,
                                 const std::vector<std::size_t>& probes);

/// Final monitor values by name: energy_sum, dissipation_bound (dissipation_sum
/// plus grad_max), h2_sum and increment_q<q> for each q.
std::vector<std::pair<std::string, double>> final_monitors(const RunResult& run);

int cmd_run(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_refine(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_loops(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_check(const CommandOptions& options, std::ostream& out, std::ostream& err);
int cmd_check_convexify(const CommandOptions& options, std::ostream& out, std::ostream& err);

}  // namespace hysterelax
