#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hysterelax/density.hpp"
#include "hysterelax/grid.hpp"
#include "hysterelax/memory_curve.hpp"
#include "hysterelax/quadrature.hpp"
#include "hysterelax/robin.hpp"

namespace hysterelax {

/// One memory curve per grid node, all sharing one density.
struct HysteresisField {
    std::vector<MemoryCurve> curves;
    std::shared_ptr<const DensityModel> density;

    std::size_t size() const { return curves.size(); }
    /// curve(0) at every node.
    Field inputs() const;
    Field outputs(const QuadratureSpec& quad = {}, int threads = 1) const;
    Field energies(const QuadratureSpec& quad = {}, int threads = 1) const;
};

using SpaceTimeFunction = std::function<double(double x, double y, double t)>;

/// Data of one time-discrete run on [0, final_time] with `steps` uniform steps.
struct Problem {
    Grid grid;
    HysteresisField memory;  ///< initial memory lambda; curve(0) must equal u0
    Field u0;
    SpaceTimeFunction h;
    SpaceTimeFunction ustar;
    double final_time = 1.0;
    int steps = 1;
    double L = 1.0;               ///< constant of the depth condition sqrt|T| / L <= r0
    double memory_support = 1.0;  ///< Lambda: every initial curve vanishes beyond it
};

/// rho_0(3 Ubar) / (2 L^2). Throws InvalidArgument unless L > 0.
double compute_tau0(const DensityModel& d, double L, double Ubar);

struct CompatibilityOptions {
    /// |T| below zero_tol * (1 + max|h0| + max|u0| / h^2) counts as zero.
    double zero_tol = 1e-12;
    /// Allowed mismatch of lambda(0) against u0, relative to 1 + |u0|.
    double value_tol = 1e-12;
    /// Allowed Robin residual of u0, relative to 1 + max|u0| + max|u*|.
    double robin_tol = 1e-6;
};

struct Violation {
    std::size_t node = 0;
    std::string condition;  ///< "initial_value", "memory_depth" or "robin_boundary"
    double value = 0.0;     ///< what was found
    double required = 0.0;  ///< what the condition asks for
};

/// Audit of the initial memory against u0 and the data at t = 0.
struct CompatibilityReport {
    Field u0;
    Field T;      ///< Lap_h u0 + h0
    Field r_min;  ///< sqrt|T| / L
    Field r0;     ///< straight depth of lambda with slope -sign(T), 0 where T = 0
    Field sign;   ///< -1, 0 or +1
    double minimal_L = 0.0;       ///< smallest L for which the depth condition holds
    double robin_residual = 0.0;  ///< max |du0/dn + b (u0 - u*)| over boundary nodes
    std::vector<Violation> violations;

    bool clean() const { return violations.empty(); }
    std::size_t active_nodes() const;  ///< nodes with T != 0
};

CompatibilityReport check_compatibility(const Grid& grid, const RobinOperator& op, const Field& u0,
                                        const HysteresisField& memory, const Field& h0,
                                        const Field& ustar0, double L,
                                        const CompatibilityOptions& options = {});

/// Samples the data at t = 0 and audits the initial memory of a problem.
CompatibilityReport audit_initial_data(const Problem& problem, const CompatibilityOptions& options = {});

/// B(a): Preisach output gained between the deformed memory
/// backward_deform(lambda, r0, a, sign) and lambda, taken with sign so it is >= 0.
double strip_integral(const DensityModel& d, const MemoryCurve& lambda, double r0, double a, int sign,
                      const QuadratureSpec& quad = {});

/// Fictitious step to t = -tau making the equation hold at i = 0.
struct BackwardStep {
    Field u_minus1;
    HysteresisField memory_minus1;
    Field G_minus1;
    Field a;                          ///< half of |u0 - u_{-1}|
    double max_strip_residual = 0.0;  ///< max |B(a) - tau |T||
    double max_rate = 0.0;            ///< max |u0 - u_{-1}| / tau
    double rate_bound = 0.0;          ///< 2 L^2 Lambda / rho*
    bool round_trip_exact = true;     ///< play_update(lambda_{-1}, u0) == lambda everywhere
};

/// Solves B(a) = tau |T| by bisection on (0, r0 / 2] at every node with T != 0.
/// Throws CompatibilityError if the report is not clean or tau >= tau0 while some
/// T != 0, and SolverFailure if B(r0 / 2) < tau |T| at some node.
BackwardStep backward_step(const CompatibilityReport& report, const HysteresisField& memory,
                           double tau, double L, double Ubar, double memory_support,
                           const QuadratureSpec& quad = {}, int threads = 1);

struct SupersolutionBound {
    Field v;           ///< solution of -Lap v = htilde with -dv/dn = b v
    double htilde = 0.0;
    double Ustar = 0.0;
    double Ubar = 0.0;  ///< sup (v + Ustar)
};

/// htilde = (1 + margin) sup|h|, U* = max(sup|u*|, Lambda - min v) + margin,
/// Ubar = sup (v + U*).
SupersolutionBound supersolution_bound(const Grid& grid, const RobinOperator& op, double sup_h,
                                       double sup_ustar, double memory_support, double margin = 0.05);

/// Fields at t_i = i tau for i = 0..n.
struct Trajectory {
    double tau = 0.0;
    std::vector<double> times;
    std::vector<Field> u;
    std::vector<Field> G;
    std::vector<Field> E;
    std::vector<Field> h;
    std::vector<Field> ustar;
    std::optional<Field> u_minus1;

    std::size_t steps() const { return u.empty() ? 0 : u.size() - 1; }
    /// Piecewise linear interpolant of u at node k.
    double linear(std::size_t node, double t) const;
    /// Piecewise constant interpolant u_{i-1} on [t_{i-1}, t_i), continuous at T.
    double constant(std::size_t node, double t) const;
    /// Piecewise linear interpolant of G at node k.
    double output_linear(std::size_t node, double t) const;
};

/// Cumulative estimate monitors after step i.
struct MonitorRecord {
    std::size_t step = 0;
    double time = 0.0;
    double energy_sum = 0.0;       ///< tau sum_j (|grad u_j|^2 + int b u_j^2)
    double dissipation_sum = 0.0;  ///< (1/tau) sum_j int (G_j - G_{j-1})(u_j - u_{j-1})
    double grad_max = 0.0;         ///< max_j (|grad u_j|^2 + int b u_j^2)
    double h2_sum = 0.0;           ///< tau sum_j (|Lap_h u_j|^2 + int b u_j^2)
    std::vector<double> increment_sums;  ///< tau^(1-q) sum int |u_{j+1} - u_j|^q per q
    double lyapunov = 0.0;         ///< V_i
    double sup_u = 0.0;            ///< max_j sup |u_j|
    double sup_bound = 0.0;        ///< Ubar
    double balance_defect = 0.0;   ///< step identity tested with u_i
    double energy_slack = 0.0;     ///< (1/tau) int ((G_i - G_{i-1}) u_i - (E_i - E_{i-1})) >= 0
};

/// Default exponents {1, 1 + 1/N} for the increment sums; they stay bounded for q below p_N = 1 + 2/N.
std::vector<double> default_q_list(int dim);
double critical_exponent(int dim);

/// Monitors for steps 1..n from stored fields. Increments include u_0 - u_{-1}
/// when the trajectory carries a backward step.
std::vector<MonitorRecord> compute_monitors(const Grid& grid, const RobinOperator& op,
                                            const Trajectory& trajectory,
                                            const std::vector<double>& q_list, double Ubar);

struct RunOptions {
    SemilinearOptions solver{};
    CompatibilityOptions compatibility{};
    bool backward_step = true;
    bool require_compatible = true;
    double margin = 0.05;
    std::vector<double> q_list;  ///< empty selects default_q_list
};

struct RunResult {
    double tau = 0.0;
    double tau0 = 0.0;
    double rho_star = 0.0;
    CompatibilityReport compatibility;
    SupersolutionBound bound;
    std::optional<BackwardStep> backward;
    Trajectory trajectory;
    std::vector<double> q_list;
    std::vector<MonitorRecord> monitors;
    HysteresisField final_memory;
    long newton_iterations = 0;
    long fallback_steps = 0;
    double max_residual = 0.0;
};

/// Audit, optional backward step, time loop and monitors. Throws
/// CompatibilityError when the audit fails and require_compatible is set, and
/// SolverFailure on solver breakdown or non-finite fields.
RunResult run(const Problem& problem, const RunOptions& options = {});

}  // namespace hysterelax
