#include "hysterelax/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "hysterelax/error.hpp"
#include "hysterelax/preisach.hpp"

namespace hysterelax {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

Field nodewise(std::size_t n, int threads, const std::function<double(std::size_t)>& f) {
    Field out(static_cast<Eigen::Index>(n));
    parallel_for(n, threads, [&](std::size_t k) { out[static_cast<Eigen::Index>(k)] = f(k); });
    return out;
}

double sup_abs(const Field& f) { return f.size() == 0 ? 0.0 : f.lpNorm<Eigen::Infinity>(); }

int sign_of(double x) { return x > 0.0 ? 1 : (x < 0.0 ? -1 : 0); }

// Outward normal derivative at a boundary node from one-sided differences, one
// value per side the node lies on.
void normal_derivatives(const Grid& grid, const Field& u, std::size_t node, std::vector<double>& out) {
    out.clear();
    const int i = static_cast<int>(node % grid.nx());
    const int j = static_cast<int>(node / grid.nx());
    auto side = [&](int count, int pos, double h, auto at) {
        if (pos != 0 && pos != count - 1) return;
        const int inward = pos == 0 ? 1 : -1;
        double du;
        if (count >= 3) {
            du = (-3.0 * at(pos) + 4.0 * at(pos + inward) - at(pos + 2 * inward)) / (2.0 * h);
        } else {
            du = (at(pos + inward) - at(pos)) / h;
        }
        out.push_back(-du);  // derivative along the inward direction, negated
    };
    side(grid.nx(), i, grid.hx(), [&](int ii) { return u[static_cast<Eigen::Index>(grid.index(ii, j))]; });
    if (grid.dim() == 2) {
        side(grid.ny(), j, grid.hy(), [&](int jj) { return u[static_cast<Eigen::Index>(grid.index(i, jj))]; });
    }
}

}  // namespace

Field HysteresisField::inputs() const {
    return nodewise(size(), 1, [&](std::size_t k) { return curves[k].input(); });
}

Field HysteresisField::outputs(const QuadratureSpec& quad, int threads) const {
    return nodewise(size(), threads, [&](std::size_t k) { return output(*density, curves[k], quad); });
}

Field HysteresisField::energies(const QuadratureSpec& quad, int threads) const {
    return nodewise(size(), threads, [&](std::size_t k) { return energy(*density, curves[k], quad); });
}

double compute_tau0(const DensityModel& d, double L, double Ubar) {
    if (!(L > 0.0) || !std::isfinite(L)) throw InvalidArgument("compute_tau0: L must be positive");
    return d.rho0(3.0 * Ubar) / (2.0 * L * L);
}

std::size_t CompatibilityReport::active_nodes() const {
    std::size_t n = 0;
    for (Eigen::Index k = 0; k < sign.size(); ++k) n += sign[k] != 0.0;
    return n;
}

CompatibilityReport check_compatibility(const Grid& grid, const RobinOperator& op, const Field& u0,
                                        const HysteresisField& memory, const Field& h0,
                                        const Field& ustar0, double L,
                                        const CompatibilityOptions& options) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (u0.size() != n || h0.size() != n || ustar0.size() != n || memory.size() != grid.size()) {
        throw InvalidArgument("check_compatibility: field sizes do not match the grid");
    }
    if (!(L > 0.0)) throw InvalidArgument("check_compatibility: L must be positive");

    CompatibilityReport rep;
    rep.u0 = u0;
    rep.T = discrete_laplacian(op, u0, ustar0) + h0;
    rep.r_min = rep.T.cwiseAbs().cwiseSqrt() / L;
    rep.r0 = Field::Zero(n);
    rep.sign = Field::Zero(n);

    const double hmin = grid.dim() == 2 ? std::min(grid.hx(), grid.hy()) : grid.hx();
    const double zero = options.zero_tol * (1.0 + sup_abs(h0) + sup_abs(u0) / (hmin * hmin));
    for (Eigen::Index k = 0; k < n; ++k) {
        const MemoryCurve& lam = memory.curves[static_cast<std::size_t>(k)];
        const double mismatch = std::abs(lam.input() - u0[k]);
        if (mismatch > options.value_tol * (1.0 + std::abs(u0[k]))) {
            rep.violations.push_back({static_cast<std::size_t>(k), "initial_value", lam.input(), u0[k]});
        }
        if (std::abs(rep.T[k]) <= zero) {
            rep.r_min[k] = 0.0;
            continue;
        }
        const int s = sign_of(rep.T[k]);
        rep.sign[k] = s;
        rep.r0[k] = lam.straight_depth(s);
        // the curve stores exact corners, so the depth condition is checked without slack
        if (rep.r0[k] < rep.r_min[k]) {
            rep.violations.push_back({static_cast<std::size_t>(k), "memory_depth", rep.r0[k], rep.r_min[k]});
        }
        const double needed = rep.r0[k] > 0.0 ? std::sqrt(std::abs(rep.T[k])) / rep.r0[k]
                                              : std::numeric_limits<double>::infinity();
        rep.minimal_L = std::max(rep.minimal_L, needed);
    }

    const double scale = 1.0 + sup_abs(u0) + sup_abs(ustar0);
    std::vector<double> dn;
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto node = static_cast<std::size_t>(k);
        if (!grid.on_boundary(node)) continue;
        normal_derivatives(grid, u0, node, dn);
        double worst = 0.0;
        for (double d : dn) worst = std::max(worst, std::abs(d + grid.robin()[node] * (u0[k] - ustar0[k])));
        rep.robin_residual = std::max(rep.robin_residual, worst);
        if (worst > options.robin_tol * scale) {
            rep.violations.push_back({node, "robin_boundary", worst, options.robin_tol * scale});
        }
    }
    return rep;
}

CompatibilityReport audit_initial_data(const Problem& p, const CompatibilityOptions& options) {
    const Grid& g = p.grid;
    const Field h0 = to_field(g.sample([&](double x, double y) { return p.h(x, y, 0.0); }));
    const Field s0 = to_field(g.sample([&](double x, double y) { return p.ustar(x, y, 0.0); }));
    return check_compatibility(g, assemble(g), p.u0, p.memory, h0, s0, p.L, options);
}

double strip_integral(const DensityModel& d, const MemoryCurve& lambda, double r0, double a, int sign,
                      const QuadratureSpec& quad) {
    const MemoryCurve prev = backward_deform(lambda, r0, a, sign);
    return sign > 0 ? output_difference(d, lambda, prev, r0, quad)
                    : output_difference(d, prev, lambda, r0, quad);
}

BackwardStep backward_step(const CompatibilityReport& report, const HysteresisField& memory,
                           double tau, double L, double Ubar, double memory_support,
                           const QuadratureSpec& quad, int threads) {
    if (!report.clean()) throw CompatibilityError("backward step needs a clean compatibility report");
    if (!(tau > 0.0)) throw InvalidArgument("backward step: tau must be positive");
    const DensityModel& d = *memory.density;
    const double rho_star = d.rho0(3.0 * Ubar);
    const std::size_t n = memory.size();

    BackwardStep out;
    out.u_minus1 = report.u0;
    out.memory_minus1 = memory;
    out.a = Field::Zero(static_cast<Eigen::Index>(n));
    out.rate_bound = rho_star > 0.0 ? 2.0 * L * L * memory_support / rho_star
                                    : std::numeric_limits<double>::infinity();
    if (report.active_nodes() > 0) {
        const double tau0 = compute_tau0(d, L, Ubar);
        if (!(tau < tau0)) {
            throw CompatibilityError(
                fmt::format("time step {:.17g} is not below tau0 = {:.17g}", tau, tau0));
        }
    }

    std::vector<double> residual(n, 0.0);
    std::vector<char> exact(n, 1);
    parallel_for(n, threads, [&](std::size_t k) {
        const auto e = static_cast<Eigen::Index>(k);
        const int s = static_cast<int>(report.sign[e]);
        if (s == 0) return;
        const MemoryCurve& lam = memory.curves[k];
        const double r0 = report.r0[e];
        const double target = tau * std::abs(report.T[e]);
        auto B = [&](double a) { return strip_integral(d, lam, r0, a, s, quad); };
        double lo = 0.0;
        double hi = 0.5 * r0;
        if (B(hi) < target) {
            throw SolverFailure(fmt::format("backward step: B(r0/2) < tau |T| at node {}", k));
        }
        for (int it = 0; it < 200 && hi - lo > 2.0 * kEps * r0; ++it) {
            const double mid = 0.5 * (lo + hi);
            (B(mid) < target ? lo : hi) = mid;
        }
        const double a = 0.5 * (lo + hi);
        out.a[e] = a;
        residual[k] = std::abs(B(a) - target);
        MemoryCurve prev = backward_deform(lam, r0, a, s);
        exact[k] = play_update(prev, report.u0[e]).first == lam;
        out.u_minus1[e] = prev.input();
        out.memory_minus1.curves[k] = std::move(prev);
    });

    out.G_minus1 = out.memory_minus1.outputs(quad, threads);
    for (std::size_t k = 0; k < n; ++k) {
        out.max_strip_residual = std::max(out.max_strip_residual, residual[k]);
        out.round_trip_exact = out.round_trip_exact && exact[k];
    }
    out.max_rate = sup_abs(report.u0 - out.u_minus1) / tau;
    return out;
}

SupersolutionBound supersolution_bound(const Grid& grid, const RobinOperator& op, double sup_h,
                                       double sup_ustar, double memory_support, double margin) {
    if (!(margin > 0.0)) throw InvalidArgument("supersolution margin must be positive");
    SupersolutionBound out;
    const auto n = static_cast<Eigen::Index>(grid.size());
    out.htilde = (1.0 + margin) * sup_h;
    out.v = solve_linear_robin(grid, op, Field::Constant(n, out.htilde), Field::Zero(n));
    out.Ustar = std::max(sup_ustar, memory_support - out.v.minCoeff()) + margin;
    out.Ubar = (out.v.array() + out.Ustar).maxCoeff();
    return out;
}

double Trajectory::linear(std::size_t node, double t) const {
    const auto k = static_cast<Eigen::Index>(node);
    const std::size_t n = steps();
    if (n == 0 || t <= 0.0) return u.front()[k];
    if (t >= times.back()) return u.back()[k];
    const auto i = std::min<std::size_t>(n, static_cast<std::size_t>(t / tau) + 1);
    const double theta = (t - times[i - 1]) / tau;
    return u[i - 1][k] + theta * (u[i][k] - u[i - 1][k]);
}

double Trajectory::constant(std::size_t node, double t) const {
    const auto k = static_cast<Eigen::Index>(node);
    const std::size_t n = steps();
    if (n == 0 || t >= times.back()) return u.back()[k];
    if (t <= 0.0) return u.front()[k];
    const auto i = std::min<std::size_t>(n, static_cast<std::size_t>(t / tau) + 1);
    return u[i - 1][k];
}

double Trajectory::output_linear(std::size_t node, double t) const {
    const auto k = static_cast<Eigen::Index>(node);
    const std::size_t n = steps();
    if (n == 0 || t <= 0.0) return G.front()[k];
    if (t >= times.back()) return G.back()[k];
    const auto i = std::min<std::size_t>(n, static_cast<std::size_t>(t / tau) + 1);
    const double theta = (t - times[i - 1]) / tau;
    return G[i - 1][k] + theta * (G[i][k] - G[i - 1][k]);
}

double critical_exponent(int dim) { return 1.0 + 2.0 / dim; }

std::vector<double> default_q_list(int dim) { return {1.0, 1.0 + 1.0 / dim}; }

std::vector<MonitorRecord> compute_monitors(const Grid& grid, const RobinOperator& op,
                                            const Trajectory& traj, const std::vector<double>& q_list,
                                            double Ubar) {
    if (traj.u.empty() || traj.G.size() != traj.u.size() || traj.E.size() != traj.u.size() ||
        traj.h.size() != traj.u.size() || traj.ustar.size() != traj.u.size() ||
        traj.u.front().size() != static_cast<Eigen::Index>(grid.size())) {
        throw InvalidArgument("compute_monitors: trajectory does not match the grid");
    }
    const double tau = traj.tau;
    const Field& w = op.weights;
    const Field& sb = op.boundary_load;
    auto robin_energy = [&](const Field& u) { return op.bilinear(u, u); };
    auto lyapunov = [&](std::size_t i) {
        const Field& u = traj.u[i];
        return 0.5 * robin_energy(u) - w.cwiseProduct(traj.h[i]).dot(u) - sb.cwiseProduct(traj.ustar[i]).dot(u);
    };
    auto increment = [&](const Field& du, double q) {
        return std::pow(tau, 1.0 - q) * w.dot(du.cwiseAbs().array().pow(q).matrix());
    };

    std::vector<MonitorRecord> out;
    MonitorRecord acc;
    acc.increment_sums.assign(q_list.size(), 0.0);
    acc.sup_u = sup_abs(traj.u.front());
    acc.sup_bound = Ubar;
    if (traj.u_minus1) {
        const Field du = traj.u.front() - *traj.u_minus1;
        for (std::size_t m = 0; m < q_list.size(); ++m) acc.increment_sums[m] += increment(du, q_list[m]);
    }
    for (std::size_t i = 1; i < traj.u.size(); ++i) {
        const Field& u = traj.u[i];
        const Field du = u - traj.u[i - 1];
        const Field dG = traj.G[i] - traj.G[i - 1];
        const Field dE = traj.E[i] - traj.E[i - 1];
        const double grad = robin_energy(u);
        const Field lap = discrete_laplacian(op, u, traj.ustar[i]);
        const double boundary = sb.dot(u.cwiseAbs2());

        MonitorRecord rec = acc;
        rec.step = i;
        rec.time = traj.times[i];
        rec.energy_sum += tau * grad;
        rec.dissipation_sum += w.cwiseProduct(dG).dot(du) / tau;
        rec.grad_max = std::max(rec.grad_max, grad);
        rec.h2_sum += tau * (w.dot(lap.cwiseAbs2()) + boundary);
        for (std::size_t m = 0; m < q_list.size(); ++m) rec.increment_sums[m] += increment(du, q_list[m]);
        rec.lyapunov = lyapunov(i);
        rec.sup_u = std::max(rec.sup_u, sup_abs(u));
        const Field F = w.cwiseProduct(dG) / tau + op.matrix * u - sb.cwiseProduct(traj.ustar[i]) -
                        w.cwiseProduct(traj.h[i]);
        rec.balance_defect = u.dot(F);
        rec.energy_slack = (w.cwiseProduct(dG).dot(u) - w.dot(dE)) / tau;

        const bool finite = std::isfinite(rec.energy_sum) && std::isfinite(rec.dissipation_sum) &&
                            std::isfinite(rec.h2_sum) && std::isfinite(rec.lyapunov) &&
                            std::isfinite(rec.balance_defect) && std::isfinite(rec.energy_slack) &&
                            std::all_of(rec.increment_sums.begin(), rec.increment_sums.end(),
                                        [](double v) { return std::isfinite(v); });
        if (!finite) throw SolverFailure(fmt::format("non-finite monitor at step {}", i));
        out.push_back(rec);
        acc = std::move(rec);
    }
    return out;
}

RunResult run(const Problem& p, const RunOptions& options) {
    const Grid& grid = p.grid;
    const std::size_t n = grid.size();
    if (p.steps < 1) throw InvalidArgument("run: at least one time step is required");
    if (!(p.final_time > 0.0) || !std::isfinite(p.final_time)) {
        throw InvalidArgument("run: final time must be positive");
    }
    if (!p.memory.density) throw InvalidArgument("run: memory has no density");
    if (p.memory.size() != n || static_cast<std::size_t>(p.u0.size()) != n) {
        throw InvalidArgument("run: initial data do not match the grid");
    }
    if (!p.h || !p.ustar) throw InvalidArgument("run: sources h and u* must be set");
    for (const MemoryCurve& c : p.memory.curves) {
        if (c.extent() > p.memory_support) {
            throw InvalidArgument("run: an initial memory curve extends beyond the memory support");
        }
    }
    const DensityModel& d = *p.memory.density;
    const int threads = std::max(options.solver.threads, 1);
    const QuadratureSpec& quad = options.solver.quad;

    RunResult res;
    res.q_list = options.q_list.empty() ? default_q_list(grid.dim()) : options.q_list;
    const RobinOperator op = assemble(grid);
    const double tau = p.final_time / p.steps;
    res.tau = tau;

    Trajectory& traj = res.trajectory;
    traj.tau = tau;
    double sup_h = 0.0;
    double sup_ustar = 0.0;
    for (int i = 0; i <= p.steps; ++i) {
        // the last time is pinned to T so that n tau = T holds exactly
        const double t = i == p.steps ? p.final_time : i * tau;
        traj.times.push_back(t);
        traj.h.push_back(to_field(grid.sample([&](double x, double y) { return p.h(x, y, t); })));
        traj.ustar.push_back(to_field(grid.sample([&](double x, double y) { return p.ustar(x, y, t); })));
        if (!traj.h.back().allFinite() || !traj.ustar.back().allFinite()) {
            throw InvalidArgument(fmt::format("run: source data are not finite at t = {:.17g}", t));
        }
        sup_h = std::max(sup_h, sup_abs(traj.h.back()));
        for (std::size_t k = 0; k < n; ++k) {
            if (grid.on_boundary(k)) {
                sup_ustar = std::max(sup_ustar, std::abs(traj.ustar.back()[static_cast<Eigen::Index>(k)]));
            }
        }
    }

    res.compatibility = check_compatibility(grid, op, p.u0, p.memory, traj.h.front(), traj.ustar.front(),
                                            p.L, options.compatibility);
    if (options.require_compatible && !res.compatibility.clean()) {
        throw CompatibilityError(fmt::format("initial memory is incompatible at {} node(s)",
                                             res.compatibility.violations.size()));
    }
    res.bound = supersolution_bound(grid, op, sup_h, sup_ustar, p.memory_support, options.margin);
    res.rho_star = d.rho0(3.0 * res.bound.Ubar);
    res.tau0 = compute_tau0(d, p.L, res.bound.Ubar);
    if (options.backward_step) {
        res.backward = backward_step(res.compatibility, p.memory, tau, p.L, res.bound.Ubar,
                                     p.memory_support, quad, threads);
        traj.u_minus1 = res.backward->u_minus1;
    }

    SemilinearOptions solver = options.solver;
    solver.threads = threads;
    if (!(solver.lipschitz > 0.0)) {
        solver.lipschitz = monotonicity_constant(d, p.memory_support, res.bound.Ubar);
    }

    HysteresisField memory = p.memory;
    traj.u.push_back(p.u0);
    traj.G.push_back(memory.outputs(quad, threads));
    traj.E.push_back(memory.energies(quad, threads));
    for (int i = 1; i <= p.steps; ++i) {
        const SemilinearResult step = solve_semilinear_step(grid, op, memory.curves, d, tau, traj.h[i],
                                                            traj.ustar[i], traj.u.back(), solver);
        res.newton_iterations += step.iterations;
        res.fallback_steps += step.fallback_steps;
        res.max_residual = std::max(res.max_residual, step.residual);
        parallel_for(n, threads, [&](std::size_t k) {
            memory.curves[k] = play_update(memory.curves[k], step.u[static_cast<Eigen::Index>(k)]).first;
        });
        traj.u.push_back(step.u);
        traj.G.push_back(memory.outputs(quad, threads));
        traj.E.push_back(memory.energies(quad, threads));
        if (!traj.u.back().allFinite() || !traj.G.back().allFinite() || !traj.E.back().allFinite()) {
            throw SolverFailure(fmt::format("non-finite field at step {}", i));
        }
    }
    res.final_memory = std::move(memory);
    res.monitors = compute_monitors(grid, op, traj, res.q_list, res.bound.Ubar);
    return res;
}

}  // namespace hysterelax
