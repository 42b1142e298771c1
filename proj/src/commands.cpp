#include "hysterelax/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <fmt/format.h>

#include "hysterelax/convexifier.hpp"
#include "hysterelax/error.hpp"
#include "hysterelax/preisach.hpp"

namespace hysterelax {

namespace {

template <class F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const CompatibilityError& e) {
        err << "error: " << e.what() << "\n";
        return exit_compatibility;
    } catch (const SolverFailure& e) {
        err << "error: " << e.what() << "\n";
        return exit_solver;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_input;
    }
}

std::filesystem::path output_dir(const CommandOptions& o, const RunConfig& c) {
    return o.out_dir.empty() ? std::filesystem::path(c.output.dir) : o.out_dir;
}

int resolve_threads(const CommandOptions& o, const RunConfig& c) {
    return thread_count(o.threads > 0 ? o.threads : c.solver.threads);
}

std::string q_label(double q) { return fmt::format("{:g}", q); }

Json node_position(const Grid& g, std::size_t k) {
    Json j = Json::array({g.x(k)});
    if (g.dim() == 2) j.push_back(g.y(k));
    return j;
}

Json compatibility_json(const CompatibilityReport& r, const Grid& g) {
    Json j;
    j["clean"] = r.clean();
    j["active_nodes"] = r.active_nodes();
    j["max_abs_T"] = r.T.size() ? r.T.cwiseAbs().maxCoeff() : 0.0;
    j["minimal_L"] = r.minimal_L;
    j["robin_residual"] = r.robin_residual;
    Json list = Json::array();
    for (const Violation& v : r.violations) {
        list.push_back(Json{{"node", v.node},
                            {"position", node_position(g, v.node)},
                            {"condition", v.condition},
                            {"value", v.value},
                            {"required", v.required}});
    }
    j["violations"] = std::move(list);
    return j;
}

void report_violations(const CompatibilityReport& r, const Grid& g, std::ostream& err) {
    err << fmt::format("initial memory is incompatible at {} place(s):\n", r.violations.size());
    for (const Violation& v : r.violations) {
        std::string where = fmt::format("x={:.6g}", g.x(v.node));
        if (g.dim() == 2) where += fmt::format(" y={:.6g}", g.y(v.node));
        err << fmt::format("  node {} ({}): {} found {:.17g}, required {:.17g}\n", v.node, where, v.condition,
                           v.value, v.required);
    }
}

Json convexifier_json(const DensityModel& d, double U, const std::vector<MemoryCurve>& states,
                      const QuadratureSpec& quad) {
    Json j;
    j["range"] = U;
    const ConvexityProfile profile = detect_profile(d, U);
    const double residual = profile_residual(d, profile, U);
    const ConvexityCheckOptions check{201, 1e-3, quad};
    j["density"] = std::string(to_string(d.kind()));
    j["kappa"] = profile.kappa;
    j["profile_residual"] = residual;
    j["accepted"] = residual <= check.residual_tol;
    if (residual > check.residual_tol) return j;

    const Convexifier cx = Convexifier::build(profile, U);
    double ode = 0.0;
    for (int k = 0; k < 200; ++k) ode = std::max(ode, cx.ode_residual(-U + 2.0 * U * (k + 0.5) / 200.0));
    j["C"] = cx.C();
    j["g_lower"] = cx.g_lower();
    j["g_upper"] = cx.g_upper();
    j["g_curvature"] = cx.g_curvature();
    j["ode_residual"] = ode;
    const ConvexityReport rep = verify_branch_convexity(d, cx, states, check);
    j["branches"] = rep.branches;
    j["min_second_difference"] = rep.min_second_difference;
    j["beta_estimate"] = rep.beta_estimate;
    return j;
}

Json monitors_json(const RunResult& r) {
    Json j;
    auto column = [&](auto get) {
        Json a = Json::array();
        for (const MonitorRecord& m : r.monitors) a.push_back(get(m));
        return a;
    };
    j["step"] = column([](const MonitorRecord& m) { return m.step; });
    j["time"] = column([](const MonitorRecord& m) { return m.time; });
    j["energy_sum"] = column([](const MonitorRecord& m) { return m.energy_sum; });
    j["dissipation_sum"] = column([](const MonitorRecord& m) { return m.dissipation_sum; });
    j["grad_max"] = column([](const MonitorRecord& m) { return m.grad_max; });
    j["h2_sum"] = column([](const MonitorRecord& m) { return m.h2_sum; });
    Json inc;
    for (std::size_t q = 0; q < r.q_list.size(); ++q) {
        inc[q_label(r.q_list[q])] = column([q](const MonitorRecord& m) { return m.increment_sums[q]; });
    }
    j["increment_sums"] = std::move(inc);
    j["lyapunov"] = column([](const MonitorRecord& m) { return m.lyapunov; });
    j["sup_u"] = column([](const MonitorRecord& m) { return m.sup_u; });
    j["balance_defect"] = column([](const MonitorRecord& m) { return m.balance_defect; });
    j["energy_slack"] = column([](const MonitorRecord& m) { return m.energy_slack; });
    return j;
}

Json summary_json(const RunResult& r, const Problem& p) {
    Json j;
    j["dimension"] = p.grid.dim();
    j["nodes"] = p.grid.size();
    j["steps"] = p.steps;
    j["final_time"] = p.final_time;
    j["tau"] = r.tau;
    j["tau0"] = r.tau0;
    j["tau_below_tau0"] = r.tau < r.tau0;
    j["rho_star"] = r.rho_star;
    j["L"] = p.L;
    j["Ubar"] = r.bound.Ubar;
    j["Ustar"] = r.bound.Ustar;
    j["critical_exponent"] = critical_exponent(p.grid.dim());
    j["q"] = r.q_list;
    j["compatibility"] = compatibility_json(r.compatibility, p.grid);
    if (r.backward) {
        const BackwardStep& b = *r.backward;
        j["backward_step"] = Json{{"max_a", b.a.size() ? b.a.maxCoeff() : 0.0},
                                  {"max_rate", b.max_rate},
                                  {"rate_bound", b.rate_bound},
                                  {"round_trip_exact", b.round_trip_exact},
                                  {"max_strip_residual", b.max_strip_residual}};
    } else {
        j["backward_step"] = nullptr;
    }
    j["solver"] = Json{{"newton_iterations", r.newton_iterations},
                       {"fallback_steps", r.fallback_steps},
                       {"max_residual", r.max_residual}};
    const double sup = r.monitors.empty() ? 0.0 : r.monitors.back().sup_u;
    j["max_principle"] = Json{{"sup_u", sup}, {"Ubar", r.bound.Ubar}, {"holds", sup <= r.bound.Ubar}};
    j["monitors"] = monitors_json(r);
    return j;
}

std::string monitors_csv(const RunResult& r) {
    std::ostringstream os;
    os << "step,time,energy_sum,dissipation_sum,grad_max,h2_sum";
    for (double q : r.q_list) os << ",increment_q" << q_label(q);
    os << ",lyapunov,sup_u,sup_bound,balance_defect,energy_slack\n";
    for (const MonitorRecord& m : r.monitors) {
        os << m.step << "," << format_number(m.time) << "," << format_number(m.energy_sum) << ","
           << format_number(m.dissipation_sum) << "," << format_number(m.grad_max) << ","
           << format_number(m.h2_sum);
        for (double v : m.increment_sums) os << "," << format_number(v);
        os << "," << format_number(m.lyapunov) << "," << format_number(m.sup_u) << ","
           << format_number(m.sup_bound) << "," << format_number(m.balance_defect) << ","
           << format_number(m.energy_slack) << "\n";
    }
    return os.str();
}

std::string probes_csv(const Trajectory& tr, const std::vector<std::size_t>& probes) {
    std::ostringstream os;
    os << "t";
    for (std::size_t p : probes) os << ",u_linear_" << p << ",u_constant_" << p << ",G_linear_" << p;
    os << "\n";
    auto row = [&](double t) {
        os << format_number(t);
        for (std::size_t p : probes) {
            os << "," << format_number(tr.linear(p, t)) << "," << format_number(tr.constant(p, t)) << ","
               << format_number(tr.output_linear(p, t));
        }
        os << "\n";
    };
    for (std::size_t i = 0; i < tr.steps(); ++i) {
        row(tr.times[i]);
        row(0.5 * (tr.times[i] + tr.times[i + 1]));
    }
    row(tr.times.back());
    return os.str();
}

std::string snapshots_csv(const Trajectory& tr, const Grid& g, int stride) {
    std::ostringstream os;
    os << (g.dim() == 2 ? "step,t,x,y,u,G\n" : "step,t,x,u,G\n");
    for (std::size_t i = 0; i < tr.u.size(); ++i) {
        if (i % static_cast<std::size_t>(stride) != 0 && i + 1 != tr.u.size()) continue;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const auto e = static_cast<Eigen::Index>(k);
            os << i << "," << format_number(tr.times[i]) << "," << format_number(g.x(k));
            if (g.dim() == 2) os << "," << format_number(g.y(k));
            os << "," << format_number(tr.u[i][e]) << "," << format_number(tr.G[i][e]) << "\n";
        }
    }
    return os.str();
}

std::string curve_csv(const MemoryCurve& c) {
    std::ostringstream os;
    write_curve_csv(os, c);
    return os.str();
}

double ratio(double a, double b) {
    const double hi = std::max(std::abs(a), std::abs(b));
    const double lo = std::min(std::abs(a), std::abs(b));
    if (hi <= 1e-300) return 1.0;
    return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

double signed_area(const std::vector<double>& u, const std::vector<double>& G, std::size_t begin,
                   std::size_t end) {
    double twice = 0.0;
    for (std::size_t k = begin; k < end; ++k) twice += u[k] * G[k + 1] - u[k + 1] * G[k];
    twice += u[end] * G[begin] - u[begin] * G[end];
    return 0.5 * twice;
}

LoopTrace trace_loops(const DensityModel& d, const std::vector<double>& sequence, int samples,
                      const QuadratureSpec& quad) {
    if (samples < 1) throw InvalidArgument("trace_loops: samples must be positive");
    LoopTrace tr;
    MemoryCurve curve;
    tr.u.push_back(0.0);
    tr.G.push_back(output(d, curve, quad));
    std::vector<std::size_t> turns{0};
    std::vector<MemoryCurve> states{curve};
    double current = 0.0;
    for (double target : sequence) {
        if (!std::isfinite(target)) throw InvalidArgument("trace_loops: inputs must be finite");
        if (target == current) continue;
        for (int k = 1; k <= samples; ++k) {
            const double u = k == samples ? target : current + (target - current) * k / samples;
            curve = play_update(curve, u).first;
            tr.u.push_back(u);
            tr.G.push_back(output(d, curve, quad));
        }
        current = target;
        turns.push_back(tr.u.size() - 1);
        states.push_back(curve);
    }

    // A loop closes when a turning point restores an earlier memory state exactly.
    for (std::size_t j = 2; j < turns.size(); ++j) {
        for (std::size_t i = j - 1; i-- > 0;) {
            if (tr.u[turns[i]] != tr.u[turns[j]] || !(states[i] == states[j])) continue;
            tr.loops.push_back({turns[i], turns[j], signed_area(tr.u, tr.G, turns[i], turns[j])});
            break;
        }
    }
    return tr;
}

Json assembly_self_test(const Grid& grid) {
    const RobinOperator op = assemble(grid);
    const Eigen::SparseMatrix<double>& A = op.matrix;
    const auto n = static_cast<Eigen::Index>(grid.size());
    double amax = 0.0;
    for (int k = 0; k < A.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) amax = std::max(amax, std::abs(it.value()));
    }
    const Eigen::SparseMatrix<double> At = A.transpose();
    double sym = 0.0;
    for (int k = 0; k < A.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
            sym = std::max(sym, std::abs(it.value() - At.coeff(it.row(), it.col())));
        }
    }
    const Field rows = A * Field::Ones(n) - op.boundary_load;
    const Field lin = to_field(grid.sample([](double x, double y) { return x + y; }));
    const Field quad = to_field(grid.sample([](double x, double y) { return x * x + y * y; }));
    const Field Alin = A * lin;
    const Field Aquad = A * quad;
    double lin_defect = 0.0;
    double quad_defect = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (grid.on_boundary(static_cast<std::size_t>(k))) continue;
        lin_defect = std::max(lin_defect, std::abs(Alin[k] / op.weights[k]));
        quad_defect = std::max(quad_defect, std::abs(-Aquad[k] / op.weights[k] - 2.0 * grid.dim()));
    }
    bool factorized = false;
    if (grid.robin_mass() > 0.0) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
        factorized = ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all();
    }
    const double h = grid.dim() == 2 ? std::min(grid.hx(), grid.hy()) : grid.hx();
    const double extent = std::max(grid.length_x(), grid.length_y());
    const double fd_tol = 1e-10 * (1.0 + extent * extent) / (h * h);
    const bool passed = sym <= 1e-14 * amax && rows.lpNorm<Eigen::Infinity>() <= 1e-12 * amax &&
                        lin_defect <= fd_tol && quad_defect <= fd_tol && factorized;
    return Json{{"nodes", grid.size()},
                {"symmetry_defect", sym},
                {"row_sum_defect", rows.lpNorm<Eigen::Infinity>()},
                {"linear_defect", lin_defect},
                {"quadratic_defect", quad_defect},
                {"positive_definite", factorized},
                {"passed", passed}};
}

std::vector<std::pair<std::string, double>> final_monitors(const RunResult& r) {
    std::vector<std::pair<std::string, double>> out;
    if (r.monitors.empty()) return out;
    const MonitorRecord& m = r.monitors.back();
    out.emplace_back("energy_sum", m.energy_sum);
    out.emplace_back("dissipation_bound", m.dissipation_sum + m.grad_max);
    out.emplace_back("h2_sum", m.h2_sum);
    for (std::size_t q = 0; q < r.q_list.size(); ++q) {
        out.emplace_back("increment_q" + q_label(r.q_list[q]), m.increment_sums[q]);
    }
    return out;
}

RefinementStudy refinement_study(const Problem& base, const RunOptions& options, int levels,
                                 const std::vector<std::size_t>& probes) {
    if (levels < 1) throw InvalidArgument("refinement needs at least one level");
    for (std::size_t p : probes) {
        if (p >= base.grid.size()) throw InvalidArgument("probe node outside the grid");
    }
    RefinementStudy s;
    s.probes = probes;
    for (int k = 0; k < levels; ++k) {
        Problem p = base;
        p.steps = base.steps << k;
        s.runs.push_back(run(p, options));
    }
    const std::vector<double>& qs = s.runs.front().q_list;
    for (int k = 0; k + 1 < levels; ++k) {
        const Trajectory& coarse = s.runs[k].trajectory;
        const Trajectory& fine = s.runs[k + 1].trajectory;
        double worst = 0.0;
        std::vector<double> lq(qs.size(), 0.0);
        for (std::size_t p : probes) {
            const auto e = static_cast<Eigen::Index>(p);
            std::vector<double> sums(qs.size(), 0.0);
            for (std::size_t j = 0; j < coarse.u.size(); ++j) {
                const double diff = std::abs(coarse.u[j][e] - fine.u[2 * j][e]);
                worst = std::max(worst, diff);
                for (std::size_t m = 0; m < qs.size(); ++m) sums[m] += coarse.tau * std::pow(diff, qs[m]);
            }
            for (std::size_t m = 0; m < qs.size(); ++m) lq[m] = std::max(lq[m], std::pow(sums[m], 1.0 / qs[m]));
        }
        s.max_differences.push_back(worst);
        s.lq_differences.push_back(std::move(lq));
    }
    const auto names = final_monitors(s.runs.front());
    for (std::size_t m = 0; m < names.size(); ++m) {
        double worst = 1.0;
        for (const RunResult& a : s.runs) {
            for (const RunResult& b : s.runs) worst = std::max(worst, ratio(final_monitors(a)[m].second, final_monitors(b)[m].second));
        }
        s.monitor_ratios.emplace_back(names[m].first, worst);
    }
    return s;
}

int cmd_run(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(o.config);
        const std::filesystem::path dir = output_dir(o, cfg);
        const int threads = resolve_threads(o, cfg);
        const Problem problem = build_problem(cfg);
        write_file(dir / "effective-config.toml", to_toml(cfg));
        if (o.check_assembly) {
            const Json test = assembly_self_test(problem.grid);
            write_file(dir / "assembly.json", dump_json(test));
            if (!test["passed"].get<bool>()) {
                err << "error: operator self-test failed\n";
                return static_cast<int>(exit_solver);
            }
        }
        const RunOptions options = build_run_options(cfg, threads);
        const CompatibilityReport audit = audit_initial_data(problem, options.compatibility);
        write_file(dir / "compatibility.json", dump_json(compatibility_json(audit, problem.grid)));
        if (!audit.clean()) {
            report_violations(audit, problem.grid, err);
            return static_cast<int>(exit_compatibility);
        }

        const auto start = std::chrono::steady_clock::now();
        const RunResult r = run(problem, options);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        const std::vector<std::size_t> probes = probe_nodes(cfg, problem.grid);
        write_file(dir / "summary.json", dump_json(summary_json(r, problem)));
        write_file(dir / "monitors.csv", monitors_csv(r));
        write_file(dir / "probes.csv", probes_csv(r.trajectory, probes));
        write_file(dir / "snapshots.csv", snapshots_csv(r.trajectory, problem.grid, cfg.output.stride));
        for (std::size_t p : probes) {
            write_file(dir / fmt::format("memory_{}.csv", p), curve_csv(r.final_memory.curves[p]));
        }
        write_file(dir / "timing.json", dump_json(Json{{"wall_seconds", wall}, {"threads", threads}}));

        const double sup = r.monitors.empty() ? 0.0 : r.monitors.back().sup_u;
        out << fmt::format("steps {}  tau {:.6g}  tau0 {:.6g}  Ubar {:.6g}  sup|u| {:.6g}  newton {}\n", problem.steps,
                           r.tau, r.tau0, r.bound.Ubar, sup, r.newton_iterations);
        out << "wrote " << dir.string() << "\n";
        return static_cast<int>(exit_ok);
    });
}

int cmd_refine(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(o.config);
        const std::filesystem::path dir = output_dir(o, cfg);
        const Problem problem = build_problem(cfg);
        const RunOptions options = build_run_options(cfg, resolve_threads(o, cfg));
        const RefinementStudy s = refinement_study(problem, options, o.levels, probe_nodes(cfg, problem.grid));

        Json levels = Json::array();
        std::ostringstream csv;
        csv << "level,steps,tau";
        for (const auto& [name, value] : final_monitors(s.runs.front())) csv << "," << name;
        csv << ",sup_u,Ubar\n";
        for (std::size_t k = 0; k < s.runs.size(); ++k) {
            const RunResult& r = s.runs[k];
            Json mon;
            csv << k << "," << r.trajectory.steps() << "," << format_number(r.tau);
            for (const auto& [name, value] : final_monitors(r)) {
                mon[name] = value;
                csv << "," << format_number(value);
            }
            const double sup = r.monitors.back().sup_u;
            csv << "," << format_number(sup) << "," << format_number(r.bound.Ubar) << "\n";
            levels.push_back(Json{{"level", k},
                                  {"steps", r.trajectory.steps()},
                                  {"tau", r.tau},
                                  {"tau0", r.tau0},
                                  {"Ubar", r.bound.Ubar},
                                  {"sup_u", sup},
                                  {"monitors", mon}});
        }
        Json diffs = Json::array();
        bool decreasing = true;
        for (std::size_t k = 0; k < s.max_differences.size(); ++k) {
            Json lq;
            for (std::size_t m = 0; m < s.runs.front().q_list.size(); ++m) {
                lq[q_label(s.runs.front().q_list[m])] = s.lq_differences[k][m];
            }
            diffs.push_back(Json{{"coarse", k}, {"fine", k + 1}, {"max", s.max_differences[k]}, {"lq", lq}});
            if (k > 0 && s.max_differences[k] > 0.0 && !(s.max_differences[k] < s.max_differences[k - 1])) {
                decreasing = false;
            }
        }
        Json ratios;
        bool bounded = true;
        for (const auto& [name, value] : s.monitor_ratios) {
            ratios[name] = value;
            bounded = bounded && value < 3.0;
        }
        Json probes = Json::array();
        for (std::size_t p : s.probes) probes.push_back(Json{{"node", p}, {"position", node_position(problem.grid, p)}});
        const Json report{{"probes", probes},
                          {"levels", levels},
                          {"differences", diffs},
                          {"differences_decreasing", decreasing},
                          {"monitor_ratios", ratios},
                          {"monitors_within_factor_3", bounded}};
        write_file(dir / "refine.json", dump_json(report));
        write_file(dir / "refine.csv", csv.str());
        out << csv.str();
        for (std::size_t k = 0; k < s.max_differences.size(); ++k) {
            out << fmt::format("levels {}-{}: max probe difference {:.6g}\n", k, k + 1, s.max_differences[k]);
        }
        return static_cast<int>(exit_ok);
    });
}

int cmd_loops(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(o.config);
        const std::filesystem::path dir = output_dir(o, cfg);
        const DensityModel d = build_density(cfg);
        const QuadratureSpec quad{cfg.solver.quad_order, cfg.solver.max_panel};
        const LoopTrace tr = trace_loops(d, cfg.loops.sequence, cfg.loops.samples, quad);

        std::ostringstream csv;
        csv << "index,u,G\n";
        for (std::size_t k = 0; k < tr.u.size(); ++k) {
            csv << k << "," << format_number(tr.u[k]) << "," << format_number(tr.G[k]) << "\n";
        }
        Json loops = Json::array();
        double min_area = std::numeric_limits<double>::infinity();
        for (const auto& l : tr.loops) {
            loops.push_back(Json{{"begin", l.begin}, {"end", l.end}, {"signed_area", l.signed_area}});
            min_area = std::min(min_area, l.signed_area);
        }
        const Json report{{"points", tr.u.size()},
                          {"loops", loops},
                          {"min_signed_area", tr.loops.empty() ? 0.0 : min_area},
                          {"counterclockwise", tr.loops.empty() || min_area >= 0.0}};
        write_file(dir / "loops.csv", csv.str());
        write_file(dir / "loops.json", dump_json(report));
        out << dump_json(report);
        return static_cast<int>(exit_ok);
    });
}

int cmd_check(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(o.config);
        const Problem problem = build_problem(cfg);
        const RunOptions options = build_run_options(cfg, resolve_threads(o, cfg));
        const CompatibilityReport audit = audit_initial_data(problem, options.compatibility);

        const Grid& g = problem.grid;
        const RobinOperator op = assemble(g);
        double sup_h = 0.0;
        double sup_ustar = 0.0;
        for (int i = 0; i <= problem.steps; ++i) {
            const double t = i == problem.steps ? problem.final_time : i * problem.final_time / problem.steps;
            for (std::size_t k = 0; k < g.size(); ++k) {
                sup_h = std::max(sup_h, std::abs(problem.h(g.x(k), g.y(k), t)));
                if (g.on_boundary(k)) sup_ustar = std::max(sup_ustar, std::abs(problem.ustar(g.x(k), g.y(k), t)));
            }
        }
        const SupersolutionBound bound =
            supersolution_bound(g, op, sup_h, sup_ustar, problem.memory_support, options.margin);
        const DensityModel& d = *problem.memory.density;
        const double tau = problem.final_time / problem.steps;
        const double tau0 = compute_tau0(d, problem.L, bound.Ubar);

        std::vector<MemoryCurve> states{MemoryCurve()};
        for (std::size_t p : probe_nodes(cfg, g)) states.push_back(problem.memory.curves[p]);
        const double U = cfg.convexify_range > 0.0 ? cfg.convexify_range : bound.Ubar;

        Json report;
        report["compatible"] = audit.clean();
        report["compatibility"] = compatibility_json(audit, g);
        report["tau"] = tau;
        report["tau0"] = tau0;
        report["tau_warning"] = !(tau < tau0);
        report["backward_step_needed"] = audit.active_nodes() > 0;
        report["L"] = problem.L;
        report["Ubar"] = bound.Ubar;
        report["Ustar"] = bound.Ustar;
        report["rho_star"] = d.rho0(3.0 * bound.Ubar);
        report["convexifier"] = convexifier_json(d, U, states, options.solver.quad);
        bool assembly_ok = true;
        if (o.check_assembly) {
            report["assembly"] = assembly_self_test(g);
            assembly_ok = report["assembly"]["passed"].get<bool>();
        }
        const std::string text = dump_json(report);
        if (!o.out_dir.empty()) write_file(o.out_dir / "check.json", text);
        out << text;
        return static_cast<int>(assembly_ok ? exit_ok : exit_solver);
    });
}

int cmd_check_convexify(const CommandOptions& o, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const RunConfig cfg = load_config(o.config);
        const DensityModel d = build_density(cfg);
        double U = cfg.convexify_range;
        if (!(U > 0.0)) {
            const Problem problem = build_problem(cfg);
            double sup_h = 0.0;
            double sup_ustar = 0.0;
            const Grid& g = problem.grid;
            for (int i = 0; i <= problem.steps; ++i) {
                const double t = i == problem.steps ? problem.final_time : i * problem.final_time / problem.steps;
                for (std::size_t k = 0; k < g.size(); ++k) {
                    sup_h = std::max(sup_h, std::abs(problem.h(g.x(k), g.y(k), t)));
                    if (g.on_boundary(k)) sup_ustar = std::max(sup_ustar, std::abs(problem.ustar(g.x(k), g.y(k), t)));
                }
            }
            U = supersolution_bound(g, assemble(g), sup_h, sup_ustar, problem.memory_support, cfg.solver.margin).Ubar;
        }
        const QuadratureSpec quad{cfg.solver.quad_order, cfg.solver.max_panel};
        const std::vector<MemoryCurve> states{MemoryCurve(), play_sequence(MemoryCurve(), std::vector<double>{0.5 * U, -0.25 * U})};
        const Json report = convexifier_json(d, U, states, quad);
        const std::string text = dump_json(report);
        if (!o.out_dir.empty()) write_file(o.out_dir / "convexify.json", text);
        out << text;
        if (!report["accepted"].get<bool>()) {
            err << "error: density does not satisfy rho_v = -phi(v) rho within tolerance\n";
            return static_cast<int>(exit_input);
        }
        return static_cast<int>(exit_ok);
    });
}

}  // namespace hysterelax
