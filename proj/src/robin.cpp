#include "hysterelax/robin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/SparseCholesky>

#include "hysterelax/error.hpp"
#include "hysterelax/preisach.hpp"

namespace hysterelax {

Field to_field(const std::vector<double>& values) {
    return Eigen::Map<const Field>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<double> to_vector(const Field& f) { return {f.data(), f.data() + f.size()}; }

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// 1D stiffness entries for n nodes with spacing h.
void stiffness_1d(int n, double h, std::vector<double>& diag, std::vector<double>& off) {
    diag.assign(n, 2.0 / h);
    diag.front() = diag.back() = 1.0 / h;
    off.assign(n - 1, -1.0 / h);
}

std::vector<double> lumped_1d(int n, double h) {
    std::vector<double> w(n, h);
    w.front() = w.back() = 0.5 * h;
    return w;
}

}  // namespace

RobinOperator assemble(const Grid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(5 * grid.size());
    std::vector<double> kxd, kxo, kyd, kyo;
    stiffness_1d(grid.nx(), grid.hx(), kxd, kxo);
    const std::vector<double> wx = lumped_1d(grid.nx(), grid.hx());
    std::vector<double> wy(1, 1.0);
    if (grid.dim() == 2) {
        stiffness_1d(grid.ny(), grid.hy(), kyd, kyo);
        wy = lumped_1d(grid.ny(), grid.hy());
    }
    const auto& s = grid.boundary_weights();
    const auto& b = grid.robin();
    for (int j = 0; j < grid.ny(); ++j) {
        for (int i = 0; i < grid.nx(); ++i) {
            const auto k = static_cast<Eigen::Index>(grid.index(i, j));
            double diag = kxd[i] * wy[j] + s[k] * b[k];
            if (i > 0) trip.emplace_back(k, k - 1, kxo[i - 1] * wy[j]);
            if (i + 1 < grid.nx()) trip.emplace_back(k, k + 1, kxo[i] * wy[j]);
            if (grid.dim() == 2) {
                diag += wx[i] * kyd[j];
                if (j > 0) trip.emplace_back(k, k - grid.nx(), wx[i] * kyo[j - 1]);
                if (j + 1 < grid.ny()) trip.emplace_back(k, k + grid.nx(), wx[i] * kyo[j]);
            }
            trip.emplace_back(k, k, diag);
        }
    }
    RobinOperator op;
    op.matrix.resize(n, n);
    op.matrix.setFromTriplets(trip.begin(), trip.end());
    op.matrix.makeCompressed();
    op.boundary_load.resize(n);
    op.weights.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        op.boundary_load[k] = s[k] * b[k];
        op.weights[k] = grid.weights()[k];
    }
    return op;
}

Field discrete_laplacian(const RobinOperator& op, const Field& u, const Field& ustar) {
    return -(op.matrix * u - op.boundary_load.cwiseProduct(ustar)).cwiseQuotient(op.weights);
}

Field solve_linear_robin(const Grid& grid, const RobinOperator& op, const Field& h, const Field& ustar) {
    if (!(grid.robin_mass() > 0.0)) {
        throw SolverFailure("linear Robin problem is singular: boundary integral of b vanishes");
    }
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(op.matrix);
    if (solver.info() != Eigen::Success) throw SolverFailure("factorization of the Robin operator failed");
    const Field rhs = op.weights.cwiseProduct(h) + op.boundary_load.cwiseProduct(ustar);
    Field v = solver.solve(rhs);
    if (solver.info() != Eigen::Success || !v.allFinite()) throw SolverFailure("linear Robin solve failed");
    return v;
}

double weighted_norm(const Field& weights, const Field& r) {
    return std::sqrt(weights.dot(r.cwiseAbs2()));
}

SemilinearResult solve_semilinear_step(const Grid& grid, const RobinOperator& op,
                                       std::span<const MemoryCurve> memory, const DensityModel& d,
                                       double tau, const Field& h, const Field& ustar,
                                       const Field& guess, const SemilinearOptions& options) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (!(tau > 0.0)) throw InvalidArgument("time step must be positive");
    if (memory.size() != grid.size() || h.size() != n || ustar.size() != n || guess.size() != n) {
        throw InvalidArgument("semilinear step: field sizes do not match the grid");
    }
    const Field& w = op.weights;
    const Field rhs = w.cwiseProduct(h) + op.boundary_load.cwiseProduct(ustar);

    Field incr(n);
    Field slope(n);
    auto evaluate = [&](const Field& u, bool with_slope) {
        parallel_for(grid.size(), options.threads, [&](std::size_t k) {
            const auto e = static_cast<Eigen::Index>(k);
            incr[e] = nemytskii_increment(d, memory[k], u[e], options.quad);
            if (with_slope) slope[e] = nemytskii_derivative(d, memory[k], u[e], options.quad);
        });
    };
    // F(u) and its strong-form norm
    auto residual = [&](const Field& u, Field& F) {
        F = op.matrix * u + w.cwiseProduct(incr) / tau - rhs;
        return weighted_norm(w, F.cwiseQuotient(w));
    };

    SemilinearResult result;
    result.u = guess;
    Field F(n);
    evaluate(result.u, true);
    double norm = residual(result.u, F);

    Eigen::SparseMatrix<double> jac = op.matrix;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> newton;
    newton.analyzePattern(jac);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> fallback;
    bool fallback_ready = false;

    // Converged once the residual meets the tolerance twice in a row (the second
    // pass is a polishing step) or a full Newton step is at round-off level.
    bool below = false;
    bool stalled = false;
    for (int it = 0; it < options.max_iter; ++it) {
        if (norm <= options.tol && below) break;
        below = norm <= options.tol;
        result.iterations = it + 1;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (slope[k] < -1e-12) throw SolverFailure("negative branch derivative: density is invalid");
        }
        jac = op.matrix;
        for (Eigen::Index k = 0; k < n; ++k) jac.coeffRef(k, k) += w[k] * std::max(slope[k], 0.0) / tau;
        newton.factorize(jac);
        if (newton.info() != Eigen::Success) throw SolverFailure("Newton Jacobian is not positive definite");
        const Field step = -newton.solve(F);
        if (step.lpNorm<Eigen::Infinity>() <= 64.0 * kEps * (1.0 + result.u.lpNorm<Eigen::Infinity>())) {
            stalled = true;
            break;
        }

        bool accepted = false;
        Field trial(n);
        Field F_trial(n);
        for (double t = 1.0; t >= 1.0 / 1024.0; t *= 0.5) {
            trial = result.u + t * step;
            evaluate(trial, false);
            const double trial_norm = residual(trial, F_trial);
            if (trial_norm <= (1.0 - 1e-4 * t) * norm) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (below) break;
            if (!(options.lipschitz > 0.0)) throw SolverFailure("Newton line search failed");
            if (!fallback_ready) {
                Eigen::SparseMatrix<double> m = op.matrix;
                for (Eigen::Index k = 0; k < n; ++k) m.coeffRef(k, k) += w[k] * options.lipschitz / tau;
                fallback.compute(m);
                if (fallback.info() != Eigen::Success) throw SolverFailure("fallback factorization failed");
                fallback_ready = true;
            }
            trial = result.u - fallback.solve(F);
            ++result.fallback_steps;
        }
        result.u = trial;
        if (!result.u.allFinite()) throw SolverFailure("semilinear iterate is not finite");
        evaluate(result.u, true);
        norm = residual(result.u, F);
    }
    result.residual = norm;
    if (!(norm <= options.tol) && !(stalled && norm <= std::sqrt(options.tol))) {
        throw SolverFailure("semilinear step did not converge (residual " + std::to_string(norm) + ")");
    }
    return result;
}

}  // namespace hysterelax
