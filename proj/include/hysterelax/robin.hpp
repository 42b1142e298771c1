#pragma once

#include <span>
#include <vector>

#include <Eigen/Sparse>

#include "hysterelax/density.hpp"
#include "hysterelax/grid.hpp"
#include "hysterelax/memory_curve.hpp"
#include "hysterelax/quadrature.hpp"

namespace hysterelax {

using Field = Eigen::VectorXd;

Field to_field(const std::vector<double>& values);
std::vector<double> to_vector(const Field& f);

/// Discrete form of int grad u . grad phi + int_boundary b u phi.
///
/// `matrix` is the stiffness matrix of the tensor-product three-point stencil
/// (with lumped weights in the transverse direction) plus diag(S b) with S the
/// boundary weights. `boundary_load` is S b, so the Robin load for data u* is
/// boundary_load .* u*.
struct RobinOperator {
    Eigen::SparseMatrix<double> matrix;
    Field boundary_load;
    Field weights;

    /// phi^T A u.
    double bilinear(const Field& u, const Field& phi) const { return phi.dot(matrix * u); }
};

RobinOperator assemble(const Grid& grid);

/// -W^{-1}(A u - S b u*): the five-point (three-point) Laplacian with the Robin
/// condition imposed through ghost values on the boundary.
Field discrete_laplacian(const RobinOperator& op, const Field& u, const Field& ustar);

/// Solves A v = W h + S b u*, the weak form of -Lap v = h with
/// -dv/dn = b (v - u*). Throws SolverFailure if the system is singular (b = 0).
Field solve_linear_robin(const Grid& grid, const RobinOperator& op, const Field& h, const Field& ustar);

/// Discrete L^2 norm sqrt(sum w r^2) of a strong-form residual r.
double weighted_norm(const Field& weights, const Field& r);

struct SemilinearOptions {
    double tol = 1e-11;   ///< discrete L^2 residual tolerance (strong form)
    int max_iter = 60;
    QuadratureSpec quad{};
    int threads = 1;
    /// Monotonicity constant of the hysteresis increment; used by the fallback step.
    double lipschitz = 0.0;
};

struct SemilinearResult {
    Field u;
    int iterations = 0;
    int fallback_steps = 0;
    double residual = 0.0;
};

/// Solves W (G~(u) - G_prev) / tau + A u - S b u* - W h = 0 where
/// G~(u) - G_prev at node k is nemytskii_increment(d, memory[k], u_k).
///
/// Damped Newton with Armijo backtracking on the residual norm, using the
/// Jacobian A + diag(W G~') / tau. When the line search fails, one step of the
/// Lipschitz-preconditioned iteration (A + L W / tau) du = -F is taken instead.
SemilinearResult solve_semilinear_step(const Grid& grid, const RobinOperator& op,
                                       std::span<const MemoryCurve> memory, const DensityModel& d,
                                       double tau, const Field& h, const Field& ustar,
                                       const Field& guess, const SemilinearOptions& options = {});

}  // namespace hysterelax
