#pragma once

#include <functional>
#include <vector>

#include "hysterelax/density.hpp"
#include "hysterelax/memory_curve.hpp"
#include "hysterelax/quadrature.hpp"

namespace hysterelax {

/// Decay profile phi of a density with rho_v = -phi(v) rho, and its primitive Phi.
struct ConvexityProfile {
    std::function<double(double)> phi;
    std::function<double(double)> Phi;
    /// Slope for the linear profile phi(v) = kappa v; NaN for general profiles.
    double kappa = 0.0;

    static ConvexityProfile linear(double kappa);
    /// General odd nondecreasing phi; Phi is obtained by adaptive quadrature.
    static ConvexityProfile from_function(std::function<double(double)> phi);
};

/// Profile matching a density: zero for constant-in-v, 2 beta for the gaussian family,
/// and a least-squares linear fit kappa >= 0 for tables.
ConvexityProfile detect_profile(const DensityModel& d, double U);

/// max |rho_v + phi(v) rho| / rho_1 over a sample box (0, U) x (-U, U), with
/// rho_v by central differences.
double profile_residual(const DensityModel& d, const ConvexityProfile& p, double U, int samples = 41);

/// The odd increasing map ghat on [-U, U] with ghat'' = phi(ghat) ghat'^2,
/// ghat(0) = 0, ghat(U) = U, and its inverse g.
///
/// ghat(u) = PhiHat^{-1}(C u) with PhiHat(v) = int_0^v exp(-Phi), C = PhiHat(U) / U.
/// PhiHat is tabulated by adaptive Simpson quadrature and inverted by safeguarded Newton.
class Convexifier {
public:
    static Convexifier build(ConvexityProfile profile, double U, double tol = 1e-12);

    double range() const { return U_; }
    double C() const { return C_; }
    const ConvexityProfile& profile() const { return profile_; }

    double phi_hat(double v) const;
    double ghat(double u) const;
    double ghat_prime(double u) const;
    /// Second derivative through the identity ghat'' = C^2 phi(ghat) exp(2 Phi(ghat)).
    double ghat_second(double u) const;
    double g(double w) const;
    double g_prime(double w) const;
    double g_second(double w) const;

    /// Bounds 0 < g_* <= g' <= g^* and |g''| <= gbar on (-U, U).
    double g_lower() const { return g_lower_; }
    double g_upper() const { return g_upper_; }
    double g_curvature() const { return g_curv_; }

    /// |ghat'' - phi(ghat) ghat'^2| with ghat'' from finite differences of ghat'.
    double ode_residual(double u, double h = 1e-3) const;

private:
    Convexifier() = default;

    ConvexityProfile profile_;
    double U_ = 0.0;
    double C_ = 1.0;
    double tol_ = 1e-12;
    double step_ = 0.0;
    std::vector<double> table_;  // PhiHat at k * step_
    double g_lower_ = 1.0;
    double g_upper_ = 1.0;
    double g_curv_ = 0.0;
};

struct ConvexityReport {
    /// Smallest ascending second difference and smallest negated descending one.
    double min_second_difference = 0.0;
    /// Smallest difference quotient of branch slopes, i.e. an empirical modulus of
    /// uniform convexity (negative if convexity fails somewhere).
    double beta_estimate = 0.0;
    double profile_residual = 0.0;
    int branches = 0;
};

struct ConvexityCheckOptions {
    int points = 201;              ///< samples per branch
    double residual_tol = 1e-3;    ///< admissible profile residual
    QuadratureSpec quad{};
};

/// Samples w -> branch(d, prev, ghat(w)) for every memory state in `states`,
/// ascending up to U and descending down to -U. Throws InvalidArgument if the
/// density does not satisfy rho_v = -phi rho within residual_tol.
ConvexityReport verify_branch_convexity(const DensityModel& d, const Convexifier& cx,
                                        const std::vector<MemoryCurve>& states,
                                        const ConvexityCheckOptions& options = {});

}  // namespace hysterelax
