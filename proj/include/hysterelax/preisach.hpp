#pragma once

#include <span>
#include <vector>

#include "hysterelax/density.hpp"
#include "hysterelax/memory_curve.hpp"
#include "hysterelax/quadrature.hpp"

namespace hysterelax {

/// psi(r, xi) = int_0^xi rho(r, v) dv.
inline double psi(const DensityModel& d, double r, double xi) { return d.psi(r, xi); }

/// Preisach output G = gbar + int_0^inf psi(r, curve(r)) dr.
///
/// The threshold integral is split at the curve corners, at the density's
/// threshold knots and wherever the curve crosses a kink of psi in v. Between
/// those points the integrand is a polynomial for the constant-in-v and
/// tabulated families, so the Gauss rule is exact there.
double output(const DensityModel& d, const MemoryCurve& curve, const QuadratureSpec& quad = {});

/// Energy E = int_0^inf Psi(r, curve(r)) dr with Psi(r, xi) = int_0^xi v rho(r, v) dv.
double energy(const DensityModel& d, const MemoryCurve& curve, const QuadratureSpec& quad = {});

struct SequenceResult {
    std::vector<double> outputs;  ///< G after each input
    MemoryCurve final_curve;
};

/// Folds play updates and outputs over an input sequence starting from `initial`.
/// The initial input is initial(0); it is not part of `inputs`.
SequenceResult apply_sequence(const DensityModel& d, const MemoryCurve& initial,
                              std::span<const double> inputs, const QuadratureSpec& quad = {});

/// Output after updating `prev` with input u (superposition form of one time step).
double nemytskii(const DensityModel& d, const MemoryCurve& prev, double u,
                 const QuadratureSpec& quad = {});

/// nemytskii(prev, u) - output(prev), integrated only where the curve moved.
double nemytskii_increment(const DensityModel& d, const MemoryCurve& prev, double u,
                           const QuadratureSpec& quad = {});

/// d/du of nemytskii: int_0^{r*(u)} rho(r, u -/+ r) dr, zero at u = prev(0).
double nemytskii_derivative(const DensityModel& d, const MemoryCurve& prev, double u,
                            const QuadratureSpec& quad = {});

/// int_0^{min(r_max, support_r)} (psi(r, upper(r)) - psi(r, lower(r))) dr, split at the
/// corners of both curves.
double output_difference(const DensityModel& d, const MemoryCurve& upper, const MemoryCurve& lower,
                         double r_max, const QuadratureSpec& quad = {});

/// Ascending or descending Preisach branch B(w) = nemytskii(prev, w) - output(prev).
/// Throws InvalidArgument if w lies on the wrong side of prev(0).
double branch(const DensityModel& d, const MemoryCurve& prev, double w, Direction direction,
              const QuadratureSpec& quad = {});

/// Constant C of the two-sided bound |dG|^2 / C <= du dG <= C |du|^2 for inputs
/// bounded by u_max and memory supported in [0, support]: C = rho_1 * R with R the
/// largest threshold that can move, min(support_r, max(support, u_max)).
double monotonicity_constant(const DensityModel& d, double support, double u_max);

/// Bound rho_1 (support + u_max)^2 / 2 on |G - gbar|.
double output_bound(const DensityModel& d, double support, double u_max);

/// Bound rho_1 / 2 int_0^support lambda^2 dr on the initial energy.
double initial_energy_bound(const DensityModel& d, const MemoryCurve& curve);

}  // namespace hysterelax
