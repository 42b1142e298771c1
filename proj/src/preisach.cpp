#include "hysterelax/preisach.hpp"

#include <algorithm>
#include <cmath>

#include "hysterelax/error.hpp"

namespace hysterelax {

namespace {

double panel_length(const DensityModel& d, const QuadratureSpec& quad) {
    if (quad.max_panel > 0.0) return quad.max_panel;
    const double s = d.support_r();
    return std::isfinite(s) && s > 0.0 ? s / 64.0 : 0.0;
}

// Corners of the curve and the thresholds where its segments cross any of `levels`.
void add_curve_breaks(const MemoryCurve& curve, std::span<const double> levels,
                      std::vector<double>& out) {
    const auto c = curve.corners();
    for (std::size_t k = 0; k < c.size(); ++k) {
        out.push_back(c[k].r);
        if (k + 1 == c.size()) break;
        const double va = c[k].v;
        const double vb = c[k + 1].v;
        for (double level : levels) {
            if ((level - va) * (level - vb) < 0.0) {
                out.push_back(c[k].r + (level - va) / (vb - va) * (c[k + 1].r - c[k].r));
            }
        }
    }
}

// Thresholds where the line u - dir * r crosses any of `levels`.
void add_line_breaks(double u, int dir, std::span<const double> levels, std::vector<double>& out) {
    for (double level : levels) out.push_back(dir * (u - level));
}

template <class F>
double curve_integral(const DensityModel& d, const MemoryCurve& curve, const QuadratureSpec& quad,
                      F&& integrand) {
    const double upper = std::min(curve.extent(), d.support_r());
    if (!(upper > 0.0)) return 0.0;
    std::vector<double> breaks = d.r_breaks();
    add_curve_breaks(curve, d.v_breaks(), breaks);
    breaks = tidy_breaks(std::move(breaks), 0.0, upper);
    return integrate_panels(breaks, panel_length(d, quad), quad.order,
                            [&](double r) { return integrand(r, curve.eval(r)); });
}

int direction_sign(double u, double u_prev) { return u > u_prev ? 1 : -1; }

}  // namespace

double output(const DensityModel& d, const MemoryCurve& curve, const QuadratureSpec& quad) {
    return d.gbar() +
           curve_integral(d, curve, quad, [&](double r, double xi) { return d.psi(r, xi); });
}

double energy(const DensityModel& d, const MemoryCurve& curve, const QuadratureSpec& quad) {
    return curve_integral(d, curve, quad, [&](double r, double xi) { return d.psi_moment(r, xi); });
}

SequenceResult apply_sequence(const DensityModel& d, const MemoryCurve& initial,
                              std::span<const double> inputs, const QuadratureSpec& quad) {
    if (inputs.empty()) throw InvalidArgument("apply_sequence: input sequence is empty");
    SequenceResult result{{}, initial};
    result.outputs.reserve(inputs.size());
    for (double u : inputs) {
        result.final_curve = play_update(result.final_curve, u).first;
        result.outputs.push_back(output(d, result.final_curve, quad));
    }
    return result;
}

double nemytskii(const DensityModel& d, const MemoryCurve& prev, double u, const QuadratureSpec& quad) {
    return output(d, play_update(prev, u).first, quad);
}

double nemytskii_increment(const DensityModel& d, const MemoryCurve& prev, double u,
                           const QuadratureSpec& quad) {
    const double u_prev = prev.input();
    if (u == u_prev) return 0.0;
    const int dir = direction_sign(u, u_prev);
    const double depth =
        memory_depth(prev, u, dir > 0 ? Direction::ascending : Direction::descending);
    const double upper = std::min(depth, d.support_r());
    if (!(upper > 0.0)) return 0.0;

    const std::vector<double> levels = d.v_breaks();
    std::vector<double> breaks = d.r_breaks();
    add_curve_breaks(prev, levels, breaks);
    add_line_breaks(u, dir, levels, breaks);
    breaks = tidy_breaks(std::move(breaks), 0.0, upper);
    return integrate_panels(breaks, panel_length(d, quad), quad.order, [&](double r) {
        return d.psi(r, u - dir * r) - d.psi(r, prev.eval(r));
    });
}

double nemytskii_derivative(const DensityModel& d, const MemoryCurve& prev, double u,
                            const QuadratureSpec& quad) {
    const double u_prev = prev.input();
    if (u == u_prev) return 0.0;
    const int dir = direction_sign(u, u_prev);
    const double depth =
        memory_depth(prev, u, dir > 0 ? Direction::ascending : Direction::descending);
    const double upper = std::min(depth, d.support_r());
    if (!(upper > 0.0)) return 0.0;

    std::vector<double> breaks = d.r_breaks();
    add_line_breaks(u, dir, d.v_breaks(), breaks);
    breaks = tidy_breaks(std::move(breaks), 0.0, upper);
    return integrate_panels(breaks, panel_length(d, quad), quad.order,
                            [&](double r) { return d.rho(r, u - dir * r); });
}

double output_difference(const DensityModel& d, const MemoryCurve& upper, const MemoryCurve& lower,
                         double r_max, const QuadratureSpec& quad) {
    const double hi = std::min({r_max, d.support_r(), std::max(upper.extent(), lower.extent())});
    if (!(hi > 0.0)) return 0.0;
    const std::vector<double> levels = d.v_breaks();
    std::vector<double> breaks = d.r_breaks();
    add_curve_breaks(upper, levels, breaks);
    add_curve_breaks(lower, levels, breaks);
    breaks = tidy_breaks(std::move(breaks), 0.0, hi);
    return integrate_panels(breaks, panel_length(d, quad), quad.order, [&](double r) {
        return d.psi(r, upper.eval(r)) - d.psi(r, lower.eval(r));
    });
}

double branch(const DensityModel& d, const MemoryCurve& prev, double w, Direction direction,
              const QuadratureSpec& quad) {
    const double u_prev = prev.input();
    if (direction == Direction::ascending && w < u_prev) {
        throw InvalidArgument("branch: ascending branch needs w >= prev(0)");
    }
    if (direction == Direction::descending && w > u_prev) {
        throw InvalidArgument("branch: descending branch needs w <= prev(0)");
    }
    if (direction == Direction::none) throw InvalidArgument("branch: direction must be set");
    return nemytskii_increment(d, prev, w, quad);
}

double monotonicity_constant(const DensityModel& d, double support, double u_max) {
    const double reach = std::min(d.support_r(), std::max(support, u_max));
    return d.rho1() * reach;
}

double output_bound(const DensityModel& d, double support, double u_max) {
    const double s = support + u_max;
    return 0.5 * d.rho1() * s * s;
}

double initial_energy_bound(const DensityModel& d, const MemoryCurve& curve) {
    const auto c = curve.corners();
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < c.size(); ++k) {
        const double h = c[k + 1].r - c[k].r;
        const double m = 0.5 * (c[k].v + c[k + 1].v);
        integral += h / 6.0 * (c[k].v * c[k].v + 4.0 * m * m + c[k + 1].v * c[k + 1].v);
    }
    return 0.5 * d.rho1() * integral;
}

}  // namespace hysterelax
