#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace hysterelax {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Rule with `order` points (exact for polynomials of degree 2*order - 1).
/// Rules are computed once per order and cached.
const GaussRule& gauss_legendre(int order);

/// Panel layout for one-dimensional integrals in the threshold variable.
struct QuadratureSpec {
    int order = 6;           ///< Gauss points per panel
    double max_panel = 0.0;  ///< largest panel length; <= 0 selects support / 64
};

/// Integrates f over consecutive intervals [breaks[k], breaks[k+1]], each
/// split into panels no longer than max_panel. `breaks` must be sorted.
/// The summation order is fixed, so results are reproducible.
template <class F>
double integrate_panels(std::span<const double> breaks, double max_panel, int order, F&& f) {
    const GaussRule& rule = gauss_legendre(order);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double a = breaks[k];
        const double b = breaks[k + 1];
        if (!(b > a)) continue;
        int pieces = 1;
        if (max_panel > 0.0) {
            const double ratio = (b - a) / max_panel;
            if (ratio > 1.0) pieces = static_cast<int>(ratio) + 1;
        }
        const double h = (b - a) / pieces;
        for (int p = 0; p < pieces; ++p) {
            const double lo = a + p * h;
            const double hi = p + 1 == pieces ? b : lo + h;
            const double mid = 0.5 * (lo + hi);
            const double half = 0.5 * (hi - lo);
            double panel = 0.0;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                panel += rule.weights[q] * f(mid + half * rule.nodes[q]);
            }
            total += half * panel;
        }
    }
    return total;
}

/// Sorts, removes duplicates and clips breakpoints to [lo, hi], keeping both ends.
std::vector<double> tidy_breaks(std::vector<double> breaks, double lo, double hi);

/// Adaptive Simpson quadrature of a smooth function to absolute tolerance tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth = 40);

namespace detail {
template <class F>
double simpson_step(F& f, double a, double b, double fa, double fm, double fb, double whole,
                    double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double diff = left + right - whole;
    if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol, int max_depth) {
    if (a == b) return 0.0;
    const double fa = f(a);
    const double fb = f(b);
    const double fm = f(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace hysterelax
