#include "hysterelax/convexifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hysterelax/error.hpp"
#include "hysterelax/preisach.hpp"

namespace hysterelax {

namespace {

constexpr int kTableSteps = 256;

double sgn(double x) { return x < 0.0 ? -1.0 : 1.0; }

}  // namespace

ConvexityProfile ConvexityProfile::linear(double kappa) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InvalidArgument("profile slope must be finite and >= 0");
    ConvexityProfile p;
    p.kappa = kappa;
    p.phi = [kappa](double v) { return kappa * v; };
    p.Phi = [kappa](double v) { return 0.5 * kappa * v * v; };
    return p;
}

ConvexityProfile ConvexityProfile::from_function(std::function<double(double)> phi) {
    if (!phi) throw InvalidArgument("profile function is empty");
    ConvexityProfile p;
    p.kappa = std::numeric_limits<double>::quiet_NaN();
    p.phi = phi;
    p.Phi = [phi](double v) { return adaptive_simpson(phi, 0.0, v, 1e-14); };
    return p;
}

ConvexityProfile detect_profile(const DensityModel& d, double U) {
    switch (d.kind()) {
        case DensityKind::constant_in_v:
            return ConvexityProfile::linear(0.0);
        case DensityKind::gaussian_decay:
            return ConvexityProfile::linear(2.0 * d.beta());
        case DensityKind::tabulated:
            break;
    }
    // least squares for rho_v = -kappa v rho on interior samples of the table
    const auto tr = d.table_r();
    const auto tv = d.table_v();
    const double r_hi = std::min(U, tr.back());
    const double v_lo = std::max(-U, tv.front());
    const double v_hi = std::min(U, tv.back());
    const int n = 40;
    const double h = 1e-6 * std::max(1.0, U);
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = tr.front() + (i + 0.5) * (r_hi - tr.front()) / n;
        for (int j = 0; j < n; ++j) {
            const double v = v_lo + (j + 0.5) * (v_hi - v_lo) / n;
            const double rv = (d.rho(r, v + h) - d.rho(r, v - h)) / (2.0 * h);
            const double x = v * d.rho(r, v);
            num -= rv * x;
            den += x * x;
        }
    }
    return ConvexityProfile::linear(den > 0.0 ? std::max(0.0, num / den) : 0.0);
}

double profile_residual(const DensityModel& d, const ConvexityProfile& p, double U, int samples) {
    const double rho1 = d.rho1();
    if (!(rho1 > 0.0)) return 0.0;
    const double r_hi = std::min(U, d.support_r());
    const double h = 1e-5 * std::max(1.0, U);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double r = (i + 0.5) * r_hi / samples;
        for (int j = 0; j < samples; ++j) {
            const double v = -U + (j + 0.5) * 2.0 * U / samples;
            const double rv = (d.rho(r, v + h) - d.rho(r, v - h)) / (2.0 * h);
            worst = std::max(worst, std::abs(rv + p.phi(v) * d.rho(r, v)));
        }
    }
    return worst / rho1;
}

// ---------------------------------------------------------------------------

Convexifier Convexifier::build(ConvexityProfile profile, double U, double tol) {
    if (!(U > 0.0) || !std::isfinite(U)) throw InvalidArgument("convexifier range U must be positive");
    if (!profile.phi || !profile.Phi) throw InvalidArgument("convexity profile is incomplete");
    const int checks = 100;
    double prev = profile.phi(-U);
    for (int k = 0; k <= checks; ++k) {
        const double v = -U + 2.0 * U * k / checks;
        const double f = profile.phi(v);
        const double scale = 1e-12 * (1.0 + std::abs(f));
        if (std::abs(f + profile.phi(-v)) > scale) throw InvalidArgument("phi must be odd");
        if (f < prev - scale) throw InvalidArgument("phi must be nondecreasing");
        prev = f;
    }

    Convexifier cx;
    cx.profile_ = std::move(profile);
    cx.U_ = U;
    cx.tol_ = tol;
    cx.step_ = U / kTableSteps;
    const auto& Phi = cx.profile_.Phi;
    auto weight = [&Phi](double s) { return std::exp(-Phi(s)); };
    cx.table_.assign(kTableSteps + 1, 0.0);
    for (int k = 1; k <= kTableSteps; ++k) {
        cx.table_[k] = cx.table_[k - 1] +
                       adaptive_simpson(weight, (k - 1) * cx.step_, k * cx.step_, tol / kTableSteps);
    }
    cx.C_ = cx.table_.back() / U;
    if (!(cx.C_ > 0.0)) throw InvalidArgument("convexifier normalization vanished");

    cx.g_upper_ = 1.0 / cx.C_;
    cx.g_lower_ = std::exp(-Phi(U)) / cx.C_;
    double curv = 0.0;
    for (int k = 0; k <= 1000; ++k) {
        const double v = U * k / 1000.0;
        curv = std::max(curv, std::abs(cx.profile_.phi(v)) * std::exp(-Phi(v)));
    }
    cx.g_curv_ = curv / cx.C_;
    return cx;
}

double Convexifier::phi_hat(double v) const {
    const double s = std::abs(v);
    auto weight = [this](double x) { return std::exp(-profile_.Phi(x)); };
    double value;
    if (s >= U_) {
        value = table_.back() + (s > U_ ? adaptive_simpson(weight, U_, s, tol_) : 0.0);
    } else {
        const int k = std::min(static_cast<int>(s / step_), kTableSteps - 1);
        const double left = k * step_;
        value = table_[k] + (s > left ? adaptive_simpson(weight, left, s, tol_ / kTableSteps) : 0.0);
    }
    return sgn(v) * value;
}

double Convexifier::ghat(double u) const {
    const double s = std::abs(u);
    if (s > U_ * (1.0 + 1e-12)) throw InvalidArgument("ghat: argument outside [-U, U]");
    if (s == 0.0) return 0.0;
    if (s >= U_) return sgn(u) * U_;
    const double target = C_ * s;
    double lo = 0.0;
    double hi = U_;
    double x = std::clamp(s, lo, hi);
    for (int it = 0; it < 200; ++it) {
        const double f = phi_hat(x) - target;
        if (f == 0.0) break;
        (f > 0.0 ? hi : lo) = x;
        const double dx = f * std::exp(profile_.Phi(x));
        double next = x - dx;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 2.0 * std::numeric_limits<double>::epsilon() * x || hi - lo <= 0.0) {
            x = next;
            break;
        }
        x = next;
        if (it == 199) throw SolverFailure("ghat: inversion of PhiHat did not converge");
    }
    return sgn(u) * x;
}

double Convexifier::ghat_prime(double u) const {
    return C_ * std::exp(profile_.Phi(ghat(u)));
}

double Convexifier::ghat_second(double u) const {
    const double x = ghat(u);
    return C_ * C_ * profile_.phi(x) * std::exp(2.0 * profile_.Phi(x));
}

double Convexifier::g(double w) const {
    const double s = std::abs(w);
    if (s > U_ * (1.0 + 1e-12)) throw InvalidArgument("g: argument outside [-U, U]");
    if (s >= U_) return sgn(w) * U_;
    return phi_hat(w) / C_;
}

double Convexifier::g_prime(double w) const { return std::exp(-profile_.Phi(w)) / C_; }

double Convexifier::g_second(double w) const {
    return -profile_.phi(w) * std::exp(-profile_.Phi(w)) / C_;
}

double Convexifier::ode_residual(double u, double h) const {
    // ghat'' from differences of the closed-form ghat', Richardson-extrapolated;
    // one-sided stencils pointing inward near the ends of the range
    const bool central = std::abs(u) + h <= U_;
    const double inward = u > 0.0 ? -1.0 : 1.0;
    auto diff = [&](double step) {
        if (central) return (ghat_prime(u + step) - ghat_prime(u - step)) / (2.0 * step);
        const double s = inward * step;
        return (-3.0 * ghat_prime(u) + 4.0 * ghat_prime(u + s) - ghat_prime(u + 2.0 * s)) / (2.0 * s);
    };
    const double second = (4.0 * diff(0.5 * h) - diff(h)) / 3.0;
    const double gp = ghat_prime(u);
    return std::abs(second - profile_.phi(ghat(u)) * gp * gp);
}

// ---------------------------------------------------------------------------

ConvexityReport verify_branch_convexity(const DensityModel& d, const Convexifier& cx,
                                        const std::vector<MemoryCurve>& states,
                                        const ConvexityCheckOptions& options) {
    const double U = cx.range();
    ConvexityReport report;
    report.profile_residual = profile_residual(d, cx.profile(), U);
    if (report.profile_residual > options.residual_tol) {
        throw InvalidArgument("density does not satisfy rho_v = -phi(v) rho within tolerance");
    }
    if (options.points < 3) throw InvalidArgument("convexity check needs at least 3 points");
    report.min_second_difference = std::numeric_limits<double>::infinity();
    report.beta_estimate = std::numeric_limits<double>::infinity();

    auto scan = [&](const MemoryCurve& prev, double w_from, double w_to, Direction dir) {
        const int n = options.points;
        const double h = (w_to - w_from) / (n - 1);
        const double u0 = prev.input();
        std::vector<double> b(n);
        for (int k = 0; k < n; ++k) {
            const double w = k + 1 == n ? w_to : w_from + k * h;
            double u = cx.ghat(w);
            u = dir == Direction::ascending ? std::max(u, u0) : std::min(u, u0);
            b[k] = branch(d, prev, u, dir, options.quad);
        }
        const double orient = dir == Direction::ascending ? 1.0 : -1.0;
        for (int k = 1; k + 1 < n; ++k) {
            const double dd = orient * (b[k + 1] - 2.0 * b[k] + b[k - 1]);
            report.min_second_difference = std::min(report.min_second_difference, dd);
            report.beta_estimate = std::min(report.beta_estimate, dd / (h * h));
        }
        ++report.branches;
    };

    for (const MemoryCurve& prev : states) {
        const double u0 = prev.input();
        if (std::abs(u0) > U) throw InvalidArgument("memory state input lies outside [-U, U]");
        const double w0 = cx.g(u0);
        if (w0 < U) scan(prev, w0, U, Direction::ascending);
        if (w0 > -U) scan(prev, w0, -U, Direction::descending);
    }
    return report;
}

}  // namespace hysterelax
