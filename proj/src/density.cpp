#include "hysterelax/density.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hysterelax/error.hpp"

namespace hysterelax {

std::string_view to_string(DensityKind kind) {
    switch (kind) {
        case DensityKind::constant_in_v: return "constant_in_v";
        case DensityKind::gaussian_decay: return "gaussian_decay";
        case DensityKind::tabulated: return "tabulated";
    }
    return "unknown";
}

DensityKind density_kind_from_string(std::string_view name) {
    if (name == "constant_in_v" || name == "constant") return DensityKind::constant_in_v;
    if (name == "gaussian_decay" || name == "gaussian") return DensityKind::gaussian_decay;
    if (name == "tabulated") return DensityKind::tabulated;
    throw ConfigError("unknown density kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

namespace {

double interp(std::span<const double> x, std::span<const double> y, double t) {
    if (t <= x.front()) return y.front();
    if (t >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), t);
    const auto k = static_cast<std::size_t>(it - x.begin());
    const double w = (t - x[k - 1]) / (x[k] - x[k - 1]);
    return (1.0 - w) * y[k - 1] + w * y[k];
}

void require_sorted(std::span<const double> x, const char* what) {
    for (std::size_t k = 1; k < x.size(); ++k) {
        if (!(x[k] > x[k - 1])) throw InvalidArgument(std::string(what) + " must be strictly increasing");
    }
}

// int_a^b v^moment f(v) dv for f piecewise linear on knots, zero outside; a <= b.
double pl_integral(std::span<const double> knots, std::span<const double> f, double a, double b,
                   int moment) {
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < knots.size(); ++j) {
        const double p = std::max(a, knots[j]);
        const double q = std::min(b, knots[j + 1]);
        if (!(q > p)) continue;
        const double h = knots[j + 1] - knots[j];
        auto lin = [&](double v) { return f[j] + (f[j + 1] - f[j]) * (v - knots[j]) / h; };
        if (moment == 0) {
            total += 0.5 * (q - p) * (lin(p) + lin(q));
        } else {
            const double m = 0.5 * (p + q);
            total += (q - p) / 6.0 * (p * lin(p) + 4.0 * m * lin(m) + q * lin(q));
        }
    }
    return total;
}

}  // namespace

RadialProfile RadialProfile::constant(double value, double support) {
    return table({0.0}, {value}, support);
}

RadialProfile RadialProfile::table(std::vector<double> r, std::vector<double> values, double support) {
    if (r.empty() || r.size() != values.size()) {
        throw InvalidArgument("radial profile needs matching, nonempty knots and values");
    }
    require_sorted(r, "radial profile knots");
    if (r.front() < 0.0) throw InvalidArgument("radial profile knots must be nonnegative");
    for (double a : values) {
        if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("radial profile values must be finite and >= 0");
    }
    if (!(support >= 0.0)) throw InvalidArgument("radial profile support must be nonnegative");
    RadialProfile p;
    p.r_ = std::move(r);
    p.a_ = std::move(values);
    p.support_ = support;
    return p;
}

double RadialProfile::operator()(double r) const {
    if (r >= support_ || r < 0.0) return 0.0;
    return interp(r_, a_, r);
}

std::vector<double> RadialProfile::breaks() const {
    std::vector<double> out;
    for (double r : r_) {
        if (r > 0.0 && r < support_) out.push_back(r);
    }
    return out;
}

double RadialProfile::min_up_to(double r_hi) const {
    const double hi = std::min(r_hi, support_);
    double m = interp(r_, a_, 0.0);
    if (hi <= 0.0) return m;
    for (double r : r_) {
        if (r < hi) m = std::min(m, interp(r_, a_, r));
    }
    return std::min(m, interp(r_, a_, hi));
}

double RadialProfile::max() const {
    if (support_ <= 0.0) return 0.0;
    return *std::max_element(a_.begin(), a_.end());
}

RadialProfile RadialProfile::scaled(double factor) const {
    RadialProfile p = *this;
    for (double& a : p.a_) a *= factor;
    return p;
}

// ---------------------------------------------------------------------------

DensityModel DensityModel::constant_in_v(RadialProfile alpha, double v_support, double gbar) {
    if (!(v_support > 0.0)) throw InvalidArgument("v_support must be positive");
    DensityModel d;
    d.kind_ = DensityKind::constant_in_v;
    d.alpha_ = std::move(alpha);
    d.v_support_ = v_support;
    d.gbar_ = gbar;
    return d;
}

DensityModel DensityModel::gaussian(RadialProfile alpha, double beta, double gbar) {
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be finite and >= 0");
    DensityModel d;
    d.kind_ = DensityKind::gaussian_decay;
    d.alpha_ = std::move(alpha);
    d.beta_ = beta;
    d.gbar_ = gbar;
    return d;
}

DensityModel DensityModel::tabulated(std::vector<double> r_knots, std::vector<double> v_knots,
                                     std::vector<double> values, double gbar) {
    if (r_knots.size() < 2 || v_knots.size() < 2) {
        throw InvalidArgument("density table needs at least 2 knots in r and v");
    }
    if (values.size() != r_knots.size() * v_knots.size()) {
        throw InvalidArgument("density table size does not match its knots");
    }
    require_sorted(r_knots, "density table r-knots");
    require_sorted(v_knots, "density table v-knots");
    if (r_knots.front() < 0.0) throw InvalidArgument("density table r-knots must be nonnegative");
    for (double x : values) {
        if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("density table values must be finite and >= 0");
    }
    DensityModel d;
    d.kind_ = DensityKind::tabulated;
    d.tr_ = std::move(r_knots);
    d.tv_ = std::move(v_knots);
    d.tval_ = std::move(values);
    d.gbar_ = gbar;
    return d;
}

DensityModel DensityModel::scaled(double factor) const {
    if (!(factor >= 0.0)) throw InvalidArgument("density scale factor must be >= 0");
    DensityModel d = *this;
    d.alpha_ = alpha_.scaled(factor);
    for (double& x : d.tval_) x *= factor;
    return d;
}

double DensityModel::support_r() const {
    return kind_ == DensityKind::tabulated ? tr_.back() : alpha_.support();
}

void DensityModel::table_column(double r, std::vector<double>& column) const {
    const std::size_t nv = tv_.size();
    column.assign(nv, 0.0);
    if (r < tr_.front() || r > tr_.back()) return;
    auto it = std::upper_bound(tr_.begin(), tr_.end(), r);
    std::size_t i = static_cast<std::size_t>(it - tr_.begin());
    if (i >= tr_.size()) i = tr_.size() - 1;
    const double w = (r - tr_[i - 1]) / (tr_[i] - tr_[i - 1]);
    for (std::size_t j = 0; j < nv; ++j) {
        column[j] = (1.0 - w) * tval_[(i - 1) * nv + j] + w * tval_[i * nv + j];
    }
}

double DensityModel::rho(double r, double v) const {
    switch (kind_) {
        case DensityKind::constant_in_v:
            return std::abs(v) < v_support_ ? alpha_(r) : 0.0;
        case DensityKind::gaussian_decay:
            return alpha_(r) * std::exp(-beta_ * v * v);
        case DensityKind::tabulated: {
            if (v < tv_.front() || v > tv_.back()) return 0.0;
            thread_local std::vector<double> column;
            table_column(r, column);
            return interp(tv_, column, v);
        }
    }
    return 0.0;
}

double DensityModel::psi(double r, double xi) const {
    switch (kind_) {
        case DensityKind::constant_in_v:
            return alpha_(r) * std::clamp(xi, -v_support_, v_support_);
        case DensityKind::gaussian_decay: {
            const double a = alpha_(r);
            if (a == 0.0) return 0.0;
            if (beta_ == 0.0) return a * xi;
            const double sb = std::sqrt(beta_);
            return a * (0.5 * std::sqrt(std::numbers::pi) / sb) * std::erf(sb * xi);
        }
        case DensityKind::tabulated: {
            thread_local std::vector<double> column;
            table_column(r, column);
            return xi >= 0.0 ? pl_integral(tv_, column, 0.0, xi, 0) : -pl_integral(tv_, column, xi, 0.0, 0);
        }
    }
    return 0.0;
}

double DensityModel::psi_moment(double r, double xi) const {
    switch (kind_) {
        case DensityKind::constant_in_v: {
            const double c = std::clamp(xi, -v_support_, v_support_);
            return 0.5 * alpha_(r) * c * c;
        }
        case DensityKind::gaussian_decay: {
            const double a = alpha_(r);
            if (a == 0.0) return 0.0;
            if (beta_ == 0.0) return 0.5 * a * xi * xi;
            return a * (-std::expm1(-beta_ * xi * xi)) / (2.0 * beta_);
        }
        case DensityKind::tabulated: {
            thread_local std::vector<double> column;
            table_column(r, column);
            return xi >= 0.0 ? pl_integral(tv_, column, 0.0, xi, 1) : -pl_integral(tv_, column, xi, 0.0, 1);
        }
    }
    return 0.0;
}

double DensityModel::rho1() const {
    if (kind_ == DensityKind::tabulated) return *std::max_element(tval_.begin(), tval_.end());
    return alpha_.max();
}

double DensityModel::rho0(double U) const {
    if (!(U > 0.0)) throw InvalidArgument("rho0 needs U > 0");
    switch (kind_) {
        case DensityKind::constant_in_v:
            return U > v_support_ ? 0.0 : alpha_.min_up_to(U);
        case DensityKind::gaussian_decay:
            return alpha_.min_up_to(U) * std::exp(-beta_ * U * U);
        case DensityKind::tabulated: {
            const double r_hi = std::min(U, tr_.back());
            if (tr_.front() > 0.0 || tv_.front() > -U || tv_.back() < U) return 0.0;
            std::vector<double> rs{0.0, r_hi};
            for (double r : tr_) {
                if (r < r_hi) rs.push_back(r);
            }
            std::vector<double> vs{-U, U};
            for (double v : tv_) {
                if (v > -U && v < U) vs.push_back(v);
            }
            double m = rho1();
            for (double r : rs) {
                for (double v : vs) m = std::min(m, rho(r, v));
            }
            return m;
        }
    }
    return 0.0;
}

std::vector<double> DensityModel::r_breaks() const {
    if (kind_ == DensityKind::tabulated) return tr_;
    std::vector<double> b = alpha_.breaks();
    b.push_back(alpha_.support());
    return b;
}

std::vector<double> DensityModel::v_breaks() const {
    switch (kind_) {
        case DensityKind::constant_in_v:
            if (std::isfinite(v_support_)) return {-v_support_, v_support_};
            return {};
        case DensityKind::gaussian_decay:
            return {};
        case DensityKind::tabulated:
            return tv_;
    }
    return {};
}

}  // namespace hysterelax
