#pragma once

#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace hysterelax {

enum class DensityKind { constant_in_v, gaussian_decay, tabulated };

std::string_view to_string(DensityKind kind);
DensityKind density_kind_from_string(std::string_view name);

/// Threshold profile alpha(r): piecewise linear between knots, constant
/// extrapolation before the first and after the last knot, zero for r >= support.
class RadialProfile {
public:
    static RadialProfile constant(double value, double support);
    static RadialProfile table(std::vector<double> r, std::vector<double> values, double support);

    double operator()(double r) const;
    double support() const { return support_; }
    /// Knots strictly inside (0, support).
    std::vector<double> breaks() const;
    /// Minimum of alpha over [0, min(r_hi, support)).
    double min_up_to(double r_hi) const;
    double max() const;
    RadialProfile scaled(double factor) const;

    std::span<const double> knots() const { return r_; }
    std::span<const double> values() const { return a_; }

private:
    std::vector<double> r_;
    std::vector<double> a_;
    double support_ = 0.0;
};

/// Preisach density rho(r, v) with offset gbar.
///
/// The families are alpha(r) (constant in v, optionally cut off at |v| >= v_support),
/// alpha(r) * exp(-beta v^2), and a bilinear table on a rectangular (r, v) grid
/// which is zero outside the table. All integrals in v are evaluated in closed form.
class DensityModel {
public:
    static DensityModel constant_in_v(RadialProfile alpha,
                                      double v_support = std::numeric_limits<double>::infinity(),
                                      double gbar = 0.0);
    static DensityModel gaussian(RadialProfile alpha, double beta, double gbar = 0.0);
    /// values are stored r-major: values[i * v_knots.size() + j] = rho(r_i, v_j).
    static DensityModel tabulated(std::vector<double> r_knots, std::vector<double> v_knots,
                                  std::vector<double> values, double gbar = 0.0);

    /// Same family with rho multiplied by factor >= 0.
    DensityModel scaled(double factor) const;

    DensityKind kind() const { return kind_; }
    double gbar() const { return gbar_; }
    double beta() const { return beta_; }
    double v_support() const { return v_support_; }
    const RadialProfile& alpha() const { return alpha_; }
    /// Threshold beyond which rho vanishes.
    double support_r() const;

    double rho(double r, double v) const;
    /// psi(r, xi) = int_0^xi rho(r, v) dv
    double psi(double r, double xi) const;
    /// Psi(r, xi) = int_0^xi v rho(r, v) dv
    double psi_moment(double r, double xi) const;

    /// Upper bound rho_1 (the supremum of rho).
    double rho1() const;
    /// Lower bound rho_0(U): infimum of rho over (0, min(U, support_r)) x (-U, U).
    double rho0(double U) const;

    /// Thresholds where rho(., v) has kinks or jumps.
    std::vector<double> r_breaks() const;
    /// Values of v where psi(r, .) has kinks.
    std::vector<double> v_breaks() const;

    std::span<const double> table_r() const { return tr_; }
    std::span<const double> table_v() const { return tv_; }
    std::span<const double> table_values() const { return tval_; }

private:
    DensityModel() = default;
    // rho(r, v_j) for all table v-knots at threshold r
    void table_column(double r, std::vector<double>& column) const;

    DensityKind kind_ = DensityKind::constant_in_v;
    RadialProfile alpha_;
    double beta_ = 0.0;
    double v_support_ = std::numeric_limits<double>::infinity();
    double gbar_ = 0.0;
    std::vector<double> tr_;
    std::vector<double> tv_;
    std::vector<double> tval_;
};

}  // namespace hysterelax
