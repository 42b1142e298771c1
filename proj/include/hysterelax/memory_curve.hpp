#pragma once

#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace hysterelax {

/// Direction of a monotone input segment.
enum class Direction { ascending, descending, none };

struct Corner {
    double r = 0.0;  ///< threshold
    double v = 0.0;  ///< memory value at that threshold
    bool operator==(const Corner&) const = default;
};

/// What a single play update changed.
struct PlayUpdateReport {
    double moved_depth = 0.0;  ///< the curve changed only for thresholds below this value
    Direction direction = Direction::none;
};

/// Memory curve r -> xi^r of a family of play operators.
///
/// Stored as a piecewise-linear function given by its corners. The first
/// corner sits at r = 0 and carries the current input, the last corner has
/// value 0 and the curve vanishes beyond it. Each segment keeps its slope
/// explicitly, so that segments created by play updates carry slopes of exactly
/// +1 or -1 and intersections are reproducible bit for bit.
///
/// Curves are immutable values; every operation returns a new curve.
class MemoryCurve {
public:
    /// The virgin curve (identically zero).
    MemoryCurve();

    /// Builds a curve from corners. Throws InvalidArgument if the corners are
    /// not strictly increasing in r, do not start at r = 0, do not end with
    /// value 0, have a slope steeper than one, or extend beyond support_radius.
    static MemoryCurve from_corners(std::vector<Corner> corners, double support_radius);

    double eval(double r) const;
    double operator()(double r) const { return eval(r); }

    /// Current input value, i.e. the curve at r = 0.
    double input() const { return corners_.front().v; }
    double support_radius() const { return support_; }
    /// Threshold of the last corner; the curve is zero from here on.
    double extent() const { return corners_.back().r; }

    std::span<const Corner> corners() const { return corners_; }
    /// Slope of each segment between consecutive corners.
    std::span<const double> slopes() const { return slopes_; }

    /// Length of the initial straight run with slope -sign, i.e. the largest r0
    /// with curve(r) = input() - sign * r on [0, r0]. Zero if there is none.
    double straight_depth(int sign) const;

    /// Corner-exact equality (support radius is not compared).
    bool operator==(const MemoryCurve& other) const {
        return corners_ == other.corners_;
    }

private:
    // `pinned` names a threshold whose corner survives even between collinear segments.
    MemoryCurve(std::vector<Corner> corners, std::vector<double> slopes, double support,
                double pinned = -1.0);
    void normalize(double pinned);

    friend std::pair<MemoryCurve, PlayUpdateReport> play_update(const MemoryCurve&, double);
    friend MemoryCurve backward_deform(const MemoryCurve&, double, double, int);
    friend MemoryCurve curve_turning(double, double, int, double);
    friend double memory_depth(const MemoryCurve&, double, Direction);

    std::vector<Corner> corners_;
    std::vector<double> slopes_;
    double support_ = 0.0;
};

/// Discrete play update r -> min{u + r, max{curve(r), u - r}}.
std::pair<MemoryCurve, PlayUpdateReport> play_update(const MemoryCurve& curve, double u);

/// Smallest threshold where the clipping cone w -/+ r meets the curve.
/// Ascending requires w >= curve(0), descending requires w <= curve(0).
double memory_depth(const MemoryCurve& curve, double w, Direction direction);

/// Curve with slope -sign on (0, r0) starting from u0, returning to zero with
/// unit slope afterwards. Throws if that return does not fit within support.
MemoryCurve curve_turning(double u0, double r0, int sign, double support);

/// The curve (v_star - r)^+, mirrored for negative v_star.
MemoryCurve curve_saturated(double v_star);

/// Fictitious previous memory lambda_{-1} for the backward time step.
/// Requires slope -sign on (0, r0) and 0 <= a <= r0 / 2.
MemoryCurve backward_deform(const MemoryCurve& curve, double r0, double a, int sign);

/// Applies play updates for each input in turn.
MemoryCurve play_sequence(MemoryCurve curve, std::span<const double> inputs);

/// Samples of a memory curve on a fixed threshold grid, updated pointwise.
class SampledCurve {
public:
    SampledCurve(const MemoryCurve& curve, std::vector<double> thresholds);

    void update(double u);

    std::span<const double> thresholds() const { return r_; }
    std::span<const double> values() const { return v_; }

private:
    std::vector<double> r_;
    std::vector<double> v_;
};

/// CSV dump: header "# lambda, support=<support>" followed by "r,v" rows.
void write_curve_csv(std::ostream& os, const MemoryCurve& curve);
MemoryCurve read_curve_csv(std::istream& is);

}  // namespace hysterelax
