#include "hysterelax/memory_curve.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "hysterelax/error.hpp"
#include "hysterelax/numfmt.hpp"

namespace hysterelax {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kSlopeSnap = 1e-12;

double snap_tol(double scale) { return 8.0 * kEps * std::max(1.0, scale); }

double snap_slope(double s) {
    if (std::abs(s - 1.0) <= kSlopeSnap) return 1.0;
    if (std::abs(s + 1.0) <= kSlopeSnap) return -1.0;
    return s;
}

// Location of r* = min{r > 0 : cone meets curve}.
struct DepthHit {
    double r = 0.0;
    std::size_t corner = 0;  // index of the first retained corner of the old curve
    bool on_corner = false;  // r* coincides with corner `corner`
    bool tail = false;       // r* lies beyond the last corner
};

// dir = +1 for ascending (cone w - r), -1 for descending (cone w + r).
DepthHit find_depth(std::span<const Corner> c, std::span<const double> s, double w, int dir) {
    for (std::size_t m = 1; m < c.size(); ++m) {
        const Corner& cm = c[m];
        const double g = dir > 0 ? cm.v - (w - cm.r) : (w + cm.r) - cm.v;
        const double tol = snap_tol(std::max({std::abs(w), cm.r, std::abs(cm.v)}));
        if (g < -tol) continue;
        if (g <= tol) return {cm.r, m, true, false};

        // Intersection inside segment (m-1, m), evaluated from the right corner.
        const double slope = s[m - 1];
        const double denom = dir > 0 ? 1.0 + slope : 1.0 - slope;
        double r = cm.r;
        if (denom > 0.0) {
            r = dir > 0 ? (w - cm.v + slope * cm.r) / denom : (cm.v - slope * cm.r - w) / denom;
        }
        r = std::clamp(r, c[m - 1].r, cm.r);
        if (cm.r - r <= tol) return {cm.r, m, true, false};
        return {r, m, false, false};
    }
    return {dir > 0 ? w : -w, c.size(), false, true};
}

}  // namespace

MemoryCurve::MemoryCurve() : corners_{{0.0, 0.0}} {}

MemoryCurve::MemoryCurve(std::vector<Corner> corners, std::vector<double> slopes, double support,
                         double pinned)
    : corners_(std::move(corners)), slopes_(std::move(slopes)), support_(support) {
    normalize(pinned);
}

void MemoryCurve::normalize(double pinned) {
    std::vector<Corner> c;
    std::vector<double> s;
    c.reserve(corners_.size());
    s.reserve(slopes_.size());
    c.push_back(corners_.front());
    for (std::size_t k = 1; k < corners_.size(); ++k) {
        const double slope = slopes_[k - 1];
        if (corners_[k].r <= c.back().r) {
            // zero-length segment: the next segment starts from the corner kept
            continue;
        }
        if (!s.empty() && s.back() == slope && c.back().r != pinned) {
            c.back() = corners_[k];
        } else {
            c.push_back(corners_[k]);
            s.push_back(slope);
        }
    }
    while (c.size() >= 2 && c.back().v == 0.0 && c[c.size() - 2].v == 0.0) {
        c.pop_back();
        s.pop_back();
    }
    corners_ = std::move(c);
    slopes_ = std::move(s);
    support_ = std::max(support_, corners_.back().r);
}

MemoryCurve MemoryCurve::from_corners(std::vector<Corner> corners, double support_radius) {
    if (corners.empty()) throw InvalidArgument("memory curve needs at least one corner");
    if (corners.front().r != 0.0) throw InvalidArgument("first corner must sit at r = 0");
    if (corners.back().v != 0.0) throw InvalidArgument("last corner must have value 0");
    if (!(support_radius >= 0.0) || !std::isfinite(support_radius)) {
        throw InvalidArgument("support radius must be finite and nonnegative");
    }
    if (corners.back().r > support_radius) {
        throw InvalidArgument("memory curve extends beyond its support radius");
    }
    std::vector<double> slopes;
    slopes.reserve(corners.size());
    for (std::size_t k = 0; k < corners.size(); ++k) {
        if (!std::isfinite(corners[k].r) || !std::isfinite(corners[k].v)) {
            throw InvalidArgument("memory curve corners must be finite");
        }
        if (k == 0) continue;
        const double dr = corners[k].r - corners[k - 1].r;
        if (!(dr > 0.0)) throw InvalidArgument("corner thresholds must be strictly increasing");
        const double slope = snap_slope((corners[k].v - corners[k - 1].v) / dr);
        if (std::abs(slope) > 1.0) {
            throw InvalidArgument("memory curve must be 1-Lipschitz in r");
        }
        slopes.push_back(slope);
    }
    return MemoryCurve(std::move(corners), std::move(slopes), support_radius);
}

double MemoryCurve::eval(double r) const {
    if (!(r >= 0.0)) throw InvalidArgument("threshold must be nonnegative");
    if (r >= corners_.back().r) return r == corners_.back().r ? corners_.back().v : 0.0;
    const auto it = std::upper_bound(corners_.begin(), corners_.end(), r,
                                     [](double x, const Corner& c) { return x < c.r; });
    const auto k = static_cast<std::size_t>(it - corners_.begin());
    const Corner& left = corners_[k - 1];
    if (r == left.r) return left.v;
    const Corner& right = corners_[k];
    return right.v + slopes_[k - 1] * (r - right.r);
}

double MemoryCurve::straight_depth(int sign) const {
    if (slopes_.empty() || slopes_.front() != -static_cast<double>(sign)) return 0.0;
    return corners_[1].r;
}

std::pair<MemoryCurve, PlayUpdateReport> play_update(const MemoryCurve& curve, double u) {
    if (!std::isfinite(u)) throw InvalidArgument("play input must be finite");
    const double u_prev = curve.input();
    if (u == u_prev) return {curve, {0.0, Direction::none}};

    const int dir = u > u_prev ? 1 : -1;
    const auto& c = curve.corners_;
    const auto& s = curve.slopes_;
    const DepthHit hit = find_depth(c, s, u, dir);
    const double new_slope = -static_cast<double>(dir);

    std::vector<Corner> corners{{0.0, u}};
    std::vector<double> slopes;
    if (hit.tail) {
        corners.push_back({hit.r, 0.0});
        slopes.push_back(new_slope);
    } else {
        std::size_t k = hit.corner;
        if (hit.on_corner) {
            corners.push_back(c[k]);
            slopes.push_back(new_slope);
            ++k;
        } else {
            corners.push_back({hit.r, u - dir * hit.r});
            slopes.push_back(new_slope);
        }
        for (; k < c.size(); ++k) {
            corners.push_back(c[k]);
            slopes.push_back(s[k - 1]);
        }
    }
    const double support = std::max(curve.support_, std::abs(u));
    const Direction direction = dir > 0 ? Direction::ascending : Direction::descending;
    return {MemoryCurve(std::move(corners), std::move(slopes), support), {hit.r, direction}};
}

double memory_depth(const MemoryCurve& curve, double w, Direction direction) {
    if (!std::isfinite(w)) throw InvalidArgument("memory_depth: input must be finite");
    const double u = curve.input();
    int dir = 0;
    switch (direction) {
        case Direction::ascending:
            if (w < u) throw InvalidArgument("memory_depth: ascending needs w >= curve(0)");
            dir = 1;
            break;
        case Direction::descending:
            if (w > u) throw InvalidArgument("memory_depth: descending needs w <= curve(0)");
            dir = -1;
            break;
        case Direction::none:
            throw InvalidArgument("memory_depth: direction must be ascending or descending");
    }
    if (w == u) return 0.0;
    return find_depth(curve.corners_, curve.slopes_, w, dir).r;
}

MemoryCurve curve_turning(double u0, double r0, int sign, double support) {
    if (sign != 1 && sign != -1) throw InvalidArgument("curve_turning: sign must be +1 or -1");
    if (!std::isfinite(u0) || !(r0 >= 0.0) || !std::isfinite(support)) {
        throw InvalidArgument("curve_turning: arguments must be finite, r0 >= 0");
    }
    if (r0 > support) throw InvalidArgument("curve_turning: r0 exceeds the support radius");
    const double v0 = u0 - sign * r0;
    const double end = r0 + std::abs(v0);
    if (end > support * (1.0 + 4.0 * kEps)) {
        throw InvalidArgument("curve_turning: return to zero does not fit within the support radius");
    }
    std::vector<Corner> corners{{0.0, u0}};
    std::vector<double> slopes;
    if (r0 > 0.0) {
        corners.push_back({r0, v0});
        slopes.push_back(-static_cast<double>(sign));
    }
    if (v0 != 0.0) {
        corners.push_back({end, 0.0});
        slopes.push_back(v0 > 0.0 ? -1.0 : 1.0);
    }
    return MemoryCurve(std::move(corners), std::move(slopes), std::max(support, end));
}

MemoryCurve curve_saturated(double v_star) {
    if (!std::isfinite(v_star)) throw InvalidArgument("curve_saturated: value must be finite");
    if (v_star == 0.0) return MemoryCurve{};
    return MemoryCurve::from_corners({{0.0, v_star}, {std::abs(v_star), 0.0}}, std::abs(v_star));
}

MemoryCurve backward_deform(const MemoryCurve& curve, double r0, double a, int sign) {
    if (sign != 1 && sign != -1) throw InvalidArgument("backward_deform: sign must be +1 or -1");
    if (!(r0 >= 0.0) || !std::isfinite(r0)) throw InvalidArgument("backward_deform: bad r0");
    if (!(a >= 0.0) || a > 0.5 * r0) throw InvalidArgument("backward_deform: a must lie in [0, r0/2]");
    const double u0 = curve.input();
    const double depth = curve.straight_depth(sign);
    if (depth < r0 - snap_tol(r0)) {
        throw InvalidArgument("backward_deform: curve does not have slope -sign on (0, r0)");
    }
    if (a == 0.0) return curve;

    const double lambda_r0 = curve.eval(r0);
    std::vector<Corner> corners{{0.0, u0 - sign * 2.0 * a},
                                {r0 - a, u0 - sign * (r0 + a)},
                                {r0, lambda_r0}};
    std::vector<double> slopes{-static_cast<double>(sign), static_cast<double>(sign)};

    const auto& c = curve.corners_;
    const auto& s = curve.slopes_;
    std::size_t k = 1;
    while (k < c.size() && c[k].r <= r0) ++k;
    for (; k < c.size(); ++k) {
        corners.push_back(c[k]);
        slopes.push_back(s[k - 1]);
    }
    // Keeping the corner at r0 lets the forward update land on it exactly.
    return MemoryCurve(std::move(corners), std::move(slopes), curve.support_, r0);
}

MemoryCurve play_sequence(MemoryCurve curve, std::span<const double> inputs) {
    for (double u : inputs) curve = play_update(curve, u).first;
    return curve;
}

SampledCurve::SampledCurve(const MemoryCurve& curve, std::vector<double> thresholds)
    : r_(std::move(thresholds)) {
    if (!std::is_sorted(r_.begin(), r_.end()) || (!r_.empty() && r_.front() < 0.0)) {
        throw InvalidArgument("threshold grid must be sorted and nonnegative");
    }
    v_.reserve(r_.size());
    for (double r : r_) v_.push_back(curve.eval(r));
}

void SampledCurve::update(double u) {
    if (!std::isfinite(u)) throw InvalidArgument("play input must be finite");
    for (std::size_t k = 0; k < r_.size(); ++k) {
        v_[k] = std::min(u + r_[k], std::max(v_[k], u - r_[k]));
    }
}

void write_curve_csv(std::ostream& os, const MemoryCurve& curve) {
    os << "# lambda, support=" << num(curve.support_radius()) << '\n';
    for (const Corner& c : curve.corners()) os << num(c.r) << ',' << num(c.v) << '\n';
}

MemoryCurve read_curve_csv(std::istream& is) {
    std::string line;
    double support = -1.0;
    std::vector<Corner> corners;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line.front() == '#') {
            const auto pos = line.find("support=");
            if (pos != std::string::npos) support = std::stod(line.substr(pos + 8));
            continue;
        }
        std::istringstream row(line);
        Corner c;
        char comma = 0;
        if (!(row >> c.r >> comma >> c.v) || comma != ',') {
            throw ConfigError("malformed memory curve row: " + line);
        }
        corners.push_back(c);
    }
    if (corners.empty()) throw ConfigError("memory curve file has no corners");
    if (support < 0.0) support = corners.back().r;
    return MemoryCurve::from_corners(std::move(corners), support);
}

}  // namespace hysterelax
