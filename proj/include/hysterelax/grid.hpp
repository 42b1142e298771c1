#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace hysterelax {

/// Uniform structured grid on [0, Lx] (1D) or [0, Lx] x [0, Ly] (2D).
///
/// Node (i, j) has index j * nx + i. Each node carries a lumped volume weight
/// (trapezoid rule over the domain) and a boundary weight (trapezoid rule over
/// the boundary; in 1D the two end points have weight 1). The Robin coefficient
/// b is stored per node and used on boundary nodes only.
class Grid {
public:
    using Coefficient = std::function<double(double x, double y)>;

    static Grid line(double length, int nodes, const Coefficient& b);
    static Grid rectangle(double lx, double ly, int nx, int ny, const Coefficient& b);

    int dim() const { return dim_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    double length_x() const { return lx_; }
    double length_y() const { return ly_; }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * ny_; }
    std::size_t index(int i, int j = 0) const { return static_cast<std::size_t>(j) * nx_ + i; }

    double x(std::size_t n) const { return (n % nx_) * hx_; }
    double y(std::size_t n) const { return dim_ == 1 ? 0.0 : (n / nx_) * hy_; }
    bool on_boundary(std::size_t n) const { return boundary_weight_[n] > 0.0; }

    const std::vector<double>& weights() const { return weight_; }
    const std::vector<double>& boundary_weights() const { return boundary_weight_; }
    const std::vector<double>& robin() const { return b_; }
    /// Boundary integral of b.
    double robin_mass() const;

    /// Samples f at every node.
    std::vector<double> sample(const Coefficient& f) const;

private:
    Grid() = default;
    void finish(const Coefficient& b);

    int dim_ = 1;
    int nx_ = 2;
    int ny_ = 1;
    double lx_ = 1.0;
    double ly_ = 0.0;
    double hx_ = 1.0;
    double hy_ = 1.0;
    std::vector<double> weight_;
    std::vector<double> boundary_weight_;
    std::vector<double> b_;
};

/// Runs body(k) for k in [0, n) on up to `threads` threads. Each index is
/// handled by exactly one call, so results written per index are deterministic.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

/// Thread count from HYSTERELAX_THREADS if set, otherwise `fallback`.
int thread_count(int fallback);

}  // namespace hysterelax
