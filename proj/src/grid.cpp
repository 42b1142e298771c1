#include "hysterelax/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "hysterelax/error.hpp"

namespace hysterelax {

Grid Grid::line(double length, int nodes, const Coefficient& b) {
    if (!(length > 0.0) || !std::isfinite(length)) throw InvalidArgument("grid length must be positive");
    if (nodes < 2) throw InvalidArgument("grid needs at least 2 nodes");
    Grid g;
    g.dim_ = 1;
    g.nx_ = nodes;
    g.ny_ = 1;
    g.lx_ = length;
    g.hx_ = length / (nodes - 1);
    g.hy_ = 1.0;
    const std::size_t n = g.size();
    g.weight_.assign(n, g.hx_);
    g.weight_.front() = g.weight_.back() = 0.5 * g.hx_;
    g.boundary_weight_.assign(n, 0.0);
    g.boundary_weight_.front() = g.boundary_weight_.back() = 1.0;
    g.finish(b);
    return g;
}

Grid Grid::rectangle(double lx, double ly, int nx, int ny, const Coefficient& b) {
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly)) {
        throw InvalidArgument("grid extents must be positive");
    }
    if (nx < 2 || ny < 2) throw InvalidArgument("grid needs at least 2 nodes per direction");
    Grid g;
    g.dim_ = 2;
    g.nx_ = nx;
    g.ny_ = ny;
    g.lx_ = lx;
    g.ly_ = ly;
    g.hx_ = lx / (nx - 1);
    g.hy_ = ly / (ny - 1);
    auto wx = [&](int i) { return (i == 0 || i == nx - 1) ? 0.5 * g.hx_ : g.hx_; };
    auto wy = [&](int j) { return (j == 0 || j == ny - 1) ? 0.5 * g.hy_ : g.hy_; };
    g.weight_.assign(g.size(), 0.0);
    g.boundary_weight_.assign(g.size(), 0.0);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const std::size_t k = g.index(i, j);
            g.weight_[k] = wx(i) * wy(j);
            double s = 0.0;
            if (j == 0 || j == ny - 1) s += wx(i);
            if (i == 0 || i == nx - 1) s += wy(j);
            g.boundary_weight_[k] = s;
        }
    }
    g.finish(b);
    return g;
}

void Grid::finish(const Coefficient& b) {
    b_.assign(size(), 0.0);
    for (std::size_t k = 0; k < size(); ++k) {
        if (!on_boundary(k)) continue;
        const double v = b ? b(x(k), y(k)) : 0.0;
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("Robin coefficient b must be finite and >= 0");
        b_[k] = v;
    }
}

double Grid::robin_mass() const {
    double total = 0.0;
    for (std::size_t k = 0; k < size(); ++k) total += boundary_weight_[k] * b_[k];
    return total;
}

std::vector<double> Grid::sample(const Coefficient& f) const {
    std::vector<double> out(size());
    for (std::size_t k = 0; k < size(); ++k) out[k] = f(x(k), y(k));
    return out;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), n);
    if (workers <= 1) {
        for (std::size_t k = 0; k < n; ++k) body(k);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                const std::size_t end = std::min(n, (w + 1) * chunk);
                for (std::size_t k = w * chunk; k < end; ++k) body(k);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

int thread_count(int fallback) {
    if (const char* env = std::getenv("HYSTERELAX_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
        throw ConfigError(std::string("HYSTERELAX_THREADS must be a positive integer, got '") + env + "'");
    }
    return std::max(fallback, 1);
}

}  // namespace hysterelax
