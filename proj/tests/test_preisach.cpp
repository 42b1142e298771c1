#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "hysterelax/error.hpp"
#include "hysterelax/preisach.hpp"

using namespace hysterelax;

namespace {

// rho = 1 on r in (0, 1), |v| < 2.
DensityModel pi_density() {
    return DensityModel::constant_in_v(RadialProfile::constant(1.0, 1.0), 2.0);
}

DensityModel gauss_density() {
    return DensityModel::gaussian(RadialProfile::constant(1.0, 2.0), 1.0, 0.25);
}

DensityModel table_density() {
    std::vector<double> r{0.0, 0.7, 1.5};
    std::vector<double> v{-2.0, -0.5, 0.0, 1.0, 2.0};
    std::vector<double> val{0.4, 1.0, 1.2, 0.9, 0.3,  //
                            0.6, 0.8, 1.0, 1.1, 0.5,  //
                            0.2, 0.3, 0.5, 0.4, 0.2};
    return DensityModel::tabulated(r, v, val, -0.1);
}

// Brute-force output via a fine midpoint rule over r and v.
double brute_output(const DensityModel& d, const MemoryCurve& c, int nr, int nv) {
    const double rmax = d.support_r();
    double total = 0.0;
    for (int i = 0; i < nr; ++i) {
        const double r = (i + 0.5) * rmax / nr;
        const double xi = c.eval(r);
        double inner = 0.0;
        for (int j = 0; j < nv; ++j) {
            const double v = (j + 0.5) * xi / nv;
            inner += d.rho(r, v);
        }
        total += inner * xi / nv;
    }
    return d.gbar() + total * rmax / nr;
}

MemoryCurve random_curve(std::mt19937_64& rng, int steps, double amp) {
    std::uniform_real_distribution<double> u(-amp, amp);
    MemoryCurve c;
    for (int k = 0; k < steps; ++k) c = play_update(c, u(rng)).first;
    return c;
}

}  // namespace

TEST_CASE("psi closed forms") {
    const DensityModel pi = DensityModel::constant_in_v(RadialProfile::constant(1.0, 1.0), 2.0);
    CHECK(psi(pi, 0.5, 0.0) == 0.0);
    CHECK(psi(pi, 0.5, 1.5) == 1.5);
    CHECK(psi(pi, 0.5, 3.0) == 2.0);
    const DensityModel g = DensityModel::gaussian(RadialProfile::constant(1.0, 1.0), 1.0);
    // midpoint rule oracle for int_0^3 exp(-v^2) dv
    double oracle = 0.0;
    const int n = 200000;
    for (int j = 0; j < n; ++j) {
        const double v = (j + 0.5) * 3.0 / n;
        oracle += std::exp(-v * v) * 3.0 / n;
    }
    CHECK(psi(g, 0.3, 3.0) == doctest::Approx(oracle).epsilon(1e-9));
    CHECK(psi(g, 0.3, 3.0) == doctest::Approx(std::sqrt(std::numbers::pi) / 2.0).epsilon(1e-4));
    CHECK(psi(g, 0.3, -1.0) == doctest::Approx(-psi(g, 0.3, 1.0)));
}

TEST_CASE("Prandtl-Ishlinskii closed forms") {
    const DensityModel d = pi_density();
    const MemoryCurve half = play_update(MemoryCurve{}, 0.5).first;
    CHECK(std::abs(output(d, half) - 0.125) <= 1e-12);
    const MemoryCurve up = play_update(MemoryCurve{}, 1.0).first;
    CHECK(std::abs(output(d, up) - 0.5) <= 1e-12);
    const MemoryCurve down = play_update(up, 0.0).first;
    CHECK(std::abs(output(d, down) - 0.25) <= 1e-12);
    CHECK(std::abs(energy(d, up) - 1.0 / 6.0) <= 1e-12);
    CHECK(energy(d, MemoryCurve{}) == 0.0);
    CHECK(output(d, MemoryCurve{}) == 0.0);
}

TEST_CASE("output agrees with brute-force integration") {
    std::mt19937_64 rng(29);
    for (const DensityModel& d : {pi_density(), gauss_density(), table_density()}) {
        for (int trial = 0; trial < 10; ++trial) {
            const MemoryCurve c = random_curve(rng, 6, 1.8);
            CHECK(output(d, c) == doctest::Approx(brute_output(d, c, 4000, 400)).epsilon(1e-4));
        }
    }
}

TEST_CASE("apply_sequence") {
    const DensityModel d = pi_density();
    const std::vector<double> inputs{1.0, 0.0};
    const SequenceResult res = apply_sequence(d, MemoryCurve{}, inputs);
    REQUIRE(res.outputs.size() == 2);
    CHECK(res.outputs[0] == doctest::Approx(0.5));
    CHECK(res.outputs[1] == doctest::Approx(0.25));
    CHECK(res.final_curve == play_sequence(MemoryCurve{}, inputs));

    const std::vector<double> flat(5, 0.0);
    for (double g : apply_sequence(d, MemoryCurve{}, flat).outputs) CHECK(g == 0.0);
    CHECK_THROWS_AS(apply_sequence(d, MemoryCurve{}, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("return-point memory") {
    std::mt19937_64 rng(31);
    const DensityModel d = gauss_density();
    for (int trial = 0; trial < 50; ++trial) {
        const MemoryCurve base = random_curve(rng, 5, 1.5);
        const double a = base.input();
        const double b = a + (trial % 2 ? 0.4 : -0.4);
        const auto res = apply_sequence(d, base, std::vector<double>{b, a, b});
        CHECK(res.outputs[2] == res.outputs[0]);
    }
}

TEST_CASE("nemytskii, increment and branches") {
    const DensityModel d = pi_density();
    const MemoryCurve virgin;
    CHECK(nemytskii(d, virgin, 1.0) == doctest::Approx(0.5));
    CHECK(nemytskii(d, virgin, 0.0) == output(d, virgin));
    for (double w : {0.0, 0.2, 0.5, 0.9, 1.0}) {
        CHECK(branch(d, virgin, w, Direction::ascending) == doctest::Approx(w * w / 2.0).epsilon(1e-14));
    }
    CHECK_THROWS_AS(branch(d, curve_saturated(0.5), 0.2, Direction::ascending), InvalidArgument);
    CHECK_THROWS_AS(branch(d, curve_saturated(0.5), 0.7, Direction::descending), InvalidArgument);

    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> u(-1.8, 1.8);
    for (const DensityModel& dd : {pi_density(), gauss_density(), table_density()}) {
        for (int trial = 0; trial < 30; ++trial) {
            const MemoryCurve prev = random_curve(rng, 5, 1.8);
            const double w = u(rng);
            const double inc = nemytskii_increment(dd, prev, w);
            CHECK(inc == doctest::Approx(nemytskii(dd, prev, w) - output(dd, prev)).epsilon(1e-10).scale(1.0));
        }
    }
}

TEST_CASE("branch additivity") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> step(0.0, 0.6);
    const DensityModel d = gauss_density();
    for (int trial = 0; trial < 30; ++trial) {
        const MemoryCurve prev = random_curve(rng, 5, 1.5);
        const double w0 = prev.input();
        const double w1 = w0 + step(rng);
        const double w2 = w1 + step(rng);
        const MemoryCurve mid = play_update(prev, w1).first;
        const double lhs = branch(d, prev, w1, Direction::ascending) + branch(d, mid, w2, Direction::ascending);
        CHECK(lhs == doctest::Approx(branch(d, prev, w2, Direction::ascending)).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("nemytskii derivative") {
    const DensityModel d = pi_density();
    CHECK(nemytskii_derivative(d, MemoryCurve{}, 0.0) == 0.0);
    CHECK(nemytskii_derivative(d, MemoryCurve{}, 0.5) == doctest::Approx(0.5));

    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> u(-1.8, 1.8);
    for (const DensityModel& dd : {gauss_density(), table_density()}) {
        int checked = 0;
        while (checked < 100) {
            const MemoryCurve prev = random_curve(rng, 5, 1.8);
            const double w = u(rng);
            if (std::abs(w - prev.input()) < 1e-2) continue;
            const double h = 1e-6;
            const double fd = (nemytskii(dd, prev, w + h) - nemytskii(dd, prev, w - h)) / (2.0 * h);
            const double exact = nemytskii_derivative(dd, prev, w);
            CHECK(exact >= 0.0);
            CHECK(std::abs(fd - exact) <= 1e-6);
            ++checked;
        }
    }
}

TEST_CASE("turning-point degeneracy") {
    const DensityModel d = gauss_density();
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 20; ++trial) {
        const MemoryCurve prev = random_curve(rng, 4, 1.5);
        CHECK(nemytskii_derivative(d, prev, prev.input()) == 0.0);
        // reversing the last move: the first segment has slope -(last direction)
        const int dir = prev.slopes().front() > 0.0 ? 1 : -1;
        {
            std::vector<double> ratios;
            for (double eps : {1e-2, 1e-3, 1e-4}) {
                ratios.push_back(nemytskii_derivative(d, prev, prev.input() + dir * eps) / eps);
            }
            // derivative ~ eps * rho(0, u0) / 2 near the turning point
            CHECK(ratios[1] / ratios[2] == doctest::Approx(1.0).epsilon(0.05));
            CHECK(ratios[0] / ratios[2] < 2.0);
            CHECK(ratios[0] / ratios[2] > 0.5);
        }
    }
}

TEST_CASE("energy inequality and monotonicity sandwich") {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (const DensityModel& d : {pi_density(), gauss_density(), table_density()}) {
        const double cst = monotonicity_constant(d, 0.0, 1.5);
        for (int seq = 0; seq < 20; ++seq) {
            MemoryCurve c;
            double g_prev = output(d, c);
            double e_prev = energy(d, c);
            for (int i = 0; i < 20; ++i) {
                const double w = u(rng);
                const double du = w - c.input();
                c = play_update(c, w).first;
                const double g = output(d, c);
                const double e = energy(d, c);
                const double dg = g - g_prev;
                CHECK(dg * w - (e - e_prev) >= -1e-10);
                CHECK(du * dg >= dg * dg / cst - 1e-12);
                CHECK(du * dg <= cst * du * du + 1e-12);
                CHECK(std::abs(g - d.gbar()) <= output_bound(d, 0.0, 1.5));
                g_prev = g;
                e_prev = e;
            }
        }
    }
}

TEST_CASE("order preservation") {
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    std::uniform_real_distribution<double> gap(0.0, 0.3);
    const DensityModel d = table_density();
    for (int seq = 0; seq < 30; ++seq) {
        MemoryCurve a;
        MemoryCurve b;
        for (int i = 0; i < 15; ++i) {
            const double w = u(rng);
            a = play_update(a, w).first;
            b = play_update(b, w + gap(rng)).first;
            CHECK(output(d, a) <= output(d, b) + 1e-14);
            for (int k = 0; k <= 100; ++k) CHECK(a.eval(0.04 * k) <= b.eval(0.04 * k));
        }
    }
}

TEST_CASE("initial energy bound") {
    const DensityModel d = gauss_density();
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const MemoryCurve c = random_curve(rng, 5, 1.5);
        const double e = energy(d, c);
        CHECK(e >= 0.0);
        CHECK(e <= initial_energy_bound(d, c) + 1e-14);
        CHECK(initial_energy_bound(d, c) <= 0.5 * d.rho1() * std::pow(c.support_radius(), 3) + 1e-14);
    }
}

TEST_CASE("ascending derivative jumps up at a wiped corner") {
    const DensityModel d = pi_density();
    // memory 0 -> 0.6 -> 0.2: crossing 0.6 on the way up erases the corner
    const MemoryCurve prev = play_sequence(MemoryCurve{}, std::vector<double>{0.6, 0.2});
    const double h = 1e-7;
    const double left = nemytskii_derivative(d, prev, 0.6 - h);
    const double right = nemytskii_derivative(d, prev, 0.6 + h);
    CHECK(right >= left);
    CHECK(right - left == doctest::Approx(0.4).epsilon(1e-5));
}
