#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "doctest.h"
#include "hysterelax/convexifier.hpp"
#include "hysterelax/error.hpp"
#include "hysterelax/preisach.hpp"

using namespace hysterelax;

namespace {

// Composite Simpson with many panels; an oracle independent of the library table.
template <class F>
double simpson(F&& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
    return s * h / 3.0;
}

double erf_c() { return std::erf(1.0) * std::sqrt(std::numbers::pi) / 2.0; }

}  // namespace

TEST_CASE("zero profile gives the identity") {
    const Convexifier cx = Convexifier::build(ConvexityProfile::linear(0.0), 1.7);
    CHECK(cx.C() == doctest::Approx(1.0).epsilon(1e-14));
    for (double u : {-1.7, -1.0, -0.3, 0.0, 0.25, 1.1, 1.7}) {
        CHECK(cx.ghat(u) == doctest::Approx(u).epsilon(1e-14));
        CHECK(cx.g(u) == doctest::Approx(u).epsilon(1e-14));
        CHECK(cx.ghat_second(u) == 0.0);
    }
}

TEST_CASE("gaussian profile normalization") {
    const Convexifier cx = Convexifier::build(ConvexityProfile::linear(2.0), 1.0);
    const double oracle = simpson([](double s) { return std::exp(-s * s); }, 0.0, 1.0, 20000);
    CHECK(std::abs(cx.C() - oracle) <= 1e-8);
    CHECK(std::abs(cx.C() - erf_c()) <= 1e-11);
    CHECK(cx.ghat(1.0) == 1.0);
    CHECK(cx.ghat(-1.0) == -1.0);
    CHECK(cx.ghat(0.0) == 0.0);

    // bisection oracle on PhiHat(x) = C u with the closed form PhiHat = sqrt(pi)/2 erf(x)
    const double target = erf_c() * 0.5;
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (std::sqrt(std::numbers::pi) / 2.0 * std::erf(mid) < target ? lo : hi) = mid;
    }
    CHECK(std::abs(cx.ghat(0.5) - lo) <= 1e-10);
    CHECK(cx.ghat(0.5) == doctest::Approx(0.393).epsilon(2e-3));
    CHECK(cx.ghat(-0.5) == -cx.ghat(0.5));
}

TEST_CASE("ODE residual and identities") {
    const Convexifier cx = Convexifier::build(ConvexityProfile::linear(2.0), 1.0);
    for (int k = 0; k < 200; ++k) {
        const double u = -1.0 + 2.0 * (k + 0.5) / 200.0;
        CHECK(cx.ode_residual(u) <= 1e-6);
        CHECK(std::abs(cx.g(cx.ghat(u)) - u) <= 1e-10);
        CHECK(cx.ghat_prime(u) >= cx.C());
        // convex on [0, U], concave on [-U, 0]
        if (u > 0.0) CHECK(cx.ghat_second(u) >= 0.0);
        if (u < 0.0) CHECK(cx.ghat_second(u) <= 0.0);
        const double h = 1e-5;
        const double fd = (cx.g(std::min(u + h, 1.0)) - cx.g(std::max(u - h, -1.0))) /
                          (std::min(u + h, 1.0) - std::max(u - h, -1.0));
        CHECK(fd == doctest::Approx(cx.g_prime(u)).epsilon(1e-6));
        CHECK(cx.g_prime(u) >= cx.g_lower() - 1e-15);
        CHECK(cx.g_prime(u) <= cx.g_upper() + 1e-15);
        CHECK(std::abs(cx.g_second(u)) <= cx.g_curvature() + 1e-12);
    }
}

TEST_CASE("general profile matches the linear one") {
    const Convexifier a = Convexifier::build(ConvexityProfile::linear(2.0), 1.0);
    const Convexifier b = Convexifier::build(ConvexityProfile::from_function([](double v) { return 2.0 * v; }), 1.0);
    CHECK(b.C() == doctest::Approx(a.C()).epsilon(1e-11));
    CHECK(b.ghat(0.3) == doctest::Approx(a.ghat(0.3)).epsilon(1e-10));
}

TEST_CASE("invalid profiles are rejected") {
    CHECK_THROWS_AS(Convexifier::build(ConvexityProfile::from_function([](double v) { return v * v; }), 1.0),
                    InvalidArgument);
    CHECK_THROWS_AS(Convexifier::build(ConvexityProfile::from_function([](double v) { return -v; }), 1.0),
                    InvalidArgument);
    CHECK_THROWS_AS(Convexifier::build(ConvexityProfile::linear(1.0), 0.0), InvalidArgument);
    const Convexifier cx = Convexifier::build(ConvexityProfile::linear(1.0), 1.0);
    CHECK_THROWS_AS(cx.ghat(1.5), InvalidArgument);
}

TEST_CASE("profile detection") {
    const DensityModel g = DensityModel::gaussian(RadialProfile::constant(1.0, 2.0), 1.0);
    CHECK(detect_profile(g, 1.0).kappa == 2.0);
    CHECK(profile_residual(g, detect_profile(g, 1.0), 1.0) <= 1e-8);
    const DensityModel c = DensityModel::constant_in_v(RadialProfile::constant(1.0, 2.0));
    CHECK(detect_profile(c, 1.0).kappa == 0.0);
    CHECK(profile_residual(c, detect_profile(c, 1.0), 1.0) == 0.0);
    // a table sampled from a gaussian fits close to 2 beta
    std::vector<double> r{0.0, 1.0, 2.0};
    std::vector<double> v;
    for (int j = 0; j <= 80; ++j) v.push_back(-2.0 + j * 0.05);
    std::vector<double> vals;
    for (std::size_t i = 0; i < r.size(); ++i) {
        for (double vj : v) vals.push_back(std::exp(-0.5 * vj * vj));
    }
    const DensityModel t = DensityModel::tabulated(r, v, vals);
    CHECK(detect_profile(t, 1.0).kappa == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("composed major branches are convex and concave") {
    SUBCASE("gaussian density") {
        const DensityModel d = DensityModel::gaussian(RadialProfile::constant(1.0, 2.0), 1.0);
        const Convexifier cx = Convexifier::build(detect_profile(d, 1.0), 1.0);
        const std::vector<MemoryCurve> states{curve_saturated(-1.0), curve_saturated(1.0)};
        const ConvexityReport rep = verify_branch_convexity(d, cx, states);
        CHECK(rep.min_second_difference >= -1e-8);
        CHECK(rep.beta_estimate > 0.0);
        CHECK(rep.branches == 2);
    }
    SUBCASE("Prandtl-Ishlinskii") {
        const DensityModel d = DensityModel::constant_in_v(RadialProfile::constant(1.0, 2.0));
        const Convexifier cx = Convexifier::build(detect_profile(d, 1.0), 1.0);
        const std::vector<MemoryCurve> states{curve_saturated(-1.0), curve_saturated(1.0)};
        const ConvexityReport rep = verify_branch_convexity(d, cx, states);
        CHECK(rep.min_second_difference >= -1e-8);
        // ascending major branch is w^2/2 shifted: B'' = 1/2 * 2 / 2
        CHECK(rep.beta_estimate == doctest::Approx(0.5).epsilon(1e-6));
    }
    SUBCASE("minor-loop states") {
        const DensityModel d = DensityModel::gaussian(RadialProfile::constant(1.0, 2.0), 1.0);
        const Convexifier cx = Convexifier::build(detect_profile(d, 1.0), 1.0);
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<MemoryCurve> states;
        for (int k = 0; k < 10; ++k) {
            MemoryCurve c = curve_saturated(-1.0);
            for (int j = 0; j < 4; ++j) c = play_update(c, u(rng)).first;
            states.push_back(c);
        }
        const ConvexityReport rep = verify_branch_convexity(d, cx, states);
        CHECK(rep.min_second_difference >= -1e-8);
    }
    SUBCASE("inadmissible density") {
        const DensityModel d = DensityModel::gaussian(RadialProfile::constant(1.0, 2.0), 1.0);
        const Convexifier cx = Convexifier::build(ConvexityProfile::linear(0.0), 1.0);
        CHECK_THROWS_AS(verify_branch_convexity(d, cx, {curve_saturated(-1.0)}), InvalidArgument);
    }
}

TEST_CASE("composition reproduces the original outputs") {
    // G[u] = P[g(u)] with P = G o ghat
    const DensityModel d = DensityModel::gaussian(RadialProfile::constant(1.0, 2.0), 1.0);
    const Convexifier cx = Convexifier::build(detect_profile(d, 1.0), 1.0);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int seq = 0; seq < 10; ++seq) {
        std::vector<double> inputs;
        for (int k = 0; k < 8; ++k) inputs.push_back(u(rng));
        std::vector<double> through;
        for (double x : inputs) through.push_back(cx.ghat(cx.g(x)));
        const auto a = apply_sequence(d, MemoryCurve{}, inputs);
        const auto b = apply_sequence(d, MemoryCurve{}, through);
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            CHECK(b.outputs[k] == doctest::Approx(a.outputs[k]).epsilon(1e-10).scale(1.0));
        }
    }
}
