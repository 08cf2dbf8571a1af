#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "wz/grid.hpp"

using namespace wz::grid;

namespace {

constexpr double kPi = std::numbers::pi;

// Direct O(n^2) spectral derivative, independent of FFTW.
std::vector<double> naive_derivative(const std::vector<double>& v, double length, int order) {
    const std::size_t n = v.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
        std::complex<double> c{};
        for (std::size_t j = 0; j < n; ++j) c += v[j] * std::polar(1.0, -2.0 * kPi * double(m * j) / double(n));
        long km = m <= n / 2 ? long(m) : long(m) - long(n);
        if (m == n / 2 && order % 2 == 1) km = 0;
        const double xi = 2.0 * kPi * double(km) / length;
        std::complex<double> sym = std::pow(std::complex<double>(0.0, xi), order);
        if (km == 0 && order > 0) sym = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            out[j] += (sym * c * std::polar(1.0, 2.0 * kPi * double(m * j) / double(n))).real() / double(n);
    }
    return out;
}

GridFunction random_smooth(const SpatialGrid& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> c(8), s(8);
    for (int k = 0; k < 8; ++k) c[k] = u(rng), s[k] = u(rng);
    return GridFunction::sample(g, [&](double x) {
        double v = 0.0;
        for (int k = 0; k < 8; ++k) v += c[k] * std::cos(2 * kPi * k * x / g.length()) + s[k] * std::sin(2 * kPi * k * x / g.length());
        return v;
    });
}

}  // namespace

TEST(SpatialGrid, RejectsSmallOrNonPowerOfTwo) {
    EXPECT_THROW(SpatialGrid(4, 1.0), std::invalid_argument);
    EXPECT_THROW(SpatialGrid(24, 1.0), std::invalid_argument);
    EXPECT_THROW(SpatialGrid(16, 0.0), std::invalid_argument);
    const SpatialGrid g(16, 2.0);
    EXPECT_EQ(g.modes(), 9u);
    EXPECT_DOUBLE_EQ(g.point(4), 0.5);
}

TEST(Derivative, OrderZeroIsIdentity) {
    const SpatialGrid g(32, 3.0);
    const auto u = random_smooth(g, 1);
    const auto d = derivative(u, 0);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(d[j], u[j], 1e-14);
}

TEST(Derivative, SineToCosineOnGeneralLength) {
    const double L = 3.0;
    const SpatialGrid g(64, L);
    const auto u = GridFunction::sample(g, [&](double x) { return std::sin(2 * kPi * x / L); });
    const auto d = derivative(u, 1);
    for (std::size_t j = 0; j < g.size(); ++j)
        EXPECT_NEAR(d[j], (2 * kPi / L) * std::cos(2 * kPi * g.point(j) / L), 1e-12);
}

TEST(Derivative, ConstantHasZeroDerivatives) {
    const SpatialGrid g(16, 1.0);
    for (int order = 1; order <= 4; ++order) EXPECT_LT(derivative(GridFunction::constant(g, 2.5), order).max_abs(), 1e-13);
}

TEST(Derivative, OddOrdersZeroNyquist) {
    const SpatialGrid g(16, 2 * kPi);
    const auto u = GridFunction::sample(g, [](double x) { return std::cos(8.0 * x); });
    EXPECT_LT(derivative(u, 1).max_abs(), 1e-12);
    EXPECT_NEAR(derivative(u, 2)[0], -64.0, 1e-9);
}

TEST(Derivative, MatchesDirectTransform) {
    const SpatialGrid g(32, 2.5);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    std::vector<double> v(32);
    for (auto& x : v) x = normal(rng);
    const GridFunction u(g, v);
    for (int order = 1; order <= 3; ++order) {
        const auto ref = naive_derivative(v, g.length(), order);
        const auto d = derivative(u, order);
        for (std::size_t j = 0; j < 32; ++j) EXPECT_NEAR(d[j], ref[j], 1e-9 * std::pow(2 * kPi * 16 / 2.5, order));
    }
}

TEST(SobolevNorm, ConstantIsCSquaredTimesLength) {
    const SpatialGrid g(32, 5.0);
    for (int m = 0; m <= 3; ++m) EXPECT_NEAR(sobolev_norm_squared(GridFunction::constant(g, -1.5), m), 2.25 * 5.0, 1e-12);
}

TEST(SobolevNorm, SineH1IsTwoPi) {
    const SpatialGrid g(32, 2 * kPi);
    const auto u = GridFunction::sample(g, [](double x) { return std::sin(x); });
    EXPECT_NEAR(sobolev_norm_squared(u, 1), 2 * kPi, 1e-12);
    EXPECT_NEAR(sobolev_norm_squared(u, 0), kPi, 1e-12);
}

TEST(SobolevNorm, ZeroAndNegativeIndex) {
    const SpatialGrid g(16, 1.0);
    EXPECT_EQ(sobolev_norm_squared(GridFunction::zeros(g), 3), 0.0);
    EXPECT_THROW(sobolev_norm_squared(GridFunction::zeros(g), -1), std::invalid_argument);
}

TEST(SobolevNorm, ParsevalAgreesWithGridSumOfDirectDerivatives) {
    const SpatialGrid g(32, 2.5);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> normal;
    std::vector<double> v(32);
    for (auto& x : v) x = normal(rng);
    const GridFunction u(g, v);
    for (int m = 0; m <= 3; ++m) {
        double direct = 0.0;
        for (int a = 0; a <= m; ++a) {
            const auto d = a == 0 ? v : naive_derivative(v, g.length(), a);
            for (double x : d) direct += x * x * g.spacing();
        }
        EXPECT_NEAR(sobolev_norm_squared(u, m) / direct, 1.0, 1e-12);
        EXPECT_NEAR(sobolev_norm_squared_direct(u, m) / direct, 1.0, 1e-12);
    }
}

TEST(SobolevNorm, MonotoneInIndexAndRecursive) {
    const SpatialGrid g(64, 4.0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto u = random_smooth(g, seed);
        for (int m = 0; m < 4; ++m) {
            EXPECT_LE(sobolev_norm(u, m), sobolev_norm(u, m + 1));
            const double rhs = sobolev_norm_squared(u, m) + sobolev_norm_squared(derivative(u, m + 1), 0);
            EXPECT_NEAR(sobolev_norm_squared(u, m + 1) / rhs, 1.0, 1e-12);
        }
    }
}

TEST(Inner, PolarizationSymmetryAndOrthogonality) {
    const SpatialGrid g(32, 2 * kPi);
    const auto s1 = GridFunction::sample(g, [](double x) { return std::sin(x); });
    const auto s2 = GridFunction::sample(g, [](double x) { return std::sin(2 * x); });
    EXPECT_NEAR(inner(s1, s2, 0), 0.0, 1e-13);
    const auto u = random_smooth(g, 3), v = random_smooth(g, 4);
    for (int m = 0; m <= 2; ++m) {
        EXPECT_NEAR(inner(u, u, m), sobolev_norm_squared(u, m), 1e-10);
        EXPECT_NEAR(inner(u, v, m), inner(v, u, m), 1e-12);
        const double pol = 0.25 * (sobolev_norm_squared(u + v, m) - sobolev_norm_squared(u - v, m));
        EXPECT_NEAR(inner(u, v, m), pol, 1e-9);
    }
}

TEST(Transform, RoundTrip) {
    for (std::size_t n : {8u, 64u, 512u}) {
        const SpatialGrid g(n, 1.0);
        std::mt19937_64 rng(n);
        std::normal_distribution<double> normal;
        std::vector<double> v(n);
        for (auto& x : v) x = normal(rng);
        const GridFunction u(g, v);
        const auto back = GridFunction::from_spectrum(g, u.spectrum());
        for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(back[j], v[j], 1e-12);
    }
}

TEST(Transform, SpectrumOfCosineIsUnnormalized) {
    const SpatialGrid g(16, 1.0);
    const auto u = GridFunction::sample(g, [](double x) { return std::cos(2 * kPi * 3 * x); });
    EXPECT_NEAR(u.spectrum()[3].real(), 8.0, 1e-12);
    EXPECT_NEAR(std::abs(u.spectrum()[2]), 0.0, 1e-12);
}

TEST(GaussianBump, Examples) {
    const SpatialGrid g(256, 2 * kPi);
    EXPECT_EQ(gaussian_bump(g, 1.0, 0.3, 0.0).max_abs(), 0.0);
    const auto b = gaussian_bump(g, g.point(100), 0.3, 1.7);
    EXPECT_DOUBLE_EQ(b[100], 1.7);
    // int exp(-x^2/w^2) dx = w sqrt(pi)
    EXPECT_NEAR(sobolev_norm_squared(b, 0), 1.7 * 1.7 * 0.3 * std::sqrt(kPi), 1e-12);
}

TEST(GaussianBump, PeriodicDistance) {
    const SpatialGrid g(64, 2.0);
    const auto b = gaussian_bump(g, 0.0, 0.1, 1.0);
    EXPECT_NEAR(b[1], b[63], 1e-15);
}

TEST(Resample, UpThenDownIsExactForResolvedFields) {
    const SpatialGrid coarse(32, 3.0), fine(128, 3.0);
    const auto u = random_smooth(coarse, 7);
    const auto up = resample(u, fine);
    const auto direct = random_smooth(fine, 7);
    for (std::size_t j = 0; j < fine.size(); ++j) EXPECT_NEAR(up[j], direct[j], 1e-12);
    const auto down = resample(up, coarse);
    for (std::size_t j = 0; j < coarse.size(); ++j) EXPECT_NEAR(down[j], u[j], 1e-12);
}

TEST(GridFunction, ArithmeticAndGridMismatch) {
    const SpatialGrid g(16, 1.0), h(32, 1.0);
    const auto u = GridFunction::constant(g, 2.0), v = GridFunction::constant(g, 3.0);
    EXPECT_DOUBLE_EQ((u * v)[5], 6.0);
    EXPECT_DOUBLE_EQ((u - v)[5], -1.0);
    EXPECT_DOUBLE_EQ((0.5 * u + v)[0], 4.0);
    EXPECT_THROW(u + GridFunction::zeros(h), std::invalid_argument);
    EXPECT_THROW(GridFunction(g, std::vector<double>(5)), std::invalid_argument);
}

TEST(GridFunction, ConcurrentSpectrumAccess) {
    const SpatialGrid g(256, 1.0);
    const auto u = random_smooth(g, 11);
    std::vector<double> seen(8);
    {
        std::vector<std::jthread> pool;
        for (int t = 0; t < 8; ++t) pool.emplace_back([&, t] { seen[t] = std::abs(u.spectrum()[3]); });
    }
    for (double s : seen) EXPECT_EQ(s, seen[0]);
}

TEST(FieldCsv, Headers) {
    const SpatialGrid g(8, 1.0);
    std::ostringstream a, b;
    write_field_csv(a, GridFunction::constant(g, 1.0));
    write_spectrum_csv(b, GridFunction::constant(g, 1.0));
    EXPECT_EQ(a.str().substr(0, 8), "x,value\n");
    EXPECT_EQ(b.str().substr(0, 11), "mode,re,im\n");
    const std::string text = a.str();
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 9);
}
