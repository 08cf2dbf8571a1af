#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wz/problem.hpp"

using namespace wz::problem;
using wz::grid::GridFunction;
using wz::grid::SpatialGrid;

namespace {

constexpr double kPi = std::numbers::pi;

const SpatialGrid kGrid(64, 2 * kPi);

GridFunction fn(double (*f)(double)) { return GridFunction::sample(kGrid, f); }

ProblemData simple(double a, double b, double b0) {
    ProblemData d;
    d.a = CoefficientField::constant(a);
    d.b = {CoefficientField::constant(b)};
    d.b0 = {CoefficientField::constant(b0)};
    return d;
}

void expect_close(const GridFunction& u, const GridFunction& v, double tol) {
    for (std::size_t j = 0; j < u.grid().size(); ++j) EXPECT_NEAR(u[j], v[j], tol) << "at j=" << j;
}

}  // namespace

TEST(Coefficient, Kinds) {
    EXPECT_TRUE(CoefficientField::constant(2.0).is_uniform());
    EXPECT_DOUBLE_EQ(CoefficientField::trig({{0, 0.4, 0.0}}).uniform_value(), 0.4);
    EXPECT_FALSE(CoefficientField::trig({{0, 0.4, 0.0}, {2, 0.1, 0.0}}).is_uniform());
    EXPECT_TRUE(CoefficientField::tabulated(std::vector<double>(8, 1.5)).is_uniform());
    EXPECT_THROW(CoefficientField::constant(NAN), std::invalid_argument);
    EXPECT_THROW(CoefficientField::trig({{-1, 1.0, 0.0}}), std::invalid_argument);
    EXPECT_THROW(CoefficientField::tabulated(std::vector<double>(8)).evaluate(kGrid), std::invalid_argument);
    const auto t = CoefficientField::trig({{1, 0.0, 2.0}}).scaled(0.5).evaluate(kGrid);
    EXPECT_NEAR(t[16], 1.0, 1e-15);
}

TEST(Operators, ApplyLOnSine) {
    ProblemData d = simple(1.0, 0.0, 0.0);
    d.a1 = CoefficientField::constant(2.0);
    d.a0 = CoefficientField::constant(3.0);
    const ProblemSpec spec(kGrid, d);
    const auto expected = GridFunction::sample(kGrid, [](double x) { return 2 * std::sin(x) + 2 * std::cos(x); });
    expect_close(apply_L(spec, fn(std::sin)), expected, 1e-12);
}

TEST(Operators, ApplyMProductWithTrigCoefficient) {
    ProblemData d = simple(0.5, 0.0, 0.0);
    d.b = {CoefficientField::trig({{0, 1.0, 0.0}, {1, 0.5, 0.0}})};
    d.b0 = {CoefficientField::constant(0.5)};
    const ProblemSpec spec(kGrid, d);
    const auto u = GridFunction::sample(kGrid, [](double x) { return std::sin(2 * x); });
    const auto expected = GridFunction::sample(kGrid, [](double x) {
        return (1.0 + 0.5 * std::cos(x)) * 2 * std::cos(2 * x) + 0.5 * std::sin(2 * x);
    });
    expect_close(apply_M(spec, 0, u), expected, 1e-12);
    EXPECT_THROW(apply_M(spec, 1, u), std::out_of_range);
}

TEST(Operators, StratonovichDriftOnSine) {
    const double c = 0.7, e = 0.2;
    const ProblemSpec spec(kGrid, simple(0.5, c, e));
    // L u = -0.5 sin; M M sin = (e^2 - c^2) sin + 2 c e cos.
    const auto expected = GridFunction::sample(kGrid, [&](double x) {
        return -0.5 * std::sin(x) + 0.5 * ((e * e - c * c) * std::sin(x) + 2 * c * e * std::cos(x));
    });
    expect_close(stratonovich_drift(spec, fn(std::sin)), expected, 1e-12);
}

TEST(Operators, StratonovichDriftWithFreeTerms) {
    ProblemData d = simple(0.0, 1.0, 0.0);
    d.f = GridFunction::constant(kGrid, 0.25);
    d.g = {fn(std::cos)};
    const ProblemSpec spec(kGrid, d);
    // u = 0: drift = f + (1/2) M g = 0.25 - 0.5 sin.
    const auto expected = GridFunction::sample(kGrid, [](double x) { return 0.25 - 0.5 * std::sin(x); });
    expect_close(stratonovich_drift(spec, GridFunction::zeros(kGrid)), expected, 1e-12);
    EXPECT_TRUE(spec.has_free_terms());
}

TEST(Operators, Linearity) {
    const ProblemSpec spec(kGrid, preset("two-driver-noncommuting", kGrid));
    const auto u = fn(std::sin), v = GridFunction::sample(kGrid, [](double x) { return std::cos(3 * x) + 0.1; });
    const auto lhs = apply_L(spec, 2.0 * u + -0.5 * v);
    const auto rhs = 2.0 * apply_L(spec, u) + -0.5 * apply_L(spec, v);
    expect_close(lhs, rhs, 1e-12);
    for (std::size_t k = 0; k < 2; ++k)
        expect_close(apply_M(spec, k, u + v), apply_M(spec, k, u) + apply_M(spec, k, v), 1e-12);
}

TEST(Operators, HandlesComposeConsistently) {
    const ProblemSpec spec(kGrid, preset("heat-multiplicative", kGrid));
    const auto u = fn(std::cos);
    const auto strat = OperatorHandle(spec, OperatorSelector::LStrat).apply(u);
    const auto sum = OperatorHandle(spec, OperatorSelector::L).apply(u) +
                     OperatorHandle(spec, OperatorSelector::MMCorrection).apply(u);
    expect_close(strat, sum, 1e-12);
    EXPECT_THROW(OperatorHandle(spec, OperatorSelector::M, 1), std::out_of_range);
}

TEST(Commutator, VanishesOnlyForCommutingPreset) {
    const auto u = GridFunction::sample(kGrid, [](double x) { return std::exp(std::sin(x)); });
    auto size = [&](const std::string& name) {
        const ProblemSpec spec(kGrid, preset(name, kGrid));
        const auto c = apply_M(spec, 0, apply_M(spec, 1, u)) - apply_M(spec, 1, apply_M(spec, 0, u));
        return c.max_abs();
    };
    EXPECT_LT(size("two-driver-commuting"), 1e-12);
    EXPECT_GT(size("two-driver-noncommuting"), 1e-2);
}

TEST(Structure, EllipticityAndParabolicity) {
    const auto e = check_ellipticity(ProblemSpec(kGrid, simple(0.5, 0.7, 0.0)));
    EXPECT_DOUBLE_EQ(e.lambda_hat, 0.5);
    EXPECT_TRUE(e.pass);
    EXPECT_FALSE(e.degenerate);

    ProblemData ito = simple(0.3, 1.0, 0.0);
    ito.form = NoiseForm::ito;
    const ProblemSpec is(kGrid, ito);
    EXPECT_NEAR(check_ellipticity(is).lambda_hat, -0.2, 1e-15);
    EXPECT_FALSE(check_ellipticity(is).pass);
    const auto p = check_parabolicity(is);
    EXPECT_NEAR(p.margin, -0.2, 1e-15);
    EXPECT_FALSE(p.pass);

    ProblemData ito0 = simple(0.0, 1.0, 0.0);
    ito0.form = NoiseForm::ito;
    EXPECT_NEAR(check_ellipticity(ProblemSpec(kGrid, ito0)).lambda_hat, -0.5, 1e-15);

    const auto deg = check_ellipticity(ProblemSpec(kGrid, preset("degenerate-transport", kGrid)));
    EXPECT_TRUE(deg.pass);
    EXPECT_TRUE(deg.degenerate);
    EXPECT_TRUE(deg.factorized);
}

TEST(Structure, ParabolicityExamples) {
    EXPECT_NEAR(check_parabolicity(ProblemSpec(kGrid, simple(1.0, 1.0, 0.0))).margin, 1.0, 1e-15);
    const auto deg = check_parabolicity(ProblemSpec(kGrid, simple(0.0, 1.0, 0.0)));
    EXPECT_EQ(deg.margin, 0.0);
    EXPECT_TRUE(deg.pass);
    ProblemData sine = simple(0.0, 0.0, 0.0);
    sine.a = CoefficientField::trig({{1, 0.0, 1.0}});
    const auto e = check_ellipticity(ProblemSpec(kGrid, sine));
    EXPECT_NEAR(e.lambda_hat, -1.0, 1e-15);
    EXPECT_FALSE(e.pass);
}

TEST(Structure, VariableCoefficientEllipticityMinimum) {
    ProblemData d = simple(0.0, 0.0, 0.0);
    d.a = CoefficientField::trig({{0, 0.3, 0.0}, {1, 0.2, 0.0}});
    // min over the grid of 0.3 + 0.2 cos x is at x = pi, a grid point.
    EXPECT_NEAR(check_ellipticity(ProblemSpec(kGrid, d)).lambda_hat, 0.1, 1e-15);
}

TEST(Structure, IntegrationByParts) {
    ProblemData d = simple(0.5, 0.0, 0.0);
    d.b = {CoefficientField::trig({{0, 0.4, 0.0}, {2, 0.1, 0.3}})};
    d.b0 = {CoefficientField::trig({{1, 0.2, -0.1}})};
    const ProblemSpec spec(kGrid, d);
    const auto u = GridFunction::sample(kGrid, [](double x) { return std::exp(std::cos(x)); });
    const auto v = GridFunction::sample(kGrid, [](double x) { return std::sin(x) + 0.3 * std::cos(4 * x); });
    EXPECT_LT(integration_by_parts_residual(spec, 0, u, v), 1e-10);
}

TEST(Structure, Factorization) {
    ProblemData d = simple(0.0, 0.0, 0.0);
    // (0.5 + 0.2 cos x)^2 = 0.27 + 0.2 cos x + 0.02 cos 2x
    d.a = CoefficientField::trig({{0, 0.27, 0.0}, {1, 0.2, 0.0}, {2, 0.02, 0.0}});
    d.sigma = std::vector<CoefficientField>{CoefficientField::trig({{0, 0.5, 0.0}, {1, 0.2, 0.0}})};
    EXPECT_LT(factorization_residual(ProblemSpec(kGrid, d)), 1e-15);
    d.a = CoefficientField::constant(0.27);
    EXPECT_NEAR(factorization_residual(ProblemSpec(kGrid, d)), 0.22, 1e-12);
    EXPECT_EQ(factorization_residual(ProblemSpec(kGrid, simple(1.0, 0.0, 0.0))), 0.0);
}

TEST(Validation, Errors) {
    ProblemData d = simple(1.0, 0.0, 0.0);
    d.d1 = 2;
    EXPECT_THROW(ProblemSpec(kGrid, d), std::invalid_argument);
    d = simple(1.0, 0.0, 0.0);
    d.d1 = 0;
    EXPECT_THROW(ProblemSpec(kGrid, d), std::invalid_argument);
    d = simple(1.0, 0.0, 0.0);
    d.g = {fn(std::sin), fn(std::cos)};
    EXPECT_THROW(ProblemSpec(kGrid, d), std::invalid_argument);
    d = simple(1.0, 0.0, 0.0);
    d.f = GridFunction::zeros(SpatialGrid(64, 1.0));
    EXPECT_THROW(ProblemSpec(kGrid, d), std::invalid_argument);
    d = simple(1.0, 0.0, 0.0);
    d.sigma = std::vector<CoefficientField>{};
    EXPECT_THROW(ProblemSpec(kGrid, d), std::invalid_argument);
}

TEST(Validation, EmptyNoiseDefaultsToZero) {
    ProblemData d;
    d.d1 = 3;
    d.a = CoefficientField::constant(1.0);
    const ProblemSpec spec(kGrid, d);
    EXPECT_EQ(spec.b(2).max_abs(), 0.0);
    EXPECT_EQ(spec.u0().max_abs(), 0.0);
    EXPECT_THROW(spec.b(3), std::out_of_range);
}

TEST(Presets, AllBuildAndUnknownThrows) {
    for (const auto& name : preset_names()) EXPECT_NO_THROW(ProblemSpec(kGrid, preset(name, kGrid))) << name;
    EXPECT_THROW(preset("nope", kGrid), std::invalid_argument);
    const ProblemSpec ou(kGrid, preset("ou-transport", kGrid));
    EXPECT_DOUBLE_EQ(ou.a()[0], 0.5);
    EXPECT_DOUBLE_EQ(ou.b(0)[0], 0.5);
    EXPECT_DOUBLE_EQ(ou.b0(0)[0], 0.3);
    EXPECT_TRUE(ou.drift_uniform() && ou.noise_uniform());
    EXPECT_FALSE(ProblemSpec(kGrid, preset("two-driver-commuting", kGrid)).noise_uniform());
}

TEST(Presets, OnGridResamplesData) {
    const ProblemSpec spec(SpatialGrid(64, 2 * kPi), preset("two-driver-noncommuting", kGrid));
    const auto fine = spec.on_grid(SpatialGrid(256, 2 * kPi));
    for (std::size_t j = 0; j < 64; ++j) {
        EXPECT_NEAR(fine.u0()[4 * j], spec.u0()[j], 1e-10);
        EXPECT_NEAR(fine.b(1)[4 * j], spec.b(1)[j], 1e-14);
    }
    EXPECT_THROW(spec.on_grid(SpatialGrid(64, 1.0)), std::invalid_argument);
}
