#include <stdexcept>

#include "wz/problem.hpp"

namespace wz::problem {

namespace {

// Initial bump: its periodic tails at distance L/2 stay below 1e-12 on L = 2 pi.
constexpr double kBumpWidth = 0.4;

GridFunction default_u0(const SpatialGrid& grid) {
    return grid::gaussian_bump(grid, 0.5 * grid.length(), kBumpWidth, 1.0);
}

ProblemData constant_problem(double a, double b, double b0, const SpatialGrid& grid) {
    ProblemData d;
    d.d1 = 1;
    d.a = CoefficientField::constant(a);
    d.b = {CoefficientField::constant(b)};
    d.b0 = {CoefficientField::constant(b0)};
    d.u0 = default_u0(grid);
    return d;
}

ProblemData two_driver(bool commuting, const SpatialGrid& grid) {
    ProblemData d;
    d.d1 = 2;
    d.a = CoefficientField::constant(0.5);
    const auto b1 = CoefficientField::trig({{0, 0.4, 0.0}, {1, 0.3, 0.0}});
    // Quarter-period shift of b1; the commuting variant uses a multiple of b1 instead.
    const auto b2 = commuting ? b1.scaled(0.8) : CoefficientField::trig({{0, 0.4, 0.0}, {1, 0.0, 0.3}});
    d.b = {b1, b2};
    d.b0 = {CoefficientField::constant(0.0), CoefficientField::constant(0.0)};
    d.u0 = default_u0(grid);
    d.g = {grid::gaussian_bump(grid, 0.5 * grid.length(), 0.6, 0.2), GridFunction::zeros(grid)};
    return d;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"heat-multiplicative",     "ou-transport",           "degenerate-transport",
            "two-driver-noncommuting", "two-driver-commuting",   "zero-noise"};
}

ProblemData preset(const std::string& name, const SpatialGrid& grid) {
    if (name == "heat-multiplicative") return constant_problem(1.0, 0.7, 0.2, grid);
    if (name == "ou-transport") return constant_problem(0.5, 0.5, 0.3, grid);
    if (name == "zero-noise") return constant_problem(0.5, 0.0, 0.0, grid);
    if (name == "degenerate-transport") {
        ProblemData d = constant_problem(0.0, 1.0, 0.0, grid);
        d.sigma = std::vector<CoefficientField>{CoefficientField::constant(0.0)};
        return d;
    }
    if (name == "two-driver-noncommuting") return two_driver(false, grid);
    if (name == "two-driver-commuting") return two_driver(true, grid);
    throw std::invalid_argument("unknown problem preset '" + name + "'");
}

}  // namespace wz::problem
