#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "wz/grid.hpp"

namespace wz::problem {

using grid::GridFunction;
using grid::SpatialGrid;

/// One term c*cos(2 pi m x / L) + s*sin(2 pi m x / L) of a periodic trig polynomial.
struct TrigTerm {
    int mode = 0;
    double cos_amp = 0.0;
    double sin_amp = 0.0;
};

/**
 * @brief Time-independent coefficient a(x) on the periodic domain.
 */
class CoefficientField {
public:
    enum class Kind { constant, tabulated, trig };

    CoefficientField() = default;

    static CoefficientField constant(double value);
    static CoefficientField tabulated(std::vector<double> values);
    static CoefficientField trig(std::vector<TrigTerm> terms);

    Kind kind() const { return kind_; }
    /// True when the field does not vary in x (constant kind or mode-0-only trig).
    bool is_uniform() const;
    /// The constant value; only meaningful when is_uniform().
    double uniform_value() const;

    GridFunction evaluate(const SpatialGrid& grid) const;

    /// Same field multiplied by c.
    CoefficientField scaled(double c) const;

    const std::vector<TrigTerm>& terms() const { return terms_; }

private:
    Kind kind_ = Kind::constant;
    double value_ = 0.0;
    std::vector<double> table_;
    std::vector<TrigTerm> terms_;
};

/// Which form the stored second-order coefficient `a` is written in.
enum class NoiseForm {
    stratonovich,  ///< a is the drift diffusion of the Stratonovich / approximating equation
    ito,           ///< a is the full Ito-form diffusion, correction already included
};

/// Raw description of one SPDE instance before validation.
struct ProblemData {
    std::size_t d1 = 1;
    CoefficientField a = CoefficientField::constant(0.0);
    CoefficientField a1 = CoefficientField::constant(0.0);
    CoefficientField a0 = CoefficientField::constant(0.0);
    std::vector<CoefficientField> b;   ///< first-order noise coefficient per driver
    std::vector<CoefficientField> b0;  ///< zeroth-order noise coefficient per driver
    std::optional<std::vector<CoefficientField>> sigma;  ///< a = sum_r sigma_r^2
    std::optional<GridFunction> f;
    std::vector<GridFunction> g;  ///< empty means zero for every driver
    std::optional<GridFunction> u0;
    NoiseForm form = NoiseForm::stratonovich;
};

/**
 * @brief Validated SPDE instance with every coefficient evaluated on the grid.
 *
 * Drift L = a D^2 + a1 D + a0, noise M^k = b_k D + b0_k. Immutable.
 */
class ProblemSpec {
public:
    ProblemSpec(SpatialGrid grid, ProblemData data);

    const SpatialGrid& grid() const { return grid_; }
    std::size_t d1() const { return data_.d1; }
    const ProblemData& data() const { return data_; }
    NoiseForm form() const { return data_.form; }

    const GridFunction& a() const { return a_; }
    const GridFunction& a1() const { return a1_; }
    const GridFunction& a0() const { return a0_; }
    const GridFunction& b(std::size_t k) const;
    const GridFunction& b0(std::size_t k) const;
    const GridFunction& f() const { return f_; }
    const GridFunction& g(std::size_t k) const;
    const GridFunction& u0() const { return u0_; }

    bool has_sigma() const { return data_.sigma.has_value(); }
    /// sum_r sigma_r^2 on the grid; requires has_sigma().
    GridFunction sigma_diffusion() const;

    bool drift_uniform() const;
    bool noise_uniform() const;
    bool has_free_terms() const;

    /// Same problem on another grid (coefficients and data re-evaluated / resampled spectrally).
    ProblemSpec on_grid(const SpatialGrid& grid) const;

private:
    SpatialGrid grid_;
    ProblemData data_;
    GridFunction a_, a1_, a0_;
    std::vector<GridFunction> b_, b0_, g_;
    GridFunction f_, u0_;
};

/// L u = a D^2 u + a1 D u + a0 u.
GridFunction apply_L(const ProblemSpec& spec, const GridFunction& u);

/// M^k u = b_k D u + b0_k u.
GridFunction apply_M(const ProblemSpec& spec, std::size_t k, const GridFunction& u);

/// L u + f + 1/2 sum_k (M^k M^k u + M^k g^k): drift of the limit equation in Ito form.
GridFunction stratonovich_drift(const ProblemSpec& spec, const GridFunction& u);

enum class OperatorSelector { L, M, MMCorrection, LStrat };

/// Named operator of a problem, applied to grid functions.
struct OperatorHandle {
    const ProblemSpec* spec;
    OperatorSelector selector;
    std::size_t k = 0;

    OperatorHandle(const ProblemSpec& s, OperatorSelector sel, std::size_t driver = 0);
    GridFunction apply(const GridFunction& u) const;
};

struct EllipticityReport {
    double lambda_hat;
    bool pass;
    bool degenerate;
    bool factorized;
};

/// Minimum over the grid of the second-order coefficient of the approximating equation.
EllipticityReport check_ellipticity(const ProblemSpec& spec);

struct ParabolicityReport {
    /// min over grid of (Ito diffusion - 1/2 sum_k b_k^2).
    double margin;
    bool pass;
    /// Ellipticity minimum for the approximating equation, reported alongside.
    double approximating_lambda;
};

ParabolicityReport check_parabolicity(const ProblemSpec& spec);

/// |(Mu, v) + (u, Mv) - (mbar u, v)| for driver k, mbar = 2 b0 - D b, grid quadrature.
double integration_by_parts_residual(const ProblemSpec& spec, std::size_t k, const GridFunction& u,
                                     const GridFunction& v);

/// max |a - sum_r sigma_r^2| on the grid; 0 when no factorization is supplied.
double factorization_residual(const ProblemSpec& spec);

/// Names of the built-in problem presets.
std::vector<std::string> preset_names();

/// Built-in problem on the given grid. Throws std::invalid_argument for unknown names.
ProblemData preset(const std::string& name, const SpatialGrid& grid);

}  // namespace wz::problem
