#include "wz/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace wz::problem {

using grid::derivative;

CoefficientField CoefficientField::constant(double value) {
    if (!std::isfinite(value)) throw std::invalid_argument("coefficient must be finite");
    CoefficientField c;
    c.kind_ = Kind::constant;
    c.value_ = value;
    return c;
}

CoefficientField CoefficientField::tabulated(std::vector<double> values) {
    for (double v : values)
        if (!std::isfinite(v)) throw std::invalid_argument("tabulated coefficient must be finite");
    CoefficientField c;
    c.kind_ = Kind::tabulated;
    c.table_ = std::move(values);
    return c;
}

CoefficientField CoefficientField::trig(std::vector<TrigTerm> terms) {
    for (const auto& t : terms) {
        if (t.mode < 0) throw std::invalid_argument("trig coefficient modes must be >= 0");
        if (!std::isfinite(t.cos_amp) || !std::isfinite(t.sin_amp)) {
            throw std::invalid_argument("trig coefficient amplitudes must be finite");
        }
    }
    CoefficientField c;
    c.kind_ = Kind::trig;
    c.terms_ = std::move(terms);
    return c;
}

bool CoefficientField::is_uniform() const {
    switch (kind_) {
        case Kind::constant: return true;
        case Kind::tabulated:
            return std::all_of(table_.begin(), table_.end(), [&](double v) { return v == table_.front(); });
        case Kind::trig:
            return std::all_of(terms_.begin(), terms_.end(), [](const TrigTerm& t) {
                return t.mode == 0 || (t.cos_amp == 0.0 && t.sin_amp == 0.0);
            });
    }
    return false;
}

double CoefficientField::uniform_value() const {
    switch (kind_) {
        case Kind::constant: return value_;
        case Kind::tabulated: return table_.empty() ? 0.0 : table_.front();
        case Kind::trig: {
            double v = 0.0;
            for (const auto& t : terms_)
                if (t.mode == 0) v += t.cos_amp;
            return v;
        }
    }
    return 0.0;
}

GridFunction CoefficientField::evaluate(const SpatialGrid& grid) const {
    switch (kind_) {
        case Kind::constant: return GridFunction::constant(grid, value_);
        case Kind::tabulated:
            if (table_.size() != grid.size()) {
                throw std::invalid_argument("tabulated coefficient has " + std::to_string(table_.size()) +
                                            " values, grid has " + std::to_string(grid.size()));
            }
            return GridFunction(grid, table_);
        case Kind::trig: {
            const double k0 = 2.0 * std::numbers::pi / grid.length();
            return GridFunction::sample(grid, [&](double x) {
                double v = 0.0;
                for (const auto& t : terms_) {
                    const double arg = k0 * t.mode * x;
                    v += t.cos_amp * std::cos(arg) + t.sin_amp * std::sin(arg);
                }
                return v;
            });
        }
    }
    throw std::logic_error("unreachable coefficient kind");
}

CoefficientField CoefficientField::scaled(double c) const {
    CoefficientField out = *this;
    out.value_ *= c;
    for (double& v : out.table_) v *= c;
    for (auto& t : out.terms_) {
        t.cos_amp *= c;
        t.sin_amp *= c;
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

GridFunction field_on(const CoefficientField& c, const SpatialGrid& grid, const SpatialGrid& home) {
    if (c.kind() == CoefficientField::Kind::tabulated && !(grid == home)) {
        return grid::resample(c.evaluate(home), grid);
    }
    return c.evaluate(grid);
}

GridFunction data_on(const std::optional<GridFunction>& f, const SpatialGrid& grid) {
    if (!f) return GridFunction::zeros(grid);
    if (f->grid().length() != grid.length()) throw std::invalid_argument("free term domain length mismatch");
    return f->grid() == grid ? *f : grid::resample(*f, grid);
}

bool all_zero(const GridFunction& u) {
    return std::all_of(u.values().begin(), u.values().end(), [](double v) { return v == 0.0; });
}

}  // namespace

ProblemSpec::ProblemSpec(SpatialGrid grid, ProblemData data)
    : grid_(grid),
      data_(std::move(data)),
      a_(GridFunction::zeros(grid)),
      a1_(GridFunction::zeros(grid)),
      a0_(GridFunction::zeros(grid)),
      f_(GridFunction::zeros(grid)),
      u0_(GridFunction::zeros(grid)) {
    const std::size_t d1 = data_.d1;
    if (d1 == 0) throw std::invalid_argument("driver count d1 must be >= 1");
    if (data_.b.empty()) data_.b.assign(d1, CoefficientField::constant(0.0));
    if (data_.b0.empty()) data_.b0.assign(d1, CoefficientField::constant(0.0));
    if (data_.b.size() != d1) throw std::invalid_argument("need one b coefficient per driver");
    if (data_.b0.size() != d1) throw std::invalid_argument("need one b0 coefficient per driver");
    if (!data_.g.empty() && data_.g.size() != d1) throw std::invalid_argument("need one g free term per driver");

    a_ = data_.a.evaluate(grid_);
    a1_ = data_.a1.evaluate(grid_);
    a0_ = data_.a0.evaluate(grid_);
    for (std::size_t k = 0; k < d1; ++k) {
        b_.push_back(data_.b[k].evaluate(grid_));
        b0_.push_back(data_.b0[k].evaluate(grid_));
        g_.push_back(data_.g.empty() ? GridFunction::zeros(grid_) : data_on(data_.g[k], grid_));
    }
    f_ = data_on(data_.f, grid_);
    u0_ = data_on(data_.u0, grid_);
    if (data_.sigma) {
        if (data_.sigma->empty()) throw std::invalid_argument("sigma factorization needs at least one column");
        for (const auto& s : *data_.sigma) s.evaluate(grid_);
    }
}

const GridFunction& ProblemSpec::b(std::size_t k) const {
    if (k >= b_.size()) throw std::out_of_range("driver index out of range");
    return b_[k];
}

const GridFunction& ProblemSpec::b0(std::size_t k) const {
    if (k >= b0_.size()) throw std::out_of_range("driver index out of range");
    return b0_[k];
}

const GridFunction& ProblemSpec::g(std::size_t k) const {
    if (k >= g_.size()) throw std::out_of_range("driver index out of range");
    return g_[k];
}

GridFunction ProblemSpec::sigma_diffusion() const {
    if (!data_.sigma) throw std::logic_error("problem has no sigma factorization");
    GridFunction sum = GridFunction::zeros(grid_);
    for (const auto& s : *data_.sigma) {
        const GridFunction v = s.evaluate(grid_);
        sum = sum + v * v;
    }
    return sum;
}

bool ProblemSpec::drift_uniform() const {
    return data_.a.is_uniform() && data_.a1.is_uniform() && data_.a0.is_uniform();
}

bool ProblemSpec::noise_uniform() const {
    for (std::size_t k = 0; k < d1(); ++k)
        if (!data_.b[k].is_uniform() || !data_.b0[k].is_uniform()) return false;
    return true;
}

bool ProblemSpec::has_free_terms() const {
    if (!all_zero(f_)) return true;
    return std::any_of(g_.begin(), g_.end(), [](const GridFunction& g) { return !all_zero(g); });
}

ProblemSpec ProblemSpec::on_grid(const SpatialGrid& target) const {
    if (target.length() != grid_.length()) throw std::invalid_argument("on_grid needs equal domain lengths");
    ProblemData d = data_;
    auto retab = [&](CoefficientField& c) {
        if (c.kind() == CoefficientField::Kind::tabulated) {
            const GridFunction r = field_on(c, target, grid_);
            c = CoefficientField::tabulated({r.values().begin(), r.values().end()});
        }
    };
    retab(d.a);
    retab(d.a1);
    retab(d.a0);
    for (auto& c : d.b) retab(c);
    for (auto& c : d.b0) retab(c);
    if (d.sigma)
        for (auto& c : *d.sigma) retab(c);
    if (d.f) d.f = data_on(d.f, target);
    if (d.u0) d.u0 = data_on(d.u0, target);
    for (auto& g : d.g) g = data_on(g, target);
    return ProblemSpec(target, std::move(d));
}

// ---------------------------------------------------------------------------
// Operators

namespace {

void require_grid(const ProblemSpec& spec, const GridFunction& u) {
    if (!(spec.grid() == u.grid())) throw std::invalid_argument("grid function is not on the problem grid");
}

}  // namespace

GridFunction apply_L(const ProblemSpec& spec, const GridFunction& u) {
    require_grid(spec, u);
    return spec.a() * derivative(u, 2) + spec.a1() * derivative(u, 1) + spec.a0() * u;
}

GridFunction apply_M(const ProblemSpec& spec, std::size_t k, const GridFunction& u) {
    require_grid(spec, u);
    if (k >= spec.d1()) throw std::out_of_range("driver index " + std::to_string(k) + " out of range");
    return spec.b(k) * derivative(u, 1) + spec.b0(k) * u;
}

GridFunction stratonovich_drift(const ProblemSpec& spec, const GridFunction& u) {
    GridFunction out = apply_L(spec, u) + spec.f();
    for (std::size_t k = 0; k < spec.d1(); ++k) {
        const GridFunction corr = apply_M(spec, k, apply_M(spec, k, u)) + apply_M(spec, k, spec.g(k));
        out = out + 0.5 * corr;
    }
    return out;
}

OperatorHandle::OperatorHandle(const ProblemSpec& s, OperatorSelector sel, std::size_t driver)
    : spec(&s), selector(sel), k(driver) {
    if (sel == OperatorSelector::M && driver >= s.d1()) {
        throw std::out_of_range("operator M(k) needs k < d1");
    }
}

GridFunction OperatorHandle::apply(const GridFunction& u) const {
    switch (selector) {
        case OperatorSelector::L: return apply_L(*spec, u);
        case OperatorSelector::M: return apply_M(*spec, k, u);
        case OperatorSelector::MMCorrection: {
            GridFunction out = GridFunction::zeros(spec->grid());
            for (std::size_t r = 0; r < spec->d1(); ++r) out = out + 0.5 * apply_M(*spec, r, apply_M(*spec, r, u));
            return out;
        }
        case OperatorSelector::LStrat: {
            GridFunction out = apply_L(*spec, u);
            for (std::size_t r = 0; r < spec->d1(); ++r) out = out + 0.5 * apply_M(*spec, r, apply_M(*spec, r, u));
            return out;
        }
    }
    throw std::logic_error("unreachable operator selector");
}

// ---------------------------------------------------------------------------
// Structural checks

namespace {

constexpr double kRoundingTol = 1e-12;

double min_value(const GridFunction& u) {
    return *std::min_element(u.values().begin(), u.values().end());
}

GridFunction half_b_squared(const ProblemSpec& spec) {
    GridFunction s = GridFunction::zeros(spec.grid());
    for (std::size_t k = 0; k < spec.d1(); ++k) s = s + 0.5 * (spec.b(k) * spec.b(k));
    return s;
}

// Second-order coefficient of the approximating (Stratonovich-form) operator.
GridFunction approximating_diffusion(const ProblemSpec& spec) {
    return spec.form() == NoiseForm::ito ? spec.a() - half_b_squared(spec) : spec.a();
}

}  // namespace

EllipticityReport check_ellipticity(const ProblemSpec& spec) {
    const double lambda = min_value(approximating_diffusion(spec));
    const bool factorized = spec.has_sigma() && factorization_residual(spec) <= kRoundingTol;
    return {lambda, lambda >= -kRoundingTol, lambda <= kRoundingTol, factorized};
}

ParabolicityReport check_parabolicity(const ProblemSpec& spec) {
    const GridFunction hb = half_b_squared(spec);
    const GridFunction ito = spec.form() == NoiseForm::ito ? spec.a() : spec.a() + hb;
    const double margin = min_value(ito - hb);
    return {margin, margin >= -kRoundingTol, min_value(approximating_diffusion(spec))};
}

double integration_by_parts_residual(const ProblemSpec& spec, std::size_t k, const GridFunction& u,
                                     const GridFunction& v) {
    const GridFunction mbar = 2.0 * spec.b0(k) - derivative(spec.b(k), 1);
    const double lhs = grid::inner(apply_M(spec, k, u), v, 0) + grid::inner(u, apply_M(spec, k, v), 0);
    const double rhs = grid::inner(mbar * u, v, 0);
    return std::abs(lhs - rhs);
}

double factorization_residual(const ProblemSpec& spec) {
    if (!spec.has_sigma()) return 0.0;
    const GridFunction diff = approximating_diffusion(spec) - spec.sigma_diffusion();
    return diff.max_abs();
}

}  // namespace wz::problem
