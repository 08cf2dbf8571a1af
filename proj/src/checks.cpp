#include "wz/checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "wz/grid.hpp"
#include "wz/noise.hpp"
#include "wz/problem.hpp"
#include "wz/solver.hpp"

namespace wz::checks {

namespace {

using grid::GridFunction;
using grid::SpatialGrid;
using grid::Spectrum;
using noise::MultiPath;
using noise::TimeGrid;
using problem::CoefficientField;
using problem::ProblemData;
using problem::ProblemSpec;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Context {
    std::uint64_t seed;
    bool fault;
};

using CheckFn = std::function<CheckResult(const Context&)>;

CheckResult verdict(double value, double tol, std::string detail = {}) {
    CheckResult r;
    r.value = value;
    r.tolerance = tol;
    r.pass = std::isfinite(value) && value <= tol;
    r.detail = std::move(detail);
    return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

/// Smooth random trig field with a few modes.
GridFunction random_field(const SpatialGrid& g, std::mt19937_64& rng, int modes) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<problem::TrigTerm> terms;
    for (int m = 0; m <= modes; ++m) terms.push_back({m, u(rng), m == 0 ? 0.0 : u(rng)});
    return CoefficientField::trig(terms).evaluate(g);
}

// --- noise ------------------------------------------------------------------

CheckResult antisymmetry(const Context& c) {
    const TimeGrid tg(1.0, 1 << 12);
    const MultiPath w = noise::sample_wiener(c.seed, 3, tg);
    auto bundle = noise::make_bundle(w, noise::polygonal_approx(w, 16));
    if (c.fault) bundle.area.at(0, 1, tg.steps() / 2) += 1e-3;
    double worst = 0.0;
    for (const noise::MatrixPath* p : {&bundle.area, &bundle.area_n})
        for (std::size_t t = 0; t < tg.points(); ++t)
            for (std::size_t i = 0; i < 3; ++i)
                for (std::size_t j = 0; j < 3; ++j) worst = std::max(worst, std::abs((*p)(i, j, t) + (*p)(j, i, t)));
    return verdict(worst, 0.0, "max |A^ij + A^ji| over A and A_n");
}

CheckResult d1_collapse(const Context& c) {
    const TimeGrid tg(1.0, 1 << 12);
    const MultiPath w = noise::sample_wiener(c.seed, 1, tg);
    const auto bundle = noise::make_bundle(w, noise::smoothed_approx(w, 32));
    double worst = 0.0;
    for (std::size_t t = 0; t < tg.points(); ++t)
        worst = std::max({worst, std::abs(bundle.area(0, 0, t)), std::abs(bundle.area_n(0, 0, t))});
    return verdict(worst, 0.0, "max |A| for d1 = 1");
}

CheckResult polygonal_knots(const Context& c) {
    const TimeGrid tg(1.0, 1 << 12);
    const MultiPath w = noise::sample_wiener(c.seed, 2, tg);
    double worst = 0.0;
    for (std::size_t n : {8, 64, 512}) {
        const MultiPath wn = noise::polygonal_approx(w, n);
        const std::size_t per = tg.steps() / n;
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t kk = 0; kk < n; ++kk) worst = std::max(worst, std::abs(wn(k, (kk + 1) * per) - w(k, kk * per)));
    }
    return verdict(worst, 0.0, "max |W_n(t_{k+1}) - W(t_k)|");
}

CheckResult polygonal_adaptedness(const Context& c) {
    const TimeGrid tg(1.0, 1 << 12);
    const MultiPath w = noise::sample_wiener(c.seed, 1, tg);
    const std::size_t n = 32, per = tg.steps() / n, k = 11;
    std::vector<double> s(w.samples().begin(), w.samples().end());
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> normal;
    for (std::size_t j = k * per + 1; j < tg.points(); ++j) s[j] += normal(rng);
    const MultiPath perturbed(tg, 1, std::move(s), noise::PathKind::wiener);
    const MultiPath a = noise::polygonal_approx(w, n), b = noise::polygonal_approx(perturbed, n);
    double worst = 0.0;
    for (std::size_t j = 0; j <= (k + 1) * per; ++j) worst = std::max(worst, std::abs(a(0, j) - b(0, j)));
    return verdict(worst, 0.0, "W_n change on [0, t_{k+1}] after perturbing W on (t_k, T]");
}

CheckResult remark_identity(const Context& c) {
    // Matched paths: the coarse path is the fine one subsampled by 4.
    constexpr std::size_t kCoarse = 1 << 14, kFine = 1 << 16, kReplicas = 16;
    double sum_coarse = 0.0, sum_fine = 0.0;
    for (std::size_t r = 0; r < kReplicas; ++r) {
        const TimeGrid fine_grid(1.0, kFine), coarse_grid(1.0, kCoarse);
        const MultiPath w = noise::sample_wiener(noise::split_seed(c.seed, r), 2, fine_grid);
        std::vector<double> sub(2 * coarse_grid.points());
        for (std::size_t k = 0; k < 2; ++k)
            for (std::size_t j = 0; j < coarse_grid.points(); ++j) sub[k * coarse_grid.points() + j] = w(k, 4 * j);
        const MultiPath wc(coarse_grid, 2, std::move(sub), noise::PathKind::wiener);
        for (const auto& [path, acc] : {std::pair{&w, &sum_fine}, std::pair{&wc, &sum_coarse}}) {
            const auto res = noise::remark_identity_residual(noise::make_bundle(*path, noise::polygonal_approx(*path, 16)));
            *acc += *std::max_element(res.begin(), res.end());
        }
    }
    const double ratio = sum_fine / sum_coarse;
    return verdict(ratio, 0.6, "mean residual 2^16 / 2^14 (O(dt^1/2) predicts 0.5)");
}

CheckResult scaling(const Context& c) {
    const TimeGrid tg(1.0, 1 << 12);
    const double s = 3.0;
    const MultiPath w = noise::sample_wiener(c.seed, 2, tg);
    const MultiPath ws = w.scaled(s);
    const auto b1 = noise::make_bundle(w, noise::polygonal_approx(w, 16));
    const auto b2 = noise::make_bundle(ws, noise::polygonal_approx(ws, 16));
    double worst = rel(b2.sup_w_err, s * b1.sup_w_err);
    for (std::size_t t = 0; t < tg.points(); t += 7) {
        for (std::size_t i = 0; i < 2; ++i) {
            for (std::size_t j = 0; j < 2; ++j) {
                const double half = i == j ? 0.5 * tg.time(t) : 0.0;
                worst = std::max({worst, rel(b2.area(i, j, t), s * s * b1.area(i, j, t)),
                                  rel(b2.area_n(i, j, t), s * s * b1.area_n(i, j, t)),
                                  rel(b2.bn(i, j, t), s * s * b1.bn(i, j, t)),
                                  rel(b2.sn(i, j, t) + half, s * s * (b1.sn(i, j, t) + half))});
            }
        }
    }
    return verdict(worst, 1e-12, "c = 3: A, A_n, B_n, S_n + t/2 scale by c^2, sup|W - W_n| by c");
}

// --- grid -------------------------------------------------------------------

CheckResult parseval(const Context& c) {
    std::mt19937_64 rng(c.seed);
    double worst = 0.0;
    for (std::size_t n : {16, 64, 256}) {
        const SpatialGrid g(n, kTwoPi);
        for (int rep = 0; rep < 3; ++rep) {
            const GridFunction u = random_field(g, rng, static_cast<int>(n / 4));
            for (int m = 0; m <= 3; ++m) {
                const double spectral = grid::sobolev_norm_squared(u, m);
                worst = std::max(worst, std::abs(spectral - grid::sobolev_norm_squared_direct(u, m)) / spectral);
            }
        }
    }
    return verdict(worst, 1e-12, "relative gap, spectral vs grid-sum norms, m = 0..3");
}

CheckResult sobolev_examples(const Context&) {
    const SpatialGrid g(64, kTwoPi);
    const double cst = 1.7;
    double worst = 0.0;
    for (int m = 0; m <= 3; ++m)
        worst = std::max(worst, rel(grid::sobolev_norm_squared(GridFunction::constant(g, cst), m), cst * cst * kTwoPi));
    const auto s = GridFunction::sample(g, [](double x) { return std::sin(x); });
    worst = std::max(worst, rel(grid::sobolev_norm_squared(s, 1), 2.0 * std::numbers::pi));
    worst = std::max(worst, grid::sobolev_norm_squared(GridFunction::zeros(g), 2));
    const auto s2 = GridFunction::sample(g, [](double x) { return std::sin(2.0 * x); });
    worst = std::max(worst, std::abs(grid::inner(s, s2, 0)));
    const SpatialGrid fine(256, kTwoPi);
    const double amp = 0.8, width = 0.3;
    const double bump = grid::sobolev_norm_squared(grid::gaussian_bump(fine, std::numbers::pi, width, amp), 0);
    worst = std::max(worst, rel(bump, amp * amp * width * std::sqrt(std::numbers::pi)));
    return verdict(worst, 1e-12, "constant, sin, zero, orthogonality, Gaussian bump");
}

CheckResult norm_monotonicity(const Context& c) {
    std::mt19937_64 rng(c.seed + 1);
    const SpatialGrid g(128, 3.0);
    double worst = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const GridFunction u = random_field(g, rng, 20);
        for (int m = 0; m < 4; ++m) worst = std::max(worst, grid::sobolev_norm(u, m) - grid::sobolev_norm(u, m + 1));
    }
    return verdict(worst, 0.0, "max of |u|_m - |u|_{m+1}");
}

CheckResult norm_recursion(const Context& c) {
    std::mt19937_64 rng(c.seed + 2);
    const SpatialGrid g(128, kTwoPi);
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        const GridFunction u = random_field(g, rng, 30);
        for (int m = 0; m < 3; ++m) {
            const double lhs = grid::sobolev_norm_squared(u, m + 1);
            const double rhs = grid::sobolev_norm_squared(u, m) + grid::sobolev_norm_squared(grid::derivative(u, m + 1), 0);
            worst = std::max(worst, std::abs(lhs - rhs) / lhs);
        }
    }
    return verdict(worst, 1e-12, "|u|_{m+1}^2 vs |u|_m^2 + |D^{m+1} u|_0^2");
}

CheckResult round_trip(const Context& c) {
    std::mt19937_64 rng(c.seed + 3);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (std::size_t n : {8, 128, 1024}) {
        const SpatialGrid g(n, 1.0);
        std::vector<double> v(n);
        for (auto& x : v) x = normal(rng);
        const GridFunction u(g, v);
        const GridFunction back = GridFunction::from_spectrum(g, u.spectrum());
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            num = std::max(num, std::abs(back[j] - v[j]));
            den = std::max(den, std::abs(v[j]));
        }
        worst = std::max(worst, num / den);
    }
    return verdict(worst, 1e-12, "max relative round-trip error");
}

// --- problem ----------------------------------------------------------------

ProblemSpec trig_noise_spec(const SpatialGrid& g) {
    ProblemData d;
    d.a = CoefficientField::constant(1.0);
    d.b = {CoefficientField::trig({{0, 0.5, 0.0}, {1, 0.3, -0.2}, {2, 0.0, 0.1}})};
    d.b0 = {CoefficientField::trig({{0, 0.1, 0.0}, {1, 0.0, 0.4}})};
    return ProblemSpec(g, std::move(d));
}

CheckResult integration_by_parts(const Context& c) {
    const SpatialGrid g(64, kTwoPi);
    const ProblemSpec spec = trig_noise_spec(g);
    std::mt19937_64 rng(c.seed + 4);
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
        const GridFunction u = random_field(g, rng, 6), v = random_field(g, rng, 6);
        const double scale = grid::sobolev_norm(u, 1) * grid::sobolev_norm(v, 1);
        worst = std::max(worst, problem::integration_by_parts_residual(spec, 0, u, v) / scale);
    }
    return verdict(worst, 1e-12, "|(Mu,v) + (u,Mv) - (mbar u,v)| / (|u|_1 |v|_1), mbar = 2 b0 - Db");
}

CheckResult commutator(const Context& c) {
    const SpatialGrid g(64, kTwoPi);
    ProblemData d;
    d.d1 = 2;
    d.a = CoefficientField::constant(1.0);
    d.b = {CoefficientField::constant(0.7), CoefficientField::constant(-1.3)};
    d.b0 = {CoefficientField::constant(0.0), CoefficientField::constant(0.0)};
    const ProblemSpec spec(g, std::move(d));
    std::mt19937_64 rng(c.seed + 5);
    const GridFunction u = random_field(g, rng, 10);
    const GridFunction diff = problem::apply_M(spec, 0, problem::apply_M(spec, 1, u)) -
                              problem::apply_M(spec, 1, problem::apply_M(spec, 0, u));
    return verdict(diff.max_abs() / grid::derivative(u, 2).max_abs(), 1e-13, "M^1 M^2 u - M^2 M^1 u, constant b");
}

CheckResult factorization(const Context&) {
    const SpatialGrid g(64, kTwoPi);
    ProblemData d;
    // (0.5 + 0.2 cos x)^2 = 0.27 + 0.2 cos x + 0.02 cos 2x
    d.a = CoefficientField::trig({{0, 0.27, 0.0}, {1, 0.2, 0.0}, {2, 0.02, 0.0}});
    d.sigma = std::vector<CoefficientField>{CoefficientField::trig({{0, 0.5, 0.0}, {1, 0.2, 0.0}})};
    d.b = {CoefficientField::constant(0.0)};
    const ProblemSpec spec(g, std::move(d));
    return verdict(problem::factorization_residual(spec), 1e-14, "max |a - sum sigma_r^2|");
}

// --- solver -----------------------------------------------------------------

CheckResult transport_isometry(const Context& c) {
    const SpatialGrid g(64, kTwoPi);
    ProblemData d = problem::preset("degenerate-transport", g);
    d.b = {CoefficientField::constant(0.8)};
    const ProblemSpec spec(g, std::move(d));
    const TimeGrid tg(1.0, 1 << 12);
    const MultiPath w = noise::sample_wiener(c.seed, 1, tg);
    double worst = 0.0;
    for (noise::Scheme scheme : {noise::Scheme::polygonal, noise::Scheme::smoothed}) {
        for (int m : {0, 1, 2}) {
            solver::SolveRequest req{spec, w, noise::approximate(w, scheme, 32), 1, solver::strided_steps(tg, 32), m};
            const auto tr = solver::solve_approximating(req);
            const double n0 = tr.norm_m.front();
            for (double v : tr.norm_m) worst = std::max(worst, std::abs(v - n0) / n0);
        }
    }
    return verdict(worst, 1e-9, "relative drift of |u_n(t)|_m, a = 0, b const, m = 0..2");
}

CheckResult oracle_agreement(const Context& c) {
    const SpatialGrid g(256, kTwoPi);
    const ProblemSpec spec(g, problem::preset("ou-transport", g));
    const TimeGrid tg(1.0, 1 << 12);
    const MultiPath w = noise::sample_wiener(c.seed, 1, tg);
    const MultiPath wn = noise::polygonal_approx(w, 64);
    const auto steps = solver::strided_steps(tg, 64);
    solver::SolveRequest req{spec, w, wn, 1, steps, 0, true};
    const auto num = solver::solve_approximating(req);
    const auto ora = solver::oracle_constant(spec, wn, steps, 0, true);
    double worst = 0.0;
    for (std::size_t r = 0; r < steps.size(); ++r) {
        Spectrum diff(num.spectra[r].size());
        for (std::size_t m = 0; m < diff.size(); ++m) diff[m] = num.spectra[r][m] - ora.spectra[r][m];
        worst = std::max(worst, std::sqrt(grid::sobolev_norm_squared(g, diff, 0)));
    }
    return verdict(worst, 1e-6, "sup_t |u_n - oracle|_0, ou-transport, n_x = 256");
}

CheckResult coupling_nullity(const Context&) {
    const SpatialGrid g(128, kTwoPi);
    const ProblemSpec spec(g, problem::preset("ou-transport", g));
    const TimeGrid tg(1.0, 1 << 10);
    const MultiPath p = noise::deterministic_path(tg, 1, [](std::size_t, double t) { return std::sin(3.0 * t); });
    solver::CoupledOptions o;
    o.method = solver::CouplingMethod::oracle;
    const auto errs = solver::coupled_errors(spec, p, p, {0, 1}, o);
    double worst = 0.0;
    for (const auto& e : errs) worst = std::max({worst, e.sup_err, e.integral_err, e.z_n_sup});
    return verdict(worst, 1e-6, "W_n = W fed to both sides");
}

const std::vector<std::pair<std::string, CheckFn>>& registry() {
    static const std::vector<std::pair<std::string, CheckFn>> r = {
        {"antisymmetry", antisymmetry},
        {"d1-collapse", d1_collapse},
        {"polygonal-knots", polygonal_knots},
        {"polygonal-adaptedness", polygonal_adaptedness},
        {"remark-identity", remark_identity},
        {"scaling", scaling},
        {"parseval", parseval},
        {"sobolev-examples", sobolev_examples},
        {"norm-monotonicity", norm_monotonicity},
        {"norm-recursion", norm_recursion},
        {"round-trip", round_trip},
        {"integration-by-parts", integration_by_parts},
        {"commutator", commutator},
        {"factorization", factorization},
        {"transport-isometry", transport_isometry},
        {"oracle-agreement", oracle_agreement},
        {"coupling-nullity", coupling_nullity},
    };
    return r;
}

}  // namespace

std::vector<std::string> check_names() {
    std::vector<std::string> out;
    for (const auto& [name, _] : registry()) out.push_back(name);
    return out;
}

std::vector<CheckResult> run_checks(const std::vector<std::string>& selection, std::uint64_t seed,
                                    const std::vector<std::string>& fault_injection) {
    if (selection.empty()) throw std::invalid_argument("no checks selected");
    const bool all = std::find(selection.begin(), selection.end(), "all") != selection.end();
    for (const auto& s : selection) {
        if (s == "all") continue;
        const auto& r = registry();
        if (std::none_of(r.begin(), r.end(), [&](const auto& e) { return e.first == s; })) {
            throw std::invalid_argument("unknown check '" + s + "'");
        }
    }
    std::vector<CheckResult> out;
    for (const auto& [name, fn] : registry()) {
        if (!all && std::find(selection.begin(), selection.end(), name) == selection.end()) continue;
        const bool fault = std::find(fault_injection.begin(), fault_injection.end(), name) != fault_injection.end();
        CheckResult r;
        try {
            r = fn(Context{seed, fault});
        } catch (const std::exception& e) {
            r = verdict(std::numeric_limits<double>::infinity(), 0.0, std::string("threw: ") + e.what());
        }
        r.name = name;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace wz::checks
