#include "wz/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

namespace wz::solver {

using grid::Complex;
using grid::SpatialGrid;
using grid::Transform;
using noise::MultiPath;
using noise::TimeGrid;

std::vector<std::size_t> strided_steps(const TimeGrid& grid, std::size_t stride) {
    if (stride == 0) throw std::invalid_argument("record stride must be >= 1");
    std::vector<std::size_t> steps;
    for (std::size_t j = 0; j <= grid.steps(); j += stride) steps.push_back(j);
    if (steps.back() != grid.steps()) steps.push_back(grid.steps());
    return steps;
}

GridFunction Trajectory::state(std::size_t r, const SpatialGrid& grid) const {
    if (r >= spectra.size()) throw std::out_of_range("trajectory state not recorded");
    return GridFunction::from_spectrum(grid, spectra[r]);
}

namespace {

enum class Equation { approximating, limit };

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double min_of(std::span<const double> v) { return *std::min_element(v.begin(), v.end()); }

/**
 * Pseudo-spectral right-hand sides on the half spectrum of one problem.
 *
 * The linear part `lin` is integrated exactly (integrating factor): the full
 * symbol when every coefficient is x-independent, otherwise the constant
 * lower bound of the diffusion coefficient times -xi^2.
 */
class Engine {
public:
    Engine(const ProblemSpec& spec, Equation eq)
        : grid_(spec.grid()), fft_(grid_.size()), d1_(spec.d1()), eq_(eq) {
        const std::size_t nm = grid_.modes();
        xi1_.resize(nm);
        xi2_.resize(nm);
        for (std::size_t m = 0; m < nm; ++m) {
            xi1_[m] = grid::derivative_symbol(grid_, m, 1).imag();
            xi2_[m] = -grid::derivative_symbol(grid_, m, 2).real();
        }
        xi_max_ = grid_.wavenumber(nm - 1);

        a_ = to_vec(spec.a());
        a1_ = to_vec(spec.a1());
        a0_ = to_vec(spec.a0());
        for (std::size_t k = 0; k < d1_; ++k) {
            b_.push_back(to_vec(spec.b(k)));
            b0_.push_back(to_vec(spec.b0(k)));
            g_hat_.push_back(spec.g(k).spectrum());
        }
        f_hat_ = spec.f().spectrum();
        uniform_ = spec.drift_uniform() && spec.noise_uniform();

        phys_u_.resize(grid_.size());
        phys_du_.resize(grid_.size());
        phys_d2u_.resize(grid_.size());
        phys_out_.resize(grid_.size());
        phys_mu_.resize(grid_.size());
        spec_deriv_.resize(nm);

        lin_.assign(nm, Complex{});
        if (uniform_) {
            for (std::size_t m = 0; m < nm; ++m) {
                Complex s{-a_[0] * xi2_[m] + a0_[0], a1_[0] * xi1_[m]};
                if (eq_ == Equation::limit) {
                    for (std::size_t k = 0; k < d1_; ++k) {
                        const Complex mk = first_order_symbol(k, m);
                        s += 0.5 * mk * mk;
                    }
                }
                lin_[m] = s;
            }
            explicit_bound_ = 0.0;
        } else {
            // Diffusion seen by the equation: a, or a + 1/2 sum b_k^2 in Ito form.
            std::vector<double> diff = a_;
            if (eq_ == Equation::limit)
                for (std::size_t k = 0; k < d1_; ++k)
                    for (std::size_t j = 0; j < diff.size(); ++j) diff[j] += 0.5 * b_[k][j] * b_[k][j];
            abar_ = std::max(0.0, min_of(diff));
            for (std::size_t m = 0; m < nm; ++m) lin_[m] = Complex{-abar_ * xi2_[m], 0.0};

            double rem = 0.0;
            for (double v : diff) rem = std::max(rem, std::abs(v - abar_));
            double first = max_abs(a1_);
            double zeroth = max_abs(a0_);
            if (eq_ == Equation::limit) {
                for (std::size_t k = 0; k < d1_; ++k) {
                    const auto db = to_vec(grid::derivative(spec.b(k), 1));
                    const auto db0 = to_vec(grid::derivative(spec.b0(k), 1));
                    double c1 = 0.0;
                    double c0 = 0.0;
                    for (std::size_t j = 0; j < db.size(); ++j) {
                        c1 = std::max(c1, std::abs(b_[k][j] * db[j] + 2.0 * b_[k][j] * b0_[k][j]));
                        c0 = std::max(c0, std::abs(b_[k][j] * db0[j] + b0_[k][j] * b0_[k][j]));
                    }
                    first += 0.5 * c1;
                    zeroth += 0.5 * c0;
                }
            }
            explicit_bound_ = rem * xi_max_ * xi_max_ + first * xi_max_ + zeroth;
        }

        if (eq_ == Equation::limit) {
            // Constant part of the Stratonovich correction: 1/2 sum_k M^k g^k.
            corr_g_hat_.assign(nm, Complex{});
            Spectrum tmp(nm);
            for (std::size_t k = 0; k < d1_; ++k) {
                apply_M(k, g_hat_[k], tmp);
                for (std::size_t m = 0; m < nm; ++m) corr_g_hat_[m] += 0.5 * tmp[m];
            }
        }

    }

    std::size_t modes() const { return grid_.modes(); }
    std::size_t d1() const { return d1_; }
    const std::vector<Complex>& lin() const { return lin_; }
    const Spectrum& f_hat() const { return f_hat_; }
    const Spectrum& g_hat(std::size_t k) const { return g_hat_[k]; }
    const Spectrum& corr_g_hat() const { return corr_g_hat_; }
    bool uniform() const { return uniform_; }
    double explicit_bound() const { return explicit_bound_; }

    /// Bound on |M^k| acting on resolved modes.
    double noise_bound(std::size_t k) const { return max_abs(b_[k]) * xi_max_ + max_abs(b0_[k]); }

    Complex first_order_symbol(std::size_t k, std::size_t m) const {
        return Complex{b0_[k][0], b_[k][0] * xi1_[m]};
    }

    /// out = M^k u.
    void apply_M(std::size_t k, const Spectrum& u, Spectrum& out) {
        const std::size_t nm = modes();
        if (uniform_) {
            for (std::size_t m = 0; m < nm; ++m) out[m] = first_order_symbol(k, m) * u[m];
            return;
        }
        derivative_to_physical(u, 1, phys_du_);
        fft_.inverse(u, phys_u_);
        for (std::size_t j = 0; j < phys_out_.size(); ++j) {
            phys_out_[j] = b_[k][j] * phys_du_[j] + b0_[k][j] * phys_u_[j];
        }
        fft_.forward(phys_out_, out);
    }

    /// drift = (full drift operator - lin) u and mu[k] = M^k u, sharing the transforms of u.
    /// The drift operator is L, or L + 1/2 sum M^k M^k for the limit equation.
    void drift_and_noise(const Spectrum& u, Spectrum& drift, std::vector<Spectrum>& mu) {
        const std::size_t nm = modes();
        if (uniform_) {
            std::fill(drift.begin(), drift.end(), Complex{});
            for (std::size_t k = 0; k < d1_; ++k)
                for (std::size_t m = 0; m < nm; ++m) mu[k][m] = first_order_symbol(k, m) * u[m];
            return;
        }
        fft_.inverse(u, phys_u_);
        derivative_to_physical(u, 1, phys_du_);
        derivative_to_physical(u, 2, phys_d2u_);
        for (std::size_t j = 0; j < phys_out_.size(); ++j) {
            phys_out_[j] = a_[j] * phys_d2u_[j] + a1_[j] * phys_du_[j] + a0_[j] * phys_u_[j];
        }
        for (std::size_t k = 0; k < d1_; ++k) {
            for (std::size_t j = 0; j < phys_mu_.size(); ++j) phys_mu_[j] = b_[k][j] * phys_du_[j] + b0_[k][j] * phys_u_[j];
            fft_.forward(phys_mu_, mu[k]);
            if (eq_ != Equation::limit) continue;
            derivative_to_physical(mu[k], 1, phys_d2u_);
            for (std::size_t j = 0; j < phys_out_.size(); ++j) {
                phys_out_[j] += 0.5 * (b_[k][j] * phys_d2u_[j] + b0_[k][j] * phys_mu_[j]);
            }
        }
        fft_.forward(phys_out_, drift);
        for (std::size_t m = 0; m < nm; ++m) drift[m] -= lin_[m] * u[m];
    }

    double h0_norm_squared(const Spectrum& u) const { return grid::sobolev_norm_squared(grid_, u, 0); }

    double physical_max(const Spectrum& u) {
        fft_.inverse(u, phys_u_);
        return max_abs(phys_u_);
    }

private:
    static std::vector<double> to_vec(const GridFunction& g) { return {g.values().begin(), g.values().end()}; }

    void derivative_to_physical(const Spectrum& u, int order, std::vector<double>& out) {
        for (std::size_t m = 0; m < u.size(); ++m) spec_deriv_[m] = grid::derivative_symbol(grid_, m, order) * u[m];
        fft_.inverse(spec_deriv_, out);
    }

    SpatialGrid grid_;
    Transform fft_;
    std::size_t d1_;
    Equation eq_;
    std::vector<double> xi1_, xi2_;
    double xi_max_ = 0.0;
    std::vector<double> a_, a1_, a0_;
    std::vector<std::vector<double>> b_, b0_;
    std::vector<Spectrum> g_hat_;
    Spectrum f_hat_;
    Spectrum corr_g_hat_;
    bool uniform_ = false;
    double abar_ = 0.0;
    double explicit_bound_ = 0.0;
    std::vector<Complex> lin_;

    std::vector<double> phys_u_, phys_du_, phys_d2u_, phys_out_, phys_mu_;
    Spectrum spec_deriv_;
};

void validate_request(const SolveRequest& req) {
    if (req.spec.form() != problem::NoiseForm::stratonovich) {
        throw std::invalid_argument("solvers take problems in Stratonovich form");
    }
    if (req.w.d1() != req.spec.d1()) throw std::invalid_argument("path driver count differs from problem d1");
    if (req.n_substeps_per_fine == 0) throw std::invalid_argument("n_substeps_per_fine must be >= 1");
    if (req.sobolev_m < 0) throw std::invalid_argument("Sobolev index must be >= 0");
    const std::size_t n_fine = req.w.grid().steps();
    for (std::size_t r = 0; r < req.record_steps.size(); ++r) {
        if (req.record_steps[r] > n_fine) throw std::invalid_argument("record step beyond the time grid");
        if (r > 0 && req.record_steps[r] <= req.record_steps[r - 1]) {
            throw std::invalid_argument("record steps must be strictly increasing");
        }
    }
}

double reference_scale(const ProblemSpec& spec, double horizon) {
    double s = grid::sobolev_norm(spec.u0(), 0) + horizon * grid::sobolev_norm(spec.f(), 0);
    for (std::size_t k = 0; k < spec.d1(); ++k) s += grid::sobolev_norm(spec.g(k), 0);
    return s;
}

/// Records norms, optional state, at fine step j.
class Recorder {
public:
    Recorder(const SolveRequest& req, Trajectory& traj) : req_(req), traj_(traj) {
        traj_.sobolev_m = req.sobolev_m;
    }

    bool due(std::size_t j) const { return next_ < req_.record_steps.size() && req_.record_steps[next_] == j; }

    void record(std::size_t j, const Spectrum& u, Engine& engine) {
        const auto& grid = req_.spec.grid();
        traj_.times.push_back(req_.w.grid().time(j));
        traj_.steps.push_back(j);
        traj_.norm_m.push_back(std::sqrt(grid::sobolev_norm_squared(grid, u, req_.sobolev_m)));
        traj_.norm_mp1.push_back(std::sqrt(grid::sobolev_norm_squared(grid, u, req_.sobolev_m + 1)));
        traj_.max_abs.push_back(engine.physical_max(u));
        if (req_.keep_states) traj_.spectra.push_back(u);
        if (req_.track_zn && req_.wn) {
            Spectrum z(u.size(), Complex{});
            Spectrum mu(u.size());
            for (std::size_t k = 0; k < engine.d1(); ++k) {
                engine.apply_M(k, u, mu);
                const double e = req_.w(k, j) - (*req_.wn)(k, j);
                const auto& gk = engine.g_hat(k);
                for (std::size_t m = 0; m < u.size(); ++m) z[m] += e * (mu[m] + gk[m]);
            }
            traj_.zn_norm.push_back(std::sqrt(grid::sobolev_norm_squared(grid, z, req_.sobolev_m)));
        }
        ++next_;
    }

private:
    const SolveRequest& req_;
    Trajectory& traj_;
    std::size_t next_ = 0;
};

bool blown_up(const Spectrum& u, Engine& engine, double scale) {
    if (!(scale > 0.0)) return false;
    const double n2 = engine.h0_norm_squared(u);
    return !std::isfinite(n2) || n2 > (kBlowupFactor * scale) * (kBlowupFactor * scale);
}

}  // namespace

// ---------------------------------------------------------------------------

Trajectory solve_approximating(const SolveRequest& req) {
    validate_request(req);
    if (!req.wn) throw std::invalid_argument("approximating solve needs the approximant W_n");
    const MultiPath& wn = *req.wn;
    if (wn.kind() == noise::PathKind::wiener) throw std::invalid_argument("W_n must be of finite variation");
    if (!(wn.grid() == req.w.grid()) || wn.d1() != req.w.d1()) throw std::invalid_argument("W and W_n differ in shape");
    const auto ell = problem::check_ellipticity(req.spec);
    if (!ell.pass) {
        throw std::invalid_argument("ellipticity fails: min a = " + std::to_string(ell.lambda_hat));
    }

    Engine engine(req.spec, Equation::approximating);
    const TimeGrid& tg = wn.grid();
    const std::size_t s = req.n_substeps_per_fine;
    const double h = tg.dt() / static_cast<double>(s);
    const std::size_t d1 = engine.d1();
    const std::size_t nm = engine.modes();

    // Stability of the explicit stages (RK4 region reaches ~2.78 on both axes).
    std::vector<double> rate_max(d1, 0.0);
    for (std::size_t k = 0; k < d1; ++k)
        for (std::size_t j = 0; j < tg.steps(); ++j)
            for (double th : {0.0, 0.5, 1.0})
                rate_max[k] = std::max(rate_max[k], std::abs(noise::approximant_rate(req.w, wn, k, j, th)));
    double rho = engine.explicit_bound();
    for (std::size_t k = 0; k < d1; ++k) rho += rate_max[k] * engine.noise_bound(k);
    constexpr double kRk4Limit = 2.5;
    if (rho * h > kRk4Limit) {
        const auto need = static_cast<std::size_t>(std::ceil(rho * tg.dt() / kRk4Limit));
        throw StabilityError("RK4 stability bound violated (rho*h = " + std::to_string(rho * h) +
                                 "); use n_substeps_per_fine >= " + std::to_string(need),
                             need);
    }

    std::vector<Complex> e_half(nm), e_full(nm);
    for (std::size_t m = 0; m < nm; ++m) {
        e_half[m] = std::exp(engine.lin()[m] * (0.5 * h));
        e_full[m] = std::exp(engine.lin()[m] * h);
    }

    Spectrum u = req.spec.u0().spectrum();
    Spectrum k1(nm), k2(nm), k3(nm), k4(nm), stage(nm);
    std::vector<Spectrum> mus(d1, Spectrum(nm));
    std::vector<double> rates(d1);

    auto rhs = [&](const Spectrum& x, std::size_t j, double theta, Spectrum& out) {
        engine.drift_and_noise(x, out, mus);
        const auto& f = engine.f_hat();
        for (std::size_t m = 0; m < nm; ++m) out[m] += f[m];
        for (std::size_t k = 0; k < d1; ++k) {
            const double r = noise::approximant_rate(req.w, wn, k, j, theta);
            if (r == 0.0) continue;
            const auto& g = engine.g_hat(k);
            for (std::size_t m = 0; m < nm; ++m) out[m] += r * (mus[k][m] + g[m]);
        }
    };

    Trajectory traj;
    Recorder rec(req, traj);
    const double scale = reference_scale(req.spec, tg.horizon());
    const double sd = static_cast<double>(s);
    for (std::size_t j = 0;; ++j) {
        if (rec.due(j)) rec.record(j, u, engine);
        if (j == tg.steps()) break;
        for (std::size_t i = 0; i < s; ++i) {
            const double th0 = static_cast<double>(i) / sd;
            const double thh = (static_cast<double>(i) + 0.5) / sd;
            const double th1 = (static_cast<double>(i) + 1.0) / sd;
            rhs(u, j, th0, k1);
            for (std::size_t m = 0; m < nm; ++m) stage[m] = e_half[m] * (u[m] + 0.5 * h * k1[m]);
            rhs(stage, j, thh, k2);
            for (std::size_t m = 0; m < nm; ++m) stage[m] = e_half[m] * u[m] + 0.5 * h * k2[m];
            rhs(stage, j, thh, k3);
            for (std::size_t m = 0; m < nm; ++m) stage[m] = e_full[m] * u[m] + h * e_half[m] * k3[m];
            rhs(stage, j, th1, k4);
            for (std::size_t m = 0; m < nm; ++m) {
                u[m] = e_full[m] * u[m] +
                       (h / 6.0) * (e_full[m] * k1[m] + 2.0 * e_half[m] * (k2[m] + k3[m]) + k4[m]);
            }
        }
        if (blown_up(u, engine, scale)) {
            traj.aborted = true;
            traj.diagnostic = "blowup at t=" + std::to_string(tg.time(j + 1)) + ": state norm exceeds " +
                              std::to_string(kBlowupFactor) + " x reference";
            return traj;
        }
    }
    return traj;
}

Trajectory solve_limit(const SolveRequest& req) {
    validate_request(req);
    const auto par = problem::check_parabolicity(req.spec);
    if (!par.pass) {
        throw std::invalid_argument("stochastic parabolicity fails: margin = " + std::to_string(par.margin));
    }
    Engine engine(req.spec, Equation::limit);
    const TimeGrid& tg = req.w.grid();
    const std::size_t s = req.n_substeps_per_fine;
    const double h = tg.dt() / static_cast<double>(s);
    const std::size_t d1 = engine.d1();
    const std::size_t nm = engine.modes();

    constexpr double kEulerLimit = 2.0;
    if (engine.explicit_bound() * h > kEulerLimit) {
        const auto need = static_cast<std::size_t>(std::ceil(engine.explicit_bound() * tg.dt() / kEulerLimit));
        throw StabilityError("Euler stability bound violated; use n_substeps_per_fine >= " + std::to_string(need),
                             need);
    }

    std::vector<Complex> e_full(nm);
    for (std::size_t m = 0; m < nm; ++m) e_full[m] = std::exp(engine.lin()[m] * h);

    Spectrum u = req.spec.u0().spectrum();
    Spectrum drift(nm);
    std::vector<Spectrum> mus(d1, Spectrum(nm));
    std::vector<double> dw(d1);
    std::vector<double> pos(d1);

    std::mt19937_64 bridge_rng(noise::split_seed(req.bridge_seed, 1));
    std::normal_distribution<double> normal(0.0, 1.0);

    Trajectory traj;
    Recorder rec(req, traj);
    const double scale = reference_scale(req.spec, tg.horizon());
    const auto& f = engine.f_hat();
    const auto& cg = engine.corr_g_hat();
    for (std::size_t j = 0;; ++j) {
        if (rec.due(j)) rec.record(j, u, engine);
        if (j == tg.steps()) break;
        for (std::size_t k = 0; k < d1; ++k) pos[k] = req.w(k, j);
        for (std::size_t i = 0; i < s; ++i) {
            // Brownian bridge from the current substep value to W(t_{j+1}).
            for (std::size_t k = 0; k < d1; ++k) {
                const double target = req.w(k, j + 1);
                double next = target;
                if (i + 1 < s) {
                    const double tau = h * static_cast<double>(s - i);
                    const double mean = pos[k] + (target - pos[k]) * h / tau;
                    next = mean + std::sqrt(h * (tau - h) / tau) * normal(bridge_rng);
                }
                dw[k] = next - pos[k];
                pos[k] = next;
            }
            engine.drift_and_noise(u, drift, mus);
            for (std::size_t m = 0; m < nm; ++m) drift[m] = u[m] + h * (drift[m] + f[m] + cg[m]);
            for (std::size_t k = 0; k < d1; ++k) {
                const auto& g = engine.g_hat(k);
                for (std::size_t m = 0; m < nm; ++m) drift[m] += dw[k] * (mus[k][m] + g[m]);
            }
            for (std::size_t m = 0; m < nm; ++m) u[m] = e_full[m] * drift[m];
        }
        if (blown_up(u, engine, scale)) {
            traj.aborted = true;
            traj.diagnostic = "blowup at t=" + std::to_string(tg.time(j + 1)) + ": state norm exceeds " +
                              std::to_string(kBlowupFactor) + " x reference";
            return traj;
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Closed-form oracle

bool oracle_admissible(const ProblemSpec& spec) {
    return spec.d1() == 1 && spec.drift_uniform() && spec.noise_uniform() && !spec.has_free_terms() &&
           spec.form() == problem::NoiseForm::stratonovich;
}

namespace {

void require_oracle(const ProblemSpec& spec, const MultiPath& driver) {
    if (spec.d1() != 1) throw std::invalid_argument("oracle needs exactly one driver");
    if (!spec.drift_uniform() || !spec.noise_uniform()) throw std::invalid_argument("oracle needs constant coefficients");
    if (spec.has_free_terms()) throw std::invalid_argument("oracle needs f = 0 and g = 0");
    if (spec.form() != problem::NoiseForm::stratonovich) throw std::invalid_argument("oracle needs Stratonovich form");
    if (driver.d1() != 1) throw std::invalid_argument("oracle driver must have one component");
}

struct OracleSymbols {
    std::vector<Complex> drift;  // -a xi^2 + i a1 xi + a0
    std::vector<Complex> noise;  // b0 + i b xi
};

OracleSymbols oracle_symbols(const ProblemSpec& spec) {
    const auto& g = spec.grid();
    const auto& d = spec.data();
    const double a = d.a.uniform_value();
    const double a1 = d.a1.uniform_value();
    const double a0 = d.a0.uniform_value();
    const double b = d.b[0].uniform_value();
    const double b0 = d.b0[0].uniform_value();
    OracleSymbols s;
    for (std::size_t m = 0; m < g.modes(); ++m) {
        const double xi1 = grid::derivative_symbol(g, m, 1).imag();
        const double xi2 = -grid::derivative_symbol(g, m, 2).real();
        s.drift.emplace_back(-a * xi2 + a0, a1 * xi1);
        s.noise.emplace_back(b0, b * xi1);
    }
    return s;
}

void oracle_fill(const OracleSymbols& sym, const Spectrum& u0, double t, double p, Spectrum& out) {
    for (std::size_t m = 0; m < u0.size(); ++m) out[m] = u0[m] * std::exp(sym.drift[m] * t + sym.noise[m] * p);
}

}  // namespace

Spectrum oracle_spectrum(const ProblemSpec& spec, const MultiPath& driver, std::size_t step) {
    require_oracle(spec, driver);
    const auto sym = oracle_symbols(spec);
    Spectrum out(spec.grid().modes());
    oracle_fill(sym, spec.u0().spectrum(), driver.grid().time(step), driver(0, step), out);
    return out;
}

Trajectory oracle_constant(const ProblemSpec& spec, const MultiPath& driver,
                           const std::vector<std::size_t>& record_steps, int sobolev_m, bool keep_states) {
    require_oracle(spec, driver);
    if (sobolev_m < 0) throw std::invalid_argument("Sobolev index must be >= 0");
    const auto sym = oracle_symbols(spec);
    const auto& u0 = spec.u0().spectrum();
    const auto& g = spec.grid();
    Transform fft(g.size());
    std::vector<double> phys(g.size());
    Trajectory traj;
    traj.sobolev_m = sobolev_m;
    Spectrum u(g.modes());
    for (std::size_t j : record_steps) {
        if (j > driver.grid().steps()) throw std::invalid_argument("record step beyond the time grid");
        const double t = driver.grid().time(j);
        oracle_fill(sym, u0, t, driver(0, j), u);
        traj.times.push_back(t);
        traj.steps.push_back(j);
        traj.norm_m.push_back(std::sqrt(grid::sobolev_norm_squared(g, u, sobolev_m)));
        traj.norm_mp1.push_back(std::sqrt(grid::sobolev_norm_squared(g, u, sobolev_m + 1)));
        fft.inverse(u, phys);
        traj.max_abs.push_back(max_abs(phys));
        if (keep_states) traj.spectra.push_back(u);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Coupled comparison

namespace {

struct ErrorAccumulator {
    int m;
    double sup2 = 0.0;
    double integral = 0.0;
    double zsup = 0.0;
    double prev_t = 0.0;
    double prev_e = 0.0;
    bool first = true;

    void add(double t, double err_m2, double err_mp12, double z_m) {
        sup2 = std::max(sup2, err_m2);
        if (!first) integral += 0.5 * (t - prev_t) * (prev_e + err_mp12);
        first = false;
        prev_t = t;
        prev_e = err_mp12;
        zsup = std::max(zsup, z_m);
    }

    CoupledError result(bool oracle) const {
        CoupledError e;
        e.m = m;
        e.sup_err = std::sqrt(sup2);
        e.integral_err = integral;
        e.z_n_sup = zsup;
        e.oracle = oracle;
        return e;
    }
};

std::vector<CoupledError> failed(const std::vector<int>& ms, bool oracle, const std::string& why) {
    std::vector<CoupledError> out;
    for (int m : ms) {
        CoupledError e;
        e.m = m;
        e.sup_err = e.integral_err = e.z_n_sup = std::numeric_limits<double>::quiet_NaN();
        e.oracle = oracle;
        e.aborted = true;
        e.diagnostic = why;
        out.push_back(e);
    }
    return out;
}

std::vector<std::size_t> coupling_steps(const TimeGrid& tg, const CoupledOptions& options, bool oracle) {
    std::size_t stride = options.record_stride;
    if (stride == 0) stride = oracle ? 1 : std::max<std::size_t>(1, tg.steps() / 1024);
    return strided_steps(tg, stride);
}

}  // namespace

Trajectory reference_solution(const ProblemSpec& spec, const MultiPath& w, const CoupledOptions& options) {
    const SpatialGrid ref_grid(spec.grid().size() * options.reference_mode_factor, spec.grid().length());
    SolveRequest limit{spec.on_grid(ref_grid), w, std::nullopt, options.n_substeps * options.reference_substeps,
                       coupling_steps(w.grid(), options, false), 0, true, false, options.bridge_seed};
    return solve_limit(limit);
}

std::vector<CoupledError> coupled_errors(const ProblemSpec& spec, const MultiPath& w, const MultiPath& wn,
                                         const std::vector<int>& ms, const CoupledOptions& options) {
    if (!(w.grid() == wn.grid())) throw std::invalid_argument("W and W_n must share the time grid");
    if (ms.empty()) throw std::invalid_argument("no Sobolev index requested");
    for (int m : ms)
        if (m < 0) throw std::invalid_argument("Sobolev index must be >= 0");
    const TimeGrid& tg = w.grid();
    const bool use_oracle = options.method == CouplingMethod::oracle ||
                            (options.method == CouplingMethod::automatic && oracle_admissible(spec));
    const auto steps = coupling_steps(tg, options, use_oracle);

    std::vector<ErrorAccumulator> acc;
    for (int m : ms) acc.push_back(ErrorAccumulator{m});

    if (use_oracle) {
        require_oracle(spec, w);
        const auto sym = oracle_symbols(spec);
        const auto& u0 = spec.u0().spectrum();
        const auto& g = spec.grid();
        const std::size_t nm = g.modes();
        Spectrum un(nm), u(nm), diff(nm), z(nm);
        for (std::size_t j : steps) {
            const double t = tg.time(j);
            oracle_fill(sym, u0, t, wn(0, j), un);
            oracle_fill(sym, u0, t, w(0, j), u);
            const double e = w(0, j) - wn(0, j);
            for (std::size_t m = 0; m < nm; ++m) {
                diff[m] = un[m] - u[m];
                z[m] = e * sym.noise[m] * un[m];
            }
            for (auto& a : acc) {
                a.add(t, grid::sobolev_norm_squared(g, diff, a.m), grid::sobolev_norm_squared(g, diff, a.m + 1),
                      std::sqrt(grid::sobolev_norm_squared(g, z, a.m)));
            }
        }
        std::vector<CoupledError> out;
        for (const auto& a : acc) out.push_back(a.result(true));
        return out;
    }

    SolveRequest approx{spec, w, wn, options.n_substeps, steps, 0, true, false, options.bridge_seed};
    const Trajectory tn = solve_approximating(approx);
    if (tn.aborted) return failed(ms, false, "approximating: " + tn.diagnostic);

    const SpatialGrid ref_grid(spec.grid().size() * options.reference_mode_factor, spec.grid().length());
    std::optional<Trajectory> own;
    if (options.reference == nullptr) own = reference_solution(spec, w, options);
    const Trajectory& tl = own ? *own : *options.reference;
    if (tl.aborted) return failed(ms, false, "limit: " + tl.diagnostic);
    if (tl.steps != steps || tl.spectra.size() != steps.size() || tl.spectra.front().size() != ref_grid.modes()) {
        throw std::invalid_argument("reference solution does not match the coupling options");
    }

    const auto& g = spec.grid();
    const std::size_t nm = g.modes();
    const double up = static_cast<double>(ref_grid.size()) / static_cast<double>(g.size());
    Spectrum diff(ref_grid.modes());
    Spectrum z(nm, Complex{});
    std::vector<GridFunction> mg;
    for (std::size_t r = 0; r < steps.size(); ++r) {
        const Spectrum& a = tn.spectra[r];
        const Spectrum& b = tl.spectra[r];
        for (std::size_t m = 0; m < diff.size(); ++m) {
            Complex coarse{};
            if (m + 1 < nm) coarse = up * a[m];
            else if (m + 1 == nm) coarse = (up > 1.0 ? 0.5 : 1.0) * up * a[m];
            diff[m] = coarse - b[m];
        }
        const GridFunction un = GridFunction::from_spectrum(g, a);
        std::fill(z.begin(), z.end(), Complex{});
        for (std::size_t k = 0; k < spec.d1(); ++k) {
            const double e = w(k, steps[r]) - wn(k, steps[r]);
            const auto zk = (problem::apply_M(spec, k, un) + spec.g(k)).spectrum();
            for (std::size_t m = 0; m < nm; ++m) z[m] += e * zk[m];
        }
        for (auto& acc_m : acc) {
            acc_m.add(tg.time(steps[r]), grid::sobolev_norm_squared(ref_grid, diff, acc_m.m),
                      grid::sobolev_norm_squared(ref_grid, diff, acc_m.m + 1),
                      std::sqrt(grid::sobolev_norm_squared(g, z, acc_m.m)));
        }
    }
    std::vector<CoupledError> out;
    for (const auto& a : acc) out.push_back(a.result(false));
    return out;
}

CoupledError coupled_error(const ProblemSpec& spec, const noise::NoiseBundle& bundle, int m,
                           const CoupledOptions& options) {
    return coupled_errors(spec, bundle.w, bundle.wn, {m}, options).front();
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
    out << "t,norm_m,norm_mp1,max_abs\n";
    out.precision(17);
    for (std::size_t r = 0; r < traj.times.size(); ++r) {
        out << traj.times[r] << ',' << traj.norm_m[r] << ',' << traj.norm_mp1[r] << ',' << traj.max_abs[r] << '\n';
    }
}

}  // namespace wz::solver
