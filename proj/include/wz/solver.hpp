#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wz/grid.hpp"
#include "wz/noise.hpp"
#include "wz/problem.hpp"

namespace wz::solver {

using grid::GridFunction;
using grid::Spectrum;
using problem::ProblemSpec;

/// Thrown when the explicit part of a step violates the stability bound.
class StabilityError : public std::runtime_error {
public:
    StabilityError(const std::string& what, std::size_t required_substeps)
        : std::runtime_error(what), required_substeps_(required_substeps) {}

    /// Smallest n_substeps_per_fine that satisfies the bound.
    std::size_t required_substeps() const { return required_substeps_; }

private:
    std::size_t required_substeps_;
};

/// State norm exceeding this multiple of the reference scale aborts a trajectory.
inline constexpr double kBlowupFactor = 1e6;

/**
 * @brief Inputs of one time integration.
 *
 * `w` is the Wiener path (limit equation) or the path the approximant was
 * built from; `wn` is the finite-variation approximant (approximating equation).
 */
struct SolveRequest {
    ProblemSpec spec;
    noise::MultiPath w;
    std::optional<noise::MultiPath> wn;
    std::size_t n_substeps_per_fine = 1;
    /// Fine-grid indices at which the state is recorded, strictly increasing.
    std::vector<std::size_t> record_steps;
    int sobolev_m = 0;
    bool keep_states = false;
    /// Record |z_n|_m with z_n = sum_k (M^k u_n + g^k)(W^k - W_n^k); approximating only.
    bool track_zn = false;
    /// Seed of the Brownian-bridge refinement used by the limit solver when n_substeps_per_fine > 1.
    std::uint64_t bridge_seed = 0;
};

/// Every `stride`-th fine step plus the final one.
std::vector<std::size_t> strided_steps(const noise::TimeGrid& grid, std::size_t stride);

struct Trajectory {
    int sobolev_m = 0;
    std::vector<double> times;
    std::vector<std::size_t> steps;
    std::vector<Spectrum> spectra;  ///< filled when keep_states
    std::vector<double> norm_m;
    std::vector<double> norm_mp1;
    std::vector<double> max_abs;
    std::vector<double> zn_norm;  ///< filled when track_zn
    bool aborted = false;
    std::string diagnostic;

    GridFunction state(std::size_t r, const grid::SpatialGrid& grid) const;
};

/// Classical solution of the random PDE driven by req.wn.
Trajectory solve_approximating(const SolveRequest& req);

/// Ito-form limit equation driven by req.w, exponential Euler-Maruyama.
Trajectory solve_limit(const SolveRequest& req);

/// True when oracle_constant() applies: one driver, x-independent coefficients, no free terms.
bool oracle_admissible(const ProblemSpec& spec);

/// Closed-form solution exp(b0 P(t)) (S_a(t) u0)(x + b P(t)) for the spectrally discretized problem.
Trajectory oracle_constant(const ProblemSpec& spec, const noise::MultiPath& driver,
                           const std::vector<std::size_t>& record_steps, int sobolev_m = 0,
                           bool keep_states = false);

/// Spectrum of the oracle solution at fine step j.
Spectrum oracle_spectrum(const ProblemSpec& spec, const noise::MultiPath& driver, std::size_t step);

enum class CouplingMethod { automatic, oracle, numerical };

struct CoupledOptions {
    CouplingMethod method = CouplingMethod::automatic;
    std::size_t n_substeps = 1;
    /// 0 picks every fine step for the oracle route and about 1024 records otherwise.
    std::size_t record_stride = 0;
    /// Reference limit solution on the numerical route: finer substeps and more modes.
    std::size_t reference_substeps = 8;
    std::size_t reference_mode_factor = 2;
    std::uint64_t bridge_seed = 0;
    /// Precomputed reference_solution() for the same W and options; reused across n when set.
    const Trajectory* reference = nullptr;
};

/// Reference limit solution of the numerical route (refined grid, kept spectra).
Trajectory reference_solution(const ProblemSpec& spec, const noise::MultiPath& w, const CoupledOptions& options = {});

struct CoupledError {
    int m = 0;
    double sup_err = 0.0;       ///< sup_t |u_n - u|_m over record times
    double integral_err = 0.0;  ///< trapezoidal int_0^T |u_n - u|_{m+1}^2 dt
    double z_n_sup = 0.0;       ///< sup_t |z_n|_m
    bool oracle = false;
    bool aborted = false;
    std::string diagnostic;
};

/// Errors of u_n against u on one realization for every Sobolev index in ms.
std::vector<CoupledError> coupled_errors(const ProblemSpec& spec, const noise::MultiPath& w,
                                         const noise::MultiPath& wn, const std::vector<int>& ms,
                                         const CoupledOptions& options = {});

CoupledError coupled_error(const ProblemSpec& spec, const noise::NoiseBundle& bundle, int m,
                           const CoupledOptions& options = {});

/// CSV with header "t,norm_m,norm_mp1,max_abs".
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

}  // namespace wz::solver
