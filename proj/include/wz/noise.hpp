#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wz::noise {

/**
 * @brief Uniform time grid t_j = j * T / n_fine, j = 0..n_fine.
 */
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t n_fine);

    double horizon() const { return horizon_; }
    std::size_t steps() const { return n_fine_; }
    std::size_t points() const { return n_fine_ + 1; }
    double dt() const { return horizon_ / static_cast<double>(n_fine_); }
    double time(std::size_t j) const { return dt() * static_cast<double>(j); }

    bool operator==(const TimeGrid& other) const = default;

private:
    double horizon_;
    std::size_t n_fine_;
};

enum class PathKind { wiener, polygonal, smoothed, deterministic };

std::string to_string(PathKind kind);

/**
 * @brief d1 scalar paths sampled on a TimeGrid, stored component-major.
 */
class MultiPath {
public:
    MultiPath(TimeGrid grid, std::size_t d1, std::vector<double> samples, PathKind kind,
              std::size_t n = 0);

    const TimeGrid& grid() const { return grid_; }
    std::size_t d1() const { return d1_; }
    PathKind kind() const { return kind_; }
    /// Approximation index for polygonal / smoothed paths, 0 otherwise.
    std::size_t n() const { return n_; }

    std::span<const double> component(std::size_t k) const;
    double operator()(std::size_t k, std::size_t j) const { return samples_[k * grid_.points() + j]; }
    std::span<const double> samples() const { return samples_; }

    /// Same samples with c times every value.
    MultiPath scaled(double c) const;

private:
    TimeGrid grid_;
    std::size_t d1_;
    std::vector<double> samples_;
    PathKind kind_;
    std::size_t n_;
};

/// Deterministic path from a function of (component, time).
template <typename F>
MultiPath deterministic_path(const TimeGrid& grid, std::size_t d1, F&& fn) {
    std::vector<double> s(d1 * grid.points());
    for (std::size_t k = 0; k < d1; ++k)
        for (std::size_t j = 0; j < grid.points(); ++j) s[k * grid.points() + j] = fn(k, grid.time(j));
    return MultiPath(grid, d1, std::move(s), PathKind::deterministic);
}

/// SplitMix64 finalizer; used to derive independent per-replica seeds.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream);

/// Brownian motion with independent N(0, dt) increments, reproducible from seed.
MultiPath sample_wiener(std::uint64_t seed, std::size_t d1, const TimeGrid& grid);

/// Delayed piecewise-linear interpolation with knots t_k = kT/n.
MultiPath polygonal_approx(const MultiPath& w, std::size_t n);

/// Trailing average of w over [t - 1/n, t] with zero extension below t = 0.
MultiPath smoothed_approx(const MultiPath& w, std::size_t n);

/// Time derivative of a finite-variation approximant at t = t_j + theta*dt,
/// theta in [0,1]. `w` is the path the approximant was built from.
double approximant_rate(const MultiPath& w, const MultiPath& wn, std::size_t k, std::size_t j,
                        double theta);

/**
 * @brief Matrix-valued path, d1 x d1 entries per grid point (row-major per point).
 */
class MatrixPath {
public:
    MatrixPath(TimeGrid grid, std::size_t d1);

    const TimeGrid& grid() const { return grid_; }
    std::size_t d1() const { return d1_; }
    double operator()(std::size_t i, std::size_t j, std::size_t t) const {
        return data_[(t * d1_ + i) * d1_ + j];
    }
    double& at(std::size_t i, std::size_t j, std::size_t t) { return data_[(t * d1_ + i) * d1_ + j]; }

private:
    TimeGrid grid_;
    std::size_t d1_;
    std::vector<double> data_;
};

/// Antisymmetric area paths by left-point sums on the grid.
MatrixPath area_process(const MultiPath& p);

struct BnResult {
    MatrixPath path;
    /// variation[i*d1+j] = first variation of B_n^{ij} over [0,T].
    std::vector<double> variation;
};

/// B_n^{ij}(t) = int_0^t (W^i - W_n^i) dW_n^j, with its first variation.
BnResult bn_process(const MultiPath& w, const MultiPath& wn);

/// S_n^{ij}(t) = B_n^{ij}(t) - delta_ij t / 2.
MatrixPath sn_process(const MultiPath& w, const MultiPath& wn);

/**
 * @brief One realization's driver functionals for one approximation index.
 */
struct NoiseBundle {
    MultiPath w;
    MultiPath wn;
    std::size_t n;
    MatrixPath area;
    MatrixPath area_n;
    MatrixPath sn;
    MatrixPath bn;
    std::vector<double> bn_variation;
    double sup_w_err;
    double sup_a_err;
    double sup_s_err;

    double max_bn_variation() const;
};

NoiseBundle make_bundle(MultiPath w, MultiPath wn);

/// Residual of the Ito-formula identity linking S_n + S_n^T to q_n and R_n,
/// sup over grid points; entry [i*d1+j].
std::vector<double> remark_identity_residual(const NoiseBundle& bundle);

enum class Scheme { polygonal, smoothed };

std::string to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

/// Builds the approximant of the given scheme; validates admissibility of n.
MultiPath approximate(const MultiPath& w, Scheme scheme, std::size_t n);

/// Throws std::invalid_argument when n is not admissible for the scheme on grid.
void check_admissible(const TimeGrid& grid, Scheme scheme, std::size_t n);

struct NoiseRow {
    std::size_t n;
    double sup_w_err;
    double sup_area_err;
    double bn_variation_max;
    double bn_over_log_n;
    /// Lower bound of sup_{m>=n} sup|W - W_m| over the swept m only.
    double eta_n;
};

/// Per-n noise metrics for one realization w over an ascending sweep.
std::vector<NoiseRow> noise_report(const MultiPath& w, Scheme scheme, std::span<const std::size_t> n_list);

/// Convenience overload that samples w from (seed, d1, grid) first.
std::vector<NoiseRow> noise_report(std::uint64_t seed, std::size_t d1, const TimeGrid& grid, Scheme scheme,
                                   std::span<const std::size_t> n_list);

}  // namespace wz::noise
