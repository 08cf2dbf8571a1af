#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace wz::grid {

using Complex = std::complex<double>;

/// Half spectrum of a real field (modes 0..n_x/2), unnormalized DFT.
using Spectrum = std::vector<Complex>;

/**
 * @brief Uniform periodic grid x_j = j * length / n_x on [0, length).
 */
class SpatialGrid {
public:
    SpatialGrid(std::size_t n_x, double length);

    std::size_t size() const { return n_x_; }
    std::size_t modes() const { return n_x_ / 2 + 1; }
    double length() const { return length_; }
    double spacing() const { return length_ / static_cast<double>(n_x_); }
    double point(std::size_t j) const { return spacing() * static_cast<double>(j); }

    /// Angular wavenumber 2*pi*m/length of half-spectrum index m.
    double wavenumber(std::size_t m) const;

    bool operator==(const SpatialGrid& other) const = default;

private:
    std::size_t n_x_;
    double length_;
};

/**
 * @brief Real-to-complex transforms of one fixed length, backed by FFTW.
 *
 * Plans are created once per length under a global lock and executed with the
 * new-array interface, so a Transform may be used from any thread as long as
 * each thread passes its own buffers.
 */
class Transform {
public:
    explicit Transform(std::size_t n_x);

    std::size_t size() const { return n_x_; }

    /// Unnormalized forward DFT into the half spectrum.
    void forward(std::span<const double> values, std::span<Complex> spectrum) const;
    /// Inverse of forward(), including the 1/n_x normalization.
    void inverse(std::span<const Complex> spectrum, std::span<double> values) const;

    struct Plans;

private:
    std::size_t n_x_;
    std::shared_ptr<const Plans> plans_;
};

/**
 * @brief A real field sampled on a SpatialGrid.
 *
 * Values are immutable after construction. The spectrum is computed on first
 * access and shared between copies.
 */
class GridFunction {
public:
    GridFunction(SpatialGrid grid, std::vector<double> values);

    static GridFunction zeros(const SpatialGrid& grid);
    static GridFunction constant(const SpatialGrid& grid, double value);
    static GridFunction from_spectrum(const SpatialGrid& grid, std::span<const Complex> spectrum);

    template <typename F>
    static GridFunction sample(const SpatialGrid& grid, F&& fn) {
        std::vector<double> values(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) values[j] = fn(grid.point(j));
        return GridFunction(grid, std::move(values));
    }

    const SpatialGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double operator[](std::size_t j) const { return values_[j]; }
    const Spectrum& spectrum() const;

    double max_abs() const;

private:
    struct SpectrumCache {
        std::once_flag once;
        Spectrum data;
    };

    SpatialGrid grid_;
    std::vector<double> values_;
    std::shared_ptr<SpectrumCache> cache_;
};

GridFunction operator+(const GridFunction& u, const GridFunction& v);
GridFunction operator-(const GridFunction& u, const GridFunction& v);
GridFunction operator*(double c, const GridFunction& u);
/// Pointwise product.
GridFunction operator*(const GridFunction& u, const GridFunction& v);

/// (i*xi)^order for half-spectrum index m; Nyquist returns 0 for odd orders.
Complex derivative_symbol(const SpatialGrid& grid, std::size_t m, int order);

/// Spectral derivative D^order u.
GridFunction derivative(const GridFunction& u, int order);

/// Weight sum_{alpha<=m} xi^{2 alpha} applied to mode index `mode` in |.|_m^2.
double sobolev_weight(const SpatialGrid& grid, std::size_t mode, int m);

/// |u|_m^2 = sum_{alpha<=m} int |D^alpha u|^2 dx, evaluated through Parseval.
double sobolev_norm_squared(const GridFunction& u, int m);
double sobolev_norm(const GridFunction& u, int m);

/// Same quantity as sobolev_norm_squared() but with every derivative taken
/// to physical space and summed on the grid; used to cross-check Parseval.
double sobolev_norm_squared_direct(const GridFunction& u, int m);

/// H^m norm squared of a field given directly by its half spectrum.
double sobolev_norm_squared(const SpatialGrid& grid, std::span<const Complex> spectrum, int m);

/// (u, v)_m, consistent with sobolev_norm_squared by polarization.
double inner(const GridFunction& u, const GridFunction& v, int m);

/// Spectral interpolation / truncation of u onto another grid of the same length.
GridFunction resample(const GridFunction& u, const SpatialGrid& target);

/// amplitude * exp(-d^2 / (2 width^2)), d the periodic distance to center.
GridFunction gaussian_bump(const SpatialGrid& grid, double center, double width, double amplitude);

/// CSV with header "x,value".
void write_field_csv(std::ostream& out, const GridFunction& u);
/// CSV with header "mode,re,im" over the half spectrum.
void write_spectrum_csv(std::ostream& out, const GridFunction& u);

}  // namespace wz::grid
