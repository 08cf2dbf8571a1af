#include "wz/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

namespace wz::grid {

SpatialGrid::SpatialGrid(std::size_t n_x, double length) : n_x_(n_x), length_(length) {
    if (n_x < 8 || (n_x & (n_x - 1)) != 0) {
        throw std::invalid_argument("spatial grid size must be a power of two >= 8, got " +
                                    std::to_string(n_x));
    }
    if (!(length > 0.0) || !std::isfinite(length)) {
        throw std::invalid_argument("domain length must be positive and finite");
    }
}

double SpatialGrid::wavenumber(std::size_t m) const {
    return 2.0 * std::numbers::pi * static_cast<double>(m) / length_;
}

// ---------------------------------------------------------------------------
// Transform

struct Transform::Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;

    // Cached for the process lifetime and never destroyed.
};

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::shared_ptr<const Transform::Plans> lookup_plans(std::size_t n_x);

}  // namespace

Transform::Transform(std::size_t n_x) : n_x_(n_x) {
    if (n_x < 2) throw std::invalid_argument("transform length must be >= 2");
    plans_ = lookup_plans(n_x);
}

namespace {

std::shared_ptr<const Transform::Plans> lookup_plans(std::size_t n_x) {
    static std::map<std::size_t, std::shared_ptr<Transform::Plans>> cache;
    std::lock_guard lock(planner_mutex());
    auto it = cache.find(n_x);
    if (it != cache.end()) return it->second;

    const int n = static_cast<int>(n_x);
    auto* real_buf = fftw_alloc_real(n_x);
    auto* cplx_buf = fftw_alloc_complex(n_x / 2 + 1);
    auto plans = std::make_shared<Transform::Plans>();
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans->r2c = fftw_plan_dft_r2c_1d(n, real_buf, cplx_buf, flags);
    plans->c2r = fftw_plan_dft_c2r_1d(n, cplx_buf, real_buf, flags | FFTW_DESTROY_INPUT);
    fftw_free(real_buf);
    fftw_free(cplx_buf);
    if (plans->r2c == nullptr || plans->c2r == nullptr) {
        throw std::runtime_error("FFTW planning failed for length " + std::to_string(n_x));
    }
    cache.emplace(n_x, plans);
    return plans;
}

}  // namespace

void Transform::forward(std::span<const double> values, std::span<Complex> spectrum) const {
    if (values.size() != n_x_ || spectrum.size() != n_x_ / 2 + 1) {
        throw std::invalid_argument("transform buffer size mismatch");
    }
    // r2c does not modify its input with FFTW_ESTIMATE on out-of-place plans.
    fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(values.data()),
                         reinterpret_cast<fftw_complex*>(spectrum.data()));
}

void Transform::inverse(std::span<const Complex> spectrum, std::span<double> values) const {
    if (values.size() != n_x_ || spectrum.size() != n_x_ / 2 + 1) {
        throw std::invalid_argument("transform buffer size mismatch");
    }
    thread_local std::vector<Complex> scratch;
    scratch.assign(spectrum.begin(), spectrum.end());
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()),
                         values.data());
    const double scale = 1.0 / static_cast<double>(n_x_);
    for (double& v : values) v *= scale;
}

// ---------------------------------------------------------------------------
// GridFunction

GridFunction::GridFunction(SpatialGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)), cache_(std::make_shared<SpectrumCache>()) {
    if (values_.size() != grid_.size()) {
        throw std::invalid_argument("grid function has " + std::to_string(values_.size()) +
                                    " values for a grid of " + std::to_string(grid_.size()));
    }
}

GridFunction GridFunction::zeros(const SpatialGrid& grid) {
    return GridFunction(grid, std::vector<double>(grid.size(), 0.0));
}

GridFunction GridFunction::constant(const SpatialGrid& grid, double value) {
    return GridFunction(grid, std::vector<double>(grid.size(), value));
}

GridFunction GridFunction::from_spectrum(const SpatialGrid& grid, std::span<const Complex> spectrum) {
    std::vector<double> values(grid.size());
    Transform(grid.size()).inverse(spectrum, values);
    return GridFunction(grid, std::move(values));
}

const Spectrum& GridFunction::spectrum() const {
    std::call_once(cache_->once, [this] {
        cache_->data.resize(grid_.modes());
        Transform(grid_.size()).forward(values_, cache_->data);
    });
    return cache_->data;
}

double GridFunction::max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
}

namespace {

void require_same_grid(const GridFunction& u, const GridFunction& v) {
    if (!(u.grid() == v.grid())) throw std::invalid_argument("grid mismatch");
}

template <typename Op>
GridFunction zip(const GridFunction& u, const GridFunction& v, Op op) {
    require_same_grid(u, v);
    std::vector<double> out(u.grid().size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = op(u[j], v[j]);
    return GridFunction(u.grid(), std::move(out));
}

}  // namespace

GridFunction operator+(const GridFunction& u, const GridFunction& v) {
    return zip(u, v, [](double a, double b) { return a + b; });
}

GridFunction operator-(const GridFunction& u, const GridFunction& v) {
    return zip(u, v, [](double a, double b) { return a - b; });
}

GridFunction operator*(const GridFunction& u, const GridFunction& v) {
    return zip(u, v, [](double a, double b) { return a * b; });
}

GridFunction operator*(double c, const GridFunction& u) {
    std::vector<double> out(u.values().begin(), u.values().end());
    for (double& x : out) x *= c;
    return GridFunction(u.grid(), std::move(out));
}

// ---------------------------------------------------------------------------
// Differentiation and norms

Complex derivative_symbol(const SpatialGrid& grid, std::size_t m, int order) {
    if (order < 0) throw std::invalid_argument("derivative order must be >= 0");
    if (order == 0) return {1.0, 0.0};
    const bool nyquist = (m == grid.size() / 2);
    if (nyquist && order % 2 == 1) return {0.0, 0.0};
    const double xi = grid.wavenumber(m);
    const double mag = std::pow(xi, order);
    // i^order
    switch (order % 4) {
        case 0: return {mag, 0.0};
        case 1: return {0.0, mag};
        case 2: return {-mag, 0.0};
        default: return {0.0, -mag};
    }
}

GridFunction derivative(const GridFunction& u, int order) {
    if (order < 0) throw std::invalid_argument("derivative order must be >= 0");
    if (order == 0) return u;
    const auto& grid = u.grid();
    Spectrum s = u.spectrum();
    for (std::size_t m = 0; m < s.size(); ++m) s[m] *= derivative_symbol(grid, m, order);
    return GridFunction::from_spectrum(grid, s);
}

double sobolev_weight(const SpatialGrid& grid, std::size_t mode, int m) {
    const bool nyquist = (mode == grid.size() / 2);
    const double xi2 = grid.wavenumber(mode) * grid.wavenumber(mode);
    double w = 0.0;
    double p = 1.0;
    for (int alpha = 0; alpha <= m; ++alpha) {
        if (!(nyquist && alpha % 2 == 1)) w += p;
        p *= xi2;
    }
    return w;
}

double sobolev_norm_squared(const SpatialGrid& grid, std::span<const Complex> spectrum, int m) {
    if (m < 0) throw std::invalid_argument("negative Sobolev index is not supported");
    if (spectrum.size() != grid.modes()) throw std::invalid_argument("spectrum size mismatch");
    const std::size_t n = grid.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < spectrum.size(); ++k) {
        const double mult = (k == 0 || k == n / 2) ? 1.0 : 2.0;
        sum += mult * sobolev_weight(grid, k, m) * std::norm(spectrum[k]);
    }
    const double nd = static_cast<double>(n);
    return grid.length() * sum / (nd * nd);
}

double sobolev_norm_squared(const GridFunction& u, int m) {
    return sobolev_norm_squared(u.grid(), u.spectrum(), m);
}

double sobolev_norm(const GridFunction& u, int m) { return std::sqrt(sobolev_norm_squared(u, m)); }

double sobolev_norm_squared_direct(const GridFunction& u, int m) {
    if (m < 0) throw std::invalid_argument("negative Sobolev index is not supported");
    double total = 0.0;
    for (int alpha = 0; alpha <= m; ++alpha) {
        const GridFunction d = derivative(u, alpha);
        double s = 0.0;
        for (double v : d.values()) s += v * v;
        total += u.grid().spacing() * s;
    }
    return total;
}

double inner(const GridFunction& u, const GridFunction& v, int m) {
    require_same_grid(u, v);
    if (m < 0) throw std::invalid_argument("negative Sobolev index is not supported");
    const auto& grid = u.grid();
    const auto& su = u.spectrum();
    const auto& sv = v.spectrum();
    const std::size_t n = grid.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < su.size(); ++k) {
        const double mult = (k == 0 || k == n / 2) ? 1.0 : 2.0;
        sum += mult * sobolev_weight(grid, k, m) * std::real(su[k] * std::conj(sv[k]));
    }
    const double nd = static_cast<double>(n);
    return grid.length() * sum / (nd * nd);
}

GridFunction resample(const GridFunction& u, const SpatialGrid& target) {
    if (u.grid().length() != target.length()) throw std::invalid_argument("resample needs equal domain lengths");
    if (u.grid() == target) return u;
    const auto& src = u.spectrum();
    const double scale = static_cast<double>(target.size()) / static_cast<double>(u.grid().size());
    Spectrum dst(target.modes(), Complex{0.0, 0.0});
    const std::size_t common = std::min(src.size(), dst.size());
    for (std::size_t m = 0; m < common; ++m) dst[m] = scale * src[m];
    // An unpaired Nyquist mode of the smaller grid splits between +/- modes of the larger one.
    if (target.size() > u.grid().size()) dst[common - 1] *= 0.5;
    else dst[common - 1] = Complex{0.0, 0.0};
    return GridFunction::from_spectrum(target, dst);
}

GridFunction gaussian_bump(const SpatialGrid& grid, double center, double width, double amplitude) {
    if (!(width > 0.0)) throw std::invalid_argument("bump width must be positive");
    const double L = grid.length();
    return GridFunction::sample(grid, [&](double x) {
        double d = std::fmod(x - center, L);
        if (d < -0.5 * L) d += L;
        if (d > 0.5 * L) d -= L;
        return amplitude * std::exp(-d * d / (2.0 * width * width));
    });
}

void write_field_csv(std::ostream& out, const GridFunction& u) {
    out << "x,value\n";
    out.precision(17);
    for (std::size_t j = 0; j < u.grid().size(); ++j) out << u.grid().point(j) << ',' << u[j] << '\n';
}

void write_spectrum_csv(std::ostream& out, const GridFunction& u) {
    out << "mode,re,im\n";
    out.precision(17);
    const auto& s = u.spectrum();
    for (std::size_t m = 0; m < s.size(); ++m) out << m << ',' << s[m].real() << ',' << s[m].imag() << '\n';
}

}  // namespace wz::grid
