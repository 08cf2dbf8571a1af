#include "wz/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace wz::noise {

TimeGrid::TimeGrid(double horizon, std::size_t n_fine) : horizon_(horizon), n_fine_(n_fine) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("time horizon must be positive");
    if (n_fine < 2) throw std::invalid_argument("time grid needs at least 2 steps");
}

std::string to_string(PathKind kind) {
    switch (kind) {
        case PathKind::wiener: return "wiener";
        case PathKind::polygonal: return "polygonal";
        case PathKind::smoothed: return "smoothed";
        case PathKind::deterministic: return "deterministic";
    }
    return "unknown";
}

MultiPath::MultiPath(TimeGrid grid, std::size_t d1, std::vector<double> samples, PathKind kind, std::size_t n)
    : grid_(grid), d1_(d1), samples_(std::move(samples)), kind_(kind), n_(n) {
    if (d1_ == 0) throw std::invalid_argument("driver count d1 must be >= 1");
    if (samples_.size() != d1_ * grid_.points()) throw std::invalid_argument("path sample count mismatch");
    for (double v : samples_) {
        if (!std::isfinite(v)) throw std::invalid_argument("path samples must be finite");
    }
}

std::span<const double> MultiPath::component(std::size_t k) const {
    if (k >= d1_) throw std::out_of_range("path component out of range");
    return std::span<const double>(samples_).subspan(k * grid_.points(), grid_.points());
}

MultiPath MultiPath::scaled(double c) const {
    std::vector<double> s = samples_;
    for (double& v : s) v *= c;
    return MultiPath(grid_, d1_, std::move(s), kind_, n_);
}

std::uint64_t split_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed ^ (stream * 0x9e3779b97f4a7c15ULL);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

MultiPath sample_wiener(std::uint64_t seed, std::size_t d1, const TimeGrid& grid) {
    if (d1 == 0) throw std::invalid_argument("driver count d1 must be >= 1");
    std::mt19937_64 rng(split_seed(seed, 0));
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd = std::sqrt(grid.dt());
    const std::size_t np = grid.points();
    std::vector<double> s(d1 * np, 0.0);
    for (std::size_t k = 0; k < d1; ++k) {
        double acc = 0.0;
        for (std::size_t j = 1; j < np; ++j) {
            acc += sd * normal(rng);
            s[k * np + j] = acc;
        }
    }
    return MultiPath(grid, d1, std::move(s), PathKind::wiener);
}

void check_admissible(const TimeGrid& grid, Scheme scheme, std::size_t n) {
    if (n == 0) throw std::invalid_argument("approximation index n must be >= 1");
    switch (scheme) {
        case Scheme::polygonal:
            if (n > grid.steps() || grid.steps() % n != 0) {
                throw std::invalid_argument("polygonal approximation needs n dividing n_fine (n=" +
                                            std::to_string(n) + ", n_fine=" + std::to_string(grid.steps()) + ")");
            }
            break;
        case Scheme::smoothed:
            if (1.0 / static_cast<double>(n) < grid.dt() * (1.0 - 1e-12)) {
                throw std::invalid_argument("smoothing window 1/n=" + std::to_string(1.0 / static_cast<double>(n)) +
                                            " is smaller than the time step");
            }
            break;
    }
}

MultiPath polygonal_approx(const MultiPath& w, std::size_t n) {
    const auto& grid = w.grid();
    check_admissible(grid, Scheme::polygonal, n);
    const std::size_t per_knot = grid.steps() / n;
    const std::size_t np = grid.points();
    const double T = grid.horizon();
    const double nd = static_cast<double>(n);
    std::vector<double> s(w.d1() * np, 0.0);
    for (std::size_t k = 0; k < w.d1(); ++k) {
        const auto src = w.component(k);
        double* dst = s.data() + k * np;
        // Interval [t_q, t_{q+1}) for q >= 1 interpolates W(t_{q-1}) -> W(t_q).
        for (std::size_t q = 1; q < n; ++q) {
            const double lo = src[(q - 1) * per_knot];
            const double hi = src[q * per_knot];
            const double tq = grid.time(q * per_knot);
            for (std::size_t j = q * per_knot; j < (q + 1) * per_knot; ++j) {
                dst[j] = lo + nd * (grid.time(j) - tq) * (hi - lo) / T;
            }
        }
        // Right endpoint t = T is the knot t_n.
        dst[np - 1] = src[(n - 1) * per_knot];
    }
    return MultiPath(grid, w.d1(), std::move(s), PathKind::polygonal, n);
}

namespace {

// Number of fine steps spanned by the window 1/n, with an exact-integer flag.
struct Window {
    double steps;
    bool aligned;
    std::size_t whole;
};

Window smoothing_window(const TimeGrid& grid, std::size_t n) {
    const double steps = (1.0 / static_cast<double>(n)) / grid.dt();
    const double r = std::round(steps);
    Window win{steps, std::abs(steps - r) < 1e-9 * std::max(1.0, steps), static_cast<std::size_t>(r)};
    if (win.aligned) win.steps = r;
    return win;
}

// Piecewise-linear interpolant of one component at fractional index s (in steps).
double interpolate(std::span<const double> src, double s) {
    if (s <= 0.0) return 0.0;
    const double last = static_cast<double>(src.size() - 1);
    if (s >= last) return src.back();
    const auto j = static_cast<std::size_t>(s);
    const double th = s - static_cast<double>(j);
    return src[j] + th * (src[j + 1] - src[j]);
}

}  // namespace

MultiPath smoothed_approx(const MultiPath& w, std::size_t n) {
    const auto& grid = w.grid();
    check_admissible(grid, Scheme::smoothed, n);
    const std::size_t np = grid.points();
    const double dt = grid.dt();
    const double nd = static_cast<double>(n);
    const Window win = smoothing_window(grid, n);
    std::vector<double> s(w.d1() * np, 0.0);
    std::vector<double> cum(np, 0.0);
    for (std::size_t k = 0; k < w.d1(); ++k) {
        const auto src = w.component(k);
        // Exact integral of the piecewise-linear interpolant (trapezoidal rule).
        cum[0] = 0.0;
        for (std::size_t j = 0; j + 1 < np; ++j) cum[j + 1] = cum[j] + 0.5 * dt * (src[j] + src[j + 1]);
        auto cum_at = [&](double pos) {
            if (pos <= 0.0) return 0.0;
            const auto j = static_cast<std::size_t>(pos);
            if (j >= np - 1) return cum[np - 1];
            const double th = pos - static_cast<double>(j);
            return cum[j] + dt * (th * src[j] + 0.5 * th * th * (src[j + 1] - src[j]));
        };
        double* dst = s.data() + k * np;
        for (std::size_t j = 0; j < np; ++j) {
            double lower;
            if (win.aligned) {
                lower = (j >= win.whole) ? cum[j - win.whole] : 0.0;
            } else {
                lower = cum_at(static_cast<double>(j) - win.steps);
            }
            dst[j] = nd * (cum[j] - lower);
        }
    }
    return MultiPath(grid, w.d1(), std::move(s), PathKind::smoothed, n);
}

double approximant_rate(const MultiPath& w, const MultiPath& wn, std::size_t k, std::size_t j, double theta) {
    const auto& grid = wn.grid();
    if (j >= grid.steps()) throw std::out_of_range("fine step index out of range");
    if (wn.kind() == PathKind::smoothed) {
        if (w.kind() == PathKind::smoothed) throw std::invalid_argument("smoothed rate needs the underlying path");
        const auto src = w.component(k);
        const Window win = smoothing_window(grid, wn.n());
        const double pos = static_cast<double>(j) + theta;
        return static_cast<double>(wn.n()) * (interpolate(src, pos) - interpolate(src, pos - win.steps));
    }
    return (wn(k, j + 1) - wn(k, j)) / grid.dt();
}

// ---------------------------------------------------------------------------
// Matrix-valued functionals

MatrixPath::MatrixPath(TimeGrid grid, std::size_t d1)
    : grid_(grid), d1_(d1), data_(d1 * d1 * grid.points(), 0.0) {}

MatrixPath area_process(const MultiPath& p) {
    const std::size_t d1 = p.d1();
    const std::size_t np = p.grid().points();
    MatrixPath a(p.grid(), d1);
    for (std::size_t i = 0; i < d1; ++i) {
        for (std::size_t j = i + 1; j < d1; ++j) {
            const auto pi = p.component(i);
            const auto pj = p.component(j);
            double acc = 0.0;
            a.at(i, j, 0) = 0.0;
            a.at(j, i, 0) = 0.0;
            for (std::size_t m = 0; m + 1 < np; ++m) {
                acc += 0.5 * (pi[m] * (pj[m + 1] - pj[m]) - pj[m] * (pi[m + 1] - pi[m]));
                a.at(i, j, m + 1) = acc;
                a.at(j, i, m + 1) = -acc;
            }
        }
    }
    return a;
}

namespace {

void require_compatible(const MultiPath& w, const MultiPath& wn) {
    if (!(w.grid() == wn.grid())) throw std::invalid_argument("time grid mismatch between W and W_n");
    if (w.d1() != wn.d1()) throw std::invalid_argument("driver count mismatch between W and W_n");
    if (wn.kind() == PathKind::wiener) throw std::invalid_argument("W_n must be a finite-variation path");
}

}  // namespace

BnResult bn_process(const MultiPath& w, const MultiPath& wn) {
    require_compatible(w, wn);
    const std::size_t d1 = w.d1();
    const std::size_t np = w.grid().points();
    BnResult out{MatrixPath(w.grid(), d1), std::vector<double>(d1 * d1, 0.0)};
    for (std::size_t i = 0; i < d1; ++i) {
        const auto wi = w.component(i);
        const auto wni = wn.component(i);
        for (std::size_t j = 0; j < d1; ++j) {
            const auto wnj = wn.component(j);
            double acc = 0.0;
            double var = 0.0;
            for (std::size_t m = 0; m + 1 < np; ++m) {
                const double e = wi[m] - wni[m];
                const double dw = wnj[m + 1] - wnj[m];
                acc += e * dw;
                var += std::abs(e) * std::abs(dw);
                out.path.at(i, j, m + 1) = acc;
            }
            out.variation[i * d1 + j] = var;
        }
    }
    return out;
}

MatrixPath sn_process(const MultiPath& w, const MultiPath& wn) {
    MatrixPath s = bn_process(w, wn).path;
    for (std::size_t i = 0; i < w.d1(); ++i)
        for (std::size_t m = 0; m < w.grid().points(); ++m) s.at(i, i, m) -= 0.5 * w.grid().time(m);
    return s;
}

double NoiseBundle::max_bn_variation() const {
    return bn_variation.empty() ? 0.0 : *std::max_element(bn_variation.begin(), bn_variation.end());
}

NoiseBundle make_bundle(MultiPath w, MultiPath wn) {
    require_compatible(w, wn);
    const std::size_t d1 = w.d1();
    const std::size_t np = w.grid().points();
    MatrixPath a = area_process(w);
    MatrixPath an = area_process(wn);
    BnResult bn = bn_process(w, wn);
    MatrixPath sn = bn.path;
    for (std::size_t i = 0; i < d1; ++i)
        for (std::size_t m = 0; m < np; ++m) sn.at(i, i, m) -= 0.5 * w.grid().time(m);

    double sup_w = 0.0;
    for (std::size_t k = 0; k < d1; ++k)
        for (std::size_t m = 0; m < np; ++m) sup_w = std::max(sup_w, std::abs(w(k, m) - wn(k, m)));
    double sup_a = 0.0;
    double sup_s = 0.0;
    for (std::size_t m = 0; m < np; ++m) {
        for (std::size_t i = 0; i < d1; ++i) {
            for (std::size_t j = 0; j < d1; ++j) {
                if (i != j) sup_a = std::max(sup_a, std::abs(a(i, j, m) - an(i, j, m)));
                sup_s = std::max(sup_s, std::abs(sn(i, j, m)));
            }
        }
    }
    const std::size_t n = wn.n();
    return NoiseBundle{std::move(w), std::move(wn), n, std::move(a), std::move(an), std::move(sn),
                       std::move(bn.path), std::move(bn.variation), sup_w, sup_a, sup_s};
}

std::vector<double> remark_identity_residual(const NoiseBundle& b) {
    const std::size_t d1 = b.w.d1();
    const std::size_t np = b.w.grid().points();
    std::vector<double> out(d1 * d1, 0.0);
    for (std::size_t i = 0; i < d1; ++i) {
        for (std::size_t j = 0; j < d1; ++j) {
            const auto wi = b.w.component(i);
            const auto wj = b.w.component(j);
            const auto ni = b.wn.component(i);
            const auto nj = b.wn.component(j);
            const double q0 = (wi[0] - ni[0]) * (wj[0] - nj[0]);
            double r_ij = 0.0;
            double r_ji = 0.0;
            double worst = 0.0;
            for (std::size_t m = 0; m < np; ++m) {
                const double qm = (wi[m] - ni[m]) * (wj[m] - nj[m]);
                const double rhs = q0 - qm + r_ij + r_ji;
                const double lhs = b.sn(i, j, m) + b.sn(j, i, m);
                worst = std::max(worst, std::abs(lhs - rhs));
                if (m + 1 < np) {
                    r_ij += (wi[m] - ni[m]) * (wj[m + 1] - wj[m]);
                    r_ji += (wj[m] - nj[m]) * (wi[m + 1] - wi[m]);
                }
            }
            out[i * d1 + j] = worst;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Sweeps

std::string to_string(Scheme scheme) { return scheme == Scheme::polygonal ? "polygonal" : "smoothed"; }

Scheme parse_scheme(const std::string& name) {
    if (name == "polygonal") return Scheme::polygonal;
    if (name == "smoothed") return Scheme::smoothed;
    throw std::invalid_argument("unknown approximation scheme '" + name + "'");
}

MultiPath approximate(const MultiPath& w, Scheme scheme, std::size_t n) {
    return scheme == Scheme::polygonal ? polygonal_approx(w, n) : smoothed_approx(w, n);
}

std::vector<NoiseRow> noise_report(const MultiPath& w, Scheme scheme, std::span<const std::size_t> n_list) {
    if (n_list.empty()) throw std::invalid_argument("empty n sweep");
    for (std::size_t n : n_list) check_admissible(w.grid(), scheme, n);
    std::vector<NoiseRow> rows;
    rows.reserve(n_list.size());
    for (std::size_t n : n_list) {
        const NoiseBundle b = make_bundle(w, approximate(w, scheme, n));
        const double bmax = b.max_bn_variation();
        const double logn = std::log(static_cast<double>(n));
        rows.push_back({n, b.sup_w_err, b.sup_a_err, bmax,
                        logn > 0.0 ? bmax / logn : std::numeric_limits<double>::infinity(), 0.0});
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        double eta = 0.0;
        for (const auto& other : rows)
            if (other.n >= rows[r].n) eta = std::max(eta, other.sup_w_err);
        rows[r].eta_n = eta;
    }
    return rows;
}

std::vector<NoiseRow> noise_report(std::uint64_t seed, std::size_t d1, const TimeGrid& grid, Scheme scheme,
                                   std::span<const std::size_t> n_list) {
    return noise_report(sample_wiener(seed, d1, grid), scheme, n_list);
}

}  // namespace wz::noise
