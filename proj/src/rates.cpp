#include "wz/rates.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace wz::rates {

std::string to_string(Quantity q) {
    switch (q) {
        case Quantity::sup_err: return "sup_err";
        case Quantity::sup_err_sq: return "sup_err_sq";
        case Quantity::integral_err: return "integral_err";
        case Quantity::sup_w_err: return "sup_w_err";
        case Quantity::sup_a_err: return "sup_a_err";
    }
    return "unknown";
}

namespace {

double select(const ErrorRecord& r, Quantity q) {
    switch (q) {
        case Quantity::sup_err: return r.sup_err;
        case Quantity::sup_err_sq: return r.sup_err * r.sup_err;
        case Quantity::integral_err: return r.integral_err;
        case Quantity::sup_w_err: return r.sup_w_err;
        case Quantity::sup_a_err: return r.sup_a_err;
    }
    return 0.0;
}

bool squared(Quantity q) { return q == Quantity::sup_err_sq || q == Quantity::integral_err; }

}  // namespace

RateFit fit_power_law(const std::vector<std::size_t>& ns, const std::vector<double>& values, bool halve) {
    if (ns.size() != values.size()) throw std::invalid_argument("n and value lists differ in length");
    RateFit fit;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        if (!(values[i] > 0.0) || !std::isfinite(values[i]) || ns[i] == 0) {
            fit.excluded.push_back(ns[i]);
            continue;
        }
        xs.push_back(std::log(static_cast<double>(ns[i])));
        ys.push_back(std::log(values[i]));
    }
    std::vector<double> distinct = xs;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 3) {
        throw std::invalid_argument("rate fit needs at least 3 distinct n with positive error, got " +
                                    std::to_string(distinct.size()));
    }
    const double k = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxy / sxx;
    fit.kappa = halve ? -0.5 * slope : -slope;
    fit.points_used = xs.size();
    return fit;
}

RateFit fit_rate(const std::vector<ErrorRecord>& records, Quantity quantity) {
    std::vector<std::size_t> ns;
    std::vector<double> values;
    for (const auto& r : records) {
        ns.push_back(r.n);
        values.push_back(select(r, quantity));
    }
    return fit_power_law(ns, values, squared(quantity));
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("quantile of empty data");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double default_threshold(double gamma_target) { return gamma_target - 0.1; }

RateReport aggregate(const std::string& quantity, const std::vector<double>& per_replica, double gamma_target,
                     double threshold) {
    if (per_replica.empty()) throw std::invalid_argument("aggregate needs at least one replica");
    RateReport r;
    r.quantity = quantity;
    r.gamma_target = gamma_target;
    r.per_replica = per_replica;
    r.median_kappa = quantile(per_replica, 0.5);
    r.iqr = quantile(per_replica, 0.75) - quantile(per_replica, 0.25);
    r.threshold = threshold;
    r.pass = r.median_kappa >= threshold;
    return r;
}

RateReport aggregate(const std::string& quantity, const std::vector<double>& per_replica, double gamma_target) {
    return aggregate(quantity, per_replica, gamma_target, default_threshold(gamma_target));
}

BnTrend bn_trend(const std::vector<ErrorRecord>& records) {
    std::map<std::size_t, double> by_n;
    for (const auto& r : records) {
        if (r.n <= 1) throw std::invalid_argument("ln n vanishes for n <= 1");
        by_n[r.n] = r.bn_var;
    }
    if (by_n.size() < 3) throw std::invalid_argument("B_n trend needs at least 3 distinct n");
    BnTrend t;
    for (const auto& [n, v] : by_n) {
        t.ns.push_back(n);
        t.ratios.push_back(v / std::log(static_cast<double>(n)));
    }
    const bool all_zero = std::all_of(t.ratios.begin(), t.ratios.end(), [](double r) { return r == 0.0; });
    bool decreasing = true;
    for (std::size_t i = 1; i < t.ratios.size(); ++i)
        if (!(t.ratios[i] < t.ratios[i - 1])) decreasing = false;
    t.monotone = all_zero || decreasing;
    return t;
}

nlohmann::json to_json(const RateReport& report) {
    return {{"quantity", report.quantity},         {"gamma_target", report.gamma_target},
            {"median_kappa", report.median_kappa}, {"iqr", report.iqr},
            {"per_replica", report.per_replica},   {"threshold", report.threshold},
            {"pass", report.pass}};
}

}  // namespace wz::rates
