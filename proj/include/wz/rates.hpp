#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"

namespace wz::rates {

/// One (replica, n) cell of a sweep.
struct ErrorRecord {
    std::size_t n = 0;
    std::size_t replica = 0;
    double sup_err = 0.0;
    double integral_err = 0.0;
    double sup_w_err = 0.0;
    double sup_a_err = 0.0;
    double bn_var = 0.0;
};

/// Which column of an ErrorRecord a fit reads, and in which power.
enum class Quantity {
    sup_err,       ///< |u_n - u|_m, already in kappa units
    sup_err_sq,    ///< |u_n - u|_m^2, slope halved
    integral_err,  ///< int |u_n - u|_{m+1}^2, slope halved
    sup_w_err,
    sup_a_err,
};

std::string to_string(Quantity q);

struct RateFit {
    /// Estimated kappa: minus the log-log slope, halved for squared quantities.
    double kappa = 0.0;
    std::size_t points_used = 0;
    /// n values dropped because their error was not positive.
    std::vector<std::size_t> excluded;
};

/// Least-squares fit of log(error) against log(n) for one replica.
/// Throws std::invalid_argument with fewer than 3 usable points.
RateFit fit_rate(const std::vector<ErrorRecord>& records, Quantity quantity);

/// Same fit on bare (n, value) pairs; `halve` converts squared quantities.
RateFit fit_power_law(const std::vector<std::size_t>& ns, const std::vector<double>& values, bool halve = false);

struct RateReport {
    std::string quantity;
    double gamma_target = 0.5;
    std::vector<double> per_replica;
    double median_kappa = 0.0;
    double iqr = 0.0;
    double threshold = 0.0;
    bool pass = false;
};

/// Default pass threshold: gamma_target - 0.1.
double default_threshold(double gamma_target);

/// Median and interquartile range of per-replica exponents; pass iff median >= threshold.
RateReport aggregate(const std::string& quantity, const std::vector<double>& per_replica, double gamma_target,
                     double threshold);

RateReport aggregate(const std::string& quantity, const std::vector<double>& per_replica, double gamma_target = 0.5);

/// Linear-interpolation quantile of unsorted data, q in [0, 1].
double quantile(std::vector<double> values, double q);

struct BnTrend {
    std::vector<std::size_t> ns;
    std::vector<double> ratios;  ///< ||B_n||(T) / ln n
    bool monotone = false;       ///< ratios strictly decrease in n (all-zero counts as monotone)
};

/// Trend evidence for ||B_n||(T) = o(ln n) on one replica. Needs >= 3 distinct n > 1.
BnTrend bn_trend(const std::vector<ErrorRecord>& records);

nlohmann::json to_json(const RateReport& report);

}  // namespace wz::rates
