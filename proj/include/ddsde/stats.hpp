#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ddsde::stats {

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic critical value of the two-sample KS statistic at the given
/// significance level (e.g. 0.01).
double ks_critical_value(double level, std::size_t n, std::size_t m);

/// Upper critical value of the chi-square distribution.
double chi_square_critical(double level, double degrees_of_freedom);

/// Empirical p-quantile (linear interpolation between order statistics).
double quantile(std::vector<double> sample, double p);

double mean(std::span<const double> xs);

} // namespace ddsde::stats
