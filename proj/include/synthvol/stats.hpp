#pragma once

// Small descriptive statistics shared by reports and scenarios.

#include <span>
#include <vector>

namespace synthvol::stats {

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> x);
double median(std::vector<double> x);
/// Linear interpolation between order statistics (type 7).
double quantile(std::vector<double> x, double p);
/// Several quantiles of the same sample, sorting once.
std::vector<double> quantiles(std::vector<double> x, std::span<const double> ps);
/// Moment estimator m4 / m2^2 - 3.
double excess_kurtosis(std::span<const double> x);
/// Sample autocorrelation at `lag` about the full-sample mean.
double autocorrelation(std::span<const double> x, int lag);

}  // namespace synthvol::stats
