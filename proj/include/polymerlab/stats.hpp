#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace polymerlab::stats {

/// Pairwise summation in index order. The result depends only on the
/// sequence, never on how the caller produced it.
double pairwise_sum(std::span<const double> x);

struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  ///< unbiased
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double se_mean = 0.0;
  double second_moment = 0.0;  ///< mean of x^2
  double se_second_moment = 0.0;
};
Moments moments(std::span<const double> x);

/// sup_x |F_n(x) - F(x)| over the sorted sample.
double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Asymptotic Kolmogorov critical values: c(a)/sqrt(n) and
/// c(a) sqrt((m+n)/(mn)) with c(a) = sqrt(-log(a/2)/2).
double ks_critical_one(std::size_t n, double level = 0.01);
double ks_critical_two(std::size_t m, std::size_t n, double level = 0.01);

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double se_slope = 0.0;
};
/// Ordinary least squares of y on x with intercept.
Regression ols(std::span<const double> x, std::span<const double> y);

double median(std::vector<double> x);

}  // namespace polymerlab::stats
