#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "polymerlab/environment.hpp"
#include "polymerlab/stats.hpp"

using namespace polymerlab;
using namespace polymerlab::stats;

TEST_CASE("moments of a small sample") {
  const std::vector<double> x{1, 2, 3, 4, 10};
  const auto m = moments(x);
  CHECK(m.n == 5);
  CHECK(m.mean == doctest::Approx(4.0));
  CHECK(m.variance == doctest::Approx(12.5));
  CHECK(m.se_mean == doctest::Approx(std::sqrt(12.5 / 5)));
  CHECK(m.second_moment == doctest::Approx(26.0));
  CHECK(m.skewness > 0.0);
  CHECK(pairwise_sum(x) == 20.0);
}

TEST_CASE("simulated normals") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> x(200000);
  for (double& v : x) v = g(rng);
  const auto m = moments(x);
  CHECK(std::abs(m.mean) < 4 * m.se_mean);
  CHECK(m.variance == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(m.skewness) < 4 * std::sqrt(6.0 / x.size()));
  CHECK(std::abs(m.excess_kurtosis) < 4 * std::sqrt(24.0 / x.size()));
  CHECK(ks_one_sample(x, env::normal_cdf) < ks_critical_one(x.size()));
  std::vector<double> shifted(x.begin(), x.begin() + 5000);
  for (double& v : shifted) v += 0.2;
  CHECK(ks_one_sample(shifted, env::normal_cdf) > ks_critical_one(shifted.size()));
  std::vector<double> a(x.begin(), x.begin() + 4000), b(x.begin() + 4000, x.begin() + 10000);
  CHECK(ks_two_sample(a, b) < ks_critical_two(a.size(), b.size()));
  CHECK(ks_two_sample(a, shifted) > ks_critical_two(a.size(), shifted.size()));
  CHECK(median(x) == doctest::Approx(0.0).epsilon(0.02).scale(1.0));
}

TEST_CASE("KS statistic by hand") {
  // uniform cdf: the largest gap is 1 - 0.6 at the last point
  const auto cdf = [](double v) { return std::clamp(v, 0.0, 1.0); };
  CHECK(ks_one_sample({0.1, 0.5, 0.6}, cdf) == doctest::Approx(0.4));
  CHECK(ks_two_sample({1, 2, 3}, {4, 5, 6}) == doctest::Approx(1.0));
  CHECK(ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
}

TEST_CASE("critical values") {
  CHECK(ks_critical_one(100, 0.05) == doctest::Approx(0.1358).epsilon(1e-3));
  CHECK(ks_critical_one(100, 0.01) == doctest::Approx(0.1628).epsilon(1e-3));
  CHECK(ks_critical_two(100, 100, 0.01) == doctest::Approx(0.1628 * std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("least squares") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  const std::vector<double> y{1, 3, 5, 7, 9};
  const auto r = ols(x, y);
  CHECK(r.slope == doctest::Approx(2.0));
  CHECK(r.intercept == doctest::Approx(1.0));
  CHECK(r.se_slope == doctest::Approx(0.0).scale(1.0));
  const std::vector<double> noisy{1.1, 2.8, 5.3, 6.9, 9.0};
  const auto s = ols(x, noisy);
  CHECK(s.slope == doctest::Approx(1.99));
  CHECK(s.se_slope > 0.0);
}
