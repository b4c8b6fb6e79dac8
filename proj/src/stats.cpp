#include "polymerlab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "polymerlab/errors.hpp"

namespace polymerlab::stats {

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 16) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t h = x.size() / 2;
  return pairwise_sum(x.first(h)) + pairwise_sum(x.subspan(h));
}

Moments moments(std::span<const double> x) {
  Moments m;
  m.n = x.size();
  if (m.n == 0) return m;
  const double n = static_cast<double>(m.n);
  m.mean = pairwise_sum(x) / n;
  std::vector<double> c2(x.size()), c3(x.size()), c4(x.size()), sq(x.size()), sq2(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = x[i] - m.mean;
    c2[i] = c * c;
    c3[i] = c2[i] * c;
    c4[i] = c2[i] * c2[i];
    sq[i] = x[i] * x[i];
  }
  const double s2 = pairwise_sum(c2) / n;
  const double s3 = pairwise_sum(c3) / n;
  const double s4 = pairwise_sum(c4) / n;
  m.second_moment = pairwise_sum(sq) / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = sq[i] - m.second_moment;
    sq2[i] = c * c;
  }
  if (m.n > 1) {
    m.variance = s2 * n / (n - 1.0);
    m.se_mean = std::sqrt(m.variance / n);
    m.se_second_moment = std::sqrt(pairwise_sum(sq2) / (n - 1.0) / n);
  }
  if (s2 > 0.0) {
    m.skewness = s3 / std::pow(s2, 1.5);
    m.excess_kurtosis = s4 / (s2 * s2) - 3.0;
  }
  return m;
}

double ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw ParameterError("ks_one_sample on an empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw ParameterError("ks_two_sample on an empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

namespace {
double kolmogorov_c(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ParameterError("KS level must lie in (0,1)");
  return std::sqrt(-0.5 * std::log(level / 2.0));
}
}  // namespace

double ks_critical_one(std::size_t n, double level) {
  return kolmogorov_c(level) / std::sqrt(static_cast<double>(n));
}

double ks_critical_two(std::size_t m, std::size_t n, double level) {
  const double a = static_cast<double>(m), b = static_cast<double>(n);
  return kolmogorov_c(level) * std::sqrt((a + b) / (a * b));
}

Regression ols(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 3) throw ParameterError("ols needs matched samples of size >= 3");
  const double n = static_cast<double>(x.size());
  const double mx = pairwise_sum(x) / n;
  const double my = pairwise_sum(y) / n;
  std::vector<double> sxx(x.size()), sxy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx[i] = (x[i] - mx) * (x[i] - mx);
    sxy[i] = (x[i] - mx) * (y[i] - my);
  }
  const double Sxx = pairwise_sum(sxx);
  if (Sxx == 0.0) throw ParameterError("ols with constant regressor");
  Regression r;
  r.slope = pairwise_sum(sxy) / Sxx;
  r.intercept = my - r.slope * mx;
  std::vector<double> res(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - r.intercept - r.slope * x[i];
    res[i] = e * e;
  }
  r.se_slope = std::sqrt(pairwise_sum(res) / (n - 2.0) / Sxx);
  return r;
}

double median(std::vector<double> x) {
  if (x.empty()) throw ParameterError("median of an empty sample");
  std::sort(x.begin(), x.end());
  const std::size_t h = x.size() / 2;
  return x.size() % 2 ? x[h] : 0.5 * (x[h - 1] + x[h]);
}

}  // namespace polymerlab::stats
