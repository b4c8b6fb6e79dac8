#include "polymerlab/environment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "polymerlab/errors.hpp"
#include "polymerlab/walk.hpp"

namespace polymerlab::env {

namespace {

double log_cosh(double b) {
  const double a = std::abs(b);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

template <std::size_t N>
double poly(const double (&c)[N], double r) {
  double v = c[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) v = v * r + c[i];
  return v;
}

}  // namespace

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw DomainError("normal_quantile needs u in (0,1)");
  static constexpr double a[] = {3.387132872796366608,  133.14166789178437745,
                                 1971.5909503065514427, 13731.693765509461125,
                                 45921.953931549871457, 67265.770927008700853,
                                 33430.575583588128105, 2509.0809287301226727};
  static constexpr double b[] = {1.0,
                                 42.313330701600911252,
                                 687.1870074920579083,
                                 5394.1960214247511077,
                                 21213.794301586595867,
                                 39307.89580009271061,
                                 28729.085735721942674,
                                 5226.495278852545925};
  static constexpr double c[] = {1.42343711074968357734,  4.6303378461565452959,
                                 5.7694972214606914055,   3.64784832476320460504,
                                 1.27045825245236838258,  0.24178072517745061177,
                                 0.0227238449892691845833, 7.7454501427834140764e-4};
  static constexpr double dd[] = {1.0,
                                  2.05319162663775882187,
                                  1.6763848301838038494,
                                  0.68976733498510000455,
                                  0.14810397642748007459,
                                  0.0151986665636164571966,
                                  5.475938084995344946e-4,
                                  1.05075007164441684324e-9};
  static constexpr double e[] = {6.6579046435011037772,    5.4637849111641143699,
                                 1.7848265399172913358,    0.29656057182850489123,
                                 0.026532189526576123093,  0.0012426609473880784386,
                                 2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[] = {1.0,
                                 0.59983220655588793769,
                                 0.13692988092273580531,
                                 0.0148753612908506148525,
                                 7.868691311456132591e-4,
                                 1.8463183175100546818e-5,
                                 1.4215117583164458887e-7,
                                 2.04426310338993978564e-15};
  const double q = u - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly(a, r) / poly(b, r);
  }
  double r = q < 0 ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double v;
  if (r <= 5.0) {
    r -= 1.6;
    v = poly(c, r) / poly(dd, r);
  } else {
    r -= 5.0;
    v = poly(e, r) / poly(f, r);
  }
  return q < 0 ? -v : v;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

DisorderFamily DisorderFamily::standard_gaussian() { return {Family::standard_gaussian, 0.0}; }
DisorderFamily DisorderFamily::rademacher() { return {Family::rademacher, 0.0}; }

DisorderFamily DisorderFamily::centered_bernoulli(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ParameterError("centered_bernoulli: p must lie in (0,1)");
  return {Family::centered_bernoulli, p};
}

DisorderFamily DisorderFamily::shifted_exponential(double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw ParameterError("shifted_exponential: rate must be positive");
  }
  return {Family::shifted_exponential, rate};
}

DisorderFamily DisorderFamily::parse(const std::string& name, const std::vector<double>& params) {
  auto need = [&](std::size_t n) {
    if (params.size() != n) {
      throw ParameterError("family '" + name + "' expects " + std::to_string(n) + " parameter(s)");
    }
  };
  if (name == "gaussian" || name == "standard_gaussian") {
    need(0);
    return standard_gaussian();
  }
  if (name == "rademacher") {
    need(0);
    return rademacher();
  }
  if (name == "bernoulli" || name == "centered_bernoulli") {
    need(1);
    return centered_bernoulli(params[0]);
  }
  if (name == "exponential" || name == "shifted_exponential") {
    need(1);
    return shifted_exponential(params[0]);
  }
  throw ParameterError("unknown disorder family '" + name + "'");
}

std::string DisorderFamily::name() const {
  switch (tag_) {
    case Family::standard_gaussian: return "standard_gaussian";
    case Family::rademacher: return "rademacher";
    case Family::centered_bernoulli: return "centered_bernoulli";
    case Family::shifted_exponential: return "shifted_exponential";
  }
  return "?";
}

std::vector<double> DisorderFamily::params() const {
  if (tag_ == Family::centered_bernoulli || tag_ == Family::shifted_exponential) return {param_};
  return {};
}

double DisorderFamily::lambda(double beta) const {
  if (!std::isfinite(beta)) throw ParameterError("lambda: beta must be finite");
  switch (tag_) {
    case Family::standard_gaussian:
      return 0.5 * beta * beta;
    case Family::rademacher:
      return log_cosh(beta);
    case Family::centered_bernoulli: {
      const double p = param_;
      // log(p e^{β(1-p)} + (1-p) e^{-βp}), factoring out the larger exponent.
      if (beta >= 0) return beta * (1 - p) + std::log(p + (1 - p) * std::exp(-beta));
      return -beta * p + std::log(p * std::exp(beta) + (1 - p));
    }
    case Family::shifted_exponential: {
      const double t = beta / param_;
      if (t >= 1.0) return std::numeric_limits<double>::infinity();
      return -t - std::log1p(-t);
    }
  }
  return 0.0;
}

double DisorderFamily::transform(double u) const {
  switch (tag_) {
    case Family::standard_gaussian: return normal_quantile(u);
    case Family::rademacher: return u < 0.5 ? -1.0 : 1.0;
    case Family::centered_bernoulli: return (u < param_ ? 1.0 : 0.0) - param_;
    case Family::shifted_exponential: return -std::log1p(-u) / param_ - 1.0 / param_;
  }
  return 0.0;
}

double DisorderFamily::cdf(double x) const {
  switch (tag_) {
    case Family::standard_gaussian: return normal_cdf(x);
    case Family::rademacher: return x < -1.0 ? 0.0 : (x < 1.0 ? 0.5 : 1.0);
    case Family::centered_bernoulli: {
      const double p = param_;
      return x < -p ? 0.0 : (x < 1.0 - p ? 1.0 - p : 1.0);
    }
    case Family::shifted_exponential: {
      const double y = x + 1.0 / param_;
      return y <= 0 ? 0.0 : -std::expm1(-param_ * y);
    }
  }
  return 0.0;
}

bool DisorderFamily::discrete() const noexcept {
  return tag_ == Family::rademacher || tag_ == Family::centered_bernoulli;
}

EnvironmentField::EnvironmentField(std::uint64_t seed, DisorderFamily family, Dimension d)
    : seed_(seed), family_(family), d_(d) {}

std::uint64_t EnvironmentField::key(int i, const Site& x) const {
  if (i < 1) throw DomainError("environment time must be >= 1");
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;
  const int d = d_.value();
  for (int j = 0; j < d; ++j) {
    if (x[j] >= (1 << 15) || x[j] < -(1 << 15) + 1) {
      throw DomainError("site coordinate out of packable range: " + polymerlab::to_string(x, d));
    }
    const auto packed = static_cast<std::uint64_t>(static_cast<std::uint16_t>(x[j]));
    if (j < 4) {
      lo |= packed << (16 * j);
    } else {
      hi |= packed;
    }
  }
  std::uint64_t h = mix64(seed_ ^ 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ (static_cast<std::uint64_t>(i) * 0xD1B54A32D192ED03ULL));
  h = mix64(h ^ lo);
  if (d > 4) h = mix64(h ^ (hi + 0x632BE59BD9B4E019ULL));
  return h;
}

double EnvironmentField::uniform(int i, const Site& x) const {
  return (static_cast<double>(key(i, x) >> 11) + 0.5) * 0x1.0p-53;
}

double EnvironmentField::omega(int i, const Site& x) const { return family_.transform(uniform(i, x)); }

void EnvironmentField::fill_row(int i, const Site& start, int count, double* out) const {
  if (count <= 0) return;
  const int d = d_.value();
  const int last = d - 1;
  Site end = start;
  end[last] += 2 * (count - 1);
  (void)key(i, start);  // range checks on both ends of the row
  (void)key(i, end);

  const std::uint64_t h0 =
      mix64(mix64(seed_ ^ 0x9E3779B97F4A7C15ULL) ^ (static_cast<std::uint64_t>(i) * 0xD1B54A32D192ED03ULL));
  std::uint64_t lo_prefix = 0;
  for (int j = 0; j < std::min(last, 4); ++j) {
    lo_prefix |= static_cast<std::uint64_t>(static_cast<std::uint16_t>(start[j])) << (16 * j);
  }
  auto uniform_at = [&](int c) {
    const auto packed = static_cast<std::uint64_t>(static_cast<std::uint16_t>(start[last] + 2 * c));
    std::uint64_t h;
    if (last < 4) {
      h = mix64(h0 ^ (lo_prefix | (packed << (16 * last))));
    } else {
      h = mix64(mix64(h0 ^ lo_prefix) ^ (packed + 0x632BE59BD9B4E019ULL));
    }
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
  };
  switch (family_.tag()) {
    case Family::standard_gaussian:
      for (int c = 0; c < count; ++c) out[c] = normal_quantile(uniform_at(c));
      break;
    default:
      for (int c = 0; c < count; ++c) out[c] = family_.transform(uniform_at(c));
      break;
  }
}

std::string to_string(MomentVariant v) {
  return v == MomentVariant::with_exp_factor ? "with_exp_factor" : "geometric";
}

double beta2(const DisorderFamily& family, Dimension d) {
  const double threshold = -std::log(walk::golden_constants(d).pi_d);
  auto lambda2 = [&](double b) {
    const double l2 = family.lambda(2 * b);
    return std::isfinite(l2) ? l2 - 2 * family.lambda(b) : std::numeric_limits<double>::infinity();
  };
  double lo = 0.0;
  double hi = 1.0;
  constexpr double kCap = 1e4;
  while (!(lambda2(hi) >= threshold)) {
    lo = hi;
    hi *= 2.0;
    if (hi > kCap) return std::numeric_limits<double>::infinity();
  }
  while (hi - lo > 1e-11) {
    const double mid = 0.5 * (lo + hi);
    if (lambda2(mid) < threshold) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

TemperatureProfile temperature_profile(const DisorderFamily& family, double beta, Dimension d) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ParameterError("beta must be finite and >= 0");
  const auto& golden = walk::golden_constants(d);
  TemperatureProfile p;
  p.d = d.value();
  p.beta = beta;
  p.pi_d = golden.pi_d;
  p.zeta_d = golden.zeta_d;
  p.lambda = family.lambda(beta);
  const double l2 = family.lambda(2 * beta);
  p.lambda2 = std::isfinite(l2) ? std::max(0.0, l2 - 2 * p.lambda)
                                : std::numeric_limits<double>::infinity();
  p.kappa2 = std::expm1(p.lambda2);
  p.in_L2_region = p.lambda2 < -std::log(golden.pi_d);
  p.beta2 = beta2(family, d);
  if (p.in_L2_region) {
    const double pi = golden.pi_d;
    p.sigma2 = (1 - pi) * p.kappa2 / (1 - pi * std::exp(p.lambda2)) * golden.zeta_d;
  }
  return p;
}

double second_moment_winfty(const TemperatureProfile& profile, MomentVariant variant) {
  if (!profile.in_L2_region) throw DomainError("E[W_inf^2] is infinite outside the L2 region");
  const double pi = profile.pi_d;
  const double e = std::exp(profile.lambda2);
  const double base = (1 - pi) / (1 - pi * e);
  return variant == MomentVariant::with_exp_factor ? base * e : base;
}

}  // namespace polymerlab::env
