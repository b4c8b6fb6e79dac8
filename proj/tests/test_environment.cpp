#include <doctest.h>

#include <algorithm>
#include <cstring>
#include <numbers>
#include <cmath>
#include <thread>
#include <vector>

#include "polymerlab/environment.hpp"
#include "polymerlab/errors.hpp"
#include "polymerlab/stats.hpp"
#include "polymerlab/walk.hpp"

using namespace polymerlab;
using namespace polymerlab::env;

namespace {

std::vector<DisorderFamily> all_families() {
  return {DisorderFamily::standard_gaussian(), DisorderFamily::rademacher(), DisorderFamily::centered_bernoulli(0.3),
          DisorderFamily::shifted_exponential(2.0)};
}

// Draws along a line of sites so that every draw uses a distinct key.
std::vector<double> draws(const DisorderFamily& f, std::size_t n, std::uint64_t seed) {
  EnvironmentField field(seed, f, Dimension(3));
  std::vector<double> out;
  out.reserve(n);
  Site x{};
  for (std::size_t i = 0; out.size() < n; ++i) {
    x[0] = static_cast<int>(i % 2000) - 1000;
    x[1] = static_cast<int>((i / 2000) % 2000) - 1000;
    out.push_back(field.omega(1 + static_cast<int>(i / 4000000), x));
  }
  return out;
}

}  // namespace

TEST_CASE("lambda closed forms") {
  const auto g = DisorderFamily::standard_gaussian();
  for (double b : {0.0, 0.3, 1.7}) CHECK(g.lambda(b) == doctest::Approx(b * b / 2));
  CHECK(DisorderFamily::rademacher().lambda(1.0) == doctest::Approx(0.43378).epsilon(1e-5));
  CHECK(DisorderFamily::rademacher().lambda(1.0) == doctest::Approx(std::log(std::cosh(1.0))));
  for (const auto& f : all_families()) CHECK(f.lambda(0.0) == 0.0);
  const auto b = DisorderFamily::centered_bernoulli(0.3);
  CHECK(b.lambda(0.8) == doctest::Approx(std::log(0.3 * std::exp(0.8 * 0.7) + 0.7 * std::exp(-0.8 * 0.3))));
  const auto e = DisorderFamily::shifted_exponential(2.0);
  CHECK(e.lambda(0.5) == doctest::Approx(std::log(2.0 / 1.5) - 0.25));
  CHECK(std::isinf(e.lambda(2.0)));
  CHECK_THROWS_AS(DisorderFamily::centered_bernoulli(1.0), ParameterError);
  CHECK_THROWS_AS(DisorderFamily::shifted_exponential(0.0), ParameterError);
  CHECK_THROWS_AS(DisorderFamily::parse("cauchy", {}), ParameterError);
  CHECK(DisorderFamily::parse("bernoulli", {0.3}) == b);
  CHECK(DisorderFamily::parse(b.name(), b.params()) == b);
}

TEST_CASE("lambda agrees with Monte Carlo") {
  for (const auto& f : all_families()) {
    const auto x = draws(f, 200000, 7);
    for (double beta : {0.2, 0.5}) {
      std::vector<double> e(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) e[i] = std::exp(beta * x[i]);
      const auto m = stats::moments(e);
      const double se_log = m.se_mean / m.mean;
      CHECK(std::abs(std::log(m.mean) - f.lambda(beta)) < 3.0 * se_log + 1e-12);
    }
  }
}

TEST_CASE("omega is deterministic and keyed by site") {
  EnvironmentField f(42, DisorderFamily::standard_gaussian(), Dimension(3));
  Site x{3, -7, 11};
  CHECK(f.omega(5, x) == f.omega(5, x));
  CHECK(f.omega(5, x) != f.omega(6, x));
  Site y{3, -7, 12};
  CHECK(f.omega(5, x) != f.omega(5, y));
  EnvironmentField g(43, DisorderFamily::standard_gaussian(), Dimension(3));
  CHECK(f.omega(5, x) != g.omega(5, x));
  Site far{1 << 15, 0, 0};
  CHECK_THROWS_AS(f.omega(1, far), DomainError);
  CHECK_THROWS_AS(f.omega(0, x), DomainError);
  // five-dimensional keys use the fifth coordinate
  EnvironmentField h(42, DisorderFamily::standard_gaussian(), Dimension(5));
  Site a{1, 2, 3, 4, 5}, b{1, 2, 3, 4, 6};
  CHECK(h.omega(1, a) != h.omega(1, b));
}

TEST_CASE("fill_row matches omega") {
  for (const auto& fam : all_families()) {
    EnvironmentField f(9, fam, Dimension(3));
    Site start{-4, 2, -9};
    std::vector<double> row(10);
    f.fill_row(3, start, 10, row.data());
    for (int c = 0; c < 10; ++c) {
      Site x = start;
      x[2] += 2 * c;
      CHECK(row[c] == f.omega(3, x));
    }
  }
}

TEST_CASE("gaussian field has mean zero and rademacher is +-1") {
  const auto x = draws(DisorderFamily::standard_gaussian(), 1000000, 1);
  CHECK(std::abs(stats::moments(x).mean) < 0.004);
  for (double v : draws(DisorderFamily::rademacher(), 10000, 2)) CHECK((v == 1.0 || v == -1.0));
}

TEST_CASE("normal quantile inverts the normal cdf") {
  for (double u : {1e-300, 1e-12, 0.001, 0.2, 0.5, 0.77, 0.999, 1.0 - 1e-12}) {
    CHECK(normal_cdf(normal_quantile(u)) == doctest::Approx(u).epsilon(1e-9));
  }
  CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
  CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
}

TEST_SUITE("invariants") {
  TEST_CASE("lambda is convex and lambda2 vanishes only at zero") {
    for (const auto& f : all_families()) {
      const double top = f.tag() == Family::shifted_exponential ? 0.9 : 3.0;
      for (double a = 0.0; a <= top; a += top / 15) {
        for (double b = a; b <= top; b += top / 15) {
          CHECK(f.lambda((a + b) / 2) <= (f.lambda(a) + f.lambda(b)) / 2 + 1e-12);
        }
      }
      const double half = top / 2;
      for (double beta = 0.0; beta <= half; beta += half / 10) {
        const auto p = temperature_profile(f, beta, Dimension(3));
        if (beta == 0.0) CHECK(p.lambda2 == 0.0);
        else CHECK(p.lambda2 > 0.0);
      }
    }
  }

  TEST_CASE("the field is identical whatever the thread order") {
    EnvironmentField f(77, DisorderFamily::standard_gaussian(), Dimension(3));
    const int R = 12, side = 2 * R + 1;
    auto fill = [&](std::vector<double>& out, int threads, bool reverse) {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
          for (int a = 0; a < side; ++a) {
            const int i = reverse ? side - 1 - a : a;
            if (i % threads != t) continue;
            for (int j = 0; j < side; ++j)
              for (int k = 0; k < side; ++k)
                out[(i * side + j) * side + k] = f.omega(4, Site{i - R, j - R, k - R});
          }
        });
      }
      for (auto& p : pool) p.join();
    };
    std::vector<double> a(side * side * side), b(a.size());
    fill(a, 1, false);
    fill(b, 4, true);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }

  TEST_CASE("each family passes a KS test against its law") {
    for (const auto& f : all_families()) {
      auto x = draws(f, 1000000, 11);
      double D = 0.0;
      if (f.discrete()) {
        // compare the empirical and target CDFs at the support points
        std::sort(x.begin(), x.end());
        const double n = static_cast<double>(x.size());
        for (std::size_t i = 0; i < x.size();) {
          std::size_t j = i;
          while (j < x.size() && x[j] == x[i]) ++j;
          D = std::max(D, std::abs(static_cast<double>(j) / n - f.cdf(x[i])));
          i = j;
        }
      } else {
        D = stats::ks_one_sample(x, [&](double v) { return f.cdf(v); });
      }
      CHECK(D < stats::ks_critical_one(x.size(), 0.01));
    }
  }

  TEST_CASE("sigma2 blows up approaching beta2") {
    const auto g = DisorderFamily::standard_gaussian();
    const auto b2 = beta2(g, Dimension(3));
    double prev = 0.0;
    for (double f : {0.2, 0.5, 0.8, 0.9, 0.99, 0.999}) {
      const auto p = temperature_profile(g, f * b2, Dimension(3));
      REQUIRE(p.sigma2.has_value());
      CHECK(*p.sigma2 > prev);
      prev = *p.sigma2;
    }
    CHECK(prev > 100.0);
  }
}

TEST_CASE("temperature profile") {
  const auto g = DisorderFamily::standard_gaussian();
  const Dimension d3(3);
  const auto p0 = temperature_profile(g, 0.0, d3);
  CHECK(p0.lambda2 == 0.0);
  CHECK(p0.kappa2 == 0.0);
  CHECK(p0.sigma2.value() == 0.0);
  CHECK(p0.in_L2_region);

  const double pi3 = walk::golden_constants(d3).pi_d;
  const auto p = temperature_profile(g, 0.5, d3);
  CHECK(p.lambda2 == doctest::Approx(0.25));
  CHECK(p.kappa2 == doctest::Approx(0.28403).epsilon(1e-4));
  const double z3 = 4.0 * std::pow(3.0 / (4.0 * std::numbers::pi), 1.5);
  CHECK(*p.sigma2 == doctest::Approx((1 - pi3) * std::expm1(0.25) / (1 - pi3 * std::exp(0.25)) * z3));
  CHECK(p.beta2 == doctest::Approx(std::sqrt(std::log(1.0 / pi3))).epsilon(1e-10));
  CHECK(p.beta2 == doctest::Approx(1.0379).epsilon(1e-4));

  const auto out = temperature_profile(g, 1.2, d3);
  CHECK_FALSE(out.in_L2_region);
  CHECK_FALSE(out.sigma2.has_value());
  CHECK_THROWS_AS(second_moment_winfty(out, MomentVariant::geometric), DomainError);
  CHECK_THROWS_AS(temperature_profile(g, -0.1, d3), ParameterError);

  // bounded disorder whose lambda2 never reaches log(1/pi_3)
  CHECK(std::isinf(beta2(DisorderFamily::rademacher(), d3)));
}

TEST_CASE("both E[W_inf^2] closed forms") {
  const auto g = DisorderFamily::standard_gaussian();
  const Dimension d3(3);
  const auto p0 = temperature_profile(g, 0.0, d3);
  CHECK(second_moment_winfty(p0, MomentVariant::geometric) == 1.0);
  CHECK(second_moment_winfty(p0, MomentVariant::with_exp_factor) == 1.0);
  const double pi3 = walk::golden_constants(d3).pi_d;
  const auto p = temperature_profile(g, 0.5, d3);
  CHECK(second_moment_winfty(p, MomentVariant::geometric) ==
        doctest::Approx((1 - pi3) / (1 - pi3 * std::exp(0.25))));
  CHECK(second_moment_winfty(p, MomentVariant::with_exp_factor) ==
        doctest::Approx((1 - pi3) * std::exp(0.25) / (1 - pi3 * std::exp(0.25))));
  double prev = 1.0;
  for (double b = 0.1; b < 1.0; b += 0.1) {
    const double v = second_moment_winfty(temperature_profile(g, b, d3), MomentVariant::geometric);
    CHECK(v > prev);
    prev = v;
  }
}
