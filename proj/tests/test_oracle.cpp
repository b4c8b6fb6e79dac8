#include <doctest.h>

#include <cmath>
#include <vector>

#include "polymerlab/environment.hpp"
#include "polymerlab/errors.hpp"
#include "polymerlab/oracle.hpp"
#include "polymerlab/walk.hpp"

using namespace polymerlab;
using namespace polymerlab::oracle;

namespace {

// Renewal route: first-return law g of the difference walk from its return
// probabilities, then a_k = E[e^{λ2 N_k} 1{Z_k = 0}] by renewal.
struct Renewal {
  std::vector<double> u, g, a;

  Renewal(int d, double lambda2, int n) {
    const auto& t = walk::cached_return_probabilities(Dimension(d), n + 2);
    u.assign(n + 2, 0.0);
    for (int k = 0; k < n + 2; ++k) u[k] = t[k];
    g.assign(n + 2, 0.0);
    for (int k = 1; k < n + 2; ++k) {
      double s = u[k];
      for (int j = 1; j < k; ++j) s -= g[j] * u[k - j];
      g[k] = s;
    }
    a.assign(n + 1, 0.0);
    a[0] = 1.0;
    for (int k = 1; k <= n; ++k) {
      double s = 0.0;
      for (int j = 1; j <= k; ++j) s += g[j] * a[k - j];
      a[k] = std::exp(lambda2) * s;
    }
  }

  double second_moment(int n) const {
    double total = 0.0;
    for (int m = 0; m <= n; ++m) {
      double escape = 1.0;
      for (int j = 1; j <= n - m; ++j) escape -= g[j];
      total += a[m] * escape;
    }
    return total;
  }

  double pinned(int k) const {
    double s = 0.0;
    for (int m = 0; m <= k; ++m) s += a[m] * g[k + 1 - m];
    return s;
  }
};

// E[e^{λ2 #{i <= n: S_i = S~_i}}] over all pairs of paths.
double pair_enumeration(int d, double lambda2, int n) {
  std::vector<std::vector<Site>> paths;
  std::vector<Site> cur{Site{}};
  auto rec = [&](auto&& self) -> void {
    if (static_cast<int>(cur.size()) == n + 1) {
      paths.push_back(cur);
      return;
    }
    for (int j = 0; j < d; ++j) {
      for (int s : {-1, 1}) {
        Site y = cur.back();
        y[j] += s;
        cur.push_back(y);
        self(self);
        cur.pop_back();
      }
    }
  };
  rec(rec);
  double sum = 0.0;
  for (const auto& p : paths) {
    for (const auto& q : paths) {
      int overlap = 0;
      for (int i = 1; i <= n; ++i) overlap += p[i] == q[i];
      sum += std::exp(lambda2 * overlap);
    }
  }
  return sum / (static_cast<double>(paths.size()) * static_cast<double>(paths.size()));
}

}  // namespace

TEST_CASE("first step") {
  for (int d : {3, 4, 5}) {
    const double l2 = 0.3;
    CHECK(exact_second_moment(Dimension(d), l2, 0) == 1.0);
    CHECK(exact_second_moment(Dimension(d), l2, 1) == doctest::Approx(1.0 + std::expm1(l2) / (2.0 * d)).epsilon(1e-14));
    CHECK(exact_increment_variance(Dimension(d), l2, 0) == doctest::Approx(std::expm1(l2) / (2.0 * d)).epsilon(1e-14));
  }
}

TEST_CASE("lambda2 zero") {
  for (int n : {0, 5, 40}) CHECK(exact_second_moment(Dimension(3), 0.0, n) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(exact_increment_variance(Dimension(3), 0.0, 10) == 0.0);
  CHECK(bridge_expectation(Dimension(3), 0.0, 10).value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(truncated_bracket_expectation(Dimension(3), 0.0, 8, 4) == 0.0);
}

TEST_CASE("pair enumeration for short walks") {
  for (int n = 1; n <= 3; ++n) {
    CHECK(exact_second_moment(Dimension(3), 0.5, n) == doctest::Approx(pair_enumeration(3, 0.5, n)).epsilon(1e-12));
  }
  CHECK(exact_second_moment(Dimension(4), 0.5, 2) == doctest::Approx(pair_enumeration(4, 0.5, 2)).epsilon(1e-12));
}

TEST_CASE("renewal route agrees with the overlap recursion") {
  for (int d : {3, 4, 5}) {
    const double l2 = 0.16;
    const int n = d == 3 ? 120 : (d == 4 ? 40 : 12);
    const Renewal r(d, l2, n);
    const auto traj = overlap_dp(Dimension(d), l2, n);
    CHECK(traj.clipped_fraction < 1e-9);
    for (int k : {1, 2, 10, n / 2, n}) {
      CHECK(traj.second_moment[k] == doctest::Approx(r.second_moment(k)).epsilon(1e-9));
    }
    for (int k : {0, 3, n / 2, n - 1}) {
      CHECK(traj.pinned[k] == doctest::Approx(r.pinned(k)).epsilon(1e-9));
      CHECK(exact_increment_variance(Dimension(d), l2, k) == doctest::Approx(std::expm1(l2) * r.pinned(k)).epsilon(1e-9));
      CHECK(bridge_expectation(Dimension(d), l2, k).value == doctest::Approx(r.pinned(k) / r.u[k + 1]).epsilon(1e-9));
    }
  }
}

TEST_CASE("bridge") {
  CHECK(bridge_expectation(Dimension(3), 0.16, 0).value == doctest::Approx(1.0).epsilon(1e-14));
  const Renewal r(3, 0.16, 4);
  CHECK(bridge_expectation(Dimension(3), 0.16, 1).value ==
        doctest::Approx((r.g[2] + std::exp(0.16) * r.g[1] * r.g[1]) / r.u[2]).epsilon(1e-12));
  CHECK(bridge_expectation(Dimension(3), 0.16, 5).in_L2_region);
  CHECK_FALSE(bridge_expectation(Dimension(3), 2.0, 5).in_L2_region);
}

TEST_CASE("bracket expectations") {
  const Dimension d(3);
  const double l2 = 0.16;
  for (int n : {4, 8}) {
    const int K = 4;
    const double direct = std::sqrt(static_cast<double>(n)) *
                          (exact_second_moment(d, l2, K * n) - exact_second_moment(d, l2, n));
    CHECK(truncated_bracket_expectation(d, l2, n, K) == doctest::Approx(direct).epsilon(1e-10));
  }
  const double c4 = closed_bracket_expectation(d, l2, 8, 32);
  const double c8 = closed_bracket_expectation(d, l2, 8, 64);
  CHECK(c4 == doctest::Approx(c8).epsilon(0.01));
  CHECK(c8 > truncated_bracket_expectation(d, l2, 8, 8));
}

TEST_CASE("adjudication") {
  const auto a = adjudicate_second_moment(Dimension(3), 0.16, 100);
  CHECK(a.n == 100);
  CHECK(a.exact_quarter < a.exact);
  CHECK(a.exact < a.extrapolated);
  CHECK(a.closest == env::MomentVariant::geometric);
  CHECK(a.gap_extrapolated < a.gap_other);
  CHECK_THROWS_AS(adjudicate_second_moment(Dimension(3), 1.5, 100), DomainError);
}

TEST_SUITE("invariants") {
  TEST_CASE("second moment increases in n and lambda2") {
    for (int d : {3, 4}) {
      const auto traj = overlap_dp(Dimension(d), 0.2, 80);
      for (int k = 1; k <= 80; ++k) CHECK(traj.second_moment[k] > traj.second_moment[k - 1]);
      CHECK(exact_second_moment(Dimension(d), 0.3, 40) > exact_second_moment(Dimension(d), 0.2, 40));
    }
  }

  TEST_CASE("longer truncation collects more bracket") {
    for (int K : {2, 4, 8}) {
      CHECK(truncated_bracket_expectation(Dimension(3), 0.16, 8, 2 * K) >
            truncated_bracket_expectation(Dimension(3), 0.16, 8, K));
    }
  }
}
