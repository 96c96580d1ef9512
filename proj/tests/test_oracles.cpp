#include <doctest.h>

#include <bit>
#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "fkent/errors.hpp"
#include "fkent/oracles.hpp"
#include "fkent/random.hpp"
#include "fkent/rds.hpp"

using namespace fkent;

namespace {

// Preimages of y under T_ω^n, found by inverting each map branch by branch.
std::size_t preimage_count(const RandomSystem& s, const OmegaPath& p, std::size_t n, double y) {
  std::vector<double> level{y};
  for (std::size_t step = n; step-- > 0;) {
    int m = s.factor(p[step]);
    std::vector<double> prev;
    for (double z : level) {
      for (int j = 0; j < m; ++j) prev.push_back((z + j) / m);
    }
    level.swap(prev);
  }
  std::size_t hits = 0;
  for (double x : level) {
    double z = x;
    for (std::size_t i = 0; i < n; ++i) z = s.map_coordinate(p[i], z);
    hits += circle_distance(z, y) < 1e-9;
  }
  return hits;
}

// Distinct words whose letter i is below k(ω_i), by explicit enumeration.
std::size_t enumerate_words(const RandomSystem& s, const OmegaPath& p, std::size_t n) {
  std::set<std::vector<int>> seen;
  std::vector<int> w(n, 0);
  std::function<void(std::size_t)> go = [&](std::size_t i) {
    if (i == n) {
      seen.insert(w);
      return;
    }
    for (int a = 0; a < s.factor(p[i]); ++a) {
      w[i] = a;
      go(i + 1);
    }
  };
  go(0);
  return seen.size();
}

// Pairs of increasing index tuples of size k on {0..n-1}.
std::size_t enumerate_matches(std::size_t n, std::size_t k) {
  std::size_t subsets = 0;
  for (unsigned mask = 0; mask < (1u << n); ++mask) subsets += std::popcount(mask) == static_cast<int>(k);
  return subsets * subsets;
}

}  // namespace

TEST_SUITE("oracles") {

TEST_CASE("branch count examples") {
  auto constant = RandomSystem::expanding({2});
  OmegaPath zeros(std::vector<BaseSymbol>(10, 0), 0);
  auto v = branch_count(constant, zeros, 10);
  REQUIRE(v.exact);
  CHECK(*v.exact == 1024);
  CHECK(v.tag == OracleValue::Tag::branch_count);

  auto sys = RandomSystem::expanding({2, 3});
  auto w = branch_count(sys, OmegaPath({0, 1, 0}, 0), 3);
  CHECK(*w.exact == 12);
  CHECK(w.log_value == doctest::Approx(std::log(12.0)));
  CHECK(path_entropy(sys, OmegaPath({0, 1, 0}, 0), 3) == doctest::Approx(std::log(12.0) / 3));
  CHECK_THROWS_AS(branch_count(RandomSystem::full_shift({2}), zeros, 3), UnsupportedError);
}

TEST_CASE("branch count equals the preimage count") {
  Rng rng(21);
  auto proc = DrivingProcess::bernoulli({0.5, 0.5});
  for (const auto& s : {RandomSystem::expanding({2, 3}), RandomSystem::expanding({3, 5})}) {
    for (int t = 0; t < 10; ++t) {
      std::size_t n = 1 + rng.below(7);
      auto p = sample_path(proc, n, rng.next());
      double y = 0.1 + 0.8 * rng.uniform();
      CHECK(*branch_count(s, p, n).exact == preimage_count(s, p, n, y));
    }
  }
}

TEST_CASE("branch count falls back to log space") {
  auto sys = RandomSystem::expanding({3});
  OmegaPath p(std::vector<BaseSymbol>(100, 0), 0);
  auto v = branch_count(sys, p, 100);
  CHECK_FALSE(v.exact);
  CHECK(v.log_value == doctest::Approx(100 * std::log(3.0)));
}

TEST_CASE("word count") {
  auto two = RandomSystem::full_shift({2});
  CHECK(*word_count(two, OmegaPath(std::vector<BaseSymbol>(8, 0), 0), 8).exact == 256);
  auto mixed = RandomSystem::full_shift({2, 3});
  CHECK(*word_count(mixed, OmegaPath({0, 1, 0, 1}, 0), 4).exact == 36);
  Rng rng(22);
  auto proc = DrivingProcess::bernoulli({0.5, 0.5});
  for (int t = 0; t < 10; ++t) {
    std::size_t n = 1 + rng.below(10);
    auto p = sample_path(proc, n, rng.next());
    CHECK(*word_count(mixed, p, n).exact == enumerate_words(mixed, p, n));
  }
}

TEST_CASE("match count bound") {
  CHECK(*match_count_bound(4, 2).exact == 36);
  CHECK(*match_count_bound(9, 0).exact == 1);
  CHECK(*match_count_bound(9, 9).exact == 1);
  for (std::size_t n = 0; n <= 8; ++n) {
    for (std::size_t k = 0; k <= n; ++k) {
      CHECK(*match_count_bound(n, k).exact == enumerate_matches(n, k));
    }
  }
  CHECK_THROWS_AS(log_binomial(3, 4), UsageError);
}

TEST_CASE("stirling rate bounds the binomial growth") {
  CHECK(stirling_rate(0.5) == doctest::Approx(std::log(2.0)));
  CHECK(stirling_rate(0.0) == 0.0);
  CHECK(stirling_rate(1.0) == 0.0);
  std::size_t n = 10000;
  for (double eps : {0.1, 0.25, 0.5}) {
    auto k = static_cast<std::size_t>(eps * n);
    double rate = log_binomial(n, k) / static_cast<double>(n);
    CHECK(std::fabs(rate - stirling_rate(eps)) < 1e-3);
  }
  for (std::size_t m : {10, 50, 200}) {
    for (std::size_t k = 0; k <= m; k += 3) {
      double eps = static_cast<double>(k) / m;
      double gap = stirling_rate(eps) - log_binomial(m, k) / static_cast<double>(m);
      CHECK(gap >= -1e-12);
      CHECK(gap <= std::log(m + 1.0) / m);
    }
  }
}

TEST_CASE("kappa choice") {
  double k = choose_kappa(0.01, 2);
  CHECK(k > 0.0);
  CHECK(k < 0.5);
  CHECK(proof_correction_term(k, 2) < 0.005);
  for (double eps : {0.5, 0.1, 0.01}) {
    for (std::size_t size : {2, 4, 16}) {
      double kv = choose_kappa(eps, size);
      CHECK(proof_correction_term(kv, size) < eps / 2);
      if (kv < eps / 2) CHECK(proof_correction_term(2 * kv, size) >= eps / 2);
    }
  }
  CHECK_THROWS_AS(choose_kappa(0.0, 2), UsageError);
  CHECK_THROWS_AS(choose_kappa(0.1, 1), UsageError);
}

TEST_CASE("expected entropy") {
  auto sys = RandomSystem::expanding({2, 3});
  CHECK(expected_entropy(sys, {0.5, 0.5}) == doctest::Approx(0.5 * std::log(6.0)));
  CHECK(expected_entropy(sys, {1.0, 0.0}) == doctest::Approx(std::log(2.0)));
}

}  // TEST_SUITE
