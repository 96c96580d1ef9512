#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "fkent/errors.hpp"
#include "fkent/fk_metric.hpp"
#include "fkent/random.hpp"
#include "fkent/rds.hpp"

using namespace fkent;

namespace {

// Memoized recursion over (i, j) suffixes; independent of the library DP.
std::size_t lcs_oracle(std::size_t n, const std::function<bool(std::size_t, std::size_t)>& ok) {
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
  std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) {
    if (i == n || j == n) return std::size_t{0};
    auto key = std::make_pair(i, j);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    std::size_t best = std::max(go(i + 1, j), go(i, j + 1));
    if (ok(i, j)) best = std::max(best, 1 + go(i + 1, j + 1));
    memo[key] = best;
    return best;
  };
  return go(0, 0);
}

struct Fixture {
  DrivingProcess proc = DrivingProcess::bernoulli({0.5, 0.5});
  std::vector<RandomSystem> systems{
      RandomSystem::expanding({2, 3}), RandomSystem::tent({2, 3}),
      RandomSystem::expanding({2, 3}, 2), RandomSystem::full_shift({2, 3}),
      RandomSystem::full_shift({2, 3}, FiberMetricKind::discrete)};

  PhasePoint point(const RandomSystem& s, const OmegaPath& path, std::size_t len, Rng& rng) {
    if (s.is_torus()) {
      TorusPoint t;
      for (std::size_t k = 0; k < s.dim(); ++k) t.coords.push_back(rng.uniform());
      return t;
    }
    SymbolWord w;
    for (std::size_t i = 0; i < len; ++i) w.symbols.push_back(rng.below(s.factor(path[i])));
    return w;
  }
};

OrbitSegment word_orbit(const std::string& letters, FiberMetricKind kind) {
  auto sys = RandomSystem::full_shift({2}, kind);
  OmegaPath p(std::vector<BaseSymbol>(letters.size(), 0), 0);
  return orbit(sys, p, symbol_word(letters), letters.size());
}

}  // namespace

TEST_SUITE("fk_metric") {

TEST_CASE("bowen distance examples") {
  auto doubling = RandomSystem::expanding({2});
  OmegaPath p({0, 0, 0}, 0);
  auto a = orbit(doubling, p, torus_point(0.0), 3);
  auto b = orbit(doubling, p, torus_point(0.001), 3);
  CHECK(bowen_distance(a, b) == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(bowen_distance(a, a) == 0.0);
  CHECK(bowen_distance(word_orbit("aba", FiberMetricKind::discrete),
                       word_orbit("abb", FiberMetricKind::discrete)) == 1.0);
}

TEST_CASE("match examples on ab vs ba") {
  auto ab = word_orbit("ab", FiberMetricKind::discrete);
  auto ba = word_orbit("ba", FiberMetricKind::discrete);
  CHECK(max_match_size(ab, ba, 0.5).k == 1);
  CHECK(fbar(ab, ba, 0.5) == 0.5);
  CHECK(fbar(ab, ba, 1.5) == 0.0);
  auto d = fk_distance(ab, ba, default_fk_tolerance(FiberMetricKind::discrete, 2));
  CHECK(std::fabs(d.value - 0.5) <= d.tolerance);
  CHECK(d.certificate < d.value);
  CHECK_FALSE(fk_ball_member(ab, ba, 0.4));
  CHECK(fk_ball_member(ab, ba, 0.6));
  CHECK(fk_ball_member(ab, ab, 1e-9));
  CHECK(fk_ball_member(ab, ba, 1.01));
  CHECK(fk_distance(ab, ab, 0.25).value <= 0.25);
  CHECK_THROWS_AS(fk_distance(ab, ba, 0.0), UsageError);
  CHECK_THROWS_AS(max_match_size(ab, ba, 0.0), UsageError);
}

TEST_CASE("edit distance examples") {
  auto w = [](const std::string& s) { return std::get<SymbolWord>(symbol_word(s)).symbols; };
  CHECK(edit_bar_f(w("ab"), w("ab")) == 0.0);
  CHECK(edit_bar_f(w("ab"), w("ba")) == 0.5);
  CHECK(edit_bar_f(w("abc"), w("cba")) == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(edit_bar_f(w("ab"), w("abc")), UsageError);
}

TEST_CASE("backtracked pairs form a valid match") {
  Fixture f;
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto& s = f.systems[t % f.systems.size()];
    std::size_t n = 1 + rng.below(10);
    auto path = sample_path(f.proc, n + 10, rng.next());
    auto a = orbit(s, path, f.point(s, path, n + 6, rng), n);
    auto b = orbit(s, path, f.point(s, path, n + 6, rng), n);
    double eps = 0.05 + 0.5 * rng.uniform();
    auto m = max_match_size(a, b, eps, true);
    REQUIRE(m.pairs.size() == m.k);
    for (std::size_t i = 0; i < m.pairs.size(); ++i) {
      auto [p, q] = m.pairs[i];
      CHECK(point_distance(a.view(), p, b.view(), q) < eps);
      if (i > 0) {
        CHECK(p > m.pairs[i - 1].first);
        CHECK(q > m.pairs[i - 1].second);
      }
    }
  }
}

TEST_CASE("DP agrees with an independent recursion and with brute force") {
  Fixture f;
  Rng rng(6);
  for (int t = 0; t < 300; ++t) {
    const auto& s = f.systems[t % f.systems.size()];
    std::size_t n = 1 + rng.below(10);
    auto path = sample_path(f.proc, n + 10, rng.next());
    auto a = orbit(s, path, f.point(s, path, n + 6, rng), n);
    auto b = orbit(s, path, f.point(s, path, n + 6, rng), n);
    double eps = 0.02 + 0.6 * rng.uniform();
    auto ok = [&](std::size_t i, std::size_t j) {
      return fiber_distance(s.metric(), a.point(i), b.point(j)) < eps;
    };
    std::size_t k = max_match_size(a, b, eps).k;
    CHECK(k == lcs_oracle(n, ok));
    if (n <= 8) CHECK(k == brute_force_match(a.view(), b.view(), eps));
  }
  for (int t = 0; t < 300; ++t) {
    CompatMatrix m;
    m.n = rng.below(9);
    double density = rng.uniform();
    for (std::size_t i = 0; i < m.n * m.n; ++i) m.cells.push_back(rng.uniform() < density);
    std::size_t oracle = lcs_oracle(m.n, [&](std::size_t i, std::size_t j) { return m(i, j); });
    CHECK(max_match_size(m) == oracle);
    CHECK(brute_force_match(m) == oracle);
  }
}

TEST_CASE("brute force edge cases") {
  CompatMatrix none{3, std::vector<std::uint8_t>(9, 0)};
  CHECK(brute_force_match(none) == 0);
  CompatMatrix all{4, std::vector<std::uint8_t>(16, 1)};
  CHECK(brute_force_match(all) == 4);
  CompatMatrix big{13, std::vector<std::uint8_t>(169, 1)};
  CHECK_THROWS_AS(brute_force_match(big), UsageError);
}

TEST_CASE("banded DP differential test") {
  Fixture f;
  Rng rng(7);
  for (int t = 0; t < 300; ++t) {
    const auto& s = f.systems[t % f.systems.size()];
    std::size_t n = 1 + rng.below(20);
    auto path = sample_path(f.proc, n + 10, rng.next());
    auto a = orbit(s, path, f.point(s, path, n + 6, rng), n);
    auto b = orbit(s, path, f.point(s, path, n + 6, rng), n);
    double eps = 0.05 + 0.6 * rng.uniform();
    std::size_t full = max_match_size(a, b, eps).k;
    for (std::size_t target = 0; target <= n; ++target) {
      std::size_t banded = max_match_banded(a.view(), b.view(), eps, target);
      if (full >= target) {
        CHECK(banded == full);
      } else {
        CHECK(banded < target);
      }
      CHECK(match_reaches(a.view(), b.view(), eps, target) == (full >= target));
    }
  }
}

TEST_CASE("fbar is monotone and matches the edit distance on discrete shifts") {
  Rng rng(8);
  auto sys = RandomSystem::full_shift({3}, FiberMetricKind::discrete);
  for (int t = 0; t < 300; ++t) {
    std::size_t n = 1 + rng.below(12);
    OmegaPath p(std::vector<BaseSymbol>(n, 0), 0);
    SymbolWord u, v;
    for (std::size_t i = 0; i < n; ++i) {
      u.symbols.push_back(rng.below(3));
      v.symbols.push_back(rng.below(3));
    }
    auto a = orbit(sys, p, u, n);
    auto b = orbit(sys, p, v, n);
    double eps = 0.01 + 0.98 * rng.uniform();
    CHECK(fbar(a, b, eps) == edit_bar_f(u.symbols, v.symbols));
    double e1 = rng.uniform(), e2 = e1 + rng.uniform();
    CHECK(fbar(a, b, std::max(e1, 1e-9)) >= fbar(a, b, e2));
  }
}

TEST_CASE("FK metric laws across families") {
  Fixture f;
  Rng rng(9);
  for (int t = 0; t < 500; ++t) {
    const auto& s = f.systems[t % f.systems.size()];
    std::size_t n = 1 + rng.below(12);
    auto path = sample_path(f.proc, n + 10, rng.next());
    auto a = orbit(s, path, f.point(s, path, n + 6, rng), n);
    auto b = orbit(s, path, f.point(s, path, n + 6, rng), n);
    auto c = orbit(s, path, f.point(s, path, n + 6, rng), n);
    double tol = default_fk_tolerance(s.metric(), n);
    auto ab = fk_distance(a, b, tol);
    CHECK(ab.value <= bowen_distance(a, b) + tol);
    CHECK(ab.value == fk_distance(b, a, tol).value);
    CHECK(fk_distance(a, a, tol).value <= tol);
    CHECK(ab.value <= fk_distance(a, c, tol).value + fk_distance(c, b, tol).value + 2 * tol);
    CHECK(fbar(a, b, ab.value) < ab.value);
    CHECK(ab.value <= s.diameter() + tol);
  }
}

TEST_CASE("ball test agrees with the distance off the sphere") {
  Fixture f;
  Rng rng(10);
  for (int t = 0; t < 300; ++t) {
    const auto& s = f.systems[t % 3];
    std::size_t n = 2 + rng.below(10);
    auto path = sample_path(f.proc, n + 10, rng.next());
    auto a = orbit(s, path, f.point(s, path, n, rng), n);
    auto b = orbit(s, path, f.point(s, path, n, rng), n);
    double tol = 1e-9;
    double d = fk_distance(a, b, tol).value;
    double delta = 0.02 + 0.5 * rng.uniform();
    if (d < delta - 2 * tol) CHECK(fk_ball_member(a, b, delta));
    if (d > delta + 2 * tol) CHECK_FALSE(fk_ball_member(a, b, delta));
    if (bowen_distance(a, b) < delta) CHECK(fk_ball_member(a, b, delta));
  }
}

TEST_CASE("fk target") {
  CHECK(fk_target(12, 0.1) == 11);
  CHECK(fk_target(10, 0.1) == 10);
  CHECK(fk_target(10, 0.2) == 9);
  CHECK(fk_target(4, 2.0) == 0);
}

}  // TEST_SUITE
