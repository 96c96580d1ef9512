#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "fkent/entropy_local.hpp"
#include "fkent/errors.hpp"
#include "fkent/random.hpp"
#include "fkent/rds.hpp"

using namespace fkent;

namespace {

double coord(const PhasePoint& p, std::size_t k = 0) { return std::get<TorusPoint>(p).coords[k]; }

// Two-sample Kolmogorov-Smirnov statistic.
double ks_gap(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double gap = 0.0;
  while (i < a.size() && j < b.size()) {
    double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    gap = std::max(gap, std::fabs(static_cast<double>(i) / a.size() -
                                  static_cast<double>(j) / b.size()));
  }
  return gap;
}

}  // namespace

TEST_SUITE("rds") {

TEST_CASE("degenerate bernoulli law gives a constant path") {
  auto p = sample_path(DrivingProcess::bernoulli({1.0}), 5, 42);
  REQUIRE(p.horizon() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(p[i] == 0);
}

TEST_CASE("paths are deterministic per seed") {
  auto proc = DrivingProcess::bernoulli({0.3, 0.7});
  CHECK(sample_path(proc, 1000, 9) == sample_path(proc, 1000, 9));
  CHECK_FALSE(sample_path(proc, 1000, 9) == sample_path(proc, 1000, 10));
}

TEST_CASE("bernoulli symbol frequency") {
  auto p = sample_path(DrivingProcess::bernoulli({0.5, 0.5}), 1000000, 3);
  std::size_t zeros = 0;
  for (auto s : p.symbols()) zeros += s == 0;
  CHECK(std::fabs(static_cast<double>(zeros) / 1e6 - 0.5) < 0.002);
}

TEST_CASE("markov chain follows its transitions") {
  auto proc = DrivingProcess::markov({{0.0, 1.0}, {1.0, 0.0}}, {1.0, 0.0});
  auto p = sample_path(proc, 10, 1);
  for (std::size_t i = 0; i < 10; ++i) CHECK(p[i] == i % 2);
  auto st = DrivingProcess::markov({{0.9, 0.1}, {0.2, 0.8}}, {0.5, 0.5}).stationary();
  CHECK(st[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("invalid probability vectors are config errors") {
  CHECK_THROWS_AS(DrivingProcess::bernoulli({0.5, 0.6}), ConfigError);
  CHECK_THROWS_AS(DrivingProcess::bernoulli({1.2, -0.2}), ConfigError);
  CHECK_THROWS_AS(DrivingProcess::markov({{0.5, 0.4}, {0.5, 0.5}}, {1.0, 0.0}), ConfigError);
}

TEST_CASE("shift_path laws") {
  auto p = sample_path(DrivingProcess::bernoulli({0.5, 0.5}), 20, 5);
  CHECK(shift_path(p, 0) == p);
  CHECK(shift_path(shift_path(p, 1), 1) == shift_path(p, 2));
  CHECK(shift_path(p, 1)[0] == p[1]);
  CHECK(shift_path(p, 20).horizon() == 0);
  CHECK_THROWS_AS(shift_path(p, 21), RangeError);
  CHECK_THROWS_AS(p.at(20), RangeError);
}

TEST_CASE("orbit examples") {
  auto doubling = RandomSystem::expanding({2});
  OmegaPath zeros({0, 0, 0}, 0);
  auto o = orbit(doubling, zeros, torus_point(0.1), 3);
  CHECK(coord(o.point(0)) == 0.1);
  CHECK(coord(o.point(1)) == 0.2);
  CHECK(coord(o.point(2)) == 0.4);
  CHECK(orbit(doubling, zeros, torus_point(0.1), 1).size() == 1);

  auto sys = RandomSystem::expanding({2, 3});
  OmegaPath p({0, 1}, 0);
  auto q = orbit(sys, p, torus_point(0.3), 3);
  CHECK(coord(q.point(1)) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(coord(q.point(2)) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK_THROWS_AS(orbit(sys, p, torus_point(0.3), 4), RangeError);
}

TEST_CASE("shift orbits are suffixes") {
  auto sys = RandomSystem::full_shift({2}, FiberMetricKind::discrete);
  OmegaPath p({0, 0, 0, 0}, 0);
  auto o = orbit(sys, p, symbol_word("abba"), 3);
  CHECK(std::get<SymbolWord>(o.point(1)).symbols == std::vector<std::uint8_t>{1, 1, 0});
  CHECK_THROWS_AS(orbit(sys, p, symbol_word("ab"), 3), RangeError);
}

TEST_CASE("orbit cocycle property holds exactly") {
  Rng rng(11);
  auto proc = DrivingProcess::bernoulli({0.4, 0.6});
  std::vector<RandomSystem> systems{RandomSystem::expanding({2, 3}), RandomSystem::tent({2, 3}),
                                    RandomSystem::expanding({3, 2}, 3),
                                    RandomSystem::full_shift({2, 3})};
  for (const auto& s : systems) {
    for (int t = 0; t < 30; ++t) {
      std::size_t n = 2 + rng.below(12);
      auto path = sample_path(proc, n + 20, rng.next());
      PhasePoint x;
      if (s.is_torus()) {
        TorusPoint tp;
        for (std::size_t k = 0; k < s.dim(); ++k) tp.coords.push_back(rng.uniform());
        x = tp;
      } else {
        SymbolWord w;
        for (std::size_t i = 0; i < n + 4; ++i) w.symbols.push_back(rng.below(s.factor(path[i])));
        x = w;
      }
      auto full = orbit(s, path, x, n);
      for (std::size_t i = 0; i < n; ++i) {
        auto tail = orbit(s, shift_path(path, i), full.point(i), n - i);
        for (std::size_t j = 0; j < n - i; ++j) CHECK(tail.point(j) == full.point(i + j));
      }
    }
  }
}

TEST_CASE("reference measures are invariant under one step") {
  auto proc = DrivingProcess::bernoulli({0.5, 0.5});
  auto path = sample_path(proc, 4, 17);
  const std::size_t M = 100000;
  for (const auto& s : {RandomSystem::expanding({2, 3}), RandomSystem::tent({2, 3}),
                        RandomSystem::tent({3, 5})}) {
    auto mu = sample_measure(s, path, M, 1);
    auto fresh = sample_measure(s, shift_path(path, 1), M, 2);
    std::vector<double> pushed, direct;
    for (std::size_t i = 0; i < M; ++i) {
      pushed.push_back(s.map_coordinate(path[0], mu.samples.coords(i)[0]));
      direct.push_back(fresh.samples.coords(i)[0]);
    }
    CHECK(ks_gap(pushed, direct) <= 4.0 / std::sqrt(static_cast<double>(M)));
  }
  // Full shift: the first symbol of the shifted word is uniform below k(ω_1).
  auto shift = RandomSystem::full_shift({2, 3});
  OmegaPath p({0, 1, 0, 1}, 0);
  auto mu = sample_measure(shift, p, M, 3, 4);
  std::vector<double> pushed, direct;
  auto fresh = sample_measure(shift, shift_path(p, 1), M, 4, 3);
  for (std::size_t i = 0; i < M; ++i) {
    pushed.push_back(mu.samples.word(i)[1]);
    direct.push_back(fresh.samples.word(i)[0]);
  }
  CHECK(ks_gap(pushed, direct) <= 4.0 / std::sqrt(static_cast<double>(M)));
}

TEST_CASE("fiber metrics") {
  CHECK(circle_distance(0.05, 0.95) == doctest::Approx(0.1));
  CHECK(metric_diameter(FiberMetricKind::torus_max) == 0.5);
  CHECK(metric_diameter(FiberMetricKind::cylinder) == 1.0);
  auto a = symbol_word("abab");
  auto b = symbol_word("abba");
  CHECK(fiber_distance(FiberMetricKind::cylinder, a, b) == 0.25);
  CHECK(fiber_distance(FiberMetricKind::cylinder, b, a) == 0.25);
  CHECK(fiber_distance(FiberMetricKind::cylinder, a, a) == 0.0);
  CHECK(fiber_distance(FiberMetricKind::discrete, a, b) == 0.0);
  CHECK(fiber_distance(FiberMetricKind::discrete, a, symbol_word("baba")) == 1.0);
  auto x = torus_point({0.1, 0.9});
  auto y = torus_point({0.2, 0.05});
  CHECK(fiber_distance(FiberMetricKind::torus_max, x, y) == doctest::Approx(0.15));
}

TEST_CASE("reduction mod 1 snaps to zero near 1") {
  CHECK(reduce_mod1(1.0 - 1e-16) == 0.0);
  CHECK(reduce_mod1(2.25) == 0.25);
  CHECK(reduce_mod1(-0.25) == 0.75);
}

TEST_CASE("system parameters are validated") {
  CHECK_THROWS(RandomSystem::expanding({}));
  CHECK_THROWS(RandomSystem::expanding({0}));
  CHECK_THROWS(RandomSystem::full_shift({1}));
  CHECK_THROWS(RandomSystem::expanding({2}, 0));
}

}  // TEST_SUITE
