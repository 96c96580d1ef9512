#pragma once

// Bowen and Feldman-Katok distances between orbit segments.
//
// An (ω,n,ε)-match of x and y is an order-preserving partial bijection π of
// {0..n-1} with d(T^i x, T^π(i) y) < ε on its domain. The largest match size
// k is the longest common subsequence of the two orbits under the relation
// "closer than ε", and
//
//   fbar(ε)  = 1 - k/n,
//   d_FK     = inf { ε > 0 : fbar(ε) < ε }.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fkent/rds.hpp"

namespace fkent {

// Which dynamical metric a count, ball or estimate refers to.
enum class DynamicalMetric { bowen, fk };

std::string to_string(DynamicalMetric metric);
DynamicalMetric parse_dynamical_metric(const std::string& name);

struct MatchResult {
  std::size_t k = 0;
  std::size_t n = 0;
  double eps = 0.0;
  // Filled only when requested. Strictly increasing in both coordinates.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

struct FkDistance {
  double value = 0.0;        // upper bisection endpoint
  double tolerance = 0.0;
  double certificate = 0.0;  // fbar(value), always < value
};

// Default bisection tolerance: 1/(2n) for the discrete metric, where d_FK
// is a multiple of 1/n, and 1e-6 otherwise.
double default_fk_tolerance(FiberMetricKind kind, std::size_t n) noexcept;

// max_i d(a[i], b[i]).
double bowen_distance(const OrbitView& a, const OrbitView& b);
double bowen_distance(const OrbitSegment& a, const OrbitSegment& b);

// d^n(a, b) < eps, checked from the last index backwards with early exit.
bool bowen_less(const OrbitView& a, const OrbitView& b, double eps) noexcept;
// d^n(a, b) <= eps, same evaluation order.
bool bowen_at_most(const OrbitView& a, const OrbitView& b, double eps) noexcept;

// Exact maximum match size by the full n x n dynamic program. With
// want_pairs, one maximal match is backtracked, preferring diagonal steps,
// then left, then up.
MatchResult max_match_size(const OrbitView& a, const OrbitView& b, double eps,
                           bool want_pairs = false);
MatchResult max_match_size(const OrbitSegment& a, const OrbitSegment& b, double eps,
                           bool want_pairs = false);

// Banded variant for callers that only care about sizes >= target. The DP is
// restricted to |i - j| <= n - target, which contains every match of size
// >= target. Returns the exact maximum when it is >= target, otherwise some
// value below target.
std::size_t max_match_banded(const OrbitView& a, const OrbitView& b, double eps,
                             std::size_t target);

// max match size >= target. Banded, evaluated from the end of both orbits,
// with early exit once the target is reached or out of reach.
bool match_reaches(const OrbitView& a, const OrbitView& b, double eps,
                   std::size_t target);

double fbar(const OrbitView& a, const OrbitView& b, double eps);
double fbar(const OrbitSegment& a, const OrbitSegment& b, double eps);

// Bisection for the FK distance on (0, diameter + tol]. Uses that
// fbar(ε) - ε is strictly decreasing.
FkDistance fk_distance(const OrbitView& a, const OrbitView& b, double tol);
FkDistance fk_distance(const OrbitSegment& a, const OrbitSegment& b, double tol);

// Smallest match size k with 1 - k/n < delta, or n + 1 if none exists.
std::size_t fk_target(std::size_t n, double delta) noexcept;

// Single-threshold FK ball test: fbar(delta) < delta. Agrees with
// d_FK(center, y) < delta except possibly on the sphere d_FK = delta.
bool fk_ball_member(const OrbitView& center, const OrbitView& y, double delta);
bool fk_ball_member(const OrbitSegment& center, const OrbitSegment& y, double delta);

// Normalized edit distance 1 - LCS(u, v)/n for words of equal length n.
double edit_bar_f(std::span<const std::uint8_t> u, std::span<const std::uint8_t> v);

// Test oracles: exhaustive enumeration of order-preserving partial
// bijections as pairs of equal-size index subsets. n <= 12.
std::size_t brute_force_match(const OrbitView& a, const OrbitView& b, double eps);

// Synthetic compatibility matrices, row-major n x n, for oracle tests.
struct CompatMatrix {
  std::size_t n = 0;
  std::vector<std::uint8_t> cells;
  bool operator()(std::size_t i, std::size_t j) const { return cells[i * n + j] != 0; }
};
std::size_t max_match_size(const CompatMatrix& c);
std::size_t brute_force_match(const CompatMatrix& c);

}  // namespace fkent
