#include "fkent/fk_metric.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "fkent/errors.hpp"

namespace fkent {

std::string to_string(DynamicalMetric metric) {
  return metric == DynamicalMetric::bowen ? "bowen" : "fk";
}

DynamicalMetric parse_dynamical_metric(const std::string& name) {
  if (name == "bowen") {
    return DynamicalMetric::bowen;
  }
  if (name == "fk") {
    return DynamicalMetric::fk;
  }
  throw ConfigError("unknown dynamical metric '" + name + "' (expected bowen|fk)");
}

double default_fk_tolerance(FiberMetricKind kind, std::size_t n) noexcept {
  if (kind != FiberMetricKind::discrete) {
    return 1e-6;
  }
  return 1.0 / (2.0 * static_cast<double>(std::max<std::size_t>(n, 1)));
}

namespace {

void check_pair(const OrbitView& a, const OrbitView& b) {
  if (a.n != b.n || a.n == 0) {
    throw UsageError("orbit segments must have equal length n >= 1");
  }
  if (a.kind != b.kind || a.dim != b.dim) {
    throw UsageError("orbit segments use different fiber metrics");
  }
}

void check_eps(double eps) {
  if (!(eps > 0.0)) {
    throw UsageError("threshold eps must be > 0");
  }
}

// Full LCS table over a compatibility predicate; returns the (n+1)^2 table.
template <class Compat>
std::vector<std::uint32_t> lcs_table(std::size_t n, Compat&& compat) {
  std::size_t w = n + 1;
  std::vector<std::uint32_t> m(w * w, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      std::uint32_t best = std::max(m[(i - 1) * w + j], m[i * w + j - 1]);
      std::uint32_t diag = m[(i - 1) * w + j - 1] + (compat(i - 1, j - 1) ? 1U : 0U);
      m[i * w + j] = std::max(best, diag);
    }
  }
  return m;
}

}  // namespace

double bowen_distance(const OrbitView& a, const OrbitView& b) {
  check_pair(a, b);
  double d = 0.0;
  for (std::size_t i = 0; i < a.n; ++i) {
    d = std::max(d, point_distance(a, i, b, i));
  }
  return d;
}

double bowen_distance(const OrbitSegment& a, const OrbitSegment& b) {
  return bowen_distance(a.view(), b.view());
}

bool bowen_less(const OrbitView& a, const OrbitView& b, double eps) noexcept {
  for (std::size_t i = a.n; i-- > 0;) {
    if (!(point_distance(a, i, b, i) < eps)) {
      return false;
    }
  }
  return true;
}

bool bowen_at_most(const OrbitView& a, const OrbitView& b, double eps) noexcept {
  for (std::size_t i = a.n; i-- > 0;) {
    if (point_distance(a, i, b, i) > eps) {
      return false;
    }
  }
  return true;
}

MatchResult max_match_size(const OrbitView& a, const OrbitView& b, double eps,
                           bool want_pairs) {
  check_pair(a, b);
  check_eps(eps);
  std::size_t n = a.n;
  auto compat = [&](std::size_t i, std::size_t j) {
    return point_distance(a, i, b, j) < eps;
  };
  auto m = lcs_table(n, compat);
  std::size_t w = n + 1;

  MatchResult r;
  r.n = n;
  r.eps = eps;
  r.k = m[n * w + n];
  if (want_pairs) {
    std::size_t i = n;
    std::size_t j = n;
    while (i > 0 && j > 0) {
      if (compat(i - 1, j - 1) && m[i * w + j] == m[(i - 1) * w + j - 1] + 1) {
        r.pairs.emplace_back(i - 1, j - 1);
        --i;
        --j;
      } else if (m[i * w + j] == m[i * w + j - 1]) {
        --j;
      } else {
        --i;
      }
    }
    std::reverse(r.pairs.begin(), r.pairs.end());
  }
  return r;
}

MatchResult max_match_size(const OrbitSegment& a, const OrbitSegment& b, double eps,
                           bool want_pairs) {
  return max_match_size(a.view(), b.view(), eps, want_pairs);
}

namespace {

// Banded DP shared by max_match_banded and match_reaches. Indices are
// visited from the end (row r is x index n-1-r) when `reversed`; the LCS of
// two sequences equals the LCS of their reversals. Returns the banded
// maximum, or a value < target once the target is unreachable, or target
// as soon as it is reached if stop_when_reached.
std::size_t banded_dp(const OrbitView& a, const OrbitView& b, double eps,
                      std::size_t target, bool reversed, bool stop_when_reached) {
  std::size_t n = a.n;
  if (target == 0) {
    return 0;
  }
  if (target > n) {
    return 0;
  }
  std::size_t s = n - target;  // band half-width
  std::size_t width = 2 * s + 1;
  thread_local std::vector<std::int32_t> prev_row;
  thread_local std::vector<std::int32_t> cur_row;
  // Cell (r, c) with c = j - r + s in [0, width). Out-of-band or out-of-range
  // cells read as -1 (never better than an in-band neighbour).
  prev_row.assign(width, 0);
  cur_row.assign(width, 0);
  auto idx = [&](std::size_t r) { return reversed ? n - 1 - r : r; };

  std::int32_t best_overall = 0;
  for (std::size_t r = 0; r < n; ++r) {
    std::int32_t row_bound = -1;  // best achievable final size from this row
    for (std::size_t c = 0; c < width; ++c) {
      // column j = r + c - s
      if (r + c < s || r + c - s >= n) {
        cur_row[c] = -1;
        continue;
      }
      std::size_t j = r + c - s;
      // up: (r-1, j) -> column c+1 in prev row
      std::int32_t up;
      if (r == 0) {
        up = 0;
      } else {
        up = (c + 1 < width) ? prev_row[c + 1] : -1;
      }
      // left: (r, j-1) -> column c-1 in this row
      std::int32_t left;
      if (j == 0) {
        left = 0;
      } else {
        left = (c >= 1) ? cur_row[c - 1] : -1;
      }
      // diag: (r-1, j-1) -> column c in prev row
      std::int32_t diag;
      if (r == 0 || j == 0) {
        diag = 0;
      } else {
        diag = prev_row[c];
      }
      std::int32_t v = std::max(up, left);
      if (diag >= 0 && point_distance(a, idx(r), b, idx(j)) < eps) {
        v = std::max(v, diag + 1);
      } else {
        v = std::max(v, diag);
      }
      cur_row[c] = v;
      std::size_t remaining = std::min(n - 1 - r, n - 1 - j);
      row_bound = std::max(row_bound, v + static_cast<std::int32_t>(remaining));
      best_overall = std::max(best_overall, v);
    }
    if (stop_when_reached && static_cast<std::size_t>(best_overall) >= target) {
      return target;
    }
    if (row_bound < static_cast<std::int32_t>(target)) {
      return static_cast<std::size_t>(std::max(row_bound, 0));
    }
    std::swap(prev_row, cur_row);
  }
  // prev_row now holds the last row; the final cell is j = n-1 -> c = s.
  return static_cast<std::size_t>(std::max(prev_row[s], 0));
}

}  // namespace

std::size_t max_match_banded(const OrbitView& a, const OrbitView& b, double eps,
                             std::size_t target) {
  check_pair(a, b);
  check_eps(eps);
  if (target > a.n) {
    throw UsageError("match target exceeds n");
  }
  if (target == 0) {
    return max_match_size(a, b, eps).k;
  }
  return banded_dp(a, b, eps, target, false, false);
}

bool match_reaches(const OrbitView& a, const OrbitView& b, double eps,
                   std::size_t target) {
  if (target == 0) {
    return true;
  }
  if (target > a.n) {
    return false;
  }
  if (target == a.n) {
    return bowen_less(a, b, eps);
  }
  return banded_dp(a, b, eps, target, true, true) >= target;
}

double fbar(const OrbitView& a, const OrbitView& b, double eps) {
  auto r = max_match_size(a, b, eps);
  return 1.0 - static_cast<double>(r.k) / static_cast<double>(r.n);
}

double fbar(const OrbitSegment& a, const OrbitSegment& b, double eps) {
  return fbar(a.view(), b.view(), eps);
}

FkDistance fk_distance(const OrbitView& a, const OrbitView& b, double tol) {
  check_pair(a, b);
  if (!(tol > 0.0)) {
    throw UsageError("bisection tolerance must be > 0");
  }
  double lo = 0.0;  // fbar(lo) >= lo holds trivially at 0
  double hi = metric_diameter(a.kind) + tol;
  double cert = fbar(a, b, hi);  // all pairs compatible: 0 < hi
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (!(mid > lo) || !(mid < hi)) {
      break;
    }
    double f = fbar(a, b, mid);
    if (f < mid) {
      hi = mid;
      cert = f;
    } else {
      lo = mid;
    }
  }
  return FkDistance{hi, tol, cert};
}

FkDistance fk_distance(const OrbitSegment& a, const OrbitSegment& b, double tol) {
  return fk_distance(a.view(), b.view(), tol);
}

std::size_t fk_target(std::size_t n, double delta) noexcept {
  // Compared as (n - k) < n delta: 1 - 9/10 rounds below 0.1, 10 * 0.1 does not.
  double limit = static_cast<double>(n) * delta;
  for (std::size_t k = 0; k <= n; ++k) {
    if (static_cast<double>(n - k) < limit) {
      return k;
    }
  }
  return n + 1;
}

bool fk_ball_member(const OrbitView& center, const OrbitView& y, double delta) {
  check_pair(center, y);
  check_eps(delta);
  return match_reaches(center, y, delta, fk_target(center.n, delta));
}

bool fk_ball_member(const OrbitSegment& center, const OrbitSegment& y, double delta) {
  return fk_ball_member(center.view(), y.view(), delta);
}

double edit_bar_f(std::span<const std::uint8_t> u, std::span<const std::uint8_t> v) {
  if (u.size() != v.size() || u.empty()) {
    throw UsageError("edit_bar_f needs words of equal length n >= 1");
  }
  std::size_t n = u.size();
  std::vector<std::size_t> prev(n + 1, 0);
  std::vector<std::size_t> cur(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      cur[j] = (u[i - 1] == v[j - 1]) ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return 1.0 - static_cast<double>(prev[n]) / static_cast<double>(n);
}

namespace {

template <class Compat>
std::size_t enumerate_matches(std::size_t n, Compat&& compat) {
  if (n > 12) {
    throw UsageError("brute_force_match supports n <= 12");
  }
  std::uint32_t full = 1U << n;
  std::size_t best = 0;
  std::vector<std::size_t> dom;
  std::vector<std::size_t> ran;
  for (std::uint32_t d = 0; d < full; ++d) {
    int k = std::popcount(d);
    if (static_cast<std::size_t>(k) <= best) {
      continue;
    }
    dom.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if ((d >> i) & 1U) {
        dom.push_back(i);
      }
    }
    for (std::uint32_t r = 0; r < full; ++r) {
      if (std::popcount(r) != k) {
        continue;
      }
      ran.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if ((r >> j) & 1U) {
          ran.push_back(j);
        }
      }
      bool ok = true;
      for (std::size_t t = 0; t < dom.size() && ok; ++t) {
        ok = compat(dom[t], ran[t]);
      }
      if (ok) {
        best = static_cast<std::size_t>(k);
        break;
      }
    }
  }
  return best;
}

}  // namespace

std::size_t brute_force_match(const OrbitView& a, const OrbitView& b, double eps) {
  check_pair(a, b);
  check_eps(eps);
  return enumerate_matches(a.n, [&](std::size_t i, std::size_t j) {
    return point_distance(a, i, b, j) < eps;
  });
}

std::size_t max_match_size(const CompatMatrix& c) {
  if (c.n == 0) {
    return 0;
  }
  auto m = lcs_table(c.n, c);
  return m[c.n * (c.n + 1) + c.n];
}

std::size_t brute_force_match(const CompatMatrix& c) {
  return enumerate_matches(c.n, c);
}

}  // namespace fkent
