#include "fkent/entropy_topological.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <queue>
#include <unordered_map>
#include <sstream>

#include "fkent/errors.hpp"
#include "fkent/oracles.hpp"
#include "fkent/parallel.hpp"
#include "fkent/random.hpp"

namespace fkent {

std::string to_string(CandidateSet::Provenance p) {
  switch (p) {
    case CandidateSet::Provenance::grid:
      return "grid";
    case CandidateSet::Provenance::iid_sample:
      return "iid_sample";
    case CandidateSet::Provenance::word_enumeration:
      return "word_enumeration";
  }
  return "?";
}

CandidateSet torus_grid(std::size_t dim, std::size_t per_axis, double window) {
  if (dim == 0 || per_axis == 0) {
    throw UsageError("torus grid needs dim >= 1 and >= 1 point per axis");
  }
  if (!(window > 0.0 && window <= 1.0)) {
    throw UsageError("grid window must lie in (0, 1]");
  }
  CandidateSet c;
  c.points = PointCloud::torus(dim);
  c.provenance = CandidateSet::Provenance::grid;
  c.mesh = window / static_cast<double>(per_axis);
  c.window = window;
  std::size_t total = 1;
  for (std::size_t k = 0; k < dim; ++k) {
    total *= per_axis;
  }
  c.points.reserve(total);
  std::vector<double> coords(dim);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t k = dim; k-- > 0;) {
      coords[k] = reduce_mod1(static_cast<double>(rest % per_axis) * c.mesh);
      rest /= per_axis;
    }
    c.points.push_torus(coords);
  }
  return c;
}

CandidateSet torus_grid_budget(std::size_t dim, std::size_t budget, double window) {
  if (dim == 0 || budget == 0) {
    throw UsageError("torus grid needs dim >= 1 and a positive budget");
  }
  auto per_axis = static_cast<std::size_t>(
      std::floor(std::pow(static_cast<double>(budget), 1.0 / static_cast<double>(dim)) + 1e-9));
  per_axis = std::max<std::size_t>(per_axis, 1);
  return torus_grid(dim, per_axis, window);
}

CandidateSet torus_sample(std::size_t dim, std::size_t count, double window,
                          std::uint64_t seed) {
  if (dim == 0 || count == 0) {
    throw UsageError("torus sample needs dim >= 1 and count >= 1");
  }
  CandidateSet c;
  c.points = PointCloud::torus(dim);
  c.provenance = CandidateSet::Provenance::iid_sample;
  c.window = window;
  c.seed = seed;
  Rng rng(seed);
  std::vector<double> coords(dim);
  c.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& x : coords) {
      x = reduce_mod1(rng.uniform() * window);
    }
    c.points.push_torus(coords);
  }
  return c;
}

CandidateSet enumerate_words(const RandomSystem& system, const OmegaPath& path,
                             std::size_t length, std::size_t pinned) {
  if (system.is_torus()) {
    throw UsageError("word enumeration needs a shift system");
  }
  if (length == 0 || pinned > length) {
    throw UsageError("bad word length or pinned prefix");
  }
  if (path.horizon() < length) {
    throw RangeError("word support needs path horizon >= word length");
  }
  std::vector<int> radix(length, 1);
  double log_total = 0.0;
  for (std::size_t i = pinned; i < length; ++i) {
    radix[i] = system.factor(path[i]);
    log_total += std::log(static_cast<double>(radix[i]));
  }
  if (log_total > std::log(5e7)) {
    throw ResourceError("word enumeration would exceed 5e7 words");
  }
  CandidateSet c;
  c.points = PointCloud::words(length);
  c.provenance = CandidateSet::Provenance::word_enumeration;
  c.window = static_cast<double>(pinned);
  std::vector<std::uint8_t> w(length, 0);
  while (true) {
    c.points.push_word(w);
    // Mixed-radix increment, last symbol fastest (lexicographic order).
    std::size_t i = length;
    while (i-- > pinned) {
      if (++w[i] < radix[i]) {
        break;
      }
      w[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1) || i < pinned) {
      break;
    }
  }
  return c;
}

std::size_t word_depth(FiberMetricKind kind, double eps) {
  if (kind == FiberMetricKind::discrete) {
    return 1;
  }
  std::size_t j = 0;
  while (!(std::ldexp(1.0, -static_cast<int>(j)) < eps)) {
    ++j;
  }
  return j;
}

////////////////////////////////////////////////////////////////////////////////
// Greedy nets
////////////////////////////////////////////////////////////////////////////////

Selection greedy_separated(std::size_t count,
                           const std::function<double(std::size_t, std::size_t)>& dist,
                           double eps) {
  if (count == 0) {
    throw UsageError("greedy_separated needs a nonempty candidate set");
  }
  if (!(eps > 0.0)) {
    throw UsageError("greedy_separated needs eps > 0");
  }
  return greedy_separated_by(count, [&](std::size_t i, std::size_t j) {
    return !(dist(i, j) > eps);
  });
}

Selection greedy_spanning(std::size_t count,
                          const std::function<bool(std::size_t, std::size_t)>& within,
                          std::size_t max_candidates) {
  if (count == 0) {
    throw UsageError("greedy_spanning needs a nonempty candidate set");
  }
  if (count > max_candidates) {
    throw ResourceError("greedy_spanning limited to " + std::to_string(max_candidates) +
                        " candidates");
  }
  std::vector<std::vector<std::uint32_t>> covers(count);
  parallel_for(count, [&](std::size_t i) {
    for (std::size_t j = 0; j < count; ++j) {
      if (i == j || within(i, j)) {
        covers[i].push_back(static_cast<std::uint32_t>(j));
      }
    }
  });

  std::vector<bool> covered(count, false);
  std::size_t uncovered = count;
  // Max-heap on (gain, -index); stale gains are upper bounds.
  using Item = std::pair<std::size_t, std::size_t>;  // (gain, index)
  auto cmp = [](const Item& a, const Item& b) {
    if (a.first != b.first) {
      return a.first < b.first;
    }
    return a.second > b.second;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
  for (std::size_t i = 0; i < count; ++i) {
    heap.emplace(covers[i].size(), i);
  }

  Selection s;
  while (uncovered > 0 && !heap.empty()) {
    auto [gain, i] = heap.top();
    heap.pop();
    std::size_t fresh = 0;
    for (auto j : covers[i]) {
      fresh += covered[j] ? 0 : 1;
    }
    if (fresh != gain) {
      heap.emplace(fresh, i);
      continue;
    }
    if (fresh == 0) {
      break;
    }
    s.selected.push_back(i);
    for (auto j : covers[i]) {
      if (!covered[j]) {
        covered[j] = true;
        --uncovered;
      }
    }
  }
  s.count = s.selected.size();
  return s;
}

Selection greedy_spanning(std::size_t count,
                          const std::function<double(std::size_t, std::size_t)>& dist,
                          double eps, std::size_t max_candidates) {
  if (!(eps > 0.0)) {
    throw UsageError("greedy_spanning needs eps > 0");
  }
  return greedy_spanning(
      count, [&](std::size_t i, std::size_t j) { return !(dist(i, j) > eps); },
      max_candidates);
}

////////////////////////////////////////////////////////////////////////////////
// Count tables
////////////////////////////////////////////////////////////////////////////////

namespace {

void check_schedule(const CountSchedule& schedule) {
  if (schedule.n_values.empty()) {
    throw UsageError("n schedule is empty");
  }
  if (schedule.eps_values.empty()) {
    throw UsageError("eps schedule is empty");
  }
  for (auto n : schedule.n_values) {
    if (n == 0) {
      throw UsageError("n values must be >= 1");
    }
  }
  for (double e : schedule.eps_values) {
    if (!(e > 0.0)) {
      throw UsageError("eps values must be > 0");
    }
  }
  for (std::size_t i = 1; i < schedule.n_values.size(); ++i) {
    if (schedule.n_values[i] <= schedule.n_values[i - 1]) {
      throw UsageError("n schedule must be strictly increasing");
    }
  }
  for (std::size_t i = 1; i < schedule.eps_values.size(); ++i) {
    if (!(schedule.eps_values[i] < schedule.eps_values[i - 1])) {
      throw UsageError("eps schedule must be strictly decreasing");
    }
  }
}

bool same_eps(double a, double b) { return std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(a)); }

}  // namespace

const CountEntry& CountTable::at(std::size_t n, double eps) const {
  for (const auto& e : entries) {
    if (e.n == n && same_eps(e.eps, eps)) {
      return e;
    }
  }
  throw RangeError("no count table entry for n=" + std::to_string(n));
}

std::vector<std::string> CountTable::invariant_violations(bool check_chain) const {
  std::vector<std::string> out;
  auto describe = [&](const CountEntry& e) {
    std::ostringstream os;
    os << to_string(metric) << " (n=" << e.n << ", eps=" << e.eps << ")";
    return os.str();
  };
  for (const auto& e : entries) {
    if (e.separated < 1) {
      out.push_back("count < 1 at " + describe(e));
    }
    for (const auto& f : entries) {
      if (f.n == e.n && f.eps > e.eps && f.separated > e.separated) {
        out.push_back("count increases with eps between " + describe(e) + " and " +
                      describe(f));
      }
      if (metric == DynamicalMetric::bowen && same_eps(f.eps, e.eps) && f.n > e.n &&
          f.separated < e.separated) {
        out.push_back("count decreases with n between " + describe(e) + " and " +
                      describe(f));
      }
    }
    if (check_chain && e.spanning) {
      if (*e.spanning > e.separated) {
        out.push_back("spanning > separated at " + describe(e));
      }
      for (const auto& half : entries) {
        if (half.n == e.n && same_eps(half.eps, e.eps / 2.0) && half.spanning &&
            e.separated > *half.spanning) {
          out.push_back("separated(eps) > spanning(eps/2) at " + describe(e));
        }
      }
    }
  }
  return out;
}

std::vector<std::string> CountTable::monotonicity_warnings() const {
  std::vector<std::string> out;
  if (metric == DynamicalMetric::bowen) {
    return out;
  }
  for (const auto& e : entries) {
    for (const auto& f : entries) {
      if (same_eps(f.eps, e.eps) && f.n > e.n && f.separated < e.separated) {
        std::ostringstream os;
        os << "fk count decreases with n at eps=" << e.eps << " (n=" << e.n << ": "
           << e.separated << ", n=" << f.n << ": " << f.separated << ")";
        out.push_back(os.str());
      }
    }
  }
  return out;
}

std::vector<std::string> CountTables::dominance_violations() const {
  std::vector<std::string> out;
  if (!fk) {
    return out;
  }
  for (std::size_t i = 0; i < fk->entries.size(); ++i) {
    const auto& f = fk->entries[i];
    const auto& b = bowen.entries[i];
    if (f.separated > b.separated) {
      std::ostringstream os;
      os << "fk count " << f.separated << " > bowen count " << b.separated << " at (n=" << f.n
         << ", eps=" << f.eps << ")";
      out.push_back(os.str());
    }
  }
  return out;
}

namespace {

// Bucket index over kept orbits for the Bowen "d^n <= eps" scan. Two orbits
// within eps are within eps at every time, so on the torus they sit in
// adjacent cells of width >= eps at a few fixed times, and on words (eps < 1)
// they share the first symbol at every time. Only those buckets are checked,
// which leaves the greedy result unchanged.
class BowenBuckets {
 public:
  BowenBuckets(const OrbitBank& bank, FiberMetricKind kind, std::size_t dim, std::size_t n,
               double eps)
      : bank_(bank), kind_(kind), dim_(dim), n_(n) {
    if (kind == FiberMetricKind::torus_max) {
      auto cells = static_cast<std::size_t>(std::floor(0.999 / eps));
      if (cells < 3) {
        return;
      }
      cells_ = std::min<std::size_t>(cells, 1u << 16);
      std::size_t count = std::max<std::size_t>(1, 3 / dim);
      for (std::size_t k = 0; k < count && k < n; ++k) {
        std::size_t t = (n - 1) >> k;
        if (std::find(times_.begin(), times_.end(), t) == times_.end()) {
          times_.push_back(t);
        }
      }
      enabled_ = true;
    } else if (eps < 1.0) {
      enabled_ = true;
    }
  }

  bool enabled() const noexcept { return enabled_; }

  void insert(std::size_t c) {
    if (kind_ == FiberMetricKind::torus_max) {
      cell_indices(c, scratch_);
      map_[pack(scratch_)].push_back(static_cast<std::uint32_t>(c));
    } else {
      map_[word_key(c)].push_back(static_cast<std::uint32_t>(c));
    }
  }

  // Calls within(kept, c) on every kept orbit that could be within eps of c,
  // most recent first in each bucket; true on the first hit.
  template <class Within>
  bool any_within(std::size_t c, Within&& within) {
    auto scan = [&](std::uint64_t key) {
      auto it = map_.find(key);
      if (it == map_.end()) {
        return false;
      }
      const auto& v = it->second;
      for (std::size_t k = v.size(); k-- > 0;) {
        if (within(v[k], c)) {
          return true;
        }
      }
      return false;
    };
    if (kind_ != FiberMetricKind::torus_max) {
      return scan(word_key(c));
    }
    cell_indices(c, scratch_);
    std::size_t dims = scratch_.size();
    std::vector<std::size_t> probe(dims);
    std::size_t combos = 1;
    for (std::size_t k = 0; k < dims; ++k) {
      combos *= 3;
    }
    for (std::size_t m = 0; m < combos; ++m) {
      std::size_t r = m;
      for (std::size_t k = 0; k < dims; ++k) {
        std::size_t step = r % 3;
        r /= 3;
        probe[k] = (scratch_[k] + cells_ + step - 1) % cells_;
      }
      if (scan(pack(probe))) {
        return true;
      }
    }
    return false;
  }

 private:
  void cell_indices(std::size_t c, std::vector<std::size_t>& out) const {
    out.clear();
    OrbitView v = bank_.view(c, n_);
    for (auto t : times_) {
      for (std::size_t k = 0; k < dim_; ++k) {
        double x = v.coords[t * dim_ + k];
        auto idx = static_cast<std::size_t>(x * static_cast<double>(cells_));
        out.push_back(std::min(idx, cells_ - 1));
      }
    }
  }

  std::uint64_t pack(const std::vector<std::size_t>& idx) const {
    std::uint64_t key = 0;
    for (auto i : idx) {
      key = key * cells_ + i;
    }
    return key;
  }

  std::uint64_t word_key(std::size_t c) const {
    OrbitView v = bank_.view(c, n_);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < n_; ++i) {
      h = (h ^ v.word[i]) * 0x100000001b3ULL;
    }
    return h;
  }

  const OrbitBank& bank_;
  FiberMetricKind kind_;
  std::size_t dim_;
  std::size_t n_;
  bool enabled_ = false;
  std::size_t cells_ = 0;
  std::vector<std::size_t> times_;
  std::vector<std::size_t> scratch_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> map_;
};

// Greedy Bowen net (within = d^n <= eps) over the first n points of every
// orbit in the bank. Stops early once more than `limit` points are kept.
Selection bowen_net(const OrbitBank& bank, FiberMetricKind kind, std::size_t dim,
                    std::size_t n, double eps,
                    std::size_t limit = std::numeric_limits<std::size_t>::max()) {
  auto within = [&](std::size_t i, std::size_t j) {
    return bowen_at_most(bank.view(i, n), bank.view(j, n), eps);
  };
  BowenBuckets buckets(bank, kind, dim, n, eps);
  if (!buckets.enabled()) {
    Selection s;
    for (std::size_t c = 0; c < bank.size() && s.selected.size() <= limit; ++c) {
      bool keep = true;
      for (std::size_t k = s.selected.size(); k-- > 0;) {
        if (within(s.selected[k], c)) {
          keep = false;
          break;
        }
      }
      if (keep) {
        s.selected.push_back(c);
      }
    }
    s.count = s.selected.size();
    return s;
  }
  Selection s;
  for (std::size_t c = 0; c < bank.size() && s.selected.size() <= limit; ++c) {
    if (!buckets.any_within(c, within)) {
      s.selected.push_back(c);
      buckets.insert(c);
    }
  }
  s.count = s.selected.size();
  return s;
}

}  // namespace

CountTables count_tables(const RandomSystem& system, const OmegaPath& path,
                         const CandidateSet& candidates, const CountSchedule& schedule,
                         const CountOptions& options) {
  check_schedule(schedule);
  if (candidates.size() == 0) {
    throw UsageError("count_table needs a nonempty candidate set");
  }
  std::size_t n_max = *std::max_element(schedule.n_values.begin(), schedule.n_values.end());
  OrbitBank bank = OrbitBank::build(system, path, candidates.points, n_max);
  std::size_t count = bank.size();

  std::size_t n_eps = schedule.eps_values.size();
  std::size_t total = schedule.n_values.size() * n_eps;
  std::vector<CountEntry> bowen(total);
  std::vector<CountEntry> fk(total);

  parallel_for(total, [&](std::size_t e) {
    std::size_t n = schedule.n_values[e / n_eps];
    double eps = schedule.eps_values[e % n_eps];
    auto within_bowen = [&](std::size_t i, std::size_t j) {
      return bowen_at_most(bank.view(i, n), bank.view(j, n), eps);
    };
    Selection net = bowen_net(bank, system.metric(), system.dim(), n, eps);
    bowen[e] = CountEntry{n, eps, net.count, std::nullopt};
    if (options.with_spanning) {
      Selection cover = greedy_spanning(count, within_bowen);
      bowen[e].spanning = std::min(cover.count, net.count);
    }
    if (options.with_fk) {
      std::size_t target = fk_target(n, eps);
      auto within_fk = [&](std::size_t i, std::size_t j) {
        return match_reaches(bank.view(net.selected[i], n), bank.view(net.selected[j], n),
                             eps, target);
      };
      Selection fk_net = greedy_separated_by(net.count, within_fk);
      fk[e] = CountEntry{n, eps, fk_net.count, std::nullopt};
      if (options.with_spanning) {
        Selection cover = greedy_spanning(net.count, within_fk);
        fk[e].spanning = std::min(cover.count, fk_net.count);
      }
    }
  });

  CountTables tables;
  tables.bowen.metric = DynamicalMetric::bowen;
  tables.bowen.omega_seed = path.seed();
  tables.bowen.entries = std::move(bowen);
  if (options.with_fk) {
    CountTable t;
    t.metric = DynamicalMetric::fk;
    t.omega_seed = path.seed();
    t.entries = std::move(fk);
    tables.fk = std::move(t);
  }
  return tables;
}

CountTable count_table(const RandomSystem& system, const OmegaPath& path,
                       const CandidateSet& candidates, const CountSchedule& schedule,
                       DynamicalMetric metric, bool with_spanning) {
  CountOptions options;
  options.with_fk = metric == DynamicalMetric::fk;
  options.with_spanning = with_spanning;
  auto tables = count_tables(system, path, candidates, schedule, options);
  return metric == DynamicalMetric::fk ? std::move(*tables.fk) : std::move(tables.bowen);
}

////////////////////////////////////////////////////////////////////////////////
// Entropy estimates
////////////////////////////////////////////////////////////////////////////////

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y,
                           double* rms_residual) {
  if (x.size() != y.size() || x.size() < 2) {
    throw UsageError("least squares fit needs >= 2 points");
  }
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) {
    throw UsageError("least squares fit needs distinct x values");
  }
  double slope = sxy / sxx;
  if (rms_residual != nullptr) {
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double r = y[i] - (my + slope * (x[i] - mx));
      ss += r * r;
    }
    *rms_residual = std::sqrt(ss / static_cast<double>(x.size()));
  }
  return slope;
}

EntropyEstimate entropy_from_counts(const CountTable& table,
                                    const std::vector<std::size_t>& n_window,
                                    bool use_spanning) {
  std::vector<std::size_t> window;
  for (auto n : n_window) {
    bool present = std::any_of(table.entries.begin(), table.entries.end(),
                               [&](const CountEntry& e) { return e.n == n; });
    if (present && std::find(window.begin(), window.end(), n) == window.end()) {
      window.push_back(n);
    }
  }
  std::sort(window.begin(), window.end());
  if (window.size() < 3) {
    throw UsageError("entropy fit needs >= 3 n values present in the table");
  }
  std::vector<double> eps_values;
  for (const auto& e : table.entries) {
    if (std::none_of(eps_values.begin(), eps_values.end(),
                     [&](double v) { return same_eps(v, e.eps); })) {
      eps_values.push_back(e.eps);
    }
  }

  EntropyEstimate est;
  est.metric = table.metric;
  est.n_window = window;
  est.eps_values = eps_values;
  std::vector<double> x;
  for (auto n : window) {
    x.push_back(static_cast<double>(n));
  }
  for (double eps : eps_values) {
    std::vector<double> y;
    for (auto n : window) {
      const auto& entry = table.at(n, eps);
      std::size_t c = entry.separated;
      if (use_spanning) {
        if (!entry.spanning) {
          throw UsageError("table has no spanning counts");
        }
        c = *entry.spanning;
      }
      y.push_back(std::log(static_cast<double>(std::max<std::size_t>(c, 1))));
    }
    double rms = 0.0;
    est.slopes.push_back(least_squares_slope(x, y, &rms));
    est.residuals.push_back(rms);
  }
  auto smallest = std::min_element(eps_values.begin(), eps_values.end()) - eps_values.begin();
  est.value = est.slopes[static_cast<std::size_t>(smallest)];
  auto [lo, hi] = std::minmax_element(est.slopes.begin(), est.slopes.end());
  est.spread = *hi - *lo;
  return est;
}

////////////////////////////////////////////////////////////////////////////////
// Per-ω experiments
////////////////////////////////////////////////////////////////////////////////

namespace {

std::size_t max_n(const TopologicalConfig& config) {
  return *std::max_element(config.schedule.n_values.begin(), config.schedule.n_values.end());
}

double min_eps(const TopologicalConfig& config) {
  return *std::min_element(config.schedule.eps_values.begin(),
                           config.schedule.eps_values.end());
}

std::vector<std::size_t> window_of(const TopologicalConfig& config) {
  return config.n_window.empty() ? config.schedule.n_values : config.n_window;
}

// Bowen count at (n, eps) on a grid, giving up once it exceeds `limit`.
std::size_t capped_bowen_count(const RandomSystem& system, const OmegaPath& path,
                               const CandidateSet& grid, std::size_t n, double eps,
                               std::size_t limit) {
  OrbitBank bank = OrbitBank::build(system, path, grid.points, n);
  return bowen_net(bank, system.metric(), system.dim(), n, eps, limit).count;
}

}  // namespace

CandidateSet make_candidates(const RandomSystem& system, const OmegaPath& path,
                             const TopologicalConfig& config, std::uint64_t seed) {
  check_schedule(config.schedule);
  std::size_t n = max_n(config);
  double eps = min_eps(config);

  if (!system.is_torus()) {
    std::size_t length = n - 1 + std::max<std::size_t>(word_depth(system.metric(), eps), 1);
    if (path.horizon() < length) {
      throw RangeError("path too short for the word length the schedule needs");
    }
    double log_budget = std::log(static_cast<double>(config.candidate_budget));
    std::size_t pinned = 0;
    double log_size = 0.0;
    for (std::size_t i = 0; i < length; ++i) {
      log_size += std::log(static_cast<double>(system.factor(path[i])));
    }
    while (log_size > log_budget + 1e-9 && pinned < length) {
      log_size -= std::log(static_cast<double>(system.factor(path[pinned])));
      ++pinned;
    }
    return enumerate_words(system, path, length, pinned);
  }

  std::size_t dim = system.dim();
  double d = static_cast<double>(dim);
  double window = 1.0;
  std::size_t probe_limit = static_cast<std::size_t>(
      static_cast<double>(config.probe_budget) / config.saturation_ratio);
  double density = 0.0;  // Bowen count per unit volume at (n, eps)
  for (int attempt = 0; attempt < 64; ++attempt) {
    CandidateSet probe = torus_grid_budget(dim, config.probe_budget, window);
    std::size_t c = capped_bowen_count(system, path, probe, n, eps, probe_limit);
    if (c <= probe_limit) {
      density = static_cast<double>(c) / std::pow(window, d);
      break;
    }
    window /= 16.0;
  }
  double target = static_cast<double>(config.candidate_budget) / config.saturation_ratio;
  double chosen = window;
  if (density > 0.0) {
    chosen = std::min(1.0, std::pow(0.8 * target / density, 1.0 / d));
    chosen = std::max(chosen, window);
  }
  CandidateSet grid = torus_grid_budget(dim, config.candidate_budget, chosen);
  if (config.iid_extra > 0) {
    CandidateSet extra = torus_sample(dim, config.iid_extra, chosen, seed);
    for (std::size_t i = 0; i < extra.size(); ++i) {
      grid.points.push_torus(extra.points.coords(i));
    }
    grid.seed = seed;
  }
  return grid;
}

double window_oracle(const RandomSystem& system, const OmegaPath& path,
                     const TopologicalConfig& config) {
  auto window = window_of(config);
  std::size_t extra = 0;
  if (!system.is_torus()) {
    extra = std::max<std::size_t>(word_depth(system.metric(), min_eps(config)), 1);
  }
  std::vector<double> x;
  std::vector<double> y;
  for (auto n : window) {
    std::size_t steps = n - 1 + extra;
    double log_count = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
      log_count += std::log(static_cast<double>(system.factor(path.at(i))));
    }
    if (system.is_torus()) {
      log_count *= static_cast<double>(system.dim());
    }
    x.push_back(static_cast<double>(n));
    y.push_back(log_count);
  }
  return least_squares_slope(x, y);
}

OmegaTopResult estimate_fiber_entropy(const RandomSystem& system, const OmegaPath& path,
                                      const TopologicalConfig& config,
                                      std::uint64_t candidate_seed) {
  OmegaTopResult r{path, make_candidates(system, path, config, candidate_seed), {}, {}, {}, 0.0};
  CountOptions options;
  options.with_fk = config.with_fk;
  options.with_spanning = config.with_spanning;
  r.tables = count_tables(system, path, r.candidates, config.schedule, options);
  auto window = window_of(config);
  r.bowen = entropy_from_counts(r.tables.bowen, window);
  if (r.tables.fk) {
    r.fk = entropy_from_counts(*r.tables.fk, window);
  }
  r.oracle_slope = window_oracle(system, path, config);
  return r;
}

IntegratedEntropy integrated_entropy(const RandomSystem& system,
                                     const DrivingProcess& process,
                                     const TopologicalConfig& config,
                                     std::size_t omega_samples, std::uint64_t master_seed) {
  if (omega_samples == 0) {
    throw UsageError("integrated_entropy needs >= 1 omega sample");
  }
  check_schedule(config.schedule);
  std::size_t path_length = max_n(config) + 64;
  std::vector<std::optional<OmegaTopResult>> results(omega_samples);
  parallel_for(omega_samples, [&](std::size_t j) {
    OmegaPath path =
        sample_path(process, path_length, derive_seed(master_seed, streams::omega_path, j));
    results[j] = estimate_fiber_entropy(system, path, config,
                                        derive_seed(master_seed, streams::candidates, j));
  });

  IntegratedEntropy out;
  out.oracle = expected_entropy(system, process.stationary());
  auto mean_se = [](const std::vector<double>& v, double& mean, double& se) {
    mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
      ss += (x - mean) * (x - mean);
    }
    se = v.size() > 1
             ? std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()))
             : 0.0;
  };
  std::vector<double> b;
  std::vector<double> f;
  for (auto& r : results) {
    b.push_back(r->bowen.value);
    if (r->fk) {
      f.push_back(r->fk->value);
    }
    out.per_omega.push_back(std::move(*r));
  }
  mean_se(b, out.bowen_mean, out.bowen_stderr);
  if (!f.empty()) {
    double m = 0.0;
    double se = 0.0;
    mean_se(f, m, se);
    out.fk_mean = m;
    out.fk_stderr = se;
  }
  return out;
}

}  // namespace fkent
