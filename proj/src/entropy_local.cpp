#include "fkent/entropy_local.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fkent/entropy_topological.hpp"
#include "fkent/errors.hpp"
#include "fkent/parallel.hpp"
#include "fkent/random.hpp"

namespace fkent {

namespace {

constexpr std::size_t kSampleChunk = 65536;
constexpr std::size_t kCountChunk = 16384;

double nan() { return std::numeric_limits<double>::quiet_NaN(); }

bool same_delta(double a, double b) { return std::fabs(a - b) <= 1e-12 * std::max(1.0, a); }

}  // namespace

EmpiricalMeasure sample_measure(const RandomSystem& system, const OmegaPath& path,
                                std::size_t M, std::uint64_t seed, std::size_t word_length) {
  if (M == 0) {
    throw UsageError("empirical measure needs M >= 1");
  }
  EmpiricalMeasure m;
  m.seed = seed;
  std::size_t chunks = (M + kSampleChunk - 1) / kSampleChunk;

  if (system.is_torus()) {
    std::size_t d = system.dim();
    std::vector<double> flat(M * d);
    parallel_for(chunks, [&](std::size_t c) {
      Rng rng(derive_seed(seed, streams::measure, c));
      std::size_t end = std::min(M, (c + 1) * kSampleChunk);
      for (std::size_t i = c * kSampleChunk * d; i < end * d; ++i) {
        flat[i] = rng.uniform();
      }
    });
    m.samples = PointCloud::torus(d);
    m.samples.reserve(M);
    for (std::size_t i = 0; i < M; ++i) {
      m.samples.push_torus({flat.data() + i * d, d});
    }
    return m;
  }

  std::size_t L = word_length == 0 ? path.horizon() : word_length;
  if (L == 0) {
    throw UsageError("shift samples need a positive word length");
  }
  if (L > path.horizon()) {
    throw RangeError("sample word length exceeds the path horizon");
  }
  std::vector<std::uint64_t> radix(L);
  for (std::size_t i = 0; i < L; ++i) {
    radix[i] = static_cast<std::uint64_t>(system.factor(path[i]));
  }
  std::vector<std::uint8_t> flat(M * L);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng(derive_seed(seed, streams::measure, c));
    std::size_t end = std::min(M, (c + 1) * kSampleChunk);
    for (std::size_t s = c * kSampleChunk; s < end; ++s) {
      for (std::size_t i = 0; i < L; ++i) {
        flat[s * L + i] = static_cast<std::uint8_t>(rng.below(radix[i]));
      }
    }
  });
  m.samples = PointCloud::words(L);
  m.samples.reserve(M);
  for (std::size_t s = 0; s < M; ++s) {
    m.samples.push_word({flat.data() + s * L, L});
  }
  return m;
}

BallCounter::BallCounter(const RandomSystem& system, const OmegaPath& path,
                         const EmpiricalMeasure& measure, std::size_t n_max)
    : bank_(OrbitBank::build(system, path, measure.samples, n_max)) {
  if (measure.size() == 0) {
    throw UsageError("ball counts need a nonempty sample");
  }
}

std::size_t BallCounter::count(const OrbitView& center, std::size_t n, double delta,
                               DynamicalMetric kind) const {
  if (!(delta > 0.0)) {
    throw UsageError("ball radius must be > 0");
  }
  if (n == 0 || n > bank_.length() || n > center.n) {
    throw RangeError("ball length exceeds the stored orbits");
  }
  OrbitView c = center.prefix(n);
  std::size_t target = fk_target(n, delta);
  std::size_t chunks = (bank_.size() + kCountChunk - 1) / kCountChunk;
  std::vector<std::size_t> partial(chunks, 0);
  parallel_for(chunks, [&](std::size_t k) {
    std::size_t end = std::min(bank_.size(), (k + 1) * kCountChunk);
    std::size_t hits = 0;
    for (std::size_t i = k * kCountChunk; i < end; ++i) {
      OrbitView y = bank_.view(i, n);
      bool in = kind == DynamicalMetric::bowen ? bowen_less(c, y, delta)
                                               : match_reaches(c, y, delta, target);
      hits += in ? 1 : 0;
    }
    partial[k] = hits;
  });
  std::size_t total = 0;
  for (auto h : partial) {
    total += h;
  }
  return total;
}

double ball_measure(const EmpiricalMeasure& measure, const OrbitSegment& center,
                    std::size_t n, double delta, DynamicalMetric kind,
                    const RandomSystem& system, const OmegaPath& path) {
  if (measure.size() == 0) {
    throw UsageError("ball measure needs a nonempty sample");
  }
  BallCounter counter(system, path, measure, n);
  return static_cast<double>(counter.count(center.view(), n, delta, kind)) /
         static_cast<double>(measure.size());
}

const LocalEntry& LocalEntropyRecord::at(std::size_t n, double delta) const {
  for (const auto& e : entries) {
    if (e.n == n && same_delta(e.delta, delta)) {
      return e;
    }
  }
  throw RangeError("no local entropy entry for n=" + std::to_string(n));
}

LocalEntropyRecord local_entropy(const BallCounter& counter, const RandomSystem& system,
                                 const OmegaPath& path, const PhasePoint& x,
                                 const std::vector<std::size_t>& n_values,
                                 const std::vector<double>& deltas, DynamicalMetric kind) {
  if (n_values.empty() || deltas.empty()) {
    throw UsageError("local entropy needs nonempty n and delta schedules");
  }
  std::size_t n_max = *std::max_element(n_values.begin(), n_values.end());
  OrbitSegment center = orbit(system, path, x, n_max);
  double M = static_cast<double>(counter.samples());

  LocalEntropyRecord r;
  r.kind = kind;
  r.x = x;
  r.omega_seed = path.seed();
  r.M = counter.samples();
  r.entries.resize(n_values.size() * deltas.size());

  std::vector<std::size_t> order(n_values.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return n_values[a] < n_values[b]; });

  for (std::size_t d = 0; d < deltas.size(); ++d) {
    double delta = deltas[d];
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      std::size_t ni = order[pos];
      std::size_t n = n_values[ni];
      if (pos >= 2) {
        const auto& a = r.entries[order[pos - 2] * deltas.size() + d];
        const auto& b = r.entries[order[pos - 1] * deltas.size() + d];
        if (a.ball_count > 0 && b.ball_count > 0) {
          double steps = static_cast<double>(n - b.n) / static_cast<double>(b.n - a.n);
          double ratio = static_cast<double>(b.ball_count) / static_cast<double>(a.ball_count);
          double expected = static_cast<double>(b.ball_count) * std::pow(ratio, steps);
          if (expected < 10.0) {
            std::ostringstream os;
            os << "expected ball count " << expected << " < 10 at n=" << n
               << ", delta=" << delta << "; M >= "
               << static_cast<std::size_t>(std::ceil(M * 10.0 / std::max(expected, 1e-300)))
               << " suggested";
            r.warnings.push_back(os.str());
          }
        }
      }
      LocalEntry e;
      e.n = n;
      e.delta = delta;
      e.ball_count = counter.count(center.view(), n, delta, kind);
      e.flagged = e.ball_count == 0;
      if (e.flagged) {
        std::ostringstream os;
        os << "empty ball at n=" << n << ", delta=" << delta << "; estimate undefined";
        r.warnings.push_back(os.str());
      }
      e.estimate = e.flagged ? nan()
                             : -std::log(static_cast<double>(e.ball_count) / M) /
                                   static_cast<double>(n);
      r.entries[ni * deltas.size() + d] = e;
    }
  }

  std::size_t unflagged = 0;
  for (const auto& e : r.entries) {
    unflagged += e.flagged ? 0 : 1;
  }
  r.coverage = static_cast<double>(unflagged) / static_cast<double>(r.entries.size());

  std::vector<std::size_t> by_delta(deltas.size());
  for (std::size_t d = 0; d < deltas.size(); ++d) {
    by_delta[d] = d;
  }
  std::sort(by_delta.begin(), by_delta.end(),
            [&](std::size_t a, std::size_t b) { return deltas[a] < deltas[b]; });

  std::size_t n_last = order.back();
  for (auto d : by_delta) {
    const auto& e = r.entries[n_last * deltas.size() + d];
    if (!e.flagged) {
      r.endpoint_estimate = e.estimate;
      break;
    }
  }

  std::vector<std::size_t> distinct_n(n_values.begin(), n_values.end());
  std::sort(distinct_n.begin(), distinct_n.end());
  distinct_n.erase(std::unique(distinct_n.begin(), distinct_n.end()), distinct_n.end());
  if (distinct_n.size() >= 2) {
    for (auto d : by_delta) {
      std::vector<double> xs;
      std::vector<double> ys;
      bool ok = true;
      for (std::size_t ni = 0; ni < n_values.size(); ++ni) {
        const auto& e = r.entries[ni * deltas.size() + d];
        if (e.flagged) {
          ok = false;
          break;
        }
        xs.push_back(static_cast<double>(e.n));
        ys.push_back(-std::log(static_cast<double>(e.ball_count) / M));
      }
      if (ok) {
        r.slope_estimate = least_squares_slope(xs, ys);
        r.slope_delta = deltas[d];
        break;
      }
    }
  }
  return r;
}

LocalEntropyRecord local_entropy(const RandomSystem& system, const OmegaPath& path,
                                 const PhasePoint& x, const std::vector<std::size_t>& n_values,
                                 const std::vector<double>& deltas, std::size_t M,
                                 DynamicalMetric kind, std::uint64_t seed) {
  if (n_values.empty()) {
    throw UsageError("local entropy needs a nonempty n schedule");
  }
  std::size_t n_max = *std::max_element(n_values.begin(), n_values.end());
  EmpiricalMeasure measure = sample_measure(system, path, M, seed);
  BallCounter counter(system, path, measure, n_max);
  return local_entropy(counter, system, path, x, n_values, deltas, kind);
}

////////////////////////////////////////////////////////////////////////////////
// Partitions
////////////////////////////////////////////////////////////////////////////////

GridPartition GridPartition::boxes(std::size_t dim, std::size_t per_axis) {
  if (dim == 0 || per_axis == 0) {
    throw UsageError("box partition needs dim >= 1 and >= 1 cell per axis");
  }
  double log_cells = static_cast<double>(dim) * std::log2(static_cast<double>(per_axis));
  if (log_cells > 63.0) {
    throw UsageError("box partition has too many cells");
  }
  GridPartition p;
  p.torus_ = true;
  p.dim_ = dim;
  p.per_axis_ = per_axis;
  return p;
}

GridPartition GridPartition::cylinders(std::size_t depth, int alphabet) {
  if (alphabet < 1 || alphabet > 256) {
    throw UsageError("cylinder partition alphabet must be in [1, 256]");
  }
  if (static_cast<double>(depth) * std::log2(static_cast<double>(alphabet)) > 63.0) {
    throw UsageError("cylinder partition too deep");
  }
  GridPartition p;
  p.torus_ = false;
  p.depth_ = depth;
  p.alphabet_ = alphabet;
  return p;
}

double GridPartition::mesh() const noexcept {
  if (torus_) {
    return 1.0 / static_cast<double>(per_axis_);
  }
  return std::ldexp(1.0, -static_cast<int>(depth_));
}

std::uint64_t GridPartition::cell(const OrbitView& orbit, std::size_t i) const noexcept {
  std::uint64_t c = 0;
  if (torus_) {
    const double* p = orbit.coords + i * orbit.dim;
    for (std::size_t k = 0; k < dim_; ++k) {
      auto idx = static_cast<std::uint64_t>(p[k] * static_cast<double>(per_axis_));
      idx = std::min<std::uint64_t>(idx, per_axis_ - 1);
      c = c * per_axis_ + idx;
    }
    return c;
  }
  for (std::size_t j = 0; j < depth_; ++j) {
    c = c * static_cast<std::uint64_t>(alphabet_) + orbit.word[i + j];
  }
  return c;
}

namespace {

void check_partition(const RandomSystem& system, const GridPartition& partition) {
  if (partition.is_torus() != system.is_torus()) {
    throw UsageError("partition does not match the system's phase space");
  }
}

}  // namespace

SmbResult smb_estimate(const RandomSystem& system, const OmegaPath& path,
                       const PhasePoint& x, const GridPartition& partition, std::size_t n,
                       const EmpiricalMeasure& measure) {
  check_partition(system, partition);
  if (n == 0) {
    throw UsageError("smb_estimate needs n >= 1");
  }
  if (measure.size() == 0) {
    throw UsageError("smb_estimate needs a nonempty sample");
  }
  if (!system.is_torus() && measure.samples.word_length() < n + partition.lookahead()) {
    throw RangeError("sample words too short for the partition depth");
  }
  OrbitSegment center = orbit(system, path, x, n);
  OrbitView cv = center.view();
  if (!system.is_torus() && cv.word_length < n + partition.lookahead()) {
    throw RangeError("base word too short for the partition depth");
  }
  std::vector<std::uint64_t> itinerary(n);
  for (std::size_t i = 0; i < n; ++i) {
    itinerary[i] = partition.cell(cv, i);
  }
  OrbitBank bank = OrbitBank::build(system, path, measure.samples, n);
  std::size_t chunks = (bank.size() + kCountChunk - 1) / kCountChunk;
  std::vector<std::size_t> partial(chunks, 0);
  parallel_for(chunks, [&](std::size_t k) {
    std::size_t end = std::min(bank.size(), (k + 1) * kCountChunk);
    for (std::size_t s = k * kCountChunk; s < end; ++s) {
      OrbitView v = bank.view(s);
      bool same = true;
      for (std::size_t i = n; i-- > 0;) {
        if (partition.cell(v, i) != itinerary[i]) {
          same = false;
          break;
        }
      }
      partial[k] += same ? 1 : 0;
    }
  });
  SmbResult r;
  r.n = n;
  r.M = measure.size();
  for (auto h : partial) {
    r.count += h;
  }
  r.flagged = r.count == 0;
  r.value = r.flagged ? nan()
                      : -std::log(static_cast<double>(r.count) / static_cast<double>(r.M)) /
                            static_cast<double>(n);
  return r;
}

std::vector<PartitionRate> partition_entropy_rate(const RandomSystem& system,
                                                  const DrivingProcess& process,
                                                  const GridPartition& partition,
                                                  const std::vector<std::size_t>& n_values,
                                                  std::size_t M, std::size_t omega_samples,
                                                  std::uint64_t master_seed) {
  check_partition(system, partition);
  if (n_values.empty() || omega_samples == 0 || M == 0) {
    throw UsageError("partition_entropy_rate needs n values, M >= 1 and >= 1 omega sample");
  }
  std::vector<std::size_t> ns(n_values.begin(), n_values.end());
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  if (ns.front() == 0) {
    throw UsageError("n values must be >= 1");
  }
  std::size_t n_max = ns.back();
  std::size_t word_length = n_max + partition.lookahead();

  // entropy[j][k]: plug-in entropy at ns[k] for path j; occupied likewise.
  std::vector<std::vector<double>> entropy(omega_samples);
  std::vector<std::vector<std::size_t>> occupied(omega_samples);
  parallel_for(omega_samples, [&](std::size_t j) {
    OmegaPath path = sample_path(process, word_length + 1,
                                 derive_seed(master_seed, streams::omega_path, j));
    EmpiricalMeasure measure = sample_measure(system, path, M,
                                              derive_seed(master_seed, streams::measure, j),
                                              system.is_torus() ? 0 : word_length);
    OrbitBank bank = OrbitBank::build(system, path, measure.samples, n_max);
    std::vector<std::uint64_t> cells(M * n_max);
    for (std::size_t s = 0; s < M; ++s) {
      OrbitView v = bank.view(s);
      for (std::size_t i = 0; i < n_max; ++i) {
        cells[s * n_max + i] = partition.cell(v, i);
      }
    }
    std::vector<std::size_t> idx(M);
    for (std::size_t s = 0; s < M; ++s) {
      idx[s] = s;
    }
    auto row = [&](std::size_t s) { return cells.begin() + static_cast<std::ptrdiff_t>(s * n_max); };
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::lexicographical_compare(row(a), row(a) + static_cast<std::ptrdiff_t>(n_max),
                                          row(b), row(b) + static_cast<std::ptrdiff_t>(n_max));
    });
    for (auto n : ns) {
      double h = 0.0;
      std::size_t runs = 0;
      std::size_t start = 0;
      auto dn = static_cast<std::ptrdiff_t>(n);
      for (std::size_t s = 1; s <= M; ++s) {
        if (s == M || !std::equal(row(idx[s]), row(idx[s]) + dn, row(idx[start]))) {
          double p = static_cast<double>(s - start) / static_cast<double>(M);
          h -= p * std::log(p);
          ++runs;
          start = s;
        }
      }
      entropy[j].push_back(h);
      occupied[j].push_back(runs);
    }
  });

  std::vector<PartitionRate> out;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    PartitionRate r;
    r.n = ns[k];
    double sum = 0.0;
    for (std::size_t j = 0; j < omega_samples; ++j) {
      sum += entropy[j][k] / static_cast<double>(ns[k]);
      r.occupied = std::max(r.occupied, occupied[j][k]);
      if (entropy[j][k] > std::log(static_cast<double>(occupied[j][k])) + 1e-9) {
        r.bound_holds = false;
      }
    }
    r.rate = sum / static_cast<double>(omega_samples);
    out.push_back(r);
  }
  return out;
}

}  // namespace fkent
