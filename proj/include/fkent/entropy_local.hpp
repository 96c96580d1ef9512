#pragma once

// Brin-Katok local entropy from empirical measures of dynamical balls, and
// partition (SMB) estimators.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fkent/fk_metric.hpp"
#include "fkent/rds.hpp"

namespace fkent {

// M i.i.d. samples of μ_ω. Torus systems: Lebesgue on [0,1)^d. Shift
// systems: uniform symbol below k(ω_i) at coordinate i, truncated to a
// finite word.
struct EmpiricalMeasure {
  PointCloud samples = PointCloud::torus(1);
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return samples.size(); }
};

// Samples are drawn in chunks of 65536; chunk c uses its own generator
// seeded by derive_seed(seed, streams::measure, c). word_length 0 means the
// path horizon. UsageError if M == 0.
EmpiricalMeasure sample_measure(const RandomSystem& system, const OmegaPath& path,
                                std::size_t M, std::uint64_t seed,
                                std::size_t word_length = 0);

// Orbits of a measure's samples along one ω, for repeated ball counts.
class BallCounter {
 public:
  BallCounter(const RandomSystem& system, const OmegaPath& path,
              const EmpiricalMeasure& measure, std::size_t n_max);

  std::size_t samples() const noexcept { return bank_.size(); }
  std::size_t n_max() const noexcept { return bank_.length(); }

  // Number of samples y with d^n(center, y) < delta (Bowen) or
  // fbar_n(delta) < delta (FK). center needs >= n points.
  std::size_t count(const OrbitView& center, std::size_t n, double delta,
                    DynamicalMetric kind) const;

 private:
  OrbitBank bank_;
};

// Fraction of samples in the (n, delta) ball about center. The center is
// never part of the sample. UsageError on an empty measure or delta <= 0.
double ball_measure(const EmpiricalMeasure& measure, const OrbitSegment& center,
                    std::size_t n, double delta, DynamicalMetric kind,
                    const RandomSystem& system, const OmegaPath& path);

struct LocalEntry {
  std::size_t n = 0;
  double delta = 0.0;
  std::size_t ball_count = 0;
  double estimate = 0.0;  // -(1/n) log(ball_count / M); NaN when flagged
  bool flagged = false;   // ball_count == 0
};

struct LocalEntropyRecord {
  DynamicalMetric kind = DynamicalMetric::bowen;
  PhasePoint x;
  std::uint64_t omega_seed = 0;
  std::size_t M = 0;
  std::vector<LocalEntry> entries;  // n-major, delta in schedule order
  // LS slope of -log(ball measure) in n at the smallest delta whose counts
  // are all nonzero (needs >= 2 n values).
  std::optional<double> slope_estimate;
  std::optional<double> slope_delta;
  // Entry estimate at the largest n and the smallest delta with a nonzero
  // count there.
  std::optional<double> endpoint_estimate;
  double coverage = 0.0;  // fraction of unflagged entries
  std::vector<std::string> warnings;

  const LocalEntry& at(std::size_t n, double delta) const;
};

// Fills the n x delta table. Before each n after the second, the count is
// extrapolated geometrically from the previous two; a warning is recorded
// when fewer than 10 hits are expected.
LocalEntropyRecord local_entropy(const BallCounter& counter, const RandomSystem& system,
                                 const OmegaPath& path, const PhasePoint& x,
                                 const std::vector<std::size_t>& n_values,
                                 const std::vector<double>& deltas, DynamicalMetric kind);

LocalEntropyRecord local_entropy(const RandomSystem& system, const OmegaPath& path,
                                 const PhasePoint& x, const std::vector<std::size_t>& n_values,
                                 const std::vector<double>& deltas, std::size_t M,
                                 DynamicalMetric kind, std::uint64_t seed);

////////////////////////////////////////////////////////////////////////////////
// Partitions
////////////////////////////////////////////////////////////////////////////////

// Torus: boxes of side 1/q (q per axis); cell diameter <= 1/q in the max
// circle metric. Shift: cylinders of depth m; diameter 2^-m (cylinder metric).
// q = 1 or m = 0 is the trivial partition {X}.
class GridPartition {
 public:
  static GridPartition boxes(std::size_t dim, std::size_t per_axis);
  static GridPartition cylinders(std::size_t depth, int alphabet);

  bool is_torus() const noexcept { return torus_; }
  std::size_t per_axis() const noexcept { return per_axis_; }
  std::size_t depth() const noexcept { return depth_; }
  double mesh() const noexcept;
  // Symbols of look-ahead a word needs beyond the point itself.
  std::size_t lookahead() const noexcept { return torus_ ? 0 : depth_ - (depth_ > 0); }

  // Cell of the i-th point of an orbit.
  std::uint64_t cell(const OrbitView& orbit, std::size_t i) const noexcept;

 private:
  bool torus_ = true;
  std::size_t dim_ = 1;
  std::size_t per_axis_ = 1;
  std::size_t depth_ = 0;
  int alphabet_ = 2;
};

struct SmbResult {
  std::size_t n = 0;
  std::size_t count = 0;  // samples sharing x's itinerary
  std::size_t M = 0;
  double value = 0.0;  // -(1/n) log(count / M); NaN when flagged
  bool flagged = false;
};

// -(1/n) log μ̂(ξⁿ(x)): samples whose first n partition cells match x's.
SmbResult smb_estimate(const RandomSystem& system, const OmegaPath& path,
                       const PhasePoint& x, const GridPartition& partition, std::size_t n,
                       const EmpiricalMeasure& measure);

struct PartitionRate {
  std::size_t n = 0;
  double rate = 0.0;           // mean over ω of H_n / n
  std::size_t occupied = 0;    // max occupied itinerary cells over ω
  bool bound_holds = true;     // H_n <= log(occupied) for every ω
};

// Plug-in Shannon entropy of itinerary frequencies divided by n, averaged
// over omega_samples paths (path j seeded by derive_seed(master_seed,
// streams::omega_path, j), its measure by streams::measure). Biased low.
std::vector<PartitionRate> partition_entropy_rate(const RandomSystem& system,
                                                  const DrivingProcess& process,
                                                  const GridPartition& partition,
                                                  const std::vector<std::size_t>& n_values,
                                                  std::size_t M, std::size_t omega_samples,
                                                  std::uint64_t master_seed);

}  // namespace fkent
