#pragma once

// Katok entropy: smallest number of dynamical balls whose union carries a
// given μ_ω-mass, estimated by greedy partial cover of an empirical sample.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fkent/entropy_local.hpp"
#include "fkent/entropy_topological.hpp"
#include "fkent/fk_metric.hpp"
#include "fkent/rds.hpp"

namespace fkent {

struct KatokCount {
  std::size_t n = 0;
  double eps = 0.0;
  double mass_threshold = 0.0;
  DynamicalMetric kind = DynamicalMetric::bowen;
  std::size_t count = 0;
  double covered_mass = 0.0;
  std::vector<std::size_t> centers;  // sample indices
  // FK only: true when the Bowen cover, reread with FK balls, beat the FK
  // greedy and was reported instead.
  bool from_bowen = false;
};

// Weighted partial cover instance: ball[i] lists the items center i covers
// (each item is also a center). Items with equal weight-bearing keys are
// merged beforehand.
struct CoverInstance {
  std::vector<std::uint64_t> weight;             // multiplicity of item i
  std::vector<std::vector<std::uint64_t>> rows;  // bitset of ball i, 64 items per word
  std::uint64_t need = 0;                        // total weight to reach

  std::size_t size() const noexcept { return weight.size(); }
  bool covers(std::size_t center, std::size_t item) const noexcept {
    return (rows[center][item >> 6] >> (item & 63)) & 1u;
  }
};

// Greedy partial cover: takes the center with the largest uncovered weight
// (ties to the lowest index) until the covered weight reaches `need`.
std::vector<std::size_t> greedy_partial_cover(const CoverInstance& inst);

// Exact minimum partial cover by iterative-deepening branch and bound
// (bound: sum of the largest marginal gains; dominated balls dropped).
// ResourceError after max_nodes search nodes.
std::size_t exact_min_partial_cover(const CoverInstance& inst,
                                    std::uint64_t max_nodes = 50'000'000);

// Exhaustive search over subsets by increasing size. Items <= 24.
std::size_t brute_force_min_partial_cover(const CoverInstance& inst);

// Builds the cover instance for (n, eps) balls of the chosen metric over the
// samples. Shift samples are merged by their first n - 1 + depth(eps)
// symbols, which fix ball membership. `keys[i]` is the first sample index of
// item i. ResourceError above max_items distinct items.
CoverInstance katok_instance(const EmpiricalMeasure& measure, const OmegaPath& path,
                             const RandomSystem& system, std::size_t n, double eps,
                             double mass_threshold, DynamicalMetric kind,
                             std::vector<std::size_t>* keys = nullptr,
                             std::size_t max_items = 20000);

// Greedy partial cover over sample orbits until the covered fraction is >=
// mass_threshold. For FK the Bowen cover at the same threshold is also
// computed and the smaller count is reported, so FK <= Bowen always.
// UsageError unless eps > 0 and mass_threshold in (0, 1].
KatokCount katok_spanning_count(const EmpiricalMeasure& measure, const OmegaPath& path,
                                const RandomSystem& system, std::size_t n, double eps,
                                double mass_threshold, DynamicalMetric kind);

struct KatokConfig {
  std::vector<std::size_t> n_values{8, 9, 10, 11, 12};
  std::vector<double> eps_values{0.3};
  std::size_t M = 100000;
  std::size_t omega_samples = 1;
  // Bowen mass threshold 1 - delta; unset means delta = eps (the FK form
  // always uses 1 - eps).
  std::optional<double> bowen_delta;
  bool with_bowen = true;
  bool with_fk = true;
};

struct KatokOmegaResult {
  std::uint64_t omega_seed = 0;
  std::vector<KatokCount> bowen;  // n-major, eps in schedule order
  std::vector<KatokCount> fk;
};

struct KatokEstimate {
  std::optional<EntropyEstimate> bowen;  // slopes averaged over ω
  std::optional<EntropyEstimate> fk;
  std::vector<KatokOmegaResult> per_omega;
  std::vector<std::string> warnings;  // monotonicity after isotonic fix, etc.
};

// Per-eps LS slope of log count vs n, averaged over ω samples; value at the
// smallest eps. Path j: derive_seed(master_seed, streams::omega_path, j);
// its measure: derive_seed(master_seed, streams::measure, j).
KatokEstimate katok_entropy(const RandomSystem& system, const DrivingProcess& process,
                            const KatokConfig& config, std::uint64_t master_seed);

// Pool-adjacent-violators fit of a nondecreasing sequence (least squares).
std::vector<double> isotonic_nondecreasing(const std::vector<double>& y);

}  // namespace fkent
