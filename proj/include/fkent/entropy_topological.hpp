#pragma once

// Fiber topological entropy from spanning/separated counts under the Bowen
// and FK metrics.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fkent/fk_metric.hpp"
#include "fkent/rds.hpp"

namespace fkent {

////////////////////////////////////////////////////////////////////////////////
// Candidate sets
////////////////////////////////////////////////////////////////////////////////

struct CandidateSet {
  enum class Provenance { grid, iid_sample, word_enumeration };

  PointCloud points = PointCloud::torus(1);
  Provenance provenance = Provenance::grid;
  // Grid: mesh along each axis. Words: 0.
  double mesh = 0.0;
  // Torus: side of the box [0, window)^d the candidates fill. Words: the
  // number of leading symbols pinned to 0.
  double window = 1.0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return points.size(); }
};

std::string to_string(CandidateSet::Provenance p);

// Uniform grid with per_axis points per axis on [0, window)^dim.
CandidateSet torus_grid(std::size_t dim, std::size_t per_axis, double window = 1.0);

// Grid with at most `budget` points (per_axis = floor(budget^(1/dim))).
CandidateSet torus_grid_budget(std::size_t dim, std::size_t budget, double window = 1.0);

// I.i.d. uniform points of [0, window)^dim.
CandidateSet torus_sample(std::size_t dim, std::size_t count, double window,
                          std::uint64_t seed);

// Every word of length `length` in the support of μ_ω (symbol i below
// k(ω_i)) whose first `pinned` symbols are 0, in lexicographic order.
CandidateSet enumerate_words(const RandomSystem& system, const OmegaPath& path,
                             std::size_t length, std::size_t pinned);

// Number of leading symbols two words must share to be closer than eps
// (cylinder metric), or 1 for the discrete metric.
std::size_t word_depth(FiberMetricKind kind, double eps);

////////////////////////////////////////////////////////////////////////////////
// Greedy nets
////////////////////////////////////////////////////////////////////////////////

struct Selection {
  std::size_t count = 0;
  std::vector<std::size_t> selected;  // candidate indices, in selection order
};

// Scans candidates in index order and keeps one iff it is not `within` any
// kept candidate. The result is a maximal separated set and also a spanning
// set of the candidates. Kept candidates are checked most recent first.
template <class Within>
Selection greedy_separated_by(std::size_t count, Within&& within) {
  Selection s;
  for (std::size_t c = 0; c < count; ++c) {
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

// Keeps a candidate iff dist(kept, candidate) > eps for every kept one.
// UsageError on an empty candidate set or eps <= 0.
Selection greedy_separated(std::size_t count,
                           const std::function<double(std::size_t, std::size_t)>& dist,
                           double eps);

// Greedy set cover: repeatedly takes the candidate whose ball covers the
// most uncovered candidates (ties to the lowest index). `within(i, j)` says
// whether center i covers candidate j. Quadratic memory; ResourceError
// above max_candidates.
Selection greedy_spanning(std::size_t count,
                          const std::function<bool(std::size_t, std::size_t)>& within,
                          std::size_t max_candidates = 20000);

Selection greedy_spanning(std::size_t count,
                          const std::function<double(std::size_t, std::size_t)>& dist,
                          double eps, std::size_t max_candidates = 20000);

////////////////////////////////////////////////////////////////////////////////
// Count tables
////////////////////////////////////////////////////////////////////////////////

struct CountSchedule {
  std::vector<std::size_t> n_values;
  std::vector<double> eps_values;
};

struct CountEntry {
  std::size_t n = 0;
  double eps = 0.0;
  std::size_t separated = 0;
  std::optional<std::size_t> spanning;
};

struct CountTable {
  DynamicalMetric metric = DynamicalMetric::bowen;
  std::uint64_t omega_seed = 0;
  std::vector<CountEntry> entries;  // n-major, eps in schedule order

  const CountEntry& at(std::size_t n, double eps) const;

  // Violated typed invariants: counts >= 1; nonincreasing in eps at fixed n;
  // nondecreasing in n at fixed eps (Bowen only); and, where spanning counts
  // exist and eps/2 is in the schedule, sp(eps) <= sr(eps) <= sp(eps/2).
  std::vector<std::string> invariant_violations(bool check_chain = true) const;

  // d_FK^n is normalized by n and is not monotone in n, so decreases in n of
  // FK counts are reported here instead.
  std::vector<std::string> monotonicity_warnings() const;
};

struct CountOptions {
  bool with_fk = true;
  bool with_spanning = false;
};

struct CountTables {
  CountTable bowen;
  std::optional<CountTable> fk;
  // Entrywise fk <= bowen check.
  std::vector<std::string> dominance_violations() const;
};

// Counts for every (n, eps) of the schedule. Bowen counts come from the
// greedy separated scan over all candidates with "within" = d^n <= eps. FK
// counts come from a greedy scan over that Bowen net with the FK ball test,
// so they never exceed the Bowen counts. Spanning counts, when requested,
// are min(greedy cover, separated count): the separated set is itself a cover
// of the same candidate domain.
CountTables count_tables(const RandomSystem& system, const OmegaPath& path,
                         const CandidateSet& candidates, const CountSchedule& schedule,
                         const CountOptions& options = {});

CountTable count_table(const RandomSystem& system, const OmegaPath& path,
                       const CandidateSet& candidates, const CountSchedule& schedule,
                       DynamicalMetric metric, bool with_spanning = false);

////////////////////////////////////////////////////////////////////////////////
// Entropy estimates
////////////////////////////////////////////////////////////////////////////////

struct EntropyEstimate {
  double value = 0.0;  // slope at the smallest eps, nats
  DynamicalMetric metric = DynamicalMetric::bowen;
  std::vector<std::size_t> n_window;
  std::vector<double> eps_values;
  std::vector<double> slopes;     // per eps
  std::vector<double> residuals;  // per eps, RMS of the log-count fit
  double spread = 0.0;            // max - min slope over eps
};

// Least-squares slope of log(count) against n over `n_window` for every eps.
// Needs >= 3 distinct n values that occur in the table (UsageError).
EntropyEstimate entropy_from_counts(const CountTable& table,
                                    const std::vector<std::size_t>& n_window,
                                    bool use_spanning = false);

// Least-squares slope of y against x.
double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y,
                           double* rms_residual = nullptr);

////////////////////////////////////////////////////////////////////////////////
// Per-ω experiments and integration over ω
////////////////////////////////////////////////////////////////////////////////

struct TopologicalConfig {
  CountSchedule schedule{{8, 10, 12, 14}, {0.2, 0.1, 0.05}};
  std::vector<std::size_t> n_window;  // empty: every n in the schedule
  std::size_t candidate_budget = 200000;
  // The finest entry may use at most budget / saturation_ratio kept points.
  double saturation_ratio = 8.0;
  std::size_t probe_budget = 4096;
  std::size_t iid_extra = 0;  // extra i.i.d. candidates appended to torus grids
  bool with_fk = true;
  bool with_spanning = false;
};

// Picks the candidate set for one ω. Torus systems: a grid on [0, w)^d whose
// side w is shrunk until the Bowen count at (max n, min eps) stays below
// budget / saturation_ratio, estimated on a small probe grid. Shift systems:
// all support words of length max n - 1 + depth(min eps), with as few
// leading symbols pinned as the budget allows.
CandidateSet make_candidates(const RandomSystem& system, const OmegaPath& path,
                             const TopologicalConfig& config, std::uint64_t seed);

// LS slope over the n window of log(number of branches or words that the
// counts at the smallest eps resolve); the per-path reference for slopes.
double window_oracle(const RandomSystem& system, const OmegaPath& path,
                     const TopologicalConfig& config);

struct OmegaTopResult {
  OmegaPath path;
  CandidateSet candidates;
  CountTables tables;
  EntropyEstimate bowen;
  std::optional<EntropyEstimate> fk;
  double oracle_slope = 0.0;
};

OmegaTopResult estimate_fiber_entropy(const RandomSystem& system, const OmegaPath& path,
                                      const TopologicalConfig& config,
                                      std::uint64_t candidate_seed);

struct IntegratedEntropy {
  double bowen_mean = 0.0;
  double bowen_stderr = 0.0;
  std::optional<double> fk_mean;
  std::optional<double> fk_stderr;
  double oracle = 0.0;  // Σ p_s log m_s under the stationary law
  std::vector<OmegaTopResult> per_omega;
};

// Monte Carlo average over `omega_samples` paths, path j seeded by
// derive_seed(master_seed, streams::omega_path, j).
IntegratedEntropy integrated_entropy(const RandomSystem& system,
                                     const DrivingProcess& process,
                                     const TopologicalConfig& config,
                                     std::size_t omega_samples, std::uint64_t master_seed);

}  // namespace fkent
