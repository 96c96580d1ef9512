#include "fkent/entropy_katok.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_map>

#include "fkent/errors.hpp"
#include "fkent/parallel.hpp"
#include "fkent/random.hpp"

namespace fkent {

namespace {

using Bits = std::vector<std::uint64_t>;

std::uint64_t weight_of(const CoverInstance& inst, const std::uint64_t* row, const Bits& mask) {
  std::uint64_t w = 0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    std::uint64_t bits = row[k] & mask[k];
    while (bits != 0) {
      int b = std::countr_zero(bits);
      w += inst.weight[k * 64 + static_cast<std::size_t>(b)];
      bits &= bits - 1;
    }
  }
  return w;
}

Bits full_mask(std::size_t items) {
  Bits m((items + 63) / 64, ~std::uint64_t{0});
  if (items % 64 != 0) {
    m.back() = (std::uint64_t{1} << (items % 64)) - 1;
  }
  return m;
}

void clear_row(Bits& mask, const std::vector<std::uint64_t>& row) {
  for (std::size_t k = 0; k < mask.size(); ++k) {
    mask[k] &= ~row[k];
  }
}

std::uint64_t total_weight(const CoverInstance& inst) {
  return std::accumulate(inst.weight.begin(), inst.weight.end(), std::uint64_t{0});
}

void check_instance(const CoverInstance& inst) {
  if (inst.need > total_weight(inst)) {
    throw UsageError("cover instance needs more weight than it has");
  }
}

}  // namespace

std::vector<std::size_t> greedy_partial_cover(const CoverInstance& inst) {
  check_instance(inst);
  std::vector<std::size_t> chosen;
  if (inst.need == 0) {
    return chosen;
  }
  Bits uncovered = full_mask(inst.size());
  using Item = std::pair<std::uint64_t, std::size_t>;  // (gain, index)
  auto cmp = [](const Item& a, const Item& b) {
    if (a.first != b.first) {
      return a.first < b.first;
    }
    return a.second > b.second;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    heap.emplace(weight_of(inst, inst.rows[i].data(), uncovered), i);
  }
  std::uint64_t covered = 0;
  while (covered < inst.need && !heap.empty()) {
    auto [gain, i] = heap.top();
    heap.pop();
    std::uint64_t fresh = weight_of(inst, inst.rows[i].data(), uncovered);
    if (fresh != gain) {
      heap.emplace(fresh, i);
      continue;
    }
    chosen.push_back(i);
    covered += fresh;
    clear_row(uncovered, inst.rows[i]);
  }
  return chosen;
}

std::size_t exact_min_partial_cover(const CoverInstance& inst, std::uint64_t max_nodes) {
  check_instance(inst);
  if (inst.need == 0) {
    return 0;
  }
  std::size_t D = inst.size();
  if (D > 4096) {
    throw ResourceError("exact partial cover limited to 4096 items");
  }
  std::size_t upper = greedy_partial_cover(inst).size();

  // Drop balls contained in another ball (equal rows keep the lowest index).
  std::vector<std::size_t> centers;
  for (std::size_t i = 0; i < D; ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < D && !dominated; ++j) {
      if (j == i) {
        continue;
      }
      bool subset = true;
      bool equal = true;
      for (std::size_t k = 0; k < inst.rows[i].size(); ++k) {
        std::uint64_t a = inst.rows[i][k];
        std::uint64_t b = inst.rows[j][k];
        if ((a & ~b) != 0) {
          subset = false;
          break;
        }
        equal = equal && a == b;
      }
      dominated = subset && (!equal || j < i);
    }
    if (!dominated) {
      centers.push_back(i);
    }
  }
  Bits all = full_mask(D);

  std::uint64_t nodes = 0;
  // Can `left` more balls from `pool` cover the missing weight? Subsets are
  // enumerated once each: after taking pool[k] only later entries remain.
  auto search = [&](auto&& self, std::size_t left, const std::vector<std::size_t>& pool,
                    const Bits& uncovered, std::uint64_t covered) -> bool {
    if (covered >= inst.need) {
      return true;
    }
    if (left == 0 || pool.empty()) {
      return false;
    }
    if (++nodes > max_nodes) {
      throw ResourceError("exact partial cover exceeded its node budget");
    }
    std::vector<std::pair<std::uint64_t, std::size_t>> g;
    g.reserve(pool.size());
    for (auto c : pool) {
      std::uint64_t w = weight_of(inst, inst.rows[c].data(), uncovered);
      if (w > 0) {
        g.emplace_back(w, c);
      }
    }
    std::stable_sort(g.begin(), g.end(),
                     [](const auto& x, const auto& y) { return x.first > y.first; });
    std::vector<std::uint64_t> prefix(g.size() + 1, 0);
    for (std::size_t k = 0; k < g.size(); ++k) {
      prefix[k + 1] = prefix[k] + g[k].first;
    }
    for (std::size_t k = 0; k < g.size(); ++k) {
      // Best case for subsets whose first pick is g[k].
      std::size_t end = std::min(g.size(), k + left);
      if (covered + prefix[end] - prefix[k] < inst.need) {
        return false;
      }
      std::vector<std::size_t> rest;
      rest.reserve(g.size() - k - 1);
      for (std::size_t r = k + 1; r < g.size(); ++r) {
        rest.push_back(g[r].second);
      }
      Bits next = uncovered;
      clear_row(next, inst.rows[g[k].second]);
      if (self(self, left - 1, rest, next, covered + g[k].first)) {
        return true;
      }
    }
    return false;
  };

  // Smallest k the weight bound allows.
  std::vector<std::uint64_t> w0;
  for (auto c : centers) {
    w0.push_back(weight_of(inst, inst.rows[c].data(), all));
  }
  std::sort(w0.begin(), w0.end(), std::greater<>());
  std::size_t lower = 0;
  std::uint64_t acc = 0;
  while (acc < inst.need && lower < w0.size()) {
    acc += w0[lower++];
  }
  for (std::size_t k = lower; k < upper; ++k) {
    if (search(search, k, centers, all, 0)) {
      return k;
    }
  }
  return upper;
}

std::size_t brute_force_min_partial_cover(const CoverInstance& inst) {
  check_instance(inst);
  std::size_t D = inst.size();
  if (D > 24) {
    throw ResourceError("brute-force partial cover limited to 24 items");
  }
  if (inst.need == 0) {
    return 0;
  }
  std::vector<std::uint32_t> rows(D);
  for (std::size_t i = 0; i < D; ++i) {
    rows[i] = static_cast<std::uint32_t>(inst.rows[i][0]);
  }
  std::size_t best = D + 1;
  for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << D); ++mask) {
    auto size = static_cast<std::size_t>(std::popcount(mask));
    if (size >= best) {
      continue;
    }
    std::uint32_t cover = 0;
    for (std::size_t i = 0; i < D; ++i) {
      if ((mask >> i) & 1u) {
        cover |= rows[i];
      }
    }
    std::uint64_t w = 0;
    for (std::size_t i = 0; i < D; ++i) {
      if ((cover >> i) & 1u) {
        w += inst.weight[i];
      }
    }
    if (w >= inst.need) {
      best = size;
    }
  }
  return best;
}

CoverInstance katok_instance(const EmpiricalMeasure& measure, const OmegaPath& path,
                             const RandomSystem& system, std::size_t n, double eps,
                             double mass_threshold, DynamicalMetric kind,
                             std::vector<std::size_t>* keys, std::size_t max_items) {
  if (!(eps > 0.0)) {
    throw UsageError("katok count needs eps > 0");
  }
  if (!(mass_threshold > 0.0 && mass_threshold <= 1.0)) {
    throw UsageError("mass threshold must lie in (0, 1]");
  }
  if (measure.size() == 0) {
    throw UsageError("katok count needs a nonempty sample");
  }
  if (n == 0) {
    throw UsageError("katok count needs n >= 1");
  }
  std::size_t M = measure.size();

  CoverInstance inst;
  std::vector<std::size_t> first;
  PointCloud items = PointCloud::torus(1);
  if (system.is_torus()) {
    items = measure.samples;
    first.resize(M);
    std::iota(first.begin(), first.end(), std::size_t{0});
    inst.weight.assign(M, 1);
  } else {
    std::size_t L = n - 1 + std::max<std::size_t>(word_depth(system.metric(), eps), 1);
    if (measure.samples.word_length() < L) {
      throw RangeError("sample words shorter than the " + std::to_string(L) +
                       " symbols that fix ball membership");
    }
    items = PointCloud::words(L);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t s = 0; s < M; ++s) {
      auto w = measure.samples.word(s).first(L);
      std::string key(w.begin(), w.end());
      auto [it, fresh] = index.emplace(std::move(key), first.size());
      if (fresh) {
        first.push_back(s);
        inst.weight.push_back(1);
        items.push_word(w);
      } else {
        ++inst.weight[it->second];
      }
    }
  }
  std::size_t D = first.size();
  if (D > max_items) {
    throw ResourceError("katok cover has " + std::to_string(D) + " distinct items, limit " +
                        std::to_string(max_items));
  }

  OrbitBank bank = OrbitBank::build(system, path, items, n);
  std::size_t words = (D + 63) / 64;
  inst.rows.assign(D, std::vector<std::uint64_t>(words, 0));
  std::size_t target = fk_target(n, eps);
  parallel_for(D, [&](std::size_t i) {
    OrbitView c = bank.view(i);
    auto& row = inst.rows[i];
    for (std::size_t j = 0; j < D; ++j) {
      bool in = j == i || (kind == DynamicalMetric::bowen
                               ? bowen_less(c, bank.view(j), eps)
                               : match_reaches(c, bank.view(j), eps, target));
      if (in) {
        row[j >> 6] |= std::uint64_t{1} << (j & 63);
      }
    }
  });

  double need = std::ceil(mass_threshold * static_cast<double>(M) - 1e-9);
  inst.need = static_cast<std::uint64_t>(std::clamp(need, 1.0, static_cast<double>(M)));
  if (keys != nullptr) {
    *keys = std::move(first);
  }
  return inst;
}

namespace {

std::uint64_t covered_weight(const CoverInstance& inst, const std::vector<std::size_t>& centers) {
  Bits cover(inst.rows.empty() ? 0 : inst.rows[0].size(), 0);
  for (auto c : centers) {
    for (std::size_t k = 0; k < cover.size(); ++k) {
      cover[k] |= inst.rows[c][k];
    }
  }
  return weight_of(inst, cover.data(), full_mask(inst.size()));
}

}  // namespace

KatokCount katok_spanning_count(const EmpiricalMeasure& measure, const OmegaPath& path,
                                const RandomSystem& system, std::size_t n, double eps,
                                double mass_threshold, DynamicalMetric kind) {
  std::vector<std::size_t> keys;
  CoverInstance inst =
      katok_instance(measure, path, system, n, eps, mass_threshold, kind, &keys);
  auto chosen = greedy_partial_cover(inst);
  double M = static_cast<double>(measure.size());

  KatokCount k;
  k.n = n;
  k.eps = eps;
  k.mass_threshold = mass_threshold;
  k.kind = kind;

  if (kind == DynamicalMetric::fk) {
    CoverInstance bowen =
        katok_instance(measure, path, system, n, eps, mass_threshold, DynamicalMetric::bowen);
    auto bowen_chosen = greedy_partial_cover(bowen);
    if (bowen_chosen.size() < chosen.size()) {
      chosen = std::move(bowen_chosen);
      k.from_bowen = true;
    }
  }
  k.count = chosen.size();
  k.covered_mass = static_cast<double>(covered_weight(inst, chosen)) / M;
  for (auto c : chosen) {
    k.centers.push_back(keys[c]);
  }
  return k;
}

std::vector<double> isotonic_nondecreasing(const std::vector<double>& y) {
  std::vector<double> value;
  std::vector<std::size_t> width;
  for (double v : y) {
    value.push_back(v);
    width.push_back(1);
    while (value.size() > 1 && value[value.size() - 2] > value.back()) {
      double w1 = static_cast<double>(width[width.size() - 2]);
      double w2 = static_cast<double>(width.back());
      double merged = (value[value.size() - 2] * w1 + value.back() * w2) / (w1 + w2);
      std::size_t w = width[width.size() - 2] + width.back();
      value.pop_back();
      width.pop_back();
      value.back() = merged;
      width.back() = w;
    }
  }
  std::vector<double> out;
  for (std::size_t b = 0; b < value.size(); ++b) {
    out.insert(out.end(), width[b], value[b]);
  }
  return out;
}

namespace {

CountTable as_table(const std::vector<KatokCount>& counts, DynamicalMetric kind,
                    std::uint64_t seed) {
  CountTable t;
  t.metric = kind;
  t.omega_seed = seed;
  for (const auto& c : counts) {
    t.entries.push_back(CountEntry{c.n, c.eps, c.count, std::nullopt});
  }
  return t;
}

void check_monotone(const std::vector<KatokCount>& counts, const std::vector<std::size_t>& ns,
                    std::size_t n_eps, std::vector<std::string>& warnings) {
  for (std::size_t e = 0; e < n_eps; ++e) {
    std::vector<double> y;
    for (std::size_t i = 0; i < ns.size(); ++i) {
      y.push_back(static_cast<double>(counts[i * n_eps + e].count));
    }
    auto fit = isotonic_nondecreasing(y);
    double worst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      worst = std::max(worst, std::fabs(fit[i] - y[i]));
    }
    if (worst > 0.0) {
      std::ostringstream os;
      os << to_string(counts.front().kind) << " counts at eps=" << counts[e].eps
         << (worst <= 1.0 ? " jitter in n by <= 1 count (isotonic fit applied)"
                          : " decrease in n by more than 1 count");
      warnings.push_back(os.str());
    }
  }
}

EntropyEstimate average(const std::vector<EntropyEstimate>& per) {
  EntropyEstimate out = per.front();
  for (std::size_t e = 0; e < out.slopes.size(); ++e) {
    double s = 0.0;
    double r = 0.0;
    for (const auto& p : per) {
      s += p.slopes[e];
      r += p.residuals[e];
    }
    out.slopes[e] = s / static_cast<double>(per.size());
    out.residuals[e] = r / static_cast<double>(per.size());
  }
  auto smallest = std::min_element(out.eps_values.begin(), out.eps_values.end()) -
                  out.eps_values.begin();
  out.value = out.slopes[static_cast<std::size_t>(smallest)];
  auto [lo, hi] = std::minmax_element(out.slopes.begin(), out.slopes.end());
  out.spread = *hi - *lo;
  return out;
}

}  // namespace

KatokEstimate katok_entropy(const RandomSystem& system, const DrivingProcess& process,
                            const KatokConfig& config, std::uint64_t master_seed) {
  if (config.n_values.size() < 3) {
    throw UsageError("katok entropy needs >= 3 n values");
  }
  if (config.eps_values.empty() || config.M == 0 || config.omega_samples == 0) {
    throw UsageError("katok entropy needs eps values, M >= 1 and >= 1 omega sample");
  }
  if (config.bowen_delta && !(*config.bowen_delta >= 0.0 && *config.bowen_delta < 1.0)) {
    throw UsageError("bowen_delta must lie in [0, 1)");
  }
  for (double e : config.eps_values) {
    if (!(e > 0.0 && e < 1.0)) {
      throw UsageError("katok eps values must lie in (0, 1)");
    }
  }
  std::size_t n_max = *std::max_element(config.n_values.begin(), config.n_values.end());
  std::size_t depth = 1;
  if (!system.is_torus()) {
    for (double e : config.eps_values) {
      depth = std::max(depth, word_depth(system.metric(), e));
    }
  }
  std::size_t word_length = n_max - 1 + depth;
  std::size_t n_eps = config.eps_values.size();
  std::size_t total = config.n_values.size() * n_eps;

  KatokEstimate out;
  out.per_omega.resize(config.omega_samples);
  for (std::size_t j = 0; j < config.omega_samples; ++j) {
    OmegaPath path = sample_path(process, word_length + 1,
                                 derive_seed(master_seed, streams::omega_path, j));
    EmpiricalMeasure measure =
        sample_measure(system, path, config.M, derive_seed(master_seed, streams::measure, j),
                       system.is_torus() ? 0 : word_length);
    auto& r = out.per_omega[j];
    r.omega_seed = path.seed();
    if (config.with_bowen) {
      r.bowen.resize(total);
    }
    if (config.with_fk) {
      r.fk.resize(total);
    }
    for (std::size_t e = 0; e < total; ++e) {
      std::size_t n = config.n_values[e / n_eps];
      double eps = config.eps_values[e % n_eps];
      if (config.with_bowen) {
        double threshold = 1.0 - config.bowen_delta.value_or(eps);
        r.bowen[e] = katok_spanning_count(measure, path, system, n, eps, threshold,
                                          DynamicalMetric::bowen);
      }
      if (config.with_fk) {
        r.fk[e] =
            katok_spanning_count(measure, path, system, n, eps, 1.0 - eps, DynamicalMetric::fk);
      }
    }
  }

  std::vector<EntropyEstimate> bowen;
  std::vector<EntropyEstimate> fk;
  for (const auto& r : out.per_omega) {
    if (config.with_bowen) {
      check_monotone(r.bowen, config.n_values, n_eps, out.warnings);
      bowen.push_back(entropy_from_counts(as_table(r.bowen, DynamicalMetric::bowen, r.omega_seed),
                                          config.n_values));
    }
    if (config.with_fk) {
      check_monotone(r.fk, config.n_values, n_eps, out.warnings);
      fk.push_back(entropy_from_counts(as_table(r.fk, DynamicalMetric::fk, r.omega_seed),
                                       config.n_values));
    }
  }
  if (!bowen.empty()) {
    out.bowen = average(bowen);
  }
  if (!fk.empty()) {
    out.fk = average(fk);
  }
  return out;
}

}  // namespace fkent
