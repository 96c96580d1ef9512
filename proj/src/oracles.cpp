#include "fkent/oracles.hpp"

#include <cmath>
#include <limits>

#include "fkent/errors.hpp"

namespace fkent {

double OracleValue::count() const {
  if (exact) {
    return static_cast<double>(*exact);
  }
  return std::exp(log_value);
}

std::string to_string(OracleValue::Tag tag) {
  switch (tag) {
    case OracleValue::Tag::branch_count:
      return "branch-count";
    case OracleValue::Tag::word_count:
      return "word-count";
    case OracleValue::Tag::closed_form:
      return "closed-form";
  }
  return "?";
}

namespace {

// Product of factors(path[i]) for i < n, exact while it fits in int64.
OracleValue factor_product(const RandomSystem& system, const OmegaPath& path,
                           std::size_t n, OracleValue::Tag tag) {
  if (path.horizon() < n) {
    throw RangeError("oracle needs path horizon >= n");
  }
  OracleValue v;
  v.tag = tag;
  // Kahan-compensated sum of logs.
  double sum = 0.0;
  double comp = 0.0;
  std::uint64_t product = 1;
  bool fits = true;
  constexpr std::uint64_t cap = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());
  for (std::size_t i = 0; i < n; ++i) {
    auto m = static_cast<std::uint64_t>(system.factor(path[i]));
    double y = std::log(static_cast<double>(m)) - comp;
    double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    if (fits) {
      if (product > cap / m) {
        fits = false;
      } else {
        product *= m;
      }
    }
  }
  v.log_value = sum;
  if (fits) {
    v.exact = product;
  }
  return v;
}

}  // namespace

OracleValue branch_count(const RandomSystem& system, const OmegaPath& path, std::size_t n) {
  if (system.family() == SystemFamily::full_shift) {
    throw UnsupportedError("branch_count applies to piecewise-linear circle families");
  }
  for (int m : system.factors()) {
    if (m < 2) {
      throw UnsupportedError("branch_count needs expansion factors >= 2");
    }
  }
  return factor_product(system, path, n, OracleValue::Tag::branch_count);
}

OracleValue word_count(const RandomSystem& system, const OmegaPath& path, std::size_t n) {
  if (system.family() != SystemFamily::full_shift) {
    throw UnsupportedError("word_count applies to full-shift families");
  }
  return factor_product(system, path, n, OracleValue::Tag::word_count);
}

double path_entropy(const RandomSystem& system, const OmegaPath& path, std::size_t n) {
  if (n == 0) {
    throw UsageError("path_entropy needs n >= 1");
  }
  OracleValue::Tag tag = system.family() == SystemFamily::full_shift
                             ? OracleValue::Tag::word_count
                             : OracleValue::Tag::branch_count;
  return factor_product(system, path, n, tag).log_value / static_cast<double>(n);
}

double expected_entropy(const RandomSystem& system, const std::vector<double>& stationary) {
  if (stationary.size() > system.base_alphabet_size()) {
    throw ConfigError("driving alphabet is larger than the system's parameter list");
  }
  double h = 0.0;
  for (std::size_t s = 0; s < stationary.size(); ++s) {
    h += stationary[s] * std::log(static_cast<double>(system.factors()[s]));
  }
  return h * static_cast<double>(system.is_torus() ? system.dim() : 1);
}

double log_binomial(std::size_t n, std::size_t k) {
  if (k > n) {
    throw UsageError("log_binomial needs 0 <= k <= n");
  }
  auto lg = [](std::size_t v) { return std::lgamma(static_cast<double>(v) + 1.0); };
  return lg(n) - lg(k) - lg(n - k);
}

OracleValue match_count_bound(std::size_t n, std::size_t k) {
  if (k > n) {
    throw UsageError("match_count_bound needs 0 <= k <= n");
  }
  OracleValue v;
  v.tag = OracleValue::Tag::closed_form;
  v.log_value = 2.0 * log_binomial(n, k);
  // Exact value by the multiplicative formula while it stays small.
  if (n <= 60) {
    unsigned __int128 c = 1;
    std::size_t kk = std::min(k, n - k);
    for (std::size_t i = 1; i <= kk; ++i) {
      c = c * (n - kk + i) / i;
    }
    unsigned __int128 sq = c * c;
    if (c <= (static_cast<unsigned __int128>(1) << 62) &&
        sq <= static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max())) {
      v.exact = static_cast<std::uint64_t>(sq);
      v.log_value = std::log(static_cast<double>(sq));
    }
  }
  return v;
}

double stirling_rate(double eps) {
  if (!(eps > 0.0) || !(eps < 1.0)) {
    return 0.0;
  }
  return -(1.0 - eps) * std::log1p(-eps) - eps * std::log(eps);
}

double proof_correction_term(double kappa, std::size_t partition_size) {
  if (!(kappa > 0.0)) {
    return 0.0;
  }
  double k = static_cast<double>(partition_size);
  return 2.0 * kappa * std::log(k) - 4.0 * kappa * std::log(kappa) -
         4.0 * (1.0 - kappa) * std::log1p(-kappa);
}

double choose_kappa(double eps, std::size_t partition_size) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw UsageError("choose_kappa needs eps in (0, 1)");
  }
  if (partition_size < 2) {
    throw UsageError("choose_kappa needs a partition with >= 2 cells");
  }
  for (int j = 1; j <= 60; ++j) {
    double kappa = std::ldexp(eps, -j);
    if (proof_correction_term(kappa, partition_size) < eps / 2.0) {
      return kappa;
    }
  }
  throw UsageError("no admissible kappa on the grid");
}

}  // namespace fkent
