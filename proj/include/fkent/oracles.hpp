#pragma once

// Exact reference values for the built-in systems, and the binomial counting
// bounds behind the entropy comparisons.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>

#include "fkent/rds.hpp"

namespace fkent {

struct OracleValue {
  enum class Tag { branch_count, word_count, closed_form };

  Tag tag = Tag::closed_form;
  double log_value = 0.0;               // natural log of the count, or the value
  std::optional<std::uint64_t> exact;   // set when the count fits in int64

  // Exact count when available, else exp(log_value).
  double count() const;
};

std::string to_string(OracleValue::Tag tag);

// Number of full monotone branches of T_ω^n for the expanding and tent
// families: ∏_{i<n} m(ω_i). UnsupportedError for other families or m < 2.
OracleValue branch_count(const RandomSystem& system, const OmegaPath& path, std::size_t n);

// Number of distinct n-itineraries of a random full shift: ∏_{i<n} k(ω_i).
OracleValue word_count(const RandomSystem& system, const OmegaPath& path, std::size_t n);

// Birkhoff average (1/n) log of the branch or word count along the path.
double path_entropy(const RandomSystem& system, const OmegaPath& path, std::size_t n);

// Σ_s p_s log m_s under the driving law's stationary distribution.
double expected_entropy(const RandomSystem& system, const std::vector<double>& stationary);

// log C(n, k) via lgamma; UsageError unless 0 <= k <= n.
double log_binomial(std::size_t n, std::size_t k);

// Number of order-preserving partial bijections of size k on {0..n-1},
// C(n,k)^2, returned in log space.
OracleValue match_count_bound(std::size_t n, std::size_t k);

// -(1-ε) log(1-ε) - ε log ε in nats; 0 at the endpoints.
double stirling_rate(double eps);

// 2κ log k - 4κ log κ - 4(1-κ) log(1-κ).
double proof_correction_term(double kappa, std::size_t partition_size);

// Largest κ on the grid eps * 2^-j (j = 1..60) with
// proof_correction_term(κ, k) < eps/2. UsageError unless eps in (0,1), k >= 2.
double choose_kappa(double eps, std::size_t partition_size);

}  // namespace fkent
