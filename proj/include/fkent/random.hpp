#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace fkent {

// One step of the splitmix64 generator; advances `state`.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// Deterministic seed splitting. Every random stream in the library is keyed
// by (master seed, stream id, index), so results never depend on how work is
// distributed over threads:
//
//   s = master; a = splitmix64(s); s = a ^ (stream * 0x9E3779B97F4A7C15);
//   b = splitmix64(s); s = b ^ (index * 0xC2B2AE3D27D4EB4F); return splitmix64(s)
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index) noexcept;

// Stream identifiers used with derive_seed.
namespace streams {
inline constexpr std::uint64_t omega_path = 1;
inline constexpr std::uint64_t measure = 2;
inline constexpr std::uint64_t base_points = 3;
inline constexpr std::uint64_t candidates = 4;
inline constexpr std::uint64_t selftest = 5;
}  // namespace streams

// mt19937_64 with portable conversions. std::uniform_real_distribution is
// implementation-defined, so doubles are built from the top 53 bits instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform integer on [0, bound). Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound);

  // Index drawn from the probability vector `p` by inverse CDF.
  std::size_t categorical(std::span<const double> p);

 private:
  std::mt19937_64 engine_;
};

}  // namespace fkent
