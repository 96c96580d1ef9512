#include "fkent/random.hpp"

namespace fkent {

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                          std::uint64_t index) noexcept {
  std::uint64_t s = master;
  std::uint64_t a = splitmix64(s);
  s = a ^ (stream * 0x9E3779B97F4A7C15ULL);
  std::uint64_t b = splitmix64(s);
  s = b ^ (index * 0xC2B2AE3D27D4EB4FULL);
  return splitmix64(s);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound <= 1) {
    return 0;
  }
  std::uint64_t threshold = (0 - bound) % bound;
  while (true) {
    std::uint64_t r = engine_();
    unsigned __int128 m = static_cast<unsigned __int128>(r) * bound;
    if (static_cast<std::uint64_t>(m) >= threshold) {
      return static_cast<std::uint64_t>(m >> 64);
    }
  }
}

std::size_t Rng::categorical(std::span<const double> p) {
  double u = uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    acc += p[i];
    if (u < acc) {
      return i;
    }
  }
  return p.empty() ? 0 : p.size() - 1;
}

}  // namespace fkent
