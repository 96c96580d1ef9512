#pragma once

// Random dynamical systems over a finite-alphabet driving process: phase
// points, fiber metrics, driving paths, fiber maps and orbit generation.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fkent {

using BaseSymbol = std::uint32_t;

enum class FiberMetricKind {
  torus_max,  // max over coordinates of the circle distance; diameter 1/2
  discrete,   // 0/1 on the first symbol of a word; diameter 1
  cylinder,   // 2^-(first disagreement index); diameter 1
};

std::string to_string(FiberMetricKind kind);
FiberMetricKind parse_fiber_metric(const std::string& name);

// Largest value the fiber metric can take.
double metric_diameter(FiberMetricKind kind) noexcept;

////////////////////////////////////////////////////////////////////////////////
// Phase points
////////////////////////////////////////////////////////////////////////////////

struct TorusPoint {
  std::vector<double> coords;
  bool operator==(const TorusPoint&) const = default;
};

struct SymbolWord {
  std::vector<std::uint8_t> symbols;
  bool operator==(const SymbolWord&) const = default;
};

using PhasePoint = std::variant<TorusPoint, SymbolWord>;

inline PhasePoint torus_point(std::initializer_list<double> coords) {
  return TorusPoint{std::vector<double>(coords)};
}
inline PhasePoint torus_point(double x) { return TorusPoint{{x}}; }
PhasePoint symbol_word(const std::string& letters);  // "aba" -> {0,1,0}

// Reduces v into [0, 1); results within 1e-15 of 1 snap to 0.
inline double reduce_mod1(double v) noexcept {
  double r = v - std::floor(v);
  if (r >= 1.0 - 1e-15) {
    r = 0.0;
  }
  return r == 0.0 ? 0.0 : r;  // no negative zero
}

inline double circle_distance(double a, double b) noexcept {
  double t = std::fabs(a - b);
  return t < 1.0 - t ? t : 1.0 - t;
}

// Distance between two finite words under the cylinder metric. A word that
// ends is treated as carrying a terminator symbol, so a proper prefix sits at
// distance 2^-(prefix length) from its extension.
double cylinder_distance(std::span<const std::uint8_t> u,
                         std::span<const std::uint8_t> v) noexcept;

double fiber_distance(FiberMetricKind kind, const PhasePoint& a, const PhasePoint& b);

////////////////////////////////////////////////////////////////////////////////
// Driving process and sampled paths
////////////////////////////////////////////////////////////////////////////////

class DrivingProcess {
 public:
  enum class Law { bernoulli, markov };

  // Throws ConfigError unless p is a probability vector (rows sum to 1
  // within 1e-12, entries nonnegative).
  static DrivingProcess bernoulli(std::vector<double> p);
  static DrivingProcess markov(std::vector<std::vector<double>> transition,
                               std::vector<double> initial);

  Law law() const noexcept { return law_; }
  std::size_t alphabet_size() const noexcept { return initial_.size(); }

  // Bernoulli: the i.i.d. law. Markov: the initial distribution.
  const std::vector<double>& initial() const noexcept { return initial_; }
  const std::vector<std::vector<double>>& transition() const noexcept {
    return transition_;
  }

  // Stationary distribution (the law itself for Bernoulli; power iteration
  // for Markov chains).
  std::vector<double> stationary() const;

 private:
  DrivingProcess() = default;
  Law law_ = Law::bernoulli;
  std::vector<double> initial_;
  std::vector<std::vector<double>> transition_;
};

// A finite window ω_offset, ω_offset+1, ... of the driving sequence. The
// base shift acts by advancing the offset; the symbols are shared.
class OmegaPath {
 public:
  OmegaPath(std::vector<BaseSymbol> symbols, std::uint64_t seed);

  std::size_t horizon() const noexcept { return symbols_->size() - offset_; }
  std::size_t stored_length() const noexcept { return symbols_->size(); }
  std::size_t offset() const noexcept { return offset_; }
  std::uint64_t seed() const noexcept { return seed_; }

  // Symbol ω_i of the (shifted) path; throws RangeError past the horizon.
  BaseSymbol at(std::size_t i) const;
  BaseSymbol operator[](std::size_t i) const noexcept {
    return (*symbols_)[offset_ + i];
  }
  std::span<const BaseSymbol> symbols() const noexcept {
    return std::span<const BaseSymbol>(*symbols_).subspan(offset_);
  }

  bool operator==(const OmegaPath& other) const;

 private:
  friend OmegaPath shift_path(const OmegaPath&, std::size_t);
  std::shared_ptr<const std::vector<BaseSymbol>> symbols_;
  std::uint64_t seed_ = 0;
  std::size_t offset_ = 0;
};

OmegaPath sample_path(const DrivingProcess& process, std::size_t length,
                      std::uint64_t seed);

// ϑ^i ω. Throws RangeError if the offset would pass the stored length.
OmegaPath shift_path(const OmegaPath& path, std::size_t i);

////////////////////////////////////////////////////////////////////////////////
// Random systems
////////////////////////////////////////////////////////////////////////////////

enum class SystemFamily {
  expanding,   // x -> m(ω) x mod 1, coordinate-wise on the d-torus
  tent,        // m(ω)-lap zigzag map, continuous on the circle
  full_shift,  // left shift; μ_ω uniform on words with alphabet k(ω_i) at i
};

enum class ReferenceMeasure { lebesgue, uniform_bernoulli };

std::string to_string(SystemFamily family);
SystemFamily parse_family(const std::string& name);

class RandomSystem {
 public:
  // factors[s] is the expansion factor used when the driving symbol is s.
  static RandomSystem expanding(std::vector<int> factors, std::size_t dim = 1);
  static RandomSystem tent(std::vector<int> slopes, std::size_t dim = 1);
  static RandomSystem full_shift(std::vector<int> alphabet_sizes,
                                 FiberMetricKind metric = FiberMetricKind::cylinder);

  SystemFamily family() const noexcept { return family_; }
  FiberMetricKind metric() const noexcept { return metric_; }
  ReferenceMeasure reference_measure() const noexcept {
    return is_torus() ? ReferenceMeasure::lebesgue
                      : ReferenceMeasure::uniform_bernoulli;
  }
  bool is_torus() const noexcept { return family_ != SystemFamily::full_shift; }
  std::size_t dim() const noexcept { return dim_; }
  double diameter() const noexcept { return metric_diameter(metric_); }

  // Number of base symbols the system has parameters for.
  std::size_t base_alphabet_size() const noexcept { return factors_.size(); }
  const std::vector<int>& factors() const noexcept { return factors_; }
  int factor(BaseSymbol s) const;
  // Shift systems: common word alphabet {0..k-1}, k = max k(ω).
  int word_alphabet() const noexcept { return word_alphabet_; }

  // T_ω on one circle coordinate, where ω_0 = s.
  double map_coordinate(BaseSymbol s, double x) const noexcept {
    int m = factors_[s];
    if (family_ == SystemFamily::expanding) {
      return reduce_mod1(m * x);
    }
    double t = m * x;
    double lap = std::floor(t);
    double f = t - lap;
    return reduce_mod1((static_cast<long long>(lap) % 2 == 0) ? f : 1.0 - f);
  }

  PhasePoint apply(BaseSymbol s, const PhasePoint& x) const;

  // Throws UsageError if x is not a point of this system's phase space.
  void validate_point(const PhasePoint& x) const;

 private:
  RandomSystem() = default;
  SystemFamily family_ = SystemFamily::expanding;
  FiberMetricKind metric_ = FiberMetricKind::torus_max;
  std::size_t dim_ = 1;
  std::vector<int> factors_;
  int word_alphabet_ = 0;
};

////////////////////////////////////////////////////////////////////////////////
// Orbits
////////////////////////////////////////////////////////////////////////////////

// Non-owning view of an orbit x, T_ω x, ..., T_ω^{n-1} x. Torus orbits are
// n*dim coordinates; shift orbits are a single word whose i-th point is the
// suffix starting at i.
struct OrbitView {
  FiberMetricKind kind = FiberMetricKind::torus_max;
  std::size_t n = 0;
  std::size_t dim = 1;
  const double* coords = nullptr;
  const std::uint8_t* word = nullptr;
  std::size_t word_length = 0;

  OrbitView prefix(std::size_t m) const noexcept {
    OrbitView v = *this;
    v.n = m;
    return v;
  }
};

inline double point_distance(const OrbitView& a, std::size_t i,
                             const OrbitView& b, std::size_t j) noexcept {
  switch (a.kind) {
    case FiberMetricKind::torus_max: {
      const double* p = a.coords + i * a.dim;
      const double* q = b.coords + j * b.dim;
      double d = circle_distance(p[0], q[0]);
      for (std::size_t k = 1; k < a.dim; ++k) {
        double dk = circle_distance(p[k], q[k]);
        d = dk > d ? dk : d;
      }
      return d;
    }
    case FiberMetricKind::discrete:
      return a.word[i] == b.word[j] ? 0.0 : 1.0;
    case FiberMetricKind::cylinder:
      return cylinder_distance({a.word + i, a.word_length - i},
                               {b.word + j, b.word_length - j});
  }
  return 0.0;
}

class OrbitSegment {
 public:
  FiberMetricKind metric() const noexcept { return kind_; }
  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return dim_; }
  const OmegaPath& path() const noexcept { return path_; }

  PhasePoint point(std::size_t i) const;
  OrbitView view() const noexcept;

 private:
  friend OrbitSegment orbit(const class RandomSystem&, const OmegaPath&,
                            const PhasePoint&, std::size_t);
  explicit OrbitSegment(OmegaPath path) : path_(std::move(path)) {}

  FiberMetricKind kind_ = FiberMetricKind::torus_max;
  std::size_t n_ = 0;
  std::size_t dim_ = 1;
  std::vector<double> coords_;
  std::vector<std::uint8_t> word_;
  OmegaPath path_;
};

// [x, T_ω x, ..., T_ω^{n-1} x]. Needs path horizon >= n-1 (RangeError) and,
// for shift systems, a word of length >= n.
OrbitSegment orbit(const RandomSystem& system, const OmegaPath& path,
                   const PhasePoint& x, std::size_t n);

////////////////////////////////////////////////////////////////////////////////
// Flat point storage and orbit banks for hot loops
////////////////////////////////////////////////////////////////////////////////

// A flat array of phase points of one kind: torus points of a common
// dimension, or words of a common length.
class PointCloud {
 public:
  static PointCloud torus(std::size_t dim) { return PointCloud(true, dim, 0); }
  static PointCloud words(std::size_t length) { return PointCloud(false, 1, length); }

  bool is_torus() const noexcept { return torus_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t word_length() const noexcept { return word_length_; }
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }

  void reserve(std::size_t count);
  void push_back(const PhasePoint& p);
  void push_torus(std::span<const double> coords);
  void push_word(std::span<const std::uint8_t> symbols);

  PhasePoint point(std::size_t i) const;
  std::span<const double> coords(std::size_t i) const noexcept {
    return {coords_.data() + i * dim_, dim_};
  }
  std::span<const std::uint8_t> word(std::size_t i) const noexcept {
    return {symbols_.data() + i * word_length_, word_length_};
  }

 private:
  PointCloud(bool torus, std::size_t dim, std::size_t word_length)
      : torus_(torus), dim_(dim), word_length_(word_length) {}
  bool torus_;
  std::size_t dim_;
  std::size_t word_length_;
  std::size_t size_ = 0;
  std::vector<double> coords_;
  std::vector<std::uint8_t> symbols_;
};

// Orbits of length n of every point in a cloud, stored contiguously.
class OrbitBank {
 public:
  static OrbitBank build(const RandomSystem& system, const OmegaPath& path,
                         const PointCloud& points, std::size_t n);

  std::size_t size() const noexcept { return count_; }
  std::size_t length() const noexcept { return n_; }

  OrbitView view(std::size_t i) const noexcept { return view(i, n_); }
  OrbitView view(std::size_t i, std::size_t n) const noexcept;

 private:
  FiberMetricKind kind_ = FiberMetricKind::torus_max;
  std::size_t count_ = 0;
  std::size_t n_ = 0;
  std::size_t dim_ = 1;
  std::size_t word_length_ = 0;
  std::vector<double> coords_;
  std::vector<std::uint8_t> words_;
};

}  // namespace fkent
