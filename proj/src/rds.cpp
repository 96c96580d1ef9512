#include "fkent/rds.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fkent/errors.hpp"
#include "fkent/parallel.hpp"
#include "fkent/random.hpp"

namespace fkent {

std::string to_string(FiberMetricKind kind) {
  switch (kind) {
    case FiberMetricKind::torus_max:
      return "torus_max";
    case FiberMetricKind::discrete:
      return "discrete";
    case FiberMetricKind::cylinder:
      return "cylinder";
  }
  return "?";
}

FiberMetricKind parse_fiber_metric(const std::string& name) {
  if (name == "torus_max" || name == "torus") {
    return FiberMetricKind::torus_max;
  }
  if (name == "discrete") {
    return FiberMetricKind::discrete;
  }
  if (name == "cylinder") {
    return FiberMetricKind::cylinder;
  }
  throw ConfigError("unknown fiber metric '" + name + "'");
}

double metric_diameter(FiberMetricKind kind) noexcept {
  return kind == FiberMetricKind::torus_max ? 0.5 : 1.0;
}

PhasePoint symbol_word(const std::string& letters) {
  SymbolWord w;
  w.symbols.reserve(letters.size());
  for (char c : letters) {
    if (c >= 'a' && c <= 'z') {
      w.symbols.push_back(static_cast<std::uint8_t>(c - 'a'));
    } else if (c >= '0' && c <= '9') {
      w.symbols.push_back(static_cast<std::uint8_t>(c - '0'));
    } else {
      throw UsageError(std::string("bad letter '") + c + "' in word");
    }
  }
  return w;
}

double cylinder_distance(std::span<const std::uint8_t> u,
                         std::span<const std::uint8_t> v) noexcept {
  std::size_t common = std::min(u.size(), v.size());
  for (std::size_t j = 0; j < common; ++j) {
    if (u[j] != v[j]) {
      return std::ldexp(1.0, -static_cast<int>(j));
    }
  }
  if (u.size() == v.size()) {
    return 0.0;
  }
  return std::ldexp(1.0, -static_cast<int>(common));
}

double fiber_distance(FiberMetricKind kind, const PhasePoint& a, const PhasePoint& b) {
  if (kind == FiberMetricKind::torus_max) {
    const auto* p = std::get_if<TorusPoint>(&a);
    const auto* q = std::get_if<TorusPoint>(&b);
    if (p == nullptr || q == nullptr || p->coords.size() != q->coords.size()) {
      throw UsageError("torus metric needs torus points of equal dimension");
    }
    double d = 0.0;
    for (std::size_t k = 0; k < p->coords.size(); ++k) {
      d = std::max(d, circle_distance(p->coords[k], q->coords[k]));
    }
    return d;
  }
  const auto* u = std::get_if<SymbolWord>(&a);
  const auto* v = std::get_if<SymbolWord>(&b);
  if (u == nullptr || v == nullptr) {
    throw UsageError("symbolic metric needs word points");
  }
  if (kind == FiberMetricKind::discrete) {
    if (u->symbols.empty() || v->symbols.empty()) {
      throw UsageError("discrete metric needs nonempty words");
    }
    return u->symbols[0] == v->symbols[0] ? 0.0 : 1.0;
  }
  return cylinder_distance(u->symbols, v->symbols);
}

////////////////////////////////////////////////////////////////////////////////
// DrivingProcess
////////////////////////////////////////////////////////////////////////////////

namespace {

void check_probability_vector(const std::vector<double>& p, const std::string& what) {
  if (p.empty()) {
    throw ConfigError(what + " is empty");
  }
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw ConfigError(what + " has a negative or non-finite entry");
    }
    sum += v;
  }
  if (std::fabs(sum - 1.0) > 1e-12) {
    throw ConfigError(what + " does not sum to 1 (sum = " + std::to_string(sum) + ")");
  }
}

}  // namespace

DrivingProcess DrivingProcess::bernoulli(std::vector<double> p) {
  check_probability_vector(p, "Bernoulli probability vector");
  DrivingProcess d;
  d.law_ = Law::bernoulli;
  d.initial_ = std::move(p);
  return d;
}

DrivingProcess DrivingProcess::markov(std::vector<std::vector<double>> transition,
                                      std::vector<double> initial) {
  check_probability_vector(initial, "Markov initial distribution");
  if (transition.size() != initial.size()) {
    throw ConfigError("Markov matrix must be square with the initial law's size");
  }
  for (std::size_t r = 0; r < transition.size(); ++r) {
    if (transition[r].size() != initial.size()) {
      throw ConfigError("Markov matrix row " + std::to_string(r) + " has wrong length");
    }
    check_probability_vector(transition[r], "Markov matrix row " + std::to_string(r));
  }
  DrivingProcess d;
  d.law_ = Law::markov;
  d.initial_ = std::move(initial);
  d.transition_ = std::move(transition);
  return d;
}

std::vector<double> DrivingProcess::stationary() const {
  if (law_ == Law::bernoulli) {
    return initial_;
  }
  std::size_t s = initial_.size();
  std::vector<double> pi(s, 1.0 / static_cast<double>(s));
  // Lazy chain (I + P)/2 converges for every irreducible chain.
  for (int iter = 0; iter < 100000; ++iter) {
    std::vector<double> next(s, 0.0);
    for (std::size_t a = 0; a < s; ++a) {
      next[a] += 0.5 * pi[a];
      for (std::size_t b = 0; b < s; ++b) {
        next[b] += 0.5 * pi[a] * transition_[a][b];
      }
    }
    double change = 0.0;
    for (std::size_t a = 0; a < s; ++a) {
      change += std::fabs(next[a] - pi[a]);
    }
    pi = std::move(next);
    if (change < 1e-15) {
      break;
    }
  }
  return pi;
}

////////////////////////////////////////////////////////////////////////////////
// OmegaPath
////////////////////////////////////////////////////////////////////////////////

OmegaPath::OmegaPath(std::vector<BaseSymbol> symbols, std::uint64_t seed)
    : symbols_(std::make_shared<const std::vector<BaseSymbol>>(std::move(symbols))),
      seed_(seed) {}

BaseSymbol OmegaPath::at(std::size_t i) const {
  if (i >= horizon()) {
    throw RangeError("omega path index " + std::to_string(i) + " beyond horizon " +
                     std::to_string(horizon()));
  }
  return (*this)[i];
}

bool OmegaPath::operator==(const OmegaPath& other) const {
  return seed_ == other.seed_ && offset_ == other.offset_ &&
         *symbols_ == *other.symbols_;
}

OmegaPath sample_path(const DrivingProcess& process, std::size_t length,
                      std::uint64_t seed) {
  if (length == 0) {
    throw UsageError("sample_path needs length >= 1");
  }
  Rng rng(seed);
  std::vector<BaseSymbol> symbols(length);
  if (process.law() == DrivingProcess::Law::bernoulli) {
    for (auto& s : symbols) {
      s = static_cast<BaseSymbol>(rng.categorical(process.initial()));
    }
  } else {
    symbols[0] = static_cast<BaseSymbol>(rng.categorical(process.initial()));
    for (std::size_t i = 1; i < length; ++i) {
      symbols[i] = static_cast<BaseSymbol>(
          rng.categorical(process.transition()[symbols[i - 1]]));
    }
  }
  return OmegaPath(std::move(symbols), seed);
}

OmegaPath shift_path(const OmegaPath& path, std::size_t i) {
  if (i > path.horizon()) {
    throw RangeError("shift by " + std::to_string(i) + " exceeds horizon " +
                     std::to_string(path.horizon()));
  }
  OmegaPath shifted = path;
  shifted.offset_ += i;
  return shifted;
}

////////////////////////////////////////////////////////////////////////////////
// RandomSystem
////////////////////////////////////////////////////////////////////////////////

std::string to_string(SystemFamily family) {
  switch (family) {
    case SystemFamily::expanding:
      return "expanding";
    case SystemFamily::tent:
      return "tent";
    case SystemFamily::full_shift:
      return "full_shift";
  }
  return "?";
}

SystemFamily parse_family(const std::string& name) {
  if (name == "expanding") {
    return SystemFamily::expanding;
  }
  if (name == "tent") {
    return SystemFamily::tent;
  }
  if (name == "full_shift" || name == "shift") {
    return SystemFamily::full_shift;
  }
  throw ConfigError("unknown system family '" + name + "'");
}

RandomSystem RandomSystem::expanding(std::vector<int> factors, std::size_t dim) {
  if (factors.empty() || dim == 0) {
    throw ConfigError("expanding family needs factors and dim >= 1");
  }
  for (int m : factors) {
    if (m < 1) {
      throw ConfigError("expansion factors must be positive integers");
    }
  }
  RandomSystem s;
  s.family_ = SystemFamily::expanding;
  s.metric_ = FiberMetricKind::torus_max;
  s.dim_ = dim;
  s.factors_ = std::move(factors);
  return s;
}

RandomSystem RandomSystem::tent(std::vector<int> slopes, std::size_t dim) {
  if (slopes.empty() || dim == 0) {
    throw ConfigError("tent family needs slopes and dim >= 1");
  }
  for (int m : slopes) {
    if (m < 1) {
      throw ConfigError("tent slopes must be positive integers");
    }
  }
  RandomSystem s;
  s.family_ = SystemFamily::tent;
  s.metric_ = FiberMetricKind::torus_max;
  s.dim_ = dim;
  s.factors_ = std::move(slopes);
  return s;
}

RandomSystem RandomSystem::full_shift(std::vector<int> alphabet_sizes,
                                      FiberMetricKind metric) {
  if (alphabet_sizes.empty()) {
    throw ConfigError("full shift needs alphabet sizes");
  }
  if (metric == FiberMetricKind::torus_max) {
    throw ConfigError("full shift needs a symbolic metric");
  }
  for (int k : alphabet_sizes) {
    if (k < 2 || k > 255) {
      throw ConfigError("shift alphabet sizes must lie in [2, 255]");
    }
  }
  RandomSystem s;
  s.family_ = SystemFamily::full_shift;
  s.metric_ = metric;
  s.word_alphabet_ = *std::max_element(alphabet_sizes.begin(), alphabet_sizes.end());
  s.factors_ = std::move(alphabet_sizes);
  return s;
}

int RandomSystem::factor(BaseSymbol s) const {
  if (s >= factors_.size()) {
    throw RangeError("base symbol " + std::to_string(s) + " has no fiber map");
  }
  return factors_[s];
}

void RandomSystem::validate_point(const PhasePoint& x) const {
  if (is_torus()) {
    const auto* p = std::get_if<TorusPoint>(&x);
    if (p == nullptr || p->coords.size() != dim_) {
      throw UsageError("expected a torus point of dimension " + std::to_string(dim_));
    }
    for (double c : p->coords) {
      if (!(c >= 0.0 && c < 1.0)) {
        throw UsageError("torus coordinates must lie in [0, 1)");
      }
    }
    return;
  }
  const auto* w = std::get_if<SymbolWord>(&x);
  if (w == nullptr) {
    throw UsageError("expected a symbol word");
  }
  for (auto c : w->symbols) {
    if (c >= word_alphabet_) {
      throw UsageError("word symbol outside the alphabet");
    }
  }
}

PhasePoint RandomSystem::apply(BaseSymbol s, const PhasePoint& x) const {
  factor(s);
  if (is_torus()) {
    TorusPoint p = std::get<TorusPoint>(x);
    for (double& c : p.coords) {
      c = map_coordinate(s, c);
    }
    return p;
  }
  const auto& w = std::get<SymbolWord>(x);
  if (w.symbols.empty()) {
    throw RangeError("cannot shift an empty word");
  }
  return SymbolWord{{w.symbols.begin() + 1, w.symbols.end()}};
}

////////////////////////////////////////////////////////////////////////////////
// Orbits
////////////////////////////////////////////////////////////////////////////////

PhasePoint OrbitSegment::point(std::size_t i) const {
  if (i >= n_) {
    throw RangeError("orbit index out of range");
  }
  if (kind_ == FiberMetricKind::torus_max) {
    return TorusPoint{{coords_.begin() + static_cast<std::ptrdiff_t>(i * dim_),
                       coords_.begin() + static_cast<std::ptrdiff_t>((i + 1) * dim_)}};
  }
  return SymbolWord{{word_.begin() + static_cast<std::ptrdiff_t>(i), word_.end()}};
}

OrbitView OrbitSegment::view() const noexcept {
  OrbitView v;
  v.kind = kind_;
  v.n = n_;
  v.dim = dim_;
  v.coords = coords_.data();
  v.word = word_.data();
  v.word_length = word_.size();
  return v;
}

OrbitSegment orbit(const RandomSystem& system, const OmegaPath& path,
                   const PhasePoint& x, std::size_t n) {
  if (n == 0) {
    throw UsageError("orbit length must be >= 1");
  }
  if (path.horizon() + 1 < n) {
    throw RangeError("orbit of length " + std::to_string(n) + " needs path horizon " +
                     std::to_string(n - 1) + ", have " + std::to_string(path.horizon()));
  }
  system.validate_point(x);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    system.factor(path[i]);
  }

  OrbitSegment seg(path);
  seg.kind_ = system.metric();
  seg.n_ = n;
  seg.dim_ = system.dim();
  if (system.is_torus()) {
    const auto& p = std::get<TorusPoint>(x);
    std::size_t d = system.dim();
    seg.coords_.resize(n * d);
    std::copy(p.coords.begin(), p.coords.end(), seg.coords_.begin());
    for (std::size_t i = 1; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) {
        seg.coords_[i * d + k] = system.map_coordinate(path[i - 1], seg.coords_[(i - 1) * d + k]);
      }
    }
  } else {
    const auto& w = std::get<SymbolWord>(x);
    if (w.symbols.size() < n) {
      throw RangeError("word of length " + std::to_string(w.symbols.size()) +
                       " is too short for an orbit of length " + std::to_string(n));
    }
    seg.word_ = w.symbols;
  }
  return seg;
}

////////////////////////////////////////////////////////////////////////////////
// PointCloud and OrbitBank
////////////////////////////////////////////////////////////////////////////////

void PointCloud::reserve(std::size_t count) {
  if (torus_) {
    coords_.reserve(count * dim_);
  } else {
    symbols_.reserve(count * word_length_);
  }
}

void PointCloud::push_torus(std::span<const double> coords) {
  if (!torus_ || coords.size() != dim_) {
    throw UsageError("point does not match the cloud's torus dimension");
  }
  coords_.insert(coords_.end(), coords.begin(), coords.end());
  ++size_;
}

void PointCloud::push_word(std::span<const std::uint8_t> symbols) {
  if (torus_ || symbols.size() != word_length_) {
    throw UsageError("word does not match the cloud's word length");
  }
  symbols_.insert(symbols_.end(), symbols.begin(), symbols.end());
  ++size_;
}

void PointCloud::push_back(const PhasePoint& p) {
  if (const auto* t = std::get_if<TorusPoint>(&p)) {
    push_torus(t->coords);
  } else {
    push_word(std::get<SymbolWord>(p).symbols);
  }
}

PhasePoint PointCloud::point(std::size_t i) const {
  if (i >= size_) {
    throw RangeError("point index out of range");
  }
  if (torus_) {
    auto c = coords(i);
    return TorusPoint{{c.begin(), c.end()}};
  }
  auto w = word(i);
  return SymbolWord{{w.begin(), w.end()}};
}

OrbitBank OrbitBank::build(const RandomSystem& system, const OmegaPath& path,
                           const PointCloud& points, std::size_t n) {
  if (n == 0) {
    throw UsageError("orbit length must be >= 1");
  }
  if (path.horizon() + 1 < n) {
    throw RangeError("orbit bank of length " + std::to_string(n) +
                     " exceeds path horizon " + std::to_string(path.horizon()));
  }
  if (points.is_torus() != system.is_torus() ||
      (points.is_torus() && points.dim() != system.dim())) {
    throw UsageError("point cloud does not belong to the system's phase space");
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    system.factor(path[i]);
  }

  OrbitBank bank;
  bank.kind_ = system.metric();
  bank.count_ = points.size();
  bank.n_ = n;
  bank.dim_ = system.dim();
  if (system.is_torus()) {
    std::size_t d = bank.dim_;
    std::size_t stride = n * d;
    bank.coords_.resize(bank.count_ * stride);
    constexpr std::size_t chunk = 4096;
    std::size_t chunks = (bank.count_ + chunk - 1) / chunk;
    parallel_for(chunks, [&](std::size_t c) {
      std::size_t end = std::min(bank.count_, (c + 1) * chunk);
      for (std::size_t p = c * chunk; p < end; ++p) {
        double* out = bank.coords_.data() + p * stride;
        auto x = points.coords(p);
        std::copy(x.begin(), x.end(), out);
        for (std::size_t i = 1; i < n; ++i) {
          for (std::size_t k = 0; k < d; ++k) {
            out[i * d + k] = system.map_coordinate(path[i - 1], out[(i - 1) * d + k]);
          }
        }
      }
    });
  } else {
    if (points.word_length() < n) {
      throw RangeError("words of length " + std::to_string(points.word_length()) +
                       " are too short for orbits of length " + std::to_string(n));
    }
    bank.word_length_ = points.word_length();
    bank.words_.reserve(points.size() * points.word_length());
    for (std::size_t p = 0; p < points.size(); ++p) {
      auto w = points.word(p);
      bank.words_.insert(bank.words_.end(), w.begin(), w.end());
    }
  }
  return bank;
}

OrbitView OrbitBank::view(std::size_t i, std::size_t n) const noexcept {
  OrbitView v;
  v.kind = kind_;
  v.n = n;
  v.dim = dim_;
  if (kind_ == FiberMetricKind::torus_max) {
    v.coords = coords_.data() + i * n_ * dim_;
  } else {
    v.word = words_.data() + i * word_length_;
    v.word_length = word_length_;
  }
  return v;
}

}  // namespace fkent
