#include "fkent/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "fkent/entropy_katok.hpp"
#include "fkent/entropy_local.hpp"
#include "fkent/entropy_topological.hpp"
#include "fkent/errors.hpp"
#include "fkent/fk_metric.hpp"
#include "fkent/oracles.hpp"
#include "fkent/parallel.hpp"
#include "fkent/random.hpp"

namespace fkent {

using nlohmann::json;

std::string to_string(Command command) {
  switch (command) {
    case Command::estimate_top:
      return "estimate-top";
    case Command::estimate_local:
      return "estimate-local";
    case Command::estimate_katok:
      return "estimate-katok";
    case Command::compare_top:
      return "compare-top";
    case Command::compare_local:
      return "compare-local";
    case Command::compare_katok:
      return "compare-katok";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  for (auto c : {Command::estimate_top, Command::estimate_local, Command::estimate_katok,
                 Command::compare_top, Command::compare_local, Command::compare_katok}) {
    if (to_string(c) == name) {
      return c;
    }
  }
  throw UsageError("unknown command '" + name + "'");
}

////////////////////////////////////////////////////////////////////////////////
// Config parsing
////////////////////////////////////////////////////////////////////////////////

namespace {

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) {
    throw ConfigError(where + ": expected an object");
  }
}

void reject_unknown(const json& j, const std::string& where,
                    std::initializer_list<const char*> known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = std::any_of(known.begin(), known.end(),
                          [&](const char* k) { return it.key() == k; });
    if (!ok) {
      std::string field = where.empty() ? it.key() : where + "." + it.key();
      throw ConfigError(field + ": unknown key");
    }
  }
}

template <class T>
T get_as(const json& j, const std::string& field) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(field + ": wrong type");
  }
}

std::size_t get_count(const json& j, const std::string& field) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) {
    if (j.is_number_float() && j.get<double>() == std::floor(j.get<double>()) &&
        j.get<double>() >= 0 && j.get<double>() < 1e15) {
      return static_cast<std::size_t>(j.get<double>());
    }
    throw ConfigError(field + ": expected a nonnegative integer");
  }
  if (j.is_number_integer() && j.get<long long>() < 0) {
    throw ConfigError(field + ": expected a nonnegative integer");
  }
  return j.get<std::size_t>();
}

std::vector<std::size_t> get_counts(const json& j, const std::string& field) {
  if (!j.is_array()) {
    throw ConfigError(field + ": expected an array");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_count(j[i], field + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<double> get_reals(const json& j, const std::string& field) {
  if (!j.is_array()) {
    throw ConfigError(field + ": expected an array");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw ConfigError(field + "[" + std::to_string(i) + "]: expected a number");
    }
    out.push_back(j[i].get<double>());
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
  require_object(j, "config");
  reject_unknown(j, "", {"system", "driving", "schedule", "budget", "metrics", "seed", "output"});
  ExperimentConfig c;

  if (j.contains("system")) {
    const auto& s = j["system"];
    require_object(s, "system");
    reject_unknown(s, "system", {"family", "params", "dim", "metric"});
    if (s.contains("family")) {
      c.system.family = get_as<std::string>(s["family"], "system.family");
    }
    if (s.contains("params")) {
      for (auto v : get_counts(s["params"], "system.params")) {
        c.system.params.push_back(static_cast<int>(v));
      }
    }
    if (s.contains("dim")) {
      c.system.dim = get_count(s["dim"], "system.dim");
    }
    if (s.contains("metric")) {
      c.system.metric = get_as<std::string>(s["metric"], "system.metric");
    }
  }
  if (j.contains("driving")) {
    const auto& d = j["driving"];
    require_object(d, "driving");
    reject_unknown(d, "driving", {"law", "p", "transition", "initial"});
    if (d.contains("law")) {
      c.driving.law = get_as<std::string>(d["law"], "driving.law");
    }
    if (d.contains("p")) {
      c.driving.p = get_reals(d["p"], "driving.p");
    }
    if (d.contains("transition")) {
      if (!d["transition"].is_array()) {
        throw ConfigError("driving.transition: expected an array of rows");
      }
      for (std::size_t r = 0; r < d["transition"].size(); ++r) {
        c.driving.transition.push_back(
            get_reals(d["transition"][r], "driving.transition[" + std::to_string(r) + "]"));
      }
    }
    if (d.contains("initial")) {
      c.driving.initial = get_reals(d["initial"], "driving.initial");
    }
  }
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    require_object(s, "schedule");
    reject_unknown(s, "schedule", {"n", "eps", "delta"});
    if (s.contains("n")) {
      c.n_values = get_counts(s["n"], "schedule.n");
    }
    if (s.contains("eps")) {
      c.eps_values = get_reals(s["eps"], "schedule.eps");
    }
    if (s.contains("delta")) {
      c.delta_values = get_reals(s["delta"], "schedule.delta");
    }
  }
  if (j.contains("budget")) {
    const auto& b = j["budget"];
    require_object(b, "budget");
    reject_unknown(b, "budget", {"M", "omega_samples", "candidates", "base_points"});
    if (b.contains("M")) {
      c.M = get_count(b["M"], "budget.M");
    }
    if (b.contains("omega_samples")) {
      c.omega_samples = get_count(b["omega_samples"], "budget.omega_samples");
    }
    if (b.contains("candidates")) {
      c.candidates = get_count(b["candidates"], "budget.candidates");
    }
    if (b.contains("base_points")) {
      c.base_points = get_count(b["base_points"], "budget.base_points");
    }
  }
  if (j.contains("metrics")) {
    c.metrics = get_as<std::vector<std::string>>(j["metrics"], "metrics");
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() &&
        !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)) {
      throw ConfigError("seed: expected a nonnegative integer");
    }
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) {
    const auto& o = j["output"];
    require_object(o, "output");
    reject_unknown(o, "output", {"dir"});
    if (o.contains("dir")) {
      c.output_dir = get_as<std::string>(o["dir"], "output.dir");
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("config: cannot open '" + path + "'");
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: parse error in '" + path + "': " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["system"]["family"] = c.system.family;
  j["system"]["params"] = c.system.params;
  j["system"]["dim"] = c.system.dim;
  if (c.system.metric) {
    j["system"]["metric"] = *c.system.metric;
  }
  j["driving"]["law"] = c.driving.law;
  if (!c.driving.p.empty()) {
    j["driving"]["p"] = c.driving.p;
  }
  if (!c.driving.transition.empty()) {
    j["driving"]["transition"] = c.driving.transition;
  }
  if (!c.driving.initial.empty()) {
    j["driving"]["initial"] = c.driving.initial;
  }
  if (c.n_values) {
    j["schedule"]["n"] = *c.n_values;
  }
  if (c.eps_values) {
    j["schedule"]["eps"] = *c.eps_values;
  }
  if (c.delta_values) {
    j["schedule"]["delta"] = *c.delta_values;
  }
  if (c.M) {
    j["budget"]["M"] = *c.M;
  }
  if (c.omega_samples) {
    j["budget"]["omega_samples"] = *c.omega_samples;
  }
  if (c.candidates) {
    j["budget"]["candidates"] = *c.candidates;
  }
  if (c.base_points) {
    j["budget"]["base_points"] = *c.base_points;
  }
  if (c.metrics) {
    j["metrics"] = *c.metrics;
  }
  j["seed"] = c.seed;
  if (!c.output_dir.empty()) {
    j["output"]["dir"] = c.output_dir;
  }
  return j;
}

namespace {

bool is_top(Command c) { return c == Command::estimate_top || c == Command::compare_top; }
bool is_local(Command c) { return c == Command::estimate_local || c == Command::compare_local; }
bool is_compare(Command c) {
  return c == Command::compare_top || c == Command::compare_local ||
         c == Command::compare_katok;
}

}  // namespace

ExperimentConfig resolve_defaults(Command command, ExperimentConfig c) {
  if (c.system.family.empty()) {
    throw ConfigError("system.family: missing");
  }
  SystemFamily family = SystemFamily::expanding;
  try {
    family = parse_family(c.system.family);
  } catch (const Error&) {
    throw ConfigError("system.family: unknown family '" + c.system.family + "'");
  }
  if (c.system.params.empty()) {
    c.system.params = family == SystemFamily::full_shift ? std::vector<int>{2}
                                                         : std::vector<int>{2, 3};
  }
  if (c.driving.law == "bernoulli" && c.driving.p.empty()) {
    c.driving.p.assign(c.system.params.size(), 1.0 / static_cast<double>(c.system.params.size()));
  }
  if (is_top(command)) {
    if (!c.n_values) c.n_values = std::vector<std::size_t>{8, 10, 12, 14};
    if (!c.eps_values) c.eps_values = std::vector<double>{0.2, 0.1, 0.05};
    if (!c.omega_samples) c.omega_samples = 8;
    if (!c.candidates) c.candidates = 200000;
  } else if (is_local(command)) {
    if (!c.n_values) c.n_values = std::vector<std::size_t>{8, 10, 12};
    if (!c.delta_values) c.delta_values = std::vector<double>{0.2, 0.1};
    if (!c.M) c.M = 1000000;
    if (!c.omega_samples) c.omega_samples = 1;
    if (!c.base_points) c.base_points = 20;
  } else {
    if (!c.n_values) c.n_values = std::vector<std::size_t>{8, 9, 10, 11, 12};
    if (!c.eps_values) c.eps_values = std::vector<double>{0.3};
    if (!c.M) c.M = family == SystemFamily::full_shift ? 100000 : 10000;
    if (!c.omega_samples) c.omega_samples = 1;
  }
  if (!c.metrics) {
    c.metrics = is_compare(command) ? std::vector<std::string>{"bowen", "fk"}
                                    : std::vector<std::string>{"bowen"};
  } else if (is_compare(command)) {
    c.metrics = std::vector<std::string>{"bowen", "fk"};
  }
  validate(c);
  return c;
}

void validate(const ExperimentConfig& c) {
  SystemFamily family = SystemFamily::expanding;
  try {
    family = parse_family(c.system.family);
  } catch (const Error&) {
    throw ConfigError("system.family: unknown family '" + c.system.family + "'");
  }
  if (c.system.dim == 0) {
    throw ConfigError("system.dim: must be >= 1");
  }
  if (family == SystemFamily::full_shift && c.system.dim != 1) {
    throw ConfigError("system.dim: full_shift is one-sided symbolic, dim must be 1");
  }
  if (c.system.metric && family != SystemFamily::full_shift) {
    throw ConfigError("system.metric: only full_shift takes a metric choice");
  }
  if (c.driving.law != "bernoulli" && c.driving.law != "markov") {
    throw ConfigError("driving.law: expected bernoulli or markov");
  }
  if (c.driving.law == "markov" && c.driving.transition.empty()) {
    throw ConfigError("driving.transition: required for a markov law");
  }
  auto check_n = [](const std::optional<std::vector<std::size_t>>& v) {
    if (!v) return;
    if (v->empty()) throw ConfigError("schedule.n: empty");
    for (std::size_t i = 0; i < v->size(); ++i) {
      if ((*v)[i] == 0) throw ConfigError("schedule.n: values must be >= 1");
      if (i > 0 && (*v)[i] <= (*v)[i - 1]) {
        throw ConfigError("schedule.n: must be strictly increasing");
      }
    }
  };
  auto check_radii = [](const std::optional<std::vector<double>>& v, const std::string& field) {
    if (!v) return;
    if (v->empty()) throw ConfigError(field + ": empty");
    for (std::size_t i = 0; i < v->size(); ++i) {
      if (!((*v)[i] > 0.0) || !std::isfinite((*v)[i])) {
        throw ConfigError(field + ": values must be finite and > 0");
      }
      if (i > 0 && (*v)[i] >= (*v)[i - 1]) {
        throw ConfigError(field + ": must be strictly decreasing");
      }
    }
  };
  check_n(c.n_values);
  check_radii(c.eps_values, "schedule.eps");
  check_radii(c.delta_values, "schedule.delta");
  auto positive = [](const std::optional<std::size_t>& v, const std::string& field) {
    if (v && *v == 0) throw ConfigError(field + ": must be positive");
  };
  positive(c.M, "budget.M");
  positive(c.omega_samples, "budget.omega_samples");
  positive(c.candidates, "budget.candidates");
  positive(c.base_points, "budget.base_points");
  if (c.metrics) {
    if (c.metrics->empty()) throw ConfigError("metrics: empty");
    for (const auto& m : *c.metrics) {
      if (m != "bowen" && m != "fk") {
        throw ConfigError("metrics: unknown metric '" + m + "'");
      }
    }
  }
  if (!c.system.params.empty()) {
    build_system(c);
    build_process(c);
  }
}

RandomSystem build_system(const ExperimentConfig& c) {
  try {
    switch (parse_family(c.system.family)) {
      case SystemFamily::expanding:
        return RandomSystem::expanding(c.system.params, c.system.dim);
      case SystemFamily::tent:
        return RandomSystem::tent(c.system.params, c.system.dim);
      case SystemFamily::full_shift:
        return RandomSystem::full_shift(
            c.system.params,
            c.system.metric ? parse_fiber_metric(*c.system.metric) : FiberMetricKind::cylinder);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  throw ConfigError("system.family: unknown");
}

DrivingProcess build_process(const ExperimentConfig& c) {
  bool markov = c.driving.law == "markov";
  std::optional<DrivingProcess> built;
  try {
    built = markov ? DrivingProcess::markov(c.driving.transition, c.driving.initial)
                   : DrivingProcess::bernoulli(c.driving.p);
  } catch (const Error& e) {
    throw ConfigError(std::string(markov ? "driving.transition: " : "driving.p: ") + e.what());
  }
  DrivingProcess process = *built;
  if (process.alphabet_size() != c.system.params.size()) {
    throw ConfigError("driving: alphabet size " + std::to_string(process.alphabet_size()) +
                      " does not match the " + std::to_string(c.system.params.size()) +
                      " entries of system.params");
  }
  return process;
}

////////////////////////////////////////////////////////////////////////////////
// Rendering
////////////////////////////////////////////////////////////////////////////////

std::string format_double(double value) {
  if (std::isnan(value)) {
    return "nan";
  }
  if (std::isinf(value)) {
    return value > 0 ? "inf" : "-inf";
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string CsvTable::body() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out += (i ? "," : "") + columns[i];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      out += (i ? "," : "") + row[i];
    }
    out += '\n';
  }
  return out;
}

void write_report(const Report& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ResourceError("cannot create output directory '" + dir + "': " + ec.message());
  }
  std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  for (const auto& t : report.tables) {
    std::ofstream out(fs::path(dir) / (t.name + ".csv"));
    if (!out) {
      throw ResourceError("cannot write " + t.name + ".csv");
    }
    out << "# fkent " << kToolVersion << " generated " << stamp << '\n' << t.body();
  }
  std::ofstream out(fs::path(dir) / "report.json");
  if (!out) {
    throw ResourceError("cannot write report.json");
  }
  json j = report.json;
  j["generated"] = stamp;
  out << j.dump(2) << '\n';
}

namespace {

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }

std::string point_text(const PhasePoint& x) {
  if (const auto* t = std::get_if<TorusPoint>(&x)) {
    std::string s;
    for (std::size_t i = 0; i < t->coords.size(); ++i) {
      s += (i ? " " : "") + format_double(t->coords[i]);
    }
    return s;
  }
  const auto& w = std::get<SymbolWord>(x);
  std::string s;
  for (auto c : w.symbols) {
    s += c < 10 ? static_cast<char>('0' + c) : static_cast<char>('a' + c - 10);
  }
  return s;
}

bool wants(const ExperimentConfig& c, const char* metric) {
  return std::find(c.metrics->begin(), c.metrics->end(), metric) != c.metrics->end();
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

json estimate_json(const EntropyEstimate& e) {
  json j;
  j["value"] = e.value;
  j["metric"] = to_string(e.metric);
  j["n_window"] = e.n_window;
  j["eps"] = e.eps_values;
  j["slopes"] = e.slopes;
  j["residuals"] = e.residuals;
  j["spread"] = e.spread;
  return j;
}

////////////////////////////////////////////////////////////////////////////////
// Topological entropy
////////////////////////////////////////////////////////////////////////////////

Report run_top(Command command, const ExperimentConfig& c, const RandomSystem& system,
               const DrivingProcess& process) {
  bool compare = command == Command::compare_top;
  TopologicalConfig tc;
  tc.schedule = CountSchedule{*c.n_values, *c.eps_values};
  tc.candidate_budget = *c.candidates;
  tc.with_fk = wants(c, "fk");
  if (c.n_values->size() < 3) {
    throw ConfigError("schedule.n: topological slopes need >= 3 values");
  }
  IntegratedEntropy ie = integrated_entropy(system, process, tc, *c.omega_samples, c.seed);

  Report r;
  CsvTable counts{"top_counts", {"omega_seed", "n", "eps", "metric", "separated"}, {}};
  CsvTable slopes;
  if (compare) {
    slopes = CsvTable{"top_compare",
                      {"omega_seed", "eps", "bowen_slope", "fk_slope", "gap", "bowen_residual",
                       "fk_residual", "oracle_slope"},
                      {}};
  } else {
    slopes = CsvTable{"top_slopes",
                      {"omega_seed", "eps", "metric", "slope", "residual", "oracle_slope"},
                      {}};
  }
  json per = json::array();
  std::vector<std::string> warnings;
  for (const auto& o : ie.per_omega) {
    std::string seed = std::to_string(o.path.seed());
    std::vector<const CountTable*> tables;
    if (wants(c, "bowen")) tables.push_back(&o.tables.bowen);
    if (o.tables.fk) tables.push_back(&*o.tables.fk);
    for (const auto* t : tables) {
      for (const auto& e : t->entries) {
        counts.rows.push_back({seed, fmt(e.n), fmt(e.eps), to_string(t->metric), fmt(e.separated)});
      }
      for (const auto& v : t->invariant_violations(false)) {
        r.violations.push_back("omega " + seed + ": " + v);
      }
      for (const auto& w : t->monotonicity_warnings()) {
        warnings.push_back("omega " + seed + ": " + w);
      }
    }
    for (const auto& v : o.tables.dominance_violations()) {
      r.violations.push_back("omega " + seed + ": " + v);
    }
    for (std::size_t k = 0; k < o.bowen.eps_values.size(); ++k) {
      if (compare) {
        slopes.rows.push_back({seed, fmt(o.bowen.eps_values[k]), fmt(o.bowen.slopes[k]),
                               fmt(o.fk->slopes[k]), fmt(o.fk->slopes[k] - o.bowen.slopes[k]),
                               fmt(o.bowen.residuals[k]), fmt(o.fk->residuals[k]),
                               fmt(o.oracle_slope)});
      } else {
        std::vector<const EntropyEstimate*> ests;
        if (wants(c, "bowen")) ests.push_back(&o.bowen);
        if (o.fk) ests.push_back(&*o.fk);
        for (const auto* e : ests) {
          slopes.rows.push_back({seed, fmt(e->eps_values[k]), to_string(e->metric),
                                 fmt(e->slopes[k]), fmt(e->residuals[k]), fmt(o.oracle_slope)});
        }
      }
    }
    json oj;
    oj["omega_seed"] = o.path.seed();
    oj["candidates"] = o.candidates.size();
    oj["candidate_provenance"] = to_string(o.candidates.provenance);
    oj["candidate_window"] = o.candidates.window;
    oj["oracle_slope"] = o.oracle_slope;
    if (wants(c, "bowen")) oj["bowen"] = estimate_json(o.bowen);
    if (o.fk) oj["fk"] = estimate_json(*o.fk);
    per.push_back(oj);
  }
  r.tables.push_back(std::move(counts));
  r.tables.push_back(std::move(slopes));

  json est;
  if (wants(c, "bowen")) {
    est["bowen"] = {{"mean", ie.bowen_mean}, {"stderr", ie.bowen_stderr}};
  }
  if (ie.fk_mean) {
    est["fk"] = {{"mean", *ie.fk_mean}, {"stderr", *ie.fk_stderr}};
  }
  if (compare) {
    std::vector<double> gaps;
    for (const auto& o : ie.per_omega) gaps.push_back(o.fk->value - o.bowen.value);
    est["gap"] = {{"mean", mean_of(gaps)}, {"stderr", stderr_of(gaps)}};
  }
  r.json["estimates"] = est;
  r.json["oracle"] = {{"value", ie.oracle}, {"tag", to_string(OracleValue::Tag::closed_form)},
                      {"description", "expected log expansion under the stationary law"}};
  r.json["per_omega"] = per;
  r.json["warnings"] = warnings;
  return r;
}

////////////////////////////////////////////////////////////////////////////////
// Local entropy
////////////////////////////////////////////////////////////////////////////////

Report run_local(Command command, const ExperimentConfig& c, const RandomSystem& system,
                 const DrivingProcess& process) {
  bool compare = command == Command::compare_local;
  const auto& ns = *c.n_values;
  const auto& deltas = *c.delta_values;
  std::size_t n_max = ns.back();
  std::size_t word_length = 0;
  if (!system.is_torus()) {
    word_length = n_max - 1 + std::max<std::size_t>(word_depth(system.metric(), deltas.back()), 1);
  }
  std::vector<DynamicalMetric> kinds;
  if (wants(c, "bowen")) kinds.push_back(DynamicalMetric::bowen);
  if (wants(c, "fk")) kinds.push_back(DynamicalMetric::fk);

  Report r;
  CsvTable table{"local",
                 {"omega_seed", "x", "n", "delta", "kind", "ball_count", "M", "estimate",
                  "flagged"},
                 {}};
  CsvTable side{"local_compare",
                {"omega_seed", "x", "n", "delta", "bowen_count", "fk_count", "bowen_estimate",
                 "fk_estimate", "gap"},
                {}};
  std::map<DynamicalMetric, std::vector<double>> endpoint;
  std::map<DynamicalMetric, std::vector<double>> slope;
  std::vector<std::string> warnings;

  for (std::size_t j = 0; j < *c.omega_samples; ++j) {
    OmegaPath path = sample_path(process, std::max(n_max, word_length) + 64,
                                 derive_seed(c.seed, streams::omega_path, j));
    EmpiricalMeasure measure =
        sample_measure(system, path, *c.M, derive_seed(c.seed, streams::measure, j), word_length);
    EmpiricalMeasure bases = sample_measure(system, path, *c.base_points,
                                            derive_seed(c.seed, streams::base_points, j),
                                            word_length);
    BallCounter counter(system, path, measure, n_max);
    std::string seed = std::to_string(path.seed());
    for (std::size_t b = 0; b < bases.size(); ++b) {
      PhasePoint x = bases.samples.point(b);
      std::map<DynamicalMetric, LocalEntropyRecord> recs;
      for (auto kind : kinds) {
        LocalEntropyRecord rec = local_entropy(counter, system, path, x, ns, deltas, kind);
        for (const auto& e : rec.entries) {
          table.rows.push_back({seed, point_text(x), fmt(e.n), fmt(e.delta), to_string(kind),
                                fmt(e.ball_count), fmt(rec.M), fmt(e.estimate),
                                e.flagged ? "1" : "0"});
        }
        if (rec.endpoint_estimate) endpoint[kind].push_back(*rec.endpoint_estimate);
        if (rec.slope_estimate) slope[kind].push_back(*rec.slope_estimate);
        for (const auto& w : rec.warnings) {
          warnings.push_back(to_string(kind) + " x=" + point_text(x) + ": " + w);
        }
        // Exact monotonicity checks on identical samples.
        for (const auto& e : rec.entries) {
          for (const auto& f : rec.entries) {
            if (kind == DynamicalMetric::bowen && e.delta == f.delta && f.n > e.n &&
                f.ball_count > e.ball_count) {
              r.violations.push_back("bowen ball count grows with n at x=" + point_text(x));
            }
            if (e.n == f.n && f.delta > e.delta && f.ball_count < e.ball_count) {
              r.violations.push_back(to_string(kind) + " ball count shrinks with delta at x=" +
                                     point_text(x));
            }
          }
        }
        recs.emplace(kind, std::move(rec));
      }
      if (compare) {
        const auto& rb = recs.at(DynamicalMetric::bowen);
        const auto& rf = recs.at(DynamicalMetric::fk);
        for (std::size_t e = 0; e < rb.entries.size(); ++e) {
          const auto& eb = rb.entries[e];
          const auto& ef = rf.entries[e];
          side.rows.push_back({seed, point_text(x), fmt(eb.n), fmt(eb.delta), fmt(eb.ball_count),
                               fmt(ef.ball_count), fmt(eb.estimate), fmt(ef.estimate),
                               fmt(ef.estimate - eb.estimate)});
          if (ef.ball_count < eb.ball_count) {
            r.violations.push_back("fk ball smaller than bowen ball at x=" + point_text(x) +
                                   ", n=" + fmt(eb.n) + ", delta=" + fmt(eb.delta));
          }
        }
      }
    }
  }
  r.tables.push_back(std::move(table));
  if (compare) r.tables.push_back(std::move(side));

  json est;
  for (auto kind : kinds) {
    est[to_string(kind)] = {{"endpoint_mean", mean_of(endpoint[kind])},
                            {"endpoint_stderr", stderr_of(endpoint[kind])},
                            {"endpoint_samples", endpoint[kind].size()},
                            {"slope_mean", mean_of(slope[kind])},
                            {"slope_stderr", stderr_of(slope[kind])},
                            {"slope_samples", slope[kind].size()}};
  }
  if (compare) {
    est["gap"] = {{"endpoint", mean_of(endpoint[DynamicalMetric::fk]) -
                                   mean_of(endpoint[DynamicalMetric::bowen])},
                  {"slope", mean_of(slope[DynamicalMetric::fk]) -
                                mean_of(slope[DynamicalMetric::bowen])}};
  }
  r.json["estimates"] = est;
  r.json["oracle"] = {{"value", expected_entropy(system, process.stationary())},
                      {"tag", to_string(OracleValue::Tag::closed_form)}};
  r.json["warnings"] = warnings;
  return r;
}

////////////////////////////////////////////////////////////////////////////////
// Katok entropy
////////////////////////////////////////////////////////////////////////////////

Report run_katok(Command command, const ExperimentConfig& c, const RandomSystem& system,
                 const DrivingProcess& process) {
  bool compare = command == Command::compare_katok;
  KatokConfig kc;
  kc.n_values = *c.n_values;
  kc.eps_values = *c.eps_values;
  kc.M = *c.M;
  kc.omega_samples = *c.omega_samples;
  kc.with_bowen = wants(c, "bowen");
  kc.with_fk = wants(c, "fk");
  if (c.delta_values) {
    if (c.delta_values->size() != 1) {
      throw ConfigError("schedule.delta: katok runs take a single mass parameter");
    }
    kc.bowen_delta = c.delta_values->front();
  }
  KatokEstimate ke = katok_entropy(system, process, kc, c.seed);

  Report r;
  CsvTable table{"katok",
                 {"omega_seed", "n", "eps", "mass_threshold", "kind", "count", "covered_mass"},
                 {}};
  for (const auto& o : ke.per_omega) {
    std::string seed = std::to_string(o.omega_seed);
    for (const auto* counts : {&o.bowen, &o.fk}) {
      for (const auto& k : *counts) {
        table.rows.push_back({seed, fmt(k.n), fmt(k.eps), fmt(k.mass_threshold),
                              to_string(k.kind), fmt(k.count), fmt(k.covered_mass)});
        if (k.covered_mass + 1e-12 < k.mass_threshold) {
          r.violations.push_back("cover below mass threshold at n=" + fmt(k.n));
        }
      }
    }
    if (!o.bowen.empty() && !o.fk.empty()) {
      for (std::size_t e = 0; e < o.fk.size(); ++e) {
        if (o.fk[e].mass_threshold == o.bowen[e].mass_threshold &&
            o.fk[e].count > o.bowen[e].count) {
          r.violations.push_back("fk katok count exceeds bowen count at n=" + fmt(o.fk[e].n) +
                                 ", eps=" + fmt(o.fk[e].eps));
        }
      }
    }
  }
  r.tables.push_back(std::move(table));
  if (compare) {
    CsvTable side{"katok_compare", {"eps", "bowen_slope", "fk_slope", "gap"}, {}};
    for (std::size_t e = 0; e < ke.bowen->slopes.size(); ++e) {
      side.rows.push_back({fmt(ke.bowen->eps_values[e]), fmt(ke.bowen->slopes[e]),
                           fmt(ke.fk->slopes[e]), fmt(ke.fk->slopes[e] - ke.bowen->slopes[e])});
    }
    r.tables.push_back(std::move(side));
  }
  json est;
  if (ke.bowen) est["bowen"] = estimate_json(*ke.bowen);
  if (ke.fk) est["fk"] = estimate_json(*ke.fk);
  if (compare) est["gap"] = ke.fk->value - ke.bowen->value;
  r.json["estimates"] = est;
  r.json["oracle"] = {{"value", expected_entropy(system, process.stationary())},
                      {"tag", to_string(OracleValue::Tag::closed_form)}};
  r.json["warnings"] = ke.warnings;
  return r;
}

}  // namespace

Report run(Command command, const ExperimentConfig& config) {
  ExperimentConfig c = resolve_defaults(command, config);
  RandomSystem system = build_system(c);
  DrivingProcess process = build_process(c);
  auto start = std::chrono::steady_clock::now();
  Report r;
  if (is_top(command)) {
    r = run_top(command, c, system, process);
  } else if (is_local(command)) {
    r = run_local(command, c, system, process);
  } else {
    r = run_katok(command, c, system, process);
  }
  double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.json["command"] = to_string(command);
  r.json["tool_version"] = kToolVersion;
  r.json["config"] = to_json(c);
  std::size_t rows = 0;
  for (const auto& t : r.tables) rows += t.rows.size();
  r.json["stats"] = {{"wall_seconds", seconds}, {"workers", worker_count()}, {"csv_rows", rows}};
  r.json["violations"] = r.violations;
  return r;
}

////////////////////////////////////////////////////////////////////////////////
// Selftest
////////////////////////////////////////////////////////////////////////////////

namespace {

struct PairFactory {
  std::vector<RandomSystem> systems;
  DrivingProcess process = DrivingProcess::bernoulli({0.5, 0.5});

  PairFactory() {
    systems.push_back(RandomSystem::expanding({2, 3}));
    systems.push_back(RandomSystem::tent({2, 3}));
    systems.push_back(RandomSystem::expanding({2, 3}, 2));
    systems.push_back(RandomSystem::full_shift({2, 3}, FiberMetricKind::cylinder));
    systems.push_back(RandomSystem::full_shift({2, 3}, FiberMetricKind::discrete));
  }

  PhasePoint point(const RandomSystem& s, const OmegaPath& path, std::size_t len, Rng& rng) {
    if (s.is_torus()) {
      TorusPoint t;
      for (std::size_t k = 0; k < s.dim(); ++k) t.coords.push_back(rng.uniform());
      return t;
    }
    SymbolWord w;
    for (std::size_t i = 0; i < len; ++i) {
      w.symbols.push_back(static_cast<std::uint8_t>(rng.below(static_cast<std::uint64_t>(s.factor(path[i])))));
    }
    return w;
  }
};

}  // namespace

std::vector<SelftestCheck> selftest(std::uint64_t seed) {
  std::vector<SelftestCheck> out;
  Rng rng(derive_seed(seed, streams::selftest, 0));
  PairFactory f;

  auto record = [&](const std::string& name, std::size_t failures, std::size_t trials) {
    out.push_back({name, failures == 0,
                   std::to_string(failures) + " failures in " + std::to_string(trials)});
  };

  {
    std::size_t bad = 0;
    std::size_t trials = 300;
    for (std::size_t t = 0; t < trials; ++t) {
      CompatMatrix m;
      m.n = 1 + rng.below(8);
      double density = rng.uniform();
      for (std::size_t i = 0; i < m.n * m.n; ++i) m.cells.push_back(rng.uniform() < density);
      bad += max_match_size(m) != brute_force_match(m);
    }
    record("match DP vs brute force (matrices)", bad, trials);
  }

  std::size_t dp_bad = 0, band_bad = 0, dom_bad = 0, sym_bad = 0, tri_bad = 0, cocycle_bad = 0;
  std::size_t pairs = 0;
  for (std::size_t t = 0; t < 200; ++t) {
    const auto& s = f.systems[t % f.systems.size()];
    std::size_t n = 1 + rng.below(8);
    OmegaPath path = sample_path(f.process, n + 16, rng.next());
    std::size_t len = n + 8;
    auto x = orbit(s, path, f.point(s, path, len, rng), n);
    auto y = orbit(s, path, f.point(s, path, len, rng), n);
    auto z = orbit(s, path, f.point(s, path, len, rng), n);
    double eps = 0.02 + 0.6 * rng.uniform();
    ++pairs;
    dp_bad += max_match_size(x, y, eps).k != brute_force_match(x.view(), y.view(), eps);
    std::size_t full = max_match_size(x, y, eps).k;
    for (std::size_t target = 0; target <= n; ++target) {
      std::size_t banded = max_match_banded(x.view(), y.view(), eps, target);
      bool ok = full >= target ? banded == full : banded < target;
      ok = ok && match_reaches(x.view(), y.view(), eps, target) == (full >= target);
      band_bad += ok ? 0 : 1;
    }
    double tol = default_fk_tolerance(s.metric(), n);
    auto dxy = fk_distance(x, y, tol);
    auto dyx = fk_distance(y, x, tol);
    auto dxz = fk_distance(x, z, tol);
    auto dzy = fk_distance(z, y, tol);
    dom_bad += dxy.value > bowen_distance(x, y) + tol;
    sym_bad += dxy.value != dyx.value;
    tri_bad += dxy.value > dxz.value + dzy.value + 2 * tol;
    if (n >= 2) {
      std::size_t i = 1 + rng.below(n - 1);
      auto shifted = orbit(s, shift_path(path, i), x.point(i), n - i);
      for (std::size_t k = 0; k < n - i; ++k) {
        cocycle_bad += !(shifted.point(k) == x.point(i + k));
      }
    }
  }
  record("match DP vs brute force (orbits)", dp_bad, pairs);
  record("banded DP agrees with full DP", band_bad, pairs);
  record("fk distance <= bowen distance", dom_bad, pairs);
  record("fk distance symmetric", sym_bad, pairs);
  record("fk triangle inequality within 2 tol", tri_bad, pairs);
  record("orbit cocycle property", cocycle_bad, pairs);

  {
    std::size_t bad = 0;
    for (std::size_t t = 0; t < 1000; ++t) {
      std::size_t n = 1 + rng.below(10);
      std::vector<std::uint8_t> u(n), v(n), w(n);
      for (std::size_t i = 0; i < n; ++i) {
        u[i] = static_cast<std::uint8_t>(rng.below(3));
        v[i] = static_cast<std::uint8_t>(rng.below(3));
        w[i] = static_cast<std::uint8_t>(rng.below(3));
      }
      bad += edit_bar_f(u, v) > edit_bar_f(u, w) + edit_bar_f(w, v) + 1e-12;
    }
    record("edit distance triangle inequality", bad, 1000);
  }

  {
    std::size_t bad = 0;
    std::size_t trials = 0;
    for (std::size_t n = 0; n <= 8; ++n) {
      std::vector<std::size_t> by_size(n + 1, 0);
      for (std::uint32_t m = 0; m < (1u << n); ++m) ++by_size[static_cast<std::size_t>(std::popcount(m))];
      for (std::size_t k = 0; k <= n; ++k) {
        ++trials;
        auto v = match_count_bound(n, k);
        bad += !v.exact || *v.exact != by_size[k] * by_size[k];
      }
    }
    record("match count bound vs enumeration", bad, trials);
  }

  {
    std::size_t bad = 0;
    std::size_t trials = 60;
    for (std::size_t t = 0; t < trials; ++t) {
      CoverInstance inst;
      std::size_t D = 1 + rng.below(12);
      double density = 0.05 + 0.4 * rng.uniform();
      inst.rows.assign(D, std::vector<std::uint64_t>(1, 0));
      std::uint64_t total = 0;
      for (std::size_t i = 0; i < D; ++i) {
        inst.weight.push_back(1 + rng.below(5));
        total += inst.weight.back();
        for (std::size_t j = 0; j < D; ++j) {
          if (i == j || rng.uniform() < density) inst.rows[i][0] |= std::uint64_t{1} << j;
        }
      }
      inst.need = 1 + rng.below(total);
      std::size_t exact = exact_min_partial_cover(inst);
      std::size_t brute = brute_force_min_partial_cover(inst);
      std::size_t greedy = greedy_partial_cover(inst).size();
      bad += exact != brute || greedy < exact;
    }
    record("exact partial cover vs exhaustive search", bad, trials);
  }
  return out;
}

}  // namespace fkent
