// fkent command line: entropy experiments, oracles and the self test.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fkent/errors.hpp"
#include "fkent/harness.hpp"
#include "fkent/oracles.hpp"
#include "fkent/parallel.hpp"
#include "fkent/random.hpp"
#include "fkent/rds.hpp"

namespace {

using namespace fkent;

struct ExperimentFlags {
  std::string config_path;
  std::string family;
  std::vector<int> params;
  std::optional<std::size_t> dim;
  std::string fiber_metric;
  std::vector<double> p;
  std::vector<std::size_t> n;
  std::vector<double> eps;
  std::vector<double> delta;
  std::optional<std::size_t> M;
  std::optional<std::size_t> omega_samples;
  std::optional<std::size_t> candidates;
  std::optional<std::size_t> base_points;
  std::vector<std::string> metrics;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool quiet = false;
};

void add_experiment_flags(CLI::App* app, ExperimentFlags& f) {
  app->add_option("--config", f.config_path, "JSON experiment config");
  app->add_option("--family", f.family, "expanding | tent | full_shift");
  app->add_option("--m,--k,--params", f.params, "per-symbol expansion factor or alphabet size")
      ->delimiter(',');
  app->add_option("--dim", f.dim, "torus dimension");
  app->add_option("--fiber-metric", f.fiber_metric, "full_shift metric: cylinder | discrete");
  app->add_option("--p", f.p, "Bernoulli driving law")->delimiter(',');
  app->add_option("--n", f.n, "n schedule")->delimiter(',');
  app->add_option("--eps", f.eps, "eps schedule (decreasing)")->delimiter(',');
  app->add_option("--delta", f.delta, "delta schedule (decreasing)")->delimiter(',');
  app->add_option("--M", f.M, "sample budget");
  app->add_option("--omega-samples", f.omega_samples, "number of sampled omega paths");
  app->add_option("--candidates", f.candidates, "candidate budget");
  app->add_option("--base-points", f.base_points, "base points per omega");
  app->add_option("--metrics", f.metrics, "bowen,fk")->delimiter(',');
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--out", f.out, "output directory for report.json and CSVs");
  app->add_flag("--quiet", f.quiet, "print nothing on success");
}

ExperimentConfig build_config(const ExperimentFlags& f) {
  ExperimentConfig c = f.config_path.empty() ? ExperimentConfig{} : load_config(f.config_path);
  if (!f.family.empty()) c.system.family = f.family;
  if (!f.params.empty()) c.system.params = f.params;
  if (f.dim) c.system.dim = *f.dim;
  if (!f.fiber_metric.empty()) c.system.metric = f.fiber_metric;
  if (!f.p.empty()) {
    c.driving.law = "bernoulli";
    c.driving.p = f.p;
  }
  if (!f.n.empty()) c.n_values = f.n;
  if (!f.eps.empty()) c.eps_values = f.eps;
  if (!f.delta.empty()) c.delta_values = f.delta;
  if (f.M) c.M = f.M;
  if (f.omega_samples) c.omega_samples = f.omega_samples;
  if (f.candidates) c.candidates = f.candidates;
  if (f.base_points) c.base_points = f.base_points;
  if (!f.metrics.empty()) c.metrics = f.metrics;
  if (f.seed) c.seed = *f.seed;
  if (!f.out.empty()) c.output_dir = f.out;
  return c;
}

int run_experiment(Command command, const ExperimentFlags& f) {
  ExperimentConfig c = build_config(f);
  Report r = run(command, c);
  if (!c.output_dir.empty()) {
    write_report(r, c.output_dir);
  }
  if (!f.quiet) {
    nlohmann::json summary;
    summary["command"] = r.json["command"];
    summary["estimates"] = r.json["estimates"];
    summary["oracle"] = r.json["oracle"];
    summary["violations"] = r.violations;
    if (r.json.contains("warnings") && !r.json["warnings"].empty()) {
      summary["warnings"] = r.json["warnings"].size();
    }
    std::cout << summary.dump(2) << '\n';
  }
  if (!r.violations.empty()) {
    throw InvariantViolation(std::to_string(r.violations.size()) +
                             " invariant violation(s), first: " + r.violations.front());
  }
  return 0;
}

struct OracleFlags {
  double eps = 0.0;
  std::vector<int> factors;
  std::vector<double> p;
  std::vector<unsigned> path;
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  int precision = 4;
};

void print_value(double v, int precision) { std::printf("%.*f\n", precision, v); }

void print_count(const OracleValue& v, int precision) {
  if (v.exact) {
    std::printf("%llu\n", static_cast<unsigned long long>(*v.exact));
  } else {
    std::printf("exp(%.*f)\n", precision, v.log_value);
  }
}

OmegaPath oracle_path(const OracleFlags& f) {
  if (!f.path.empty()) {
    return OmegaPath(std::vector<BaseSymbol>(f.path.begin(), f.path.end()), 0);
  }
  std::vector<double> p = f.p;
  if (p.empty()) p.assign(f.factors.size(), 1.0 / static_cast<double>(f.factors.size()));
  return sample_path(DrivingProcess::bernoulli(p), std::max<std::size_t>(f.n, 1), f.seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entropy of random dynamical systems under the Bowen and Feldman-Katok metrics"};
  app.require_subcommand(1);
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker threads (default FKENT_THREADS or all cores)");

  ExperimentFlags flags;
  std::optional<Command> command;
  for (auto c : {Command::estimate_top, Command::estimate_local, Command::estimate_katok,
                 Command::compare_top, Command::compare_local, Command::compare_katok}) {
    auto* sub = app.add_subcommand(to_string(c), "run " + to_string(c));
    add_experiment_flags(sub, flags);
    sub->callback([&command, c] { command = c; });
  }

  OracleFlags of;
  auto* oracle = app.add_subcommand("oracle", "exact reference values");
  oracle->require_subcommand(1);
  oracle->add_option("--precision", of.precision, "digits after the decimal point");
  std::function<void()> oracle_action;

  auto* stirling = oracle->add_subcommand("stirling", "-(1-eps)log(1-eps) - eps log eps");
  stirling->add_option("--eps", of.eps)->required();
  stirling->callback([&] { oracle_action = [&] { print_value(stirling_rate(of.eps), of.precision); }; });

  auto* branch = oracle->add_subcommand("branch", "branch count of T^n along a path");
  branch->add_option("--m", of.factors)->delimiter(',')->required();
  branch->add_option("--path", of.path)->delimiter(',');
  branch->add_option("--p", of.p)->delimiter(',');
  branch->add_option("--n", of.n)->required();
  branch->add_option("--seed", of.seed);
  branch->callback([&] {
    oracle_action = [&] {
      auto sys = RandomSystem::expanding(of.factors);
      print_count(branch_count(sys, oracle_path(of), of.n), of.precision);
    };
  });

  auto* word = oracle->add_subcommand("word", "number of n-words of a random full shift");
  word->add_option("--k", of.factors)->delimiter(',')->required();
  word->add_option("--path", of.path)->delimiter(',');
  word->add_option("--p", of.p)->delimiter(',');
  word->add_option("--n", of.n)->required();
  word->add_option("--seed", of.seed);
  word->callback([&] {
    oracle_action = [&] {
      auto sys = RandomSystem::full_shift(of.factors);
      print_count(word_count(sys, oracle_path(of), of.n), of.precision);
    };
  });

  auto* bound = oracle->add_subcommand("match-bound", "C(n,k)^2");
  bound->add_option("--n", of.n)->required();
  bound->add_option("--k", of.k)->required();
  bound->callback([&] { oracle_action = [&] { print_count(match_count_bound(of.n, of.k), of.precision); }; });

  auto* kappa = oracle->add_subcommand("kappa", "largest grid kappa meeting the eps/2 budget");
  kappa->add_option("--eps", of.eps)->required();
  kappa->add_option("--k", of.k, "partition size")->required();
  kappa->callback([&] {
    oracle_action = [&] {
      double kv = choose_kappa(of.eps, of.k);
      std::printf("%.17g %.17g\n", kv, proof_correction_term(kv, of.k));
    };
  });

  auto* entropy = oracle->add_subcommand("entropy", "sum p_s log m_s under the stationary law");
  entropy->add_option("--m", of.factors)->delimiter(',')->required();
  entropy->add_option("--p", of.p)->delimiter(',');
  entropy->callback([&] {
    oracle_action = [&] {
      std::vector<double> p = of.p;
      if (p.empty()) p.assign(of.factors.size(), 1.0 / static_cast<double>(of.factors.size()));
      auto process = DrivingProcess::bernoulli(p);
      if (process.alphabet_size() != of.factors.size()) {
        throw ConfigError("--p: length must match --m");
      }
      print_value(expected_entropy(RandomSystem::expanding(of.factors), process.stationary()),
                  of.precision);
    };
  });

  std::uint64_t selftest_seed = 1;
  bool run_selftest = false;
  auto* st = app.add_subcommand("selftest", "DP, metric and oracle self checks");
  st->add_option("--seed", selftest_seed);
  st->callback([&] { run_selftest = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    set_worker_count(threads);
    if (command) {
      return run_experiment(*command, flags);
    }
    if (oracle_action) {
      oracle_action();
      return 0;
    }
    if (run_selftest) {
      bool ok = true;
      for (const auto& c : selftest(selftest_seed)) {
        std::printf("%s %s (%s)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        ok = ok && c.passed;
      }
      return ok ? 0 : 3;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "fkent: %s\n", e.what());
    return exit_code_for(e);
  }
  return 0;
}
