#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "htmdp/errors.hpp"
#include "htmdp/estimators.hpp"
#include "htmdp/harness.hpp"
#include "htmdp/oracles.hpp"
#include "htmdp/polytope_ftrl.hpp"
#include "htmdp/transition_confidence.hpp"

namespace fs = std::filesystem;
namespace orc = htmdp::oracles;
using namespace htmdp;

namespace {

std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// --- run -----------------------------------------------------------------------

int cmd_run(const std::string& config_path, int workers, long long seed, const std::string& out) {
  ExperimentConfig config = ExperimentConfig::load(config_path);
  if (workers > 0) config.workers = workers;
  if (seed >= 0) config.seed = static_cast<std::uint64_t>(seed);
  if (!out.empty()) config.output_dir = out;
  config.validate();

  const auto results = run_experiment(config);
  export_results(results, config.output_dir);

  int unconverged = 0;
  for (const auto& rep : results.replicas) unconverged += rep.diagnostics.unconverged_solves;
  const auto mean = mean_regret(results);
  std::cout << "learner " << learner_name(config.learner) << ", " << config.replicas << " replicas of "
            << config.episodes << " episodes\n";
  std::cout << "mean final regret " << number(mean.empty() ? 0.0 : mean.back()) << "\n";
  if (results.benchmark_tie) std::cout << "benchmark tie: lowest-index policy used\n";
  if (unconverged > 0) std::cerr << "warning: " << unconverged << " solver calls did not certify convergence\n";
  std::cout << "results written to " << config.output_dir << "\n";
  return 0;
}

// --- fit -----------------------------------------------------------------------

int cmd_fit(const std::string& dir, double window_frac) {
  const auto results = load_results(dir);
  const auto series = mean_regret(results);
  if (series.size() < 2) throw ConfigError("series too short to fit");
  const auto fit = fit_shape(series, window_frac);
  std::cout << "window " << fit.window_begin << ".." << fit.window_end << "\n";
  std::cout << "exponent " << number(fit.exponent) << " (rms residual " << number(fit.power_residual) << ")\n";
  std::cout << "log coefficient " << number(fit.log_coefficient) << " (rms residual " << number(fit.log_residual)
            << ")\n";
  if (fit.shifted) std::cout << "fitted on regret + " << number(fit.shift) << " (nonpositive values in window)\n";
  return 0;
}

// --- compare -------------------------------------------------------------------

int cmd_compare(const std::vector<std::string>& dirs, double window_frac) {
  std::vector<ExperimentResults> all;
  all.reserve(dirs.size());
  for (const auto& d : dirs) all.push_back(load_results(d));
  write_comparison(std::cout, compare_regimes(all, window_frac));
  return 0;
}

// --- oracle-suite ----------------------------------------------------------------

MdpLayout small_layout(Rng& rng) {
  std::uniform_int_distribution<int> h(1, 3);
  std::uniform_int_distribution<int> w(1, 3);
  std::uniform_int_distribution<int> a(1, 3);
  std::vector<int> sizes{1};
  const int H = h(rng);
  for (int l = 1; l < H; ++l) sizes.push_back(w(rng));
  return MdpLayout(sizes, a(rng));
}

Policy mixed_policy(const MdpLayout& layout, Rng& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Policy p(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    double total = 0.0;
    for (int a = 0; a < layout.num_actions(); ++a) total += p(s, a) = u(rng);
    for (int a = 0; a < layout.num_actions(); ++a) p(s, a) /= total;
  }
  return p;
}

orc::OracleReport occupancy_suite(Rng& rng) {
  orc::OracleReport r{"occupancy_dp_vs_paths", 0.0, 0, 1e-12, true, ""};
  for (int i = 0; i < 100; ++i) {
    const auto layout = small_layout(rng);
    const auto kernel = random_kernel(layout, rng);
    const auto pi = mixed_policy(layout, rng);
    const auto dp = occupancy_from_policy(layout, kernel, pi);
    const auto bf = orc::brute_force_occupancy(layout, kernel, pi);
    for (size_t k = 0; k < dp.size(); ++k) {
      r.max_violation = std::max(r.max_violation, std::abs(dp.values()[k] - bf.values()[k]));
    }
    ++r.samples;
  }
  r.pass = r.max_violation <= r.tolerance;
  r.detail = "max |dp - paths|";
  return r;
}

orc::OracleReport ftrl_suite(Rng& rng) {
  orc::OracleReport r{"ftrl_vs_grid", 0.0, 0, 1e-6, true, ""};
  std::uniform_real_distribution<double> loss(-3.0, 3.0);
  std::uniform_real_distribution<double> rate(0.2, 3.0);
  const MdpLayout layout({1}, 3);
  const auto kernel = TransitionKernel::uniform(layout);
  const PolytopeSpec spec(kernel);
  for (int i = 0; i < 20; ++i) {
    const double alpha = i % 2 == 0 ? 1.5 : 2.0;
    const double eta = rate(rng);
    LossVector L(layout);
    for (int a = 0; a < 3; ++a) L(0, a) = loss(rng);
    const auto sol = ftrl_solve(spec, L, TsallisRegularizer::with_rate(alpha, eta), {1e-12, 10000});
    const double f = orc::simplex_objective(sol.x.row(0), L.row(0), alpha, eta);
    const auto grid = orc::brute_force_ftrl(L.row(0), alpha, eta, 1e-3);
    const double slack = orc::nearest_grid_objective(sol.x.row(0), L.row(0), alpha, eta, 1e-3) - f;
    r.max_violation = std::max({r.max_violation, f - grid.value, grid.value - f - slack});
    ++r.samples;
  }
  r.pass = r.max_violation <= r.tolerance;
  r.detail = "max of F(solver) - F(grid) and F(grid) - F(solver) - slack";
  return r;
}

orc::OracleReport uob_suite(Rng& rng) {
  orc::OracleReport r{"comp_uob_vs_box_grid", 0.0, 0, 2e-3, true, ""};
  std::uniform_real_distribution<double> width(0.005, 0.03);
  for (int i = 0; i < 10; ++i) {
    const MdpLayout layout = i % 2 == 0 ? MdpLayout({1, 2}, 2) : MdpLayout({1, 2, 2}, 1);
    ConfidenceSet set{random_kernel(layout, rng), TransitionKernel(layout), LossVector(layout)};
    for (int s = 0; s < layout.num_states(); ++s) {
      if (layout.layer_of(s) + 1 >= layout.horizon()) continue;
      for (int a = 0; a < layout.num_actions(); ++a) {
        for (auto& w : set.width.row(s, a)) w = width(rng);
      }
    }
    const auto pi = mixed_policy(layout, rng);
    const auto u = comp_uob(set, pi);
    const auto bf = orc::brute_force_uob(set.center, set.width, pi, 1e-3);
    for (size_t k = 0; k < u.size(); ++k) {
      r.max_violation = std::max(r.max_violation, std::abs(u.values()[k] - bf.values()[k]));
    }
    ++r.samples;
  }
  r.pass = r.max_violation <= r.tolerance;
  r.detail = "max |comp_uob - grid|";
  return r;
}

orc::OracleReport mass_suite(Rng& rng) {
  orc::OracleReport r{"mass_propagation", 0.0, 0, 1e-10, true, ""};
  for (int i = 0; i < 1000; ++i) {
    const auto layout = small_layout(rng);
    const auto kernel = random_kernel(layout, rng);
    const auto pi = mixed_policy(layout, rng);
    std::vector<int> dagger(static_cast<size_t>(layout.num_states()));
    std::uniform_int_distribution<int> act(0, layout.num_actions() - 1);
    for (auto& d : dagger) d = act(rng);
    const auto one = orc::check_mass_propagation(layout, kernel, pi, dagger);
    r.max_violation = std::max(r.max_violation, one.max_violation);
    r.pass = r.pass && one.pass;
    ++r.samples;
  }
  r.detail = "max (lhs - rhs)_+";
  return r;
}

std::vector<orc::OracleReport> shifted_suite() {
  ExperimentConfig cfg;
  cfg.instance = "default";
  cfg.episodes = 256;
  Environment probe = make_environment(cfg);
  const auto& layout = probe.layout();
  LearnerOptions opts;
  opts.alpha = cfg.alpha;
  opts.sigma = probe.certified_sigma(cfg.alpha);
  opts.horizon = cfg.episodes;
  const auto params = SkipParams::for_layout(layout, cfg.alpha, opts.sigma);
  orc::ShiftedBoundsChecker checker(
      layout, {layout.horizon(), layout.num_states(), layout.num_actions(), cfg.alpha, opts.sigma, params.C});
  for (int rep = 0; rep < 50; ++rep) {
    Environment env = make_environment(cfg);
    HtFtrlOm learner(env.mdp(), opts);
    Rng rng(9000 + static_cast<std::uint64_t>(rep));
    for (long long t = 1; t <= cfg.episodes; ++t) {
      const auto rec = learner.step(env, rng);
      checker.add(t, rec.x, rec.policy, rec.shifted);
    }
  }
  return {checker.uniform_report(), checker.centering_report(), checker.second_moment_report()};
}

orc::OracleReport skip_bias_suite(Rng& rng) {
  orc::OracleReport r{"skip_bias", 0.0, 0, 0.0, true, ""};
  const std::vector<std::pair<LossModel, double>> families{
      {LossModel::symmetric_pareto(1.8, 0.02).with_mean(0.15), 1.5},
      {LossModel::symmetric_pareto(1.8, 1.0), 1.5},
      {LossModel::symmetric_pareto(2.5, 1.0).with_mean(-0.3), 2.0},
      {LossModel::bounded_uniform(-1.0, 2.0), 1.5},
  };
  constexpr int kDraws = 200000;
  for (const auto& [model, alpha] : families) {
    const double sigma = certified_sigma(model, alpha);
    std::vector<double> draws(kDraws);
    for (auto& d : draws) d = model.sample(rng);
    for (double tau : {0.5, 1.0, 2.0, 5.0, 10.0}) {
      double sum = 0.0;
      double sq = 0.0;
      for (double l : draws) {
        const double diff = skipped_loss(l, tau) - l;
        sum += diff;
        sq += diff * diff;
      }
      const double mean = sum / kDraws;
      const double se = std::sqrt(std::max(0.0, sq / kDraws - mean * mean) / kDraws);
      const double bound = std::pow(sigma, alpha) * std::pow(tau, 1.0 - alpha);
      // Violation in units of the bound, after the 3-sigma allowance.
      r.max_violation = std::max(r.max_violation, (std::abs(mean) - 3.0 * se - bound) / bound);
      ++r.samples;
    }
  }
  r.max_violation = std::max(0.0, r.max_violation);
  r.pass = r.max_violation <= r.tolerance;
  r.detail = "relative excess of |bias| over the bound beyond 3 se";
  return r;
}

int cmd_oracle_suite(const std::string& dir) {
  Rng rng(20240601);
  std::vector<orc::OracleReport> reports;
  reports.push_back(occupancy_suite(rng));
  reports.push_back(ftrl_suite(rng));
  reports.push_back(uob_suite(rng));
  reports.push_back(mass_suite(rng));
  for (auto& r : shifted_suite()) reports.push_back(std::move(r));
  ExperimentConfig cfg;
  const double sigma = make_environment(cfg).certified_sigma(cfg.alpha);
  orc::PessimismSuite pess;
  pess.replicas = 40;
  pess.draws = 1000;
  reports.push_back(orc::check_pessimism(default_instance(), sigma, pess));
  reports.push_back(skip_bias_suite(rng));

  std::ostringstream out;
  out << "name,pass,max_violation,tolerance,samples,detail\n";
  bool all = true;
  for (const auto& r : reports) {
    all = all && r.pass;
    std::string detail = r.detail;
    for (char& c : detail) {
      if (c == ',' || c == '\n') c = ';';
    }
    out << r.name << ',' << (r.pass ? "PASS" : "FAIL") << ',' << number(r.max_violation) << ','
        << number(r.tolerance) << ',' << r.samples << ',' << detail << '\n';
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  max_violation " << number(r.max_violation) << "\n";
  }
  fs::create_directories(dir);
  write_file_atomically((fs::path(dir) / "oracle_report.csv").string(), out.str());
  std::cout << "report written to " << (fs::path(dir) / "oracle_report.csv").string() << "\n";
  return all ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-tailed episodic MDP learners: experiments, fits and oracle checks"};
  app.require_subcommand(1);

  std::string config_path;
  int workers = 0;
  long long seed = -1;
  std::string out;
  auto* run = app.add_subcommand("run", "Run the experiment described by a configuration file");
  run->add_option("--config", config_path, "Key-value configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "Worker threads over replicas (overrides the file)")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Master seed (overrides the file)")->check(CLI::NonNegativeNumber);
  run->add_option("--out", out, "Output directory (overrides output_dir)");

  std::string fit_dir;
  double window_frac = 0.125;
  auto* fit = app.add_subcommand("fit", "Fit growth shapes to the mean regret of a result directory");
  fit->add_option("--in", fit_dir, "Result directory")->required()->check(CLI::ExistingDirectory);
  fit->add_option("--window-frac", window_frac, "Window start as a fraction of T")->check(CLI::Range(0.0, 1.0));

  std::vector<std::string> compare_dirs;
  double compare_frac = 0.125;
  auto* compare = app.add_subcommand("compare", "Summarise result directories across regimes");
  compare->add_option("--in", compare_dirs, "Result directories")->required()->check(CLI::ExistingDirectory);
  compare->add_option("--window-frac", compare_frac, "Window start as a fraction of T")->check(CLI::Range(0.0, 1.0));

  std::string oracle_dir;
  auto* oracle = app.add_subcommand("oracle-suite", "Run the brute-force and lemma checks");
  oracle->add_option("--out", oracle_dir, "Directory for oracle_report.csv")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, workers, seed, out);
    if (*fit) return cmd_fit(fit_dir, window_frac);
    if (*compare) return cmd_compare(compare_dirs, compare_frac);
    if (*oracle) return cmd_oracle_suite(oracle_dir);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
