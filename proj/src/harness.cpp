#include "htmdp/harness.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <set>

#include "htmdp/errors.hpp"
#include "htmdp/mdp_io.hpp"

namespace htmdp {

std::string learner_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::kOm: return "ht_ftrl_om";
    case LearnerKind::kUob: return "ht_ftrl_uob";
    case LearnerKind::kUniform: return "uniform_baseline";
    case LearnerKind::kBenchmark: return "benchmark";
  }
  return "unknown";
}

LearnerKind parse_learner(const std::string& name) {
  if (name == "ht_ftrl_om") return LearnerKind::kOm;
  if (name == "ht_ftrl_uob") return LearnerKind::kUob;
  if (name == "uniform_baseline") return LearnerKind::kUniform;
  if (name == "benchmark") return LearnerKind::kBenchmark;
  throw ConfigError("unknown learner '" + name + "'");
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "instance", "mdp_file", "loss_means", "generator_seed", "layer_sizes", "actions",
      "noise", "noise_tail", "noise_scale", "noise_half_width", "regime", "flip_period",
      "amplitude", "sine_period", "corruption_budget", "corruption_shift", "corruption_episodes",
      "learner", "episodes", "replicas", "seed", "alpha", "sigma", "solver_tol", "solver_max_iter",
      "solver", "floor", "use_beta", "warm_start", "record_diagnostics", "output_dir", "format",
      "workers"};
  return keys;
}

std::string join_ints(const std::vector<int>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) out += (i ? " " : "") + std::to_string(values[i]);
  return out;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) out += (i ? " " : "") + format_double(values[i]);
  return out;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_key_values(const KeyValueFile& kv) {
  for (const auto& [key, value] : kv.entries()) {
    if (!known_keys().count(key)) throw ConfigError("unknown configuration key '" + key + "'");
  }
  ExperimentConfig c;
  c.instance = kv.get_or("instance", c.instance);
  c.mdp_file = kv.get_or("mdp_file", c.mdp_file);
  if (kv.has("loss_means")) c.loss_means = kv.get_doubles("loss_means");
  c.generator_seed = static_cast<std::uint64_t>(kv.get_int_or("generator_seed", 0));
  if (kv.has("layer_sizes")) c.layer_sizes = kv.get_ints("layer_sizes");
  c.actions = static_cast<int>(kv.get_int_or("actions", c.actions));
  c.noise = kv.get_or("noise", c.noise);
  c.noise_tail = kv.get_double_or("noise_tail", c.noise_tail);
  c.noise_scale = kv.get_double_or("noise_scale", c.noise_scale);
  c.noise_half_width = kv.get_double_or("noise_half_width", c.noise_half_width);
  c.regime.kind = parse_regime(kv.get_or("regime", "stochastic"));
  c.regime.flip_period = kv.get_int_or("flip_period", c.regime.flip_period);
  c.regime.amplitude = kv.get_double_or("amplitude", c.regime.amplitude);
  c.regime.sine_period = kv.get_int_or("sine_period", c.regime.sine_period);
  c.regime.corruption_budget = kv.get_double_or("corruption_budget", c.regime.corruption_budget);
  c.regime.corruption_shift = kv.get_double_or("corruption_shift", c.regime.corruption_shift);
  c.regime.corruption_episodes = kv.get_int_or("corruption_episodes", c.regime.corruption_episodes);
  c.learner = parse_learner(kv.get_or("learner", learner_name(c.learner)));
  c.episodes = kv.get_int_or("episodes", c.episodes);
  c.replicas = static_cast<int>(kv.get_int_or("replicas", c.replicas));
  c.seed = static_cast<std::uint64_t>(kv.get_int_or("seed", static_cast<long long>(c.seed)));
  c.alpha = kv.get_double_or("alpha", c.alpha);
  c.sigma = kv.get_double_or("sigma", c.sigma);
  c.solver_tol = kv.get_double_or("solver_tol", c.solver_tol);
  c.solver_max_iter = static_cast<int>(kv.get_int_or("solver_max_iter", c.solver_max_iter));
  const std::string solver = kv.get_or("solver", "newton");
  if (solver == "newton") {
    c.solver = SolverMethod::kDualNewton;
  } else if (solver == "frank_wolfe") {
    c.solver = SolverMethod::kFrankWolfe;
  } else {
    throw ConfigError("unknown solver '" + solver + "'");
  }
  c.floor = kv.get_double_or("floor", c.floor);
  c.use_beta = kv.get_bool_or("use_beta", c.use_beta);
  c.warm_start = kv.get_bool_or("warm_start", c.warm_start);
  c.record_diagnostics = kv.get_bool_or("record_diagnostics", c.record_diagnostics);
  c.output_dir = kv.get_or("output_dir", c.output_dir);
  c.format = kv.get_or("format", c.format);
  c.workers = static_cast<int>(kv.get_int_or("workers", c.workers));
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_key_values(KeyValueFile::load(path));
}

KeyValueFile ExperimentConfig::to_key_values() const {
  KeyValueFile kv;
  kv.set("instance", instance);
  if (!mdp_file.empty()) kv.set("mdp_file", mdp_file);
  if (!loss_means.empty()) kv.set("loss_means", join_doubles(loss_means));
  kv.set("generator_seed", std::to_string(generator_seed));
  kv.set("layer_sizes", join_ints(layer_sizes));
  kv.set("actions", std::to_string(actions));
  kv.set("noise", noise);
  kv.set("noise_tail", format_double(noise_tail));
  kv.set("noise_scale", format_double(noise_scale));
  kv.set("noise_half_width", format_double(noise_half_width));
  kv.set("regime", regime_name(regime.kind));
  kv.set("flip_period", std::to_string(regime.flip_period));
  kv.set("amplitude", format_double(regime.amplitude));
  kv.set("sine_period", std::to_string(regime.sine_period));
  kv.set("corruption_budget", format_double(regime.corruption_budget));
  kv.set("corruption_shift", format_double(regime.corruption_shift));
  kv.set("corruption_episodes", std::to_string(regime.corruption_episodes));
  kv.set("learner", learner_name(learner));
  kv.set("episodes", std::to_string(episodes));
  kv.set("replicas", std::to_string(replicas));
  kv.set("seed", std::to_string(seed));
  kv.set("alpha", format_double(alpha));
  kv.set("sigma", format_double(sigma));
  kv.set("solver_tol", format_double(solver_tol));
  kv.set("solver_max_iter", std::to_string(solver_max_iter));
  kv.set("solver", solver == SolverMethod::kDualNewton ? "newton" : "frank_wolfe");
  kv.set("floor", format_double(floor));
  kv.set("use_beta", use_beta ? "true" : "false");
  kv.set("warm_start", warm_start ? "true" : "false");
  kv.set("record_diagnostics", record_diagnostics ? "true" : "false");
  kv.set("format", format);
  return kv;
}

void ExperimentConfig::validate() const {
  if (episodes < 1) throw ConfigError("episodes must be at least 1");
  if (replicas < 1) throw ConfigError("replicas must be at least 1");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (!(alpha > 1.0 && alpha <= 2.0)) throw ConfigError("alpha must lie in (1, 2]");
  if (sigma < 0.0) throw ConfigError("sigma must be non-negative");
  if (!(solver_tol > 0.0)) throw ConfigError("solver_tol must be positive");
  if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
  if (noise != "pareto" && noise != "uniform" && noise != "none") {
    throw ConfigError("noise must be pareto, uniform or none");
  }
  if (instance == "file" && mdp_file.empty()) throw ConfigError("instance = file needs mdp_file");
}

namespace {

LossModel configured_noise(const ExperimentConfig& c, double mean) {
  if (c.noise == "pareto") return LossModel::symmetric_pareto(c.noise_tail, c.noise_scale).with_mean(mean);
  if (c.noise == "uniform") return LossModel::bounded_uniform(mean - c.noise_half_width, mean + c.noise_half_width);
  return LossModel::point_mass(mean);
}

NamedInstance configured_instance(const ExperimentConfig& c) {
  if (c.instance == "random" || c.instance == "file") {
    LayeredMdp mdp;
    std::vector<double> means = c.loss_means;
    if (c.instance == "random") {
      MdpLayout layout(c.layer_sizes, c.actions);
      Rng rng(c.generator_seed);
      mdp.transition = random_kernel(layout, rng);
      std::uniform_real_distribution<double> unit(-0.5, 0.5);
      means.resize(layout.num_pairs());
      for (double& m : means) m = unit(rng);
    } else {
      mdp = load_mdp(c.mdp_file);
    }
    if (static_cast<int>(means.size()) != mdp.layout().num_pairs()) {
      throw ConfigError("loss_means needs one value per state-action pair");
    }
    LossInstance losses;
    for (double m : means) losses.models.push_back(configured_noise(c, m));
    return {std::move(mdp), std::move(losses)};
  }
  return instance_by_name(c.instance);
}

struct BenchmarkInfo {
  Policy policy;
  std::vector<int> actions;
  bool tie = false;
};

BenchmarkInfo benchmark_for(const Environment& env, long long T, double alpha) {
  const auto& layout = env.layout();
  const LossVector avg = env.regime().average_means(T);
  const GapTable gaps = gap_table(layout, env.mdp().transition, avg, alpha);
  BenchmarkInfo info;
  info.actions = gaps.benchmark;
  info.policy = deterministic_policy(layout, gaps.benchmark);
  info.tie = layout.num_actions() > 1 && gaps.min_gap <= 1e-12;
  return info;
}

double resolved_sigma(const ExperimentConfig& config, const Environment& env) {
  const double certified = env.certified_sigma(config.alpha);
  if (config.sigma == 0.0) return certified;
  if (config.sigma < certified) {
    throw ConfigError("sigma = " + format_double(config.sigma) + " is below the certified bound " +
                      format_double(certified));
  }
  return config.sigma;
}

}  // namespace

Environment make_environment(const ExperimentConfig& config) {
  NamedInstance inst = configured_instance(config);
  const LossVector base = inst.losses.means(inst.mdp.layout());
  Regime regime(config.regime, inst.mdp.layout(), inst.mdp.transition, base);
  return Environment(std::move(inst.mdp), std::move(inst.losses), std::move(regime));
}

ReplicaSeries run_replica(const ExperimentConfig& config, int replica) {
  Environment env = make_environment(config);
  const auto& layout = env.layout();
  const TransitionKernel& P = env.mdp().transition;
  const double sigma = resolved_sigma(config, env);
  const BenchmarkInfo bench = benchmark_for(env, config.episodes, config.alpha);
  const OccupancyMeasure bench_rho = occupancy_from_policy(layout, P, bench.policy);

  LearnerOptions options;
  options.alpha = config.alpha;
  options.sigma = sigma;
  options.horizon = config.episodes;
  options.floor = config.floor;
  options.solver = {config.solver_tol, config.solver_max_iter, config.solver};
  options.use_beta = config.use_beta;
  options.warm_start = config.warm_start;

  std::unique_ptr<Learner> learner;
  HtFtrlUob* uob = nullptr;
  switch (config.learner) {
    case LearnerKind::kOm: learner = std::make_unique<HtFtrlOm>(env.mdp(), options); break;
    case LearnerKind::kUob: {
      auto owned = std::make_unique<HtFtrlUob>(layout, options);
      uob = owned.get();
      learner = std::move(owned);
      break;
    }
    case LearnerKind::kUniform: learner = std::make_unique<UniformBaseline>(env.mdp()); break;
    case LearnerKind::kBenchmark: learner = std::make_unique<FixedPolicyLearner>(env.mdp(), bench.policy); break;
  }

  ReplicaSeries series;
  series.replica = replica;
  const auto T = static_cast<size_t>(config.episodes);
  series.regret.reserve(T);
  series.loss_policy.reserve(T);
  series.loss_benchmark.reserve(T);
  series.epoch.reserve(T);
  series.solver_gap.reserve(T);
  series.skip_events.reserve(T);
  auto& diag = series.diagnostics;
  if (uob != nullptr && config.record_diagnostics) {
    diag.kernel_always_covered = uob->model().confidence.contains(P, 1e-12);
  }

  Rng rng(config.seed + static_cast<std::uint64_t>(replica));
  const double S = layout.num_states();
  double cumulative = 0.0;
  for (long long t = 1; t <= config.episodes; ++t) {
    const EpisodeRecord rec = learner->step(env, rng);
    const LossVector means = env.means(t);
    const double policy_loss = inner(occupancy_from_policy(layout, P, rec.policy), means);
    const double bench_loss = inner(bench_rho, means);
    cumulative += policy_loss - bench_loss;
    series.regret.push_back(cumulative);
    series.loss_policy.push_back(policy_loss);
    series.loss_benchmark.push_back(bench_loss);
    series.epoch.push_back(rec.epoch);
    series.solver_gap.push_back(rec.solve.gap);
    series.skip_events.push_back(rec.skip_events);
    diag.skip_events += rec.skip_events;
    if (!rec.solve.converged) ++diag.unconverged_solves;
    if (!config.record_diagnostics) continue;
    diag.max_gate_ratio = std::max(diag.max_gate_ratio, rec.gate_ratio);
    diag.max_feasibility = std::max(diag.max_feasibility, rec.feasibility);
    if (uob == nullptr) continue;
    const auto upper_state = state_marginal(rec.upper);
    for (int s = 0; s < layout.num_states(); ++s) {
      if (upper_state[s] < 1.0 / (S * static_cast<double>(t))) ++diag.uob_floor_violations;
      for (int a = 0; a < layout.num_actions(); ++a) {
        if (rec.upper(s, a) < rec.x(s, a) - 1e-12 * std::max(1.0, rec.x(s, a))) ++diag.uob_dominance_violations;
      }
    }
    if (rec.epoch_advanced && !uob->model().confidence.contains(P, 1e-12)) diag.kernel_always_covered = false;
  }
  if (uob != nullptr) {
    series.epoch_log = uob->epoch_log();
    diag.epochs = uob->model().epoch;
  }
  return series;
}

namespace {

ExperimentResults results_shell(const ExperimentConfig& config) {
  config.validate();
  ExperimentResults results;
  results.config = config;
  const Environment env = make_environment(config);
  results.sigma = resolved_sigma(config, env);
  const BenchmarkInfo bench = benchmark_for(env, config.episodes, config.alpha);
  results.benchmark = bench.actions;
  results.benchmark_tie = bench.tie;
  results.replicas.resize(config.replicas);
  return results;
}

}  // namespace

ExperimentResults run_experiment(const ExperimentConfig& config) {
  ExperimentResults results = results_shell(config);
  std::vector<std::exception_ptr> errors(config.replicas);
#pragma omp parallel for schedule(dynamic, 1) num_threads(config.workers)
  for (int r = 0; r < config.replicas; ++r) {
    try {
      results.replicas[r] = run_replica(config, r);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

ExperimentResults run_experiment_serial(const ExperimentConfig& config) {
  ExperimentResults results = results_shell(config);
  for (int r = 0; r < config.replicas; ++r) results.replicas[r] = run_replica(config, r);
  return results;
}

std::vector<double> mean_regret(const ExperimentResults& results) {
  if (results.replicas.empty()) return {};
  std::vector<double> mean(results.replicas.front().regret.size(), 0.0);
  for (const auto& rep : results.replicas) {
    if (rep.regret.size() != mean.size()) throw StructuralError("replicas have different lengths");
    for (size_t t = 0; t < mean.size(); ++t) mean[t] += rep.regret[t];
  }
  for (double& v : mean) v /= static_cast<double>(results.replicas.size());
  return mean;
}

}  // namespace htmdp
