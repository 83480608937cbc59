#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "htmdp/environments.hpp"
#include "htmdp/key_value.hpp"
#include "htmdp/learners.hpp"

namespace htmdp {

enum class LearnerKind { kOm, kUob, kUniform, kBenchmark };

std::string learner_name(LearnerKind kind);
LearnerKind parse_learner(const std::string& name);

// Every field maps to one key of the experiment file; see README for the
// schema. Keys not listed are rejected.
struct ExperimentConfig {
  // Instance: a shipped name ("default", "bandit", "coverage"), "random"
  // (kernel and means drawn from generator_seed), or "file" (mdp_file plus
  // loss_means, one value per pair in state-major order).
  std::string instance = "default";
  std::string mdp_file;
  std::vector<double> loss_means;
  std::uint64_t generator_seed = 0;
  std::vector<int> layer_sizes{1, 2};
  int actions = 2;
  // Noise for "random" and "file" instances.
  std::string noise = "pareto";  // pareto | uniform | none
  double noise_tail = 1.8;
  double noise_scale = 0.02;
  double noise_half_width = 0.5;

  RegimeConfig regime;
  LearnerKind learner = LearnerKind::kOm;
  long long episodes = 1024;
  int replicas = 1;
  std::uint64_t seed = 1;
  double alpha = 1.5;
  double sigma = 0.0;  // 0 means "use the certified bound of the instance"
  double solver_tol = 1e-8;
  int solver_max_iter = 10000;
  SolverMethod solver = SolverMethod::kDualNewton;
  double floor = 1e-8;
  bool use_beta = true;
  bool warm_start = true;
  bool record_diagnostics = true;
  std::string output_dir = "results";
  std::string format = "csv";  // csv | json
  int workers = 1;

  static ExperimentConfig from_key_values(const KeyValueFile& kv);
  static ExperimentConfig load(const std::string& path);
  KeyValueFile to_key_values() const;
  void validate() const;
};

// Builds the environment (instance + regime) named by the configuration.
Environment make_environment(const ExperimentConfig& config);

// Per-replica diagnostics gathered while the learner runs.
struct ReplicaDiagnostics {
  double max_gate_ratio = 0.0;
  double max_feasibility = 0.0;
  int unconverged_solves = 0;
  long long skip_events = 0;
  int epochs = 1;
  // Unknown transitions only.
  long long uob_dominance_violations = 0;  // u_t(s,a) < x_t(s,a)
  long long uob_floor_violations = 0;      // u_t(s) < 1/(S t)
  bool kernel_always_covered = true;       // P inside every epoch's confidence set
};

struct ReplicaSeries {
  int replica = 0;
  std::vector<double> regret;  // cumulative
  std::vector<double> loss_policy;
  std::vector<double> loss_benchmark;
  std::vector<int> epoch;
  std::vector<double> solver_gap;
  std::vector<int> skip_events;
  ReplicaDiagnostics diagnostics;
  std::vector<EpochLogEntry> epoch_log;

  bool operator==(const ReplicaSeries& other) const {
    return replica == other.replica && regret == other.regret && loss_policy == other.loss_policy &&
           loss_benchmark == other.loss_benchmark && epoch == other.epoch && solver_gap == other.solver_gap &&
           skip_events == other.skip_events;
  }
};

struct ExperimentResults {
  ExperimentConfig config;
  double sigma = 0.0;
  std::vector<int> benchmark;  // pi(s) from the time-averaged means
  bool benchmark_tie = false;  // the averaged means do not single out pi
  std::vector<ReplicaSeries> replicas;
};

// One replica, fully serial. Replica r uses seed config.seed + r.
ReplicaSeries run_replica(const ExperimentConfig& config, int replica);

// Runs every replica. With workers > 1 the replicas are spread over an
// OpenMP team; the output does not depend on the worker count.
ExperimentResults run_experiment(const ExperimentConfig& config);
// Same result through a plain loop, kept as the reference for the parallel path.
ExperimentResults run_experiment_serial(const ExperimentConfig& config);

// Mean cumulative regret across replicas, episode by episode.
std::vector<double> mean_regret(const ExperimentResults& results);

// --- export -----------------------------------------------------------------

// Header: episode,replica,regret,expected_loss_pi_t,expected_loss_benchmark,
// epoch,solver_gap,skip_events. Numbers use 17 significant digits.
void write_series_csv(std::ostream& out, const std::vector<ReplicaSeries>& replicas);
std::vector<ReplicaSeries> read_series_csv(std::istream& in);
void write_series_json(std::ostream& out, const std::vector<ReplicaSeries>& replicas);
std::vector<ReplicaSeries> read_series_json(std::istream& in);

// Writes config.txt, series.{csv,json}, replicas.csv and epochs.csv into
// `dir` (created if needed). Each file is written to a temporary name and
// renamed into place. Throws std::runtime_error on I/O failure.
void export_results(const ExperimentResults& results, const std::string& dir);
// Reads a directory produced by export_results. Diagnostics that are not in
// the series file come back from replicas.csv.
ExperimentResults load_results(const std::string& dir);

void write_file_atomically(const std::string& path, const std::string& contents);

// --- analysis ---------------------------------------------------------------

struct ShapeFit {
  double exponent = 0.0;         // slope of log(regret) against log(t)
  double intercept = 0.0;        // log c in regret ~ c t^p
  double power_residual = 0.0;   // RMS residual of the log-log fit
  double log_coefficient = 0.0;  // c in regret ~ c log t (least squares through the origin)
  double log_residual = 0.0;     // RMS residual of that fit
  long long window_begin = 0;
  long long window_end = 0;
  bool shifted = false;  // fitted on regret + shift because of nonpositive values
  double shift = 0.0;
};

// series[t-1] is the regret after episode t. The window is
// [ceil(window_frac * T), T].
ShapeFit fit_shape(const std::vector<double>& series, double window_frac = 0.125);

struct RegimeRow {
  std::string learner;
  std::string regime;
  int replicas = 0;
  double mean_final_regret = 0.0;
  double stderr_final_regret = 0.0;
  ShapeFit fit;
  bool benchmark_tie = false;
  std::string verdict;  // PASS, FAIL or n/a
  std::string criterion;
};

// Rows in input order. Verdicts: known transitions need exponent <= 0.35 in
// the stochastic regime and exponent in [1/alpha - 0.2, 1/alpha + 0.25]
// under flips; unknown transitions need <= 0.4 and <= max(1/alpha, 1/2) + 0.25.
std::vector<RegimeRow> compare_regimes(const std::vector<ExperimentResults>& results,
                                       double window_frac = 0.125);
void write_comparison(std::ostream& out, const std::vector<RegimeRow>& rows);

}  // namespace htmdp
