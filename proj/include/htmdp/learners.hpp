#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "htmdp/environments.hpp"
#include "htmdp/estimators.hpp"
#include "htmdp/mdp.hpp"
#include "htmdp/polytope_ftrl.hpp"
#include "htmdp/transition_confidence.hpp"

namespace htmdp {

// eta_t = beta / (sigma t^(1/alpha))
double om_learning_rate(long long t, const SkipParams& p);

// (sigma (t - t_i + 1)^(1/alpha))^-1, times beta when use_beta is set.
double uob_learning_rate(long long t, long long epoch_start, const SkipParams& p, bool use_beta);

struct TheoremParams {
  double D;      // H sigma
  double delta;  // T^-3
};
TheoremParams theorem_params(int H, double sigma, long long T);

struct LearnerOptions {
  double alpha = 1.5;
  double sigma = 1.0;
  long long horizon = 1;  // T, only the unknown-transition learner uses it (through delta)
  double floor = 1e-8;
  SolverOptions solver;
  bool use_beta = true;
  bool warm_start = true;
};

struct EpisodeRecord {
  long long episode = 0;
  int epoch = 1;
  bool epoch_advanced = false;
  double eta = 0.0;
  OccupancyMeasure x;  // FTRL iterate (over the true kernel, or the epoch's empirical kernel)
  Policy policy;
  Trajectory trajectory;
  SolveReport solve;
  int skip_events = 0;    // visited pairs whose loss exceeded tau
  LossVector weighted;    // importance-weighted skipped losses (before bonuses)
  LossVector bonus;       // b_skip
  LossVector penalty;     // D * B(s,a); zero for known transitions
  LossVector shifted;     // Q - V of `weighted` under the learner's kernel and pi_t
  OccupancyMeasure upper; // u_t; empty for known transitions
  double gate_ratio = 0.0;
  double feasibility = 0.0;  // flow violation of x in its polytope
};

class Learner {
 public:
  virtual ~Learner() = default;
  virtual std::string name() const = 0;
  virtual EpisodeRecord step(Environment& env, Rng& rng) = 0;
};

// Known transitions: FTRL over Q(P) with the importance-weighted skipping
// estimator and the skipping bonus.
class HtFtrlOm : public Learner {
 public:
  HtFtrlOm(const LayeredMdp& mdp, const LearnerOptions& options);

  std::string name() const override { return "ht_ftrl_om"; }
  EpisodeRecord step(Environment& env, Rng& rng) override;

  const SkipParams& params() const { return params_; }
  const LossVector& cumulative() const { return cumulative_; }
  long long episode() const { return t_; }

 private:
  LearnerOptions options_;
  TransitionKernel kernel_;
  PolytopeSpec spec_;
  SkipParams params_;
  LossVector cumulative_;
  FtrlWarmStart warm_;
  bool has_warm_ = false;
  long long t_ = 0;
};

struct EpochLogEntry {
  int epoch;
  long long start;
  long long trigger_episode;  // 0 while the epoch is still running
  StateAction trigger{-1, -1};
};

// Unknown transitions: FTRL over the empirical model of the current epoch,
// pessimistic estimator with upper occupancy bounds and width penalties, and
// doubling epochs.
class HtFtrlUob : public Learner {
 public:
  HtFtrlUob(const MdpLayout& layout, const LearnerOptions& options);

  std::string name() const override { return "ht_ftrl_uob"; }
  EpisodeRecord step(Environment& env, Rng& rng) override;

  const SkipParams& params() const { return params_; }
  const EpochModel& model() const { return model_; }
  const Counters& counters() const { return counters_; }
  const LossVector& cumulative() const { return cumulative_; }
  const std::vector<EpochLogEntry>& epoch_log() const { return log_; }
  double D() const { return D_; }
  double delta() const { return delta_; }

 private:
  void start_epoch();

  LearnerOptions options_;
  MdpLayout layout_;
  SkipParams params_;
  double D_;
  double delta_;
  double log_iota_;
  Counters counters_;
  EpochModel model_;
  std::unique_ptr<PolytopeSpec> spec_;  // refers to model_.confidence.center
  LossVector cumulative_;
  FtrlWarmStart warm_;
  bool has_warm_ = false;
  long long t_ = 0;
  std::vector<EpochLogEntry> log_;
};

// Plays the uniform policy forever.
class UniformBaseline : public Learner {
 public:
  explicit UniformBaseline(const LayeredMdp& mdp);
  std::string name() const override { return "uniform_baseline"; }
  EpisodeRecord step(Environment& env, Rng& rng) override;

 private:
  TransitionKernel kernel_;
  long long t_ = 0;
};

// Plays a fixed policy; with the benchmark policy its regret is identically 0.
class FixedPolicyLearner : public Learner {
 public:
  FixedPolicyLearner(const LayeredMdp& mdp, Policy policy);
  std::string name() const override { return "fixed_policy"; }
  EpisodeRecord step(Environment& env, Rng& rng) override;

 private:
  TransitionKernel kernel_;
  Policy policy_;
  long long t_ = 0;
};

}  // namespace htmdp
