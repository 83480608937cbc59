#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "htmdp/mdp.hpp"

namespace htmdp {

struct NoNoise {};
struct UniformNoise {
  double half_width;
};
// Sign-symmetric Pareto: +-X with X >= scale and P(X > x) = (scale/x)^tail.
struct ParetoNoise {
  double tail;
  double scale;
};
// Arbitrary centred sampler; has no analytic moment certificate.
struct CustomNoise {
  std::function<double(Rng&)> draw;
};

using Noise = std::variant<NoNoise, UniformNoise, ParetoNoise, CustomNoise>;

// A loss distribution written as mean + zero-mean noise.
class LossModel {
 public:
  static LossModel point_mass(double value);
  static LossModel bounded_uniform(double lo, double hi);
  static LossModel symmetric_pareto(double tail, double scale);
  static LossModel custom(double mean, std::function<double(Rng&)> centered_draw);

  LossModel shifted(double offset) const;
  // Same noise around a different mean.
  LossModel with_mean(double mean) const;

  double mean() const { return mean_; }
  const Noise& noise() const { return noise_; }
  double sample(Rng& rng) const { return mean_ + sample_noise(rng); }
  double sample_noise(Rng& rng) const;

 private:
  LossModel(double mean, Noise noise) : mean_(mean), noise_(std::move(noise)) {}
  double mean_;
  Noise noise_;
};

double sample_loss(const LossModel& model, Rng& rng);

struct MomentCertificate {
  double bound;  // analytic E|l|^alpha, or an upper bound on it for shifted Pareto
  bool ok;       // bound <= sigma^alpha
};

// Exact for point masses, uniform and centred Pareto; for a shifted Pareto the
// power-mean bound 2^(alpha-1) (|mu|^alpha + E|X|^alpha). Throws
// UnsupportedError for custom noise.
MomentCertificate alpha_moment_certificate(const LossModel& model, double sigma, double alpha);

// Smallest sigma certified for the model.
double certified_sigma(const LossModel& model, double alpha);

// One loss model per (s, a), in layout pair order.
struct LossInstance {
  std::vector<LossModel> models;

  LossVector means(const MdpLayout& layout) const;
  const LossModel& at(const MdpLayout& layout, int s, int a) const { return models[layout.pair(s, a)]; }
};

struct OptimalValues {
  std::vector<double> value;  // V*
  LossVector q;               // Q*
  std::vector<int> actions;   // greedy actions, lowest index on ties
};

OptimalValues optimal_values(const MdpLayout& layout, const TransitionKernel& kernel, const LossVector& means);

// Deterministic minimiser of the expected loss; lowest action index on ties.
Policy benchmark_policy(const MdpLayout& layout, const TransitionKernel& kernel, const LossVector& means);

struct GapTable {
  LossVector gap;               // Q* - V*
  std::vector<int> benchmark;   // pi(s)
  double min_gap = 0.0;         // over suboptimal pairs
  double omega_alpha = 0.0;     // sum over a != pi(s) of gap^(-1/(alpha-1))
  double omega_two = 0.0;       // same with exponent -1
  bool omega_infinite = false;  // some suboptimal pair has zero gap
};

GapTable gap_table(const MdpLayout& layout, const TransitionKernel& kernel, const LossVector& means, double alpha);

// sum_t sum_{s,a} rho_t(s,a) gap(s,a)
double self_bounding_lower_term(const GapTable& gaps, std::span<const OccupancyMeasure> occupancies);

enum class RegimeKind { kStochastic, kFlip, kSinusoid, kCorrupted };

struct RegimeConfig {
  RegimeKind kind = RegimeKind::kStochastic;
  long long flip_period = 100;     // kFlip: the two best actions trade means while floor(t/K) is odd
  double amplitude = 0.1;          // kSinusoid
  long long sine_period = 1000;    // kSinusoid
  double corruption_budget = 0.0;  // kCorrupted: C_corr
  double corruption_shift = 0.0;   // kCorrupted: sup-norm shift per corrupted episode
  long long corruption_episodes = 0;
};

std::string regime_name(RegimeKind kind);
RegimeKind parse_regime(const std::string& name);

// Per-episode loss means. Shipped schedules are deterministic functions of
// the episode index, so they are F_{t-1}-measurable by construction; the
// history argument is available to user schedules.
class Regime {
 public:
  Regime(RegimeConfig config, const MdpLayout& layout, const TransitionKernel& kernel, LossVector base_means);

  const RegimeConfig& config() const { return config_; }
  LossVector means(long long t, std::span<const Trajectory> history = {}) const;
  // Average of means(t) over t = 1..T.
  LossVector average_means(long long T) const;
  // sum_t max_{s,a} |means(t) - base| over t = 1..T.
  double injected_corruption(long long T) const;
  // Largest |mean| a pair can take under the schedule.
  double max_abs_mean(int s, int a) const;

 private:
  RegimeConfig config_;
  MdpLayout layout_;
  LossVector base_;
  std::vector<int> best_;    // per state, best action under the base means
  std::vector<int> second_;  // per state, runner-up action
};

// The episode interface seen by learners: rolls out a policy under the true
// kernel and draws bandit feedback from the regime's means plus model noise.
class Environment {
 public:
  Environment(LayeredMdp mdp, LossInstance instance, Regime regime);

  const LayeredMdp& mdp() const { return mdp_; }
  const MdpLayout& layout() const { return mdp_.layout(); }
  const Regime& regime() const { return regime_; }
  const LossInstance& instance() const { return instance_; }
  long long next_episode() const { return episode_ + 1; }

  LossVector means(long long t) const { return regime_.means(t); }
  Trajectory rollout(const Policy& policy, Rng& rng);

  // Largest certified sigma over pairs and schedule means.
  double certified_sigma(double alpha) const;

 private:
  LayeredMdp mdp_;
  LossInstance instance_;
  Regime regime_;
  long long episode_ = 0;
};

// Shipped instances.
struct NamedInstance {
  LayeredMdp mdp;
  LossInstance losses;
};

// H=2, layers {1,2}, A=2, every suboptimal gap 0.3, symmetric-Pareto noise
// (tail 1.8) around means +-0.15.
NamedInstance default_instance();
// H=1, one state, A=3 bandit with the same noise.
NamedInstance bandit_instance();
// H=2, layers {1,3}, A=2 (S=4), used for confidence-set coverage runs.
NamedInstance coverage_instance();
NamedInstance instance_by_name(const std::string& name);

}  // namespace htmdp
