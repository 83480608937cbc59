#include "htmdp/learners.hpp"

#include <algorithm>
#include <cmath>

#include "htmdp/errors.hpp"

namespace htmdp {

double om_learning_rate(long long t, const SkipParams& p) {
  if (t < 1) throw DomainError("episode index must be at least 1");
  return p.beta / (p.sigma * std::pow(static_cast<double>(t), 1.0 / p.alpha));
}

double uob_learning_rate(long long t, long long epoch_start, const SkipParams& p, bool use_beta) {
  if (t < epoch_start) throw DomainError("episode precedes the epoch start");
  const double clock = static_cast<double>(t - epoch_start + 1);
  const double eta = 1.0 / (p.sigma * std::pow(clock, 1.0 / p.alpha));
  return use_beta ? p.beta * eta : eta;
}

TheoremParams theorem_params(int H, double sigma, long long T) {
  if (T < 1) throw DomainError("T must be at least 1");
  const double t = static_cast<double>(T);
  return {H * sigma, 1.0 / (t * t * t)};
}

namespace {

int count_skips(const Trajectory& traj, const LossVector& tau) {
  int events = 0;
  for (const auto& step : traj.steps) {
    if (std::abs(step.loss) > tau(step.state, step.action)) ++events;
  }
  return events;
}

}  // namespace

HtFtrlOm::HtFtrlOm(const LayeredMdp& mdp, const LearnerOptions& options)
    : options_(options),
      kernel_(mdp.transition),
      spec_(kernel_, options.floor),
      params_(SkipParams::for_layout(mdp.layout(), options.alpha, options.sigma)),
      cumulative_(mdp.layout()) {}

EpisodeRecord HtFtrlOm::step(Environment& env, Rng& rng) {
  const MdpLayout& layout = kernel_.layout();
  ++t_;
  EpisodeRecord rec;
  rec.episode = t_;
  rec.eta = om_learning_rate(t_, params_);
  const auto reg = TsallisRegularizer::with_rate(params_.alpha, rec.eta);
  auto sol = ftrl_solve(spec_, cumulative_, reg, options_.solver,
                        options_.warm_start && has_warm_ ? &warm_ : nullptr);
  warm_ = std::move(sol.warm);
  has_warm_ = true;
  rec.x = std::move(sol.x);
  rec.solve = sol.report;
  rec.feasibility = occupancy_violation(layout, kernel_, rec.x);
  rec.policy = policy_from_occupancy(layout, rec.x);
  rec.trajectory = env.rollout(rec.policy, rng);

  rec.weighted = LossVector(layout);
  rec.bonus = LossVector(layout);
  rec.penalty = LossVector(layout);
  LossVector tau(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      const double x = rec.x(s, a);
      if (x > 0.0) {
        tau(s, a) = skip_threshold(t_, x, params_);
        rec.bonus(s, a) = skip_bonus(t_, x, params_);
      }
    }
  }
  for (const auto& st : rec.trajectory.steps) {
    const double skipped = skipped_loss(st.loss, tau(st.state, st.action));
    rec.weighted(st.state, st.action) = is_estimator_known(skipped, rec.x(st.state, st.action), true);
  }
  rec.skip_events = count_skips(rec.trajectory, tau);
  rec.shifted = shifted_loss(layout, kernel_, rec.policy, rec.weighted);
  rec.gate_ratio = stability_gate_ratio(rec.x, rec.shifted, rec.bonus, params_.alpha, rec.eta);

  auto L = cumulative_.values();
  for (size_t i = 0; i < L.size(); ++i) L[i] += rec.weighted.values()[i] - rec.bonus.values()[i];
  return rec;
}

HtFtrlUob::HtFtrlUob(const MdpLayout& layout, const LearnerOptions& options)
    : options_(options),
      layout_(layout),
      params_(SkipParams::for_layout(layout, options.alpha, options.sigma)),
      counters_(layout),
      cumulative_(layout) {
  const auto tp = theorem_params(layout.horizon(), options.sigma, options.horizon);
  D_ = tp.D;
  delta_ = tp.delta;
  log_iota_ = log_iota(layout, options.horizon, delta_);
  model_ = initial_epoch_model(layout, log_iota_);
  start_epoch();
}

void HtFtrlUob::start_epoch() {
  spec_ = std::make_unique<PolytopeSpec>(model_.confidence.center, options_.floor);
  cumulative_ = LossVector(layout_);
  has_warm_ = false;
  log_.push_back({model_.epoch, model_.start, 0, {-1, -1}});
}

EpisodeRecord HtFtrlUob::step(Environment& env, Rng& rng) {
  ++t_;
  const long long clock = t_ - model_.start + 1;
  EpisodeRecord rec;
  rec.episode = t_;
  rec.epoch = model_.epoch;
  rec.eta = uob_learning_rate(t_, model_.start, params_, options_.use_beta);
  const auto reg = TsallisRegularizer::with_rate(params_.alpha, rec.eta);
  auto sol = ftrl_solve(*spec_, cumulative_, reg, options_.solver,
                        options_.warm_start && has_warm_ ? &warm_ : nullptr);
  warm_ = std::move(sol.warm);
  has_warm_ = true;
  rec.x = std::move(sol.x);
  rec.solve = sol.report;
  const TransitionKernel& center = model_.confidence.center;
  rec.feasibility = occupancy_violation(layout_, center, rec.x);
  rec.policy = policy_from_occupancy(layout_, rec.x);
  rec.trajectory = env.rollout(rec.policy, rng);
  counters_.update(rec.trajectory);
  rec.upper = comp_uob(model_.confidence, rec.policy);

  rec.weighted = LossVector(layout_);
  rec.bonus = LossVector(layout_);
  rec.penalty = LossVector(layout_);
  LossVector tau(layout_);
  const auto& reference = spec_->uniform_occupancy();
  for (int s = 0; s < layout_.num_states(); ++s) {
    for (int a = 0; a < layout_.num_actions(); ++a) {
      rec.penalty(s, a) = D_ * model_.confidence.aggregate(s, a);
      // Pairs the empirical model cannot reach carry x = 0: no threshold and
      // no bonus there.
      if (reference(s, a) > 0.0 && rec.x(s, a) > 0.0) {
        tau(s, a) = skip_threshold(clock, rec.x(s, a), params_);
        rec.bonus(s, a) = skip_bonus(clock, rec.x(s, a), params_);
      }
    }
  }
  for (const auto& st : rec.trajectory.steps) {
    const double u = rec.upper(st.state, st.action);
    if (!(u > 0.0)) continue;
    rec.weighted(st.state, st.action) = skipped_loss(st.loss, tau(st.state, st.action)) / u;
  }
  rec.skip_events = count_skips(rec.trajectory, tau);
  rec.shifted = shifted_loss(layout_, center, rec.policy, rec.weighted);
  LossVector subtracted = rec.bonus;
  for (size_t i = 0; i < subtracted.size(); ++i) subtracted.values()[i] += rec.penalty.values()[i];
  rec.gate_ratio = stability_gate_ratio(rec.x, rec.shifted, subtracted, params_.alpha, rec.eta);

  auto L = cumulative_.values();
  for (size_t i = 0; i < L.size(); ++i) {
    L[i] += rec.weighted.values()[i] - rec.bonus.values()[i] - rec.penalty.values()[i];
  }

  if (const auto trig = epoch_trigger(counters_)) {
    log_.back().trigger_episode = t_;
    log_.back().trigger = *trig;
    counters_.snapshot();
    model_ = rebuild_epoch_model(counters_, model_.epoch + 1, t_ + 1, log_iota_);
    start_epoch();
    rec.epoch_advanced = true;
  }
  return rec;
}

namespace {

EpisodeRecord fixed_step(const TransitionKernel& kernel, const Policy& policy, long long t, Environment& env,
                         Rng& rng) {
  const MdpLayout& layout = kernel.layout();
  EpisodeRecord rec;
  rec.episode = t;
  rec.policy = policy;
  rec.x = occupancy_from_policy(layout, kernel, policy);
  rec.trajectory = env.rollout(policy, rng);
  rec.solve.converged = true;
  rec.weighted = LossVector(layout);
  rec.bonus = LossVector(layout);
  rec.penalty = LossVector(layout);
  rec.shifted = LossVector(layout);
  return rec;
}

}  // namespace

UniformBaseline::UniformBaseline(const LayeredMdp& mdp) : kernel_(mdp.transition) {}

EpisodeRecord UniformBaseline::step(Environment& env, Rng& rng) {
  return fixed_step(kernel_, uniform_policy(kernel_.layout()), ++t_, env, rng);
}

FixedPolicyLearner::FixedPolicyLearner(const LayeredMdp& mdp, Policy policy)
    : kernel_(mdp.transition), policy_(std::move(policy)) {
  validate_policy(policy_);
}

EpisodeRecord FixedPolicyLearner::step(Environment& env, Rng& rng) {
  return fixed_step(kernel_, policy_, ++t_, env, rng);
}

}  // namespace htmdp
