#include <cmath>

#include "doctest.h"
#include "htmdp/errors.hpp"
#include "htmdp/learners.hpp"

using namespace htmdp;

namespace {

Environment stochastic_default() {
  auto inst = default_instance();
  const auto base = inst.losses.means(inst.mdp.layout());
  Regime regime({}, inst.mdp.layout(), inst.mdp.transition, base);
  return Environment(inst.mdp, inst.losses, regime);
}

LearnerOptions options_for(const Environment& env, long long T) {
  LearnerOptions o;
  o.alpha = 1.5;
  o.sigma = env.certified_sigma(1.5);
  o.horizon = T;
  return o;
}

}  // namespace

TEST_CASE("learning rates") {
  const SkipParams p{2.0, 1.0, 0.5, 0.05};
  CHECK(om_learning_rate(1, p) == doctest::Approx(0.05));
  CHECK(om_learning_rate(16, p) == doctest::Approx(0.0125));
  const SkipParams q{2.0, 2.0, 0.5, 0.05};
  CHECK(uob_learning_rate(7, 7, q, false) == doctest::Approx(0.5));
  CHECK(uob_learning_rate(22, 7, q, false) == doctest::Approx(0.125));
  CHECK(uob_learning_rate(22, 7, q, true) == doctest::Approx(0.125 * 0.05));
  CHECK_THROWS_AS(om_learning_rate(0, p), DomainError);
  CHECK_THROWS_AS(uob_learning_rate(3, 5, p, true), DomainError);
}

TEST_CASE("theorem parameters") {
  CHECK(theorem_params(3, 2.0, 10).D == doctest::Approx(6.0));
  CHECK(theorem_params(1, 1.0, 100).delta == doctest::Approx(1e-6));
}

TEST_CASE("known-transition learner starts at the regulariser minimiser") {
  // Symmetric instance: both actions lead to the same next-layer distribution.
  auto inst = default_instance();
  const MdpLayout& layout = inst.mdp.layout();
  LayeredMdp symmetric{TransitionKernel::uniform(layout)};
  Regime regime({}, layout, symmetric.transition, inst.losses.means(layout));
  Environment env(symmetric, inst.losses, regime);
  HtFtrlOm learner(env.mdp(), options_for(env, 64));
  Rng rng(1);
  const auto rec = learner.step(env, rng);
  CHECK(rec.episode == 1);
  CHECK(rec.solve.converged);
  for (int s = 0; s < layout.num_states(); ++s) {
    CHECK(rec.policy(s, 0) == doctest::Approx(0.5).epsilon(1e-8));
  }
  CHECK(rec.eta == doctest::Approx(learner.params().beta / learner.params().sigma));

  // On the shipped kernel the first iterate is the zero-loss FTRL solution.
  auto shipped = stochastic_default();
  HtFtrlOm first(shipped.mdp(), options_for(shipped, 64));
  const auto r0 = first.step(shipped, rng);
  const PolytopeSpec spec(shipped.mdp().transition);
  const auto zero = ftrl_solve(spec, LossVector(shipped.layout()), TsallisRegularizer::with_rate(1.5, r0.eta));
  for (size_t i = 0; i < zero.x.size(); ++i) CHECK(r0.x.values()[i] == doctest::Approx(zero.x.values()[i]).epsilon(1e-9));
}

TEST_CASE("known-transition learner bookkeeping") {
  auto env = stochastic_default();
  HtFtrlOm learner(env.mdp(), options_for(env, 256));
  Rng rng(2);
  for (long long t = 1; t <= 256; ++t) {
    const auto rec = learner.step(env, rng);
    CHECK(rec.gate_ratio <= 1.0);
    CHECK(rec.feasibility <= 1e-9);
    for (int s = 0; s < env.layout().num_states(); ++s) {
      for (int a = 0; a < env.layout().num_actions(); ++a) {
        if (!rec.trajectory.was_visited(env.layout(), s, a)) CHECK(rec.weighted(s, a) == 0.0);
        CHECK(rec.bonus(s, a) > 0.0);
      }
    }
  }
  CHECK(learner.episode() == 256);
}

TEST_CASE("learners are deterministic given the seed") {
  auto env_a = stochastic_default();
  auto env_b = stochastic_default();
  HtFtrlUob a(env_a.layout(), options_for(env_a, 300));
  HtFtrlUob b(env_b.layout(), options_for(env_b, 300));
  Rng ra(5);
  Rng rb(5);
  for (int t = 0; t < 300; ++t) {
    const auto x = a.step(env_a, ra);
    const auto y = b.step(env_b, rb);
    CHECK(x.x == y.x);
    CHECK(x.epoch == y.epoch);
  }
  CHECK(a.cumulative() == b.cumulative());
}

TEST_CASE("unknown-transition learner epochs and upper occupancies") {
  auto env = stochastic_default();
  const auto opts = options_for(env, 512);
  HtFtrlUob learner(env.layout(), opts);
  CHECK(learner.D() == doctest::Approx(2 * opts.sigma));
  CHECK(learner.delta() == doctest::Approx(std::pow(512.0, -3.0)));
  Rng rng(3);
  int advances = 0;
  const double S = env.layout().num_states();
  for (long long t = 1; t <= 512; ++t) {
    const auto rec = learner.step(env, rng);
    advances += rec.epoch_advanced ? 1 : 0;
    CHECK(rec.gate_ratio <= 1.0);
    const auto upper_state = state_marginal(rec.upper);
    for (int s = 0; s < env.layout().num_states(); ++s) {
      CHECK(upper_state[static_cast<size_t>(s)] >= 1.0 / (S * t));
      for (int a = 0; a < env.layout().num_actions(); ++a) {
        CHECK(rec.upper(s, a) >= rec.x(s, a) - 1e-12);
        CHECK(rec.penalty(s, a) >= 0.0);
      }
    }
  }
  CHECK(advances >= 2);
  CHECK(learner.model().epoch == advances + 1);
  CHECK(learner.epoch_log().size() == static_cast<size_t>(advances + 1));
  CHECK(learner.counters().consistent());
}

TEST_CASE("fixed-policy learners") {
  auto env = stochastic_default();
  UniformBaseline uniform(env.mdp());
  Rng rng(1);
  const auto rec = uniform.step(env, rng);
  CHECK(rec.policy == uniform_policy(env.layout()));
  const std::vector<int> actions{1, 0, 1};
  FixedPolicyLearner fixed(env.mdp(), deterministic_policy(env.layout(), actions));
  const auto f = fixed.step(env, rng);
  CHECK(f.policy(0, 1) == 1.0);
  CHECK(f.trajectory.steps[0].action == 1);
}
