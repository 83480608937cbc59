#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "htmdp/environments.hpp"
#include "htmdp/errors.hpp"

using namespace htmdp;
using htmdp::testing::all_deterministic;
using htmdp::testing::random_layout;

TEST_CASE("loss samplers") {
  Rng rng(1);
  const auto point = LossModel::point_mass(0.3);
  for (int i = 0; i < 5; ++i) CHECK(point.sample(rng) == 0.3);

  const auto uniform = LossModel::bounded_uniform(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double v = uniform.sample(rng);
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
  }

  const auto pareto = LossModel::symmetric_pareto(1.8, 0.5);
  for (int i = 0; i < 1000; ++i) CHECK(std::abs(pareto.sample(rng)) >= 0.5);
  CHECK_THROWS_AS(LossModel::symmetric_pareto(1.0, 1.0), DomainError);
}

TEST_CASE("alpha-moment certificates") {
  CHECK(alpha_moment_certificate(LossModel::point_mass(0.4), 1.0, 1.5).bound ==
        doctest::Approx(std::pow(0.4, 1.5)));
  const auto pareto = alpha_moment_certificate(LossModel::symmetric_pareto(1.8, 1.0), 4.0, 1.5);
  CHECK(pareto.bound == doctest::Approx(6.0));
  CHECK(pareto.ok);
  CHECK(certified_sigma(LossModel::symmetric_pareto(1.8, 1.0), 1.5) == doctest::Approx(3.3019).epsilon(1e-4));
  const auto uni = alpha_moment_certificate(LossModel::bounded_uniform(-1.0, 1.0), 1.0, 2.0);
  CHECK(uni.bound == doctest::Approx(1.0 / 3.0));
  CHECK(uni.ok);
  // Tail index at or below alpha: the moment does not exist.
  CHECK_FALSE(alpha_moment_certificate(LossModel::symmetric_pareto(1.4, 1.0), 100.0, 1.5).ok);
  const auto custom = LossModel::custom(0.0, [](Rng&) { return 0.0; });
  CHECK_THROWS_AS(alpha_moment_certificate(custom, 1.0, 1.5), UnsupportedError);
}

TEST_CASE("optimal values") {
  const MdpLayout bandit({1}, 2);
  const TransitionKernel k(bandit);
  LossVector means(bandit);
  means(0, 0) = 0.2;
  means(0, 1) = 0.5;
  const auto opt = optimal_values(bandit, k, means);
  CHECK(opt.actions[0] == 0);
  CHECK(opt.value[0] == doctest::Approx(0.2));

  Rng rng(2);
  const MdpLayout layout({1, 2, 2}, 2);
  const auto k2 = random_kernel(layout, rng);
  const auto flat = optimal_values(layout, k2, LossVector(layout, 0.1));
  for (int a : flat.actions) CHECK(a == 0);
}

TEST_CASE("benchmark policy matches enumeration") {
  Rng rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const MdpLayout layout = random_layout(rng, 3, 3, 2);
    const auto k = random_kernel(layout, rng);
    LossVector means(layout);
    for (auto& v : means.values()) v = u(rng);
    double best = 1e300;
    for (const auto& acts : all_deterministic(layout)) {
      best = std::min(best, inner(occupancy_from_policy(layout, k, deterministic_policy(layout, acts)), means));
    }
    const auto pi = benchmark_policy(layout, k, means);
    CHECK(inner(occupancy_from_policy(layout, k, pi), means) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("gap table") {
  const MdpLayout bandit({1}, 3);
  const TransitionKernel k(bandit);
  LossVector means(bandit);
  means(0, 0) = 0.2;
  means(0, 1) = 0.5;
  means(0, 2) = 0.5;
  const auto g = gap_table(bandit, k, means, 2.0);
  CHECK(g.gap(0, 0) == 0.0);
  CHECK(g.gap(0, 1) == doctest::Approx(0.3));
  CHECK(g.min_gap == doctest::Approx(0.3));
  CHECK(g.omega_alpha == doctest::Approx(6.6667).epsilon(1e-4));
  CHECK_FALSE(g.omega_infinite);

  const auto flat = gap_table(bandit, k, LossVector(bandit, 0.4), 2.0);
  for (double v : flat.gap.values()) CHECK(v == 0.0);
  CHECK(flat.omega_infinite);
}

TEST_CASE("self-bounding lower term") {
  const MdpLayout bandit({1}, 2);
  const TransitionKernel k(bandit);
  LossVector means(bandit);
  means(0, 1) = 0.3;
  const auto g = gap_table(bandit, k, means, 1.5);
  OccupancyMeasure on_benchmark(bandit);
  on_benchmark(0, 0) = 1.0;
  std::vector<OccupancyMeasure> run(5, on_benchmark);
  CHECK(self_bounding_lower_term(g, run) == 0.0);
  OccupancyMeasure mixed(bandit);
  mixed(0, 0) = 0.6;
  mixed(0, 1) = 0.4;
  std::vector<OccupancyMeasure> one{mixed};
  CHECK(self_bounding_lower_term(g, one) == doctest::Approx(0.12));
}

TEST_CASE("regime schedules") {
  const auto inst = default_instance();
  const auto& layout = inst.mdp.layout();
  const auto base = inst.losses.means(layout);

  const Regime stochastic({}, layout, inst.mdp.transition, base);
  CHECK(stochastic.means(1) == stochastic.means(12345));

  RegimeConfig flip;
  flip.kind = RegimeKind::kFlip;
  flip.flip_period = 100;
  const Regime flipping(flip, layout, inst.mdp.transition, base);
  CHECK(flipping.means(99) == base);
  const auto swapped = flipping.means(100);
  CHECK(swapped(0, 0) == base(0, 1));
  CHECK(swapped(0, 1) == base(0, 0));
  CHECK(flipping.means(199) == swapped);
  CHECK(flipping.means(200) == base);
  CHECK(flipping.means(300) == swapped);

  RegimeConfig sine;
  sine.kind = RegimeKind::kSinusoid;
  const Regime drifting(sine, layout, inst.mdp.transition, base);
  CHECK_FALSE(drifting.means(10) == drifting.means(11));
  CHECK(drifting.means(7) == drifting.means(7));
}

TEST_CASE("corruption budget accounting") {
  const auto inst = default_instance();
  const auto& layout = inst.mdp.layout();
  const auto base = inst.losses.means(layout);
  RegimeConfig c;
  c.kind = RegimeKind::kCorrupted;
  c.corruption_budget = 50.0;
  c.corruption_shift = 0.5;
  c.corruption_episodes = 100;
  const Regime exact(c, layout, inst.mdp.transition, base);
  CHECK(exact.injected_corruption(1000) == doctest::Approx(50.0));
  CHECK_FALSE(exact.means(100) == base);
  CHECK(exact.means(101) == base);
  c.corruption_episodes = 101;
  CHECK_THROWS_AS(Regime(c, layout, inst.mdp.transition, base), ConfigError);
  CHECK_THROWS_AS(parse_regime("chaotic"), ConfigError);
}

TEST_CASE("environment rollouts follow the regime") {
  auto inst = default_instance();
  const auto base = inst.losses.means(inst.mdp.layout());
  Regime regime({}, inst.mdp.layout(), inst.mdp.transition, base);
  Environment env(inst.mdp, inst.losses, regime);
  CHECK(env.next_episode() == 1);
  Rng rng(4);
  const auto traj = env.rollout(uniform_policy(env.layout()), rng);
  CHECK(traj.steps.size() == 2);
  CHECK(env.next_episode() == 2);
  CHECK(env.certified_sigma(1.5) > 0.2);
}

TEST_CASE("shipped instances") {
  for (const auto* name : {"default", "bandit", "coverage"}) {
    const auto inst = instance_by_name(name);
    CHECK_NOTHROW(inst.mdp.transition.validate());
    CHECK(inst.losses.models.size() == static_cast<size_t>(inst.mdp.layout().num_pairs()));
  }
  const auto def = default_instance();
  const auto g = gap_table(def.mdp.layout(), def.mdp.transition, def.losses.means(def.mdp.layout()), 1.5);
  CHECK(g.min_gap == doctest::Approx(0.3));
  CHECK(coverage_instance().mdp.layout().num_states() == 4);
  CHECK_THROWS_AS(instance_by_name("nope"), ConfigError);
}
