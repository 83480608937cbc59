#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "htmdp/errors.hpp"
#include "htmdp/mdp.hpp"
#include "htmdp/mdp_io.hpp"
#include "htmdp/oracles.hpp"

using namespace htmdp;
using htmdp::testing::chain_kernel;
using htmdp::testing::random_layout;
using htmdp::testing::random_policy;

TEST_CASE("layout enumerates states layer by layer") {
  const MdpLayout layout({1, 3, 2}, 2);
  CHECK(layout.horizon() == 3);
  CHECK(layout.num_states() == 6);
  CHECK(layout.layer_begin(2) == 4);
  CHECK(layout.layer_of(3) == 1);
  CHECK(layout.pair(2, 1) == 5);
  CHECK_THROWS_AS(MdpLayout({2, 1}, 2), StructuralError);
  CHECK_THROWS_AS(MdpLayout({1, 0}, 2), StructuralError);
}

TEST_CASE("occupancy of a deterministic chain under the uniform policy") {
  const auto kernel = chain_kernel(2, 2);
  const auto rho = occupancy_from_policy(kernel.layout(), kernel, uniform_policy(kernel.layout()));
  CHECK(rho(0, 0) == doctest::Approx(0.5));
  CHECK(rho(0, 1) == doctest::Approx(0.5));
  CHECK(rho(1, 0) == doctest::Approx(0.5));
  CHECK(rho(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("deterministic policies put no mass off their action") {
  Rng rng(3);
  const MdpLayout layout({1, 2, 3}, 3);
  const auto kernel = random_kernel(layout, rng);
  const std::vector<int> actions{2, 0, 1, 1, 0, 2};
  const auto rho = occupancy_from_policy(layout, kernel, deterministic_policy(layout, actions));
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      if (a != actions[static_cast<size_t>(s)]) CHECK(rho(s, a) == 0.0);
    }
  }
}

TEST_CASE("forward recursion matches path enumeration on random instances") {
  Rng rng(11);
  for (int i = 0; i < 40; ++i) {
    const MdpLayout layout = random_layout(rng, 3, 3, 2);
    const auto kernel = random_kernel(layout, rng);
    const auto policy = random_policy(layout, rng);
    const auto dp = occupancy_from_policy(layout, kernel, policy);
    const auto bf = oracles::brute_force_occupancy(layout, kernel, policy);
    for (size_t k = 0; k < dp.size(); ++k) CHECK(std::abs(dp.values()[k] - bf.values()[k]) <= 1e-12);
    CHECK(occupancy_violation(layout, kernel, dp) <= 1e-12);
  }
}

TEST_CASE("kernel and layout mismatch is a structural error") {
  const auto kernel = chain_kernel(2, 2);
  const MdpLayout other({1, 2}, 2);
  CHECK_THROWS_AS(occupancy_from_policy(other, kernel, uniform_policy(other)), StructuralError);
}

TEST_CASE("policy from occupancy") {
  const MdpLayout layout({1, 2}, 2);
  OccupancyMeasure rho(layout);
  rho(0, 0) = 0.3;
  rho(0, 1) = 0.1;
  const auto pi = policy_from_occupancy(layout, rho);
  CHECK(pi(0, 0) == doctest::Approx(0.75));
  CHECK(pi(0, 1) == doctest::Approx(0.25));
  // Unvisited states fall back to uniform.
  CHECK(pi(1, 0) == doctest::Approx(0.5));
  CHECK(pi(2, 1) == doctest::Approx(0.5));

  rho(1, 0) = -0.1;
  CHECK_THROWS_AS(policy_from_occupancy(layout, rho), StructuralError);
}

TEST_CASE("policy to occupancy to policy round trip") {
  Rng rng(17);
  for (int i = 0; i < 30; ++i) {
    const MdpLayout layout = random_layout(rng, 3, 3, 3);
    const auto kernel = random_kernel(layout, rng);
    const auto pi = random_policy(layout, rng);
    const auto rho = occupancy_from_policy(layout, kernel, pi);
    const auto back = policy_from_occupancy(layout, rho);
    const auto mass = state_marginal(rho);
    for (int s = 0; s < layout.num_states(); ++s) {
      if (mass[static_cast<size_t>(s)] <= 0.0) continue;
      for (int a = 0; a < layout.num_actions(); ++a) CHECK(std::abs(back(s, a) - pi(s, a)) <= 1e-10);
    }
  }
}

TEST_CASE("value evaluation") {
  const MdpLayout bandit({1}, 2);
  const TransitionKernel kernel(bandit);
  LossVector loss(bandit);
  loss(0, 1) = 1.0;
  const auto v = evaluate_value(bandit, kernel, uniform_policy(bandit), loss);
  CHECK(v.value[0] == doctest::Approx(0.5));

  Rng rng(5);
  const MdpLayout layout({1, 2, 2}, 2);
  const auto k2 = random_kernel(layout, rng);
  const auto zero = evaluate_value(layout, k2, random_policy(layout, rng), LossVector(layout));
  for (double x : zero.value) CHECK(x == 0.0);
  for (double x : zero.q.values()) CHECK(x == 0.0);
}

TEST_CASE("value equals the occupancy-weighted loss") {
  Rng rng(23);
  const MdpLayout layout({1, 3, 2}, 2);
  const auto kernel = random_kernel(layout, rng);
  const auto pi = random_policy(layout, rng);
  LossVector loss(layout);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& x : loss.values()) x = u(rng);
  const auto v = evaluate_value(layout, kernel, pi, loss);
  CHECK(v.value[0] == doctest::Approx(inner(occupancy_from_policy(layout, kernel, pi), loss)).epsilon(1e-12));
}

TEST_CASE("trajectory sampling") {
  const auto kernel = chain_kernel(3, 2);
  const auto& layout = kernel.layout();
  const std::vector<int> actions{1, 0, 1};
  const LossOracle loss = [](int s, int a, Rng&) { return s + 0.5 * a; };
  Rng rng(1);
  const auto traj = sample_trajectory(layout, kernel, deterministic_policy(layout, actions), loss, rng);
  REQUIRE(traj.steps.size() == 3);
  for (int h = 0; h < 3; ++h) {
    CHECK(traj.steps[static_cast<size_t>(h)].state == h);
    CHECK(traj.steps[static_cast<size_t>(h)].action == actions[static_cast<size_t>(h)]);
    CHECK(traj.was_visited(layout, h, actions[static_cast<size_t>(h)]));
  }

  Rng rng_a(42);
  Rng rng_b(42);
  Rng krng(9);
  const MdpLayout wide({1, 3, 3}, 3);
  const auto k = random_kernel(wide, krng);
  const auto pi = uniform_policy(wide);
  const auto ta = sample_trajectory(wide, k, pi, loss, rng_a);
  const auto tb = sample_trajectory(wide, k, pi, loss, rng_b);
  for (size_t h = 0; h < ta.steps.size(); ++h) {
    CHECK(ta.steps[h].state == tb.steps[h].state);
    CHECK(ta.steps[h].action == tb.steps[h].action);
    CHECK(ta.steps[h].loss == tb.steps[h].loss);
  }
}

TEST_CASE("kernel validation") {
  TransitionKernel k(MdpLayout({1, 2}, 1));
  k.row(0, 0)[0] = 0.6;
  k.row(0, 0)[1] = 0.3;
  CHECK_THROWS_AS(k.validate(), StructuralError);
  k.row(0, 0)[1] = 0.4;
  CHECK_NOTHROW(k.validate());
  k.row(0, 0)[0] = -0.1;
  CHECK_THROWS_AS(k.validate(), StructuralError);
}

TEST_CASE("mdp text format round trip is byte-stable") {
  Rng rng(31);
  const MdpLayout layout({1, 2, 3}, 2);
  LayeredMdp mdp{random_kernel(layout, rng)};
  std::ostringstream first;
  write_mdp(first, mdp);
  std::istringstream in(first.str());
  const auto back = read_mdp(in);
  CHECK(back.transition == mdp.transition);
  std::ostringstream second;
  write_mdp(second, back);
  CHECK(first.str() == second.str());
}

TEST_CASE("mdp reader rejects malformed input") {
  std::istringstream missing_row("horizon = 2\nactions = 1\nlayer_sizes = 1 2\n");
  CHECK_THROWS_AS(read_mdp(missing_row), StructuralError);
  std::istringstream bad_sum("horizon = 2\nactions = 1\nlayer_sizes = 1 2\nrow.0.0 = 0.5 0.4\n");
  CHECK_THROWS_AS(read_mdp(bad_sum), StructuralError);
}
