#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "htmdp/errors.hpp"
#include "htmdp/oracles.hpp"
#include "htmdp/polytope_ftrl.hpp"

using namespace htmdp;
using htmdp::testing::all_deterministic;
using htmdp::testing::random_layout;

namespace {

LossVector random_loss(const MdpLayout& layout, Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  LossVector L(layout);
  for (auto& v : L.values()) v = u(rng);
  return L;
}

}  // namespace

TEST_CASE("Tsallis value closed forms") {
  const MdpLayout one({1}, 1);
  OccupancyMeasure x(one, 1.0);
  CHECK(tsallis_value(x, TsallisRegularizer::with_rate(2.0, 1.0)) == doctest::Approx(-1.0));

  const MdpLayout four({1}, 4);
  OccupancyMeasure q(four, 0.25);
  CHECK(tsallis_value(q, TsallisRegularizer::with_rate(2.0, 0.5)) == doctest::Approx(-4.0));

  q(0, 2) = -0.1;
  CHECK_THROWS_AS(tsallis_value(q, TsallisRegularizer::with_rate(2.0, 0.5)), DomainError);
  CHECK_THROWS_AS(TsallisRegularizer::with_rate(1.0, 1.0), DomainError);
}

TEST_CASE("linear minimisation oracle") {
  const MdpLayout bandit({1}, 3);
  const TransitionKernel kernel(bandit);
  const PolytopeSpec spec(kernel);
  LossVector c(bandit);
  c(0, 0) = 1.0;
  c(0, 1) = 2.0;
  c(0, 2) = 3.0;
  const auto v = linear_min_oracle(spec, c);
  CHECK(v.actions[0] == 0);
  CHECK(v.occupancy(0, 0) == 1.0);
  CHECK(v.objective == doctest::Approx(1.0));

  Rng rng(2);
  const MdpLayout layout({1, 2, 3}, 2);
  const auto k = random_kernel(layout, rng);
  const PolytopeSpec spec3(k);
  const auto flat = linear_min_oracle(spec3, LossVector(layout, 0.7));
  CHECK(flat.objective == doctest::Approx(0.7 * 3));
}

TEST_CASE("linear minimisation matches enumeration of deterministic policies") {
  Rng rng(8);
  for (int i = 0; i < 20; ++i) {
    const MdpLayout layout = random_layout(rng, 3, 3, 2);
    const auto k = random_kernel(layout, rng);
    const PolytopeSpec spec(k);
    const auto c = random_loss(layout, rng, -1.0, 1.0);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& acts : all_deterministic(layout)) {
      best = std::min(best, inner(occupancy_from_policy(layout, k, deterministic_policy(layout, acts)), c));
    }
    CHECK(std::abs(linear_min_oracle(spec, c).objective - best) <= 1e-12);
  }
}

TEST_CASE("FTRL with zero loss is uniform by symmetry") {
  const MdpLayout bandit({1}, 2);
  const TransitionKernel kernel(bandit);
  const PolytopeSpec spec(kernel);
  const auto sol = ftrl_solve(spec, LossVector(bandit), TsallisRegularizer::with_rate(2.0, 1.0));
  CHECK(sol.report.converged);
  CHECK(sol.x(0, 0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(sol.x(0, 1) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("a dominant regulariser drives the solution to the uniform occupancy") {
  Rng rng(4);
  const MdpLayout layout({1, 3}, 2);
  TransitionKernel k(layout);
  for (int a = 0; a < 2; ++a) {
    for (auto& p : k.row(0, a)) p = 1.0 / 3.0;
  }
  const PolytopeSpec spec(k);
  const auto L = random_loss(layout, rng, -1.0, 1.0);
  const auto sol = ftrl_solve(spec, L, TsallisRegularizer::with_rate(1.5, 1e-7));
  for (int s = 1; s < 4; ++s) {
    for (int a = 0; a < 2; ++a) CHECK(sol.x(s, a) == doctest::Approx(1.0 / 6.0).epsilon(1e-4));
  }
}

TEST_CASE("FTRL on the 2-simplex agrees with the grid oracle") {
  const MdpLayout bandit({1}, 3);
  const TransitionKernel kernel(bandit);
  const PolytopeSpec spec(kernel);
  LossVector L(bandit);
  L(0, 1) = 1.0;
  L(0, 2) = 2.0;
  const auto sol = ftrl_solve(spec, L, TsallisRegularizer::with_rate(2.0, 1.0), {1e-12, 1000});
  const double f = oracles::simplex_objective(sol.x.row(0), L.row(0), 2.0, 1.0);
  const auto grid = oracles::brute_force_ftrl(L.row(0), 2.0, 1.0, 1e-3);
  CHECK(f <= grid.value + 1e-6);
  CHECK(grid.value - f <= oracles::nearest_grid_objective(sol.x.row(0), L.row(0), 2.0, 1.0, 1e-3) - f + 1e-12);
}

TEST_CASE("Newton and Frank-Wolfe reach the same optimum") {
  Rng rng(13);
  for (int i = 0; i < 5; ++i) {
    const MdpLayout layout = random_layout(rng, 3, 3, 2);
    const auto k = random_kernel(layout, rng);
    const PolytopeSpec spec(k);
    const auto L = random_loss(layout, rng, -2.0, 2.0);
    const auto reg = TsallisRegularizer::with_rate(1.5, 0.7);
    const auto newton = ftrl_solve(spec, L, reg, {1e-10, 1000, SolverMethod::kDualNewton});
    const auto fw = ftrl_solve(spec, L, reg, {1e-7, 20000, SolverMethod::kFrankWolfe});
    CHECK(newton.report.converged);
    CHECK(newton.report.gap <= 1e-8);
    // Each gap bounds the suboptimality of its iterate.
    CHECK(std::abs(newton.report.objective - fw.report.objective) <= fw.report.gap + 1e-8);
    CHECK(occupancy_violation(layout, k, newton.x) <= 1e-10);
    CHECK(occupancy_violation(layout, k, fw.x) <= 1e-10);
  }
}

TEST_CASE("the interior floor holds even when it binds") {
  Rng rng(21);
  const MdpLayout layout({1, 2, 2}, 3);
  const auto k = random_kernel(layout, rng);
  const PolytopeSpec spec(k, 1e-6);
  // Losses this spread push the unconstrained optimum below the floor, so the
  // returned point is the mixed one and its gap is reported honestly.
  const auto L = random_loss(layout, rng, -50.0, 50.0);
  const auto sol = ftrl_solve(spec, L, TsallisRegularizer::with_rate(1.5, 2.0));
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      CHECK(sol.x(s, a) >= 1e-6 * spec.uniform_occupancy()(s, a) * (1.0 - 1e-9));
    }
  }
  CHECK(sol.report.gap > 1e-8);
  CHECK_FALSE(sol.report.converged);
  CHECK(occupancy_violation(layout, k, sol.x) <= 1e-12);
}

TEST_CASE("warm starts reproduce the optimum") {
  Rng rng(22);
  const MdpLayout layout({1, 2, 2}, 3);
  const auto k = random_kernel(layout, rng);
  const PolytopeSpec spec(k);
  auto L = random_loss(layout, rng, -3.0, 3.0);
  const auto reg = TsallisRegularizer::with_rate(1.5, 2.0);
  const auto cold = ftrl_solve(spec, L, reg);
  CHECK(cold.report.converged);
  for (auto& v : L.values()) v += 0.01 * v;
  const auto warm = ftrl_solve(spec, L, reg, {}, &cold.warm);
  const auto fresh = ftrl_solve(spec, L, reg);
  CHECK(warm.report.converged);
  CHECK(warm.report.iterations <= fresh.report.iterations);
  CHECK(warm.report.objective == doctest::Approx(fresh.report.objective).epsilon(1e-10));
}

TEST_CASE("gradient and gap are consistent") {
  Rng rng(6);
  const MdpLayout layout({1, 2}, 2);
  const auto k = random_kernel(layout, rng);
  const PolytopeSpec spec(k);
  const auto L = random_loss(layout, rng, -1.0, 1.0);
  const auto reg = TsallisRegularizer::with_rate(2.0, 1.0);
  const auto sol = ftrl_solve(spec, L, reg);
  CHECK(frank_wolfe_gap(spec, sol.x, L, reg) == doctest::Approx(sol.report.gap).epsilon(1e-6));
  const auto uniform = spec.uniform_occupancy();
  CHECK(frank_wolfe_gap(spec, uniform, L, reg) >= ftrl_objective(uniform, L, reg) - sol.report.objective - 1e-12);
}

TEST_CASE("solver input validation") {
  const MdpLayout bandit({1}, 2);
  const TransitionKernel kernel(bandit);
  const PolytopeSpec spec(kernel);
  LossVector L(bandit);
  L(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ftrl_solve(spec, L, TsallisRegularizer::with_rate(2.0, 1.0)), DomainError);
  const MdpLayout other({1}, 3);
  CHECK_THROWS_AS(ftrl_solve(spec, LossVector(other), TsallisRegularizer::with_rate(2.0, 1.0)), StructuralError);
}
