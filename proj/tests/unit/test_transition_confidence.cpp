#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "htmdp/errors.hpp"
#include "htmdp/oracles.hpp"
#include "htmdp/transition_confidence.hpp"

using namespace htmdp;
using htmdp::testing::random_policy;

namespace {

Trajectory path(const MdpLayout& layout, std::vector<std::pair<int, int>> steps) {
  Trajectory t;
  t.visited.assign(static_cast<size_t>(layout.num_pairs()), 0);
  for (auto [s, a] : steps) {
    t.steps.push_back({s, a, 0.0});
    t.visited[static_cast<size_t>(layout.pair(s, a))] = 1;
  }
  return t;
}

}  // namespace

TEST_CASE("counters after one trajectory") {
  const MdpLayout layout({1, 2, 2}, 2);
  Counters c(layout);
  c.update(path(layout, {{0, 1}, {2, 0}, {3, 1}}));
  long long total = 0;
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < 2; ++a) total += c.visits(s, a);
  }
  CHECK(total == 3);
  CHECK(c.visits(0, 1) == 1);
  CHECK(c.visits(2, 0) == 1);
  CHECK(c.visits(3, 1) == 1);
  CHECK(c.transitions(0, 1, 1) == 1);
  CHECK(c.transitions(2, 0, 0) == 1);
  CHECK(c.consistent());
}

TEST_CASE("epoch trigger") {
  const MdpLayout layout({1, 1}, 1);
  Counters c(layout);
  CHECK_FALSE(epoch_trigger(c).has_value());
  c.update(path(layout, {{0, 0}, {1, 0}}));
  // First visit: 1 >= max(1, 0).
  REQUIRE(epoch_trigger(c).has_value());
  CHECK(*epoch_trigger(c) == StateAction{0, 0});

  c.update(path(layout, {{0, 0}, {1, 0}}));
  c.snapshot();  // m_old = 2
  c.update(path(layout, {{0, 0}, {1, 0}}));
  CHECK_FALSE(epoch_trigger(c).has_value());  // 3 < 4
  c.update(path(layout, {{0, 0}, {1, 0}}));
  CHECK(epoch_trigger(c).has_value());  // 4 >= 4
}

TEST_CASE("empirical model") {
  const MdpLayout layout({1, 3}, 2);
  Counters c(layout);
  for (int i = 0; i < 10; ++i) {
    const int next = i < 3 ? 1 : (i < 7 ? 2 : 3);
    c.update(path(layout, {{0, 0}, {next, 0}}));
  }
  const auto p = build_empirical_model(c, layout);
  CHECK(p.row(0, 0)[0] == doctest::Approx(0.3));
  CHECK(p.row(0, 0)[1] == doctest::Approx(0.4));
  // Never-visited row stays uniform over the next layer.
  for (double v : p.row(0, 1)) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("Bernstein width and aggregate width") {
  CHECK(bernstein_width(0.5, 0, 3.0) == 1.0);
  CHECK(bernstein_width(0.25, 100, 10.0) == doctest::Approx(0.78290).epsilon(1e-5));
  CHECK(bernstein_width(0.5, 1, 10.0) == 1.0);
  const std::vector<double> a{0.3, 0.3};
  const std::vector<double> b{0.7, 0.7};
  const std::vector<double> z{0.0, 0.0};
  CHECK(aggregate_width(a) == doctest::Approx(0.6));
  CHECK(aggregate_width(b) == 1.0);
  CHECK(aggregate_width(z) == 0.0);
}

TEST_CASE("greedy box maximisation on a one-dimensional interval") {
  const std::vector<double> center{0.5, 0.5};
  const std::vector<double> width{0.2, 0.2};
  const std::vector<double> weights{0.8, 0.3};
  std::vector<double> argmax(2);
  CHECK(greedy_box_max(center, width, weights, argmax) == doctest::Approx(0.65));
  CHECK(argmax[0] == doctest::Approx(0.7));
  CHECK(argmax[1] == doctest::Approx(0.3));
}

TEST_CASE("comp_uob with zero widths is the empirical occupancy") {
  Rng rng(3);
  const MdpLayout layout({1, 2, 3}, 2);
  ConfidenceSet set{random_kernel(layout, rng), TransitionKernel(layout), LossVector(layout)};
  const auto pi = random_policy(layout, rng);
  const auto u = comp_uob(set, pi);
  const auto rho = occupancy_from_policy(layout, set.center, pi);
  for (size_t i = 0; i < u.size(); ++i) CHECK(u.values()[i] == doctest::Approx(rho.values()[i]).epsilon(1e-12));
}

TEST_CASE("comp_uob agrees with box enumeration on tiny instances") {
  Rng rng(9);
  std::uniform_real_distribution<double> w(0.01, 0.05);
  for (int i = 0; i < 6; ++i) {
    const MdpLayout layout = i % 2 == 0 ? MdpLayout({1, 2}, 2) : MdpLayout({1, 2, 2}, 1);
    ConfidenceSet set{random_kernel(layout, rng), TransitionKernel(layout), LossVector(layout)};
    for (int s = 0; s < layout.num_states(); ++s) {
      if (layout.layer_of(s) + 1 >= layout.horizon()) continue;
      for (int a = 0; a < layout.num_actions(); ++a) {
        for (auto& v : set.width.row(s, a)) v = w(rng);
      }
    }
    const auto pi = random_policy(layout, rng);
    const auto u = comp_uob(set, pi);
    const auto bf = oracles::brute_force_uob(set.center, set.width, pi, 1e-2);
    for (size_t k = 0; k < u.size(); ++k) {
      CHECK(u.values()[k] >= bf.values()[k] - 1e-12);  // the grid only sees part of the box
      CHECK(u.values()[k] - bf.values()[k] <= 2e-2);
    }
  }
}

TEST_CASE("confidence sets from counters") {
  const MdpLayout layout({1, 2}, 1);
  const double li = log_iota(layout, 100, 1e-6);
  CHECK(li == doctest::Approx(std::log(2.0 * 3 * 1 * 100 / 1e-6)));
  const auto first = initial_epoch_model(layout, li);
  CHECK(first.epoch == 1);
  CHECK(first.confidence.aggregate(0, 0) == 1.0);

  Counters c(layout);
  for (int i = 0; i < 400; ++i) c.update(path(layout, {{0, 0}, {i % 4 == 0 ? 1 : 2, 0}}));
  const auto model = rebuild_epoch_model(c, 2, 401, li);
  CHECK(model.start == 401);
  CHECK(model.confidence.center.row(0, 0)[0] == doctest::Approx(0.25));
  TransitionKernel truth(layout);
  truth.row(0, 0)[0] = 0.27;
  truth.row(0, 0)[1] = 0.73;
  CHECK(model.confidence.contains(truth));
  truth.row(0, 0)[0] = 0.9;
  truth.row(0, 0)[1] = 0.1;
  CHECK_FALSE(model.confidence.contains(truth));
  CHECK_THROWS_AS(log_iota(layout, 0, 0.1), DomainError);
}
