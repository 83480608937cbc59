#include "htmdp/transition_confidence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "htmdp/errors.hpp"

namespace htmdp {

Counters::Counters(const MdpLayout& layout) : layout_(layout) {
  visits_.assign(layout.num_pairs(), 0);
  visits_old_.assign(layout.num_pairs(), 0);
  size_t offset = 0;
  state_row_begin_.resize(layout.num_states());
  for (int s = 0; s < layout.num_states(); ++s) {
    state_row_begin_[s] = offset;
    const int h = layout.layer_of(s);
    if (h + 1 < layout.horizon()) offset += static_cast<size_t>(layout.num_actions()) * layout.layer_size(h + 1);
  }
  moves_.assign(offset, 0);
}

size_t Counters::row_begin(int s, int a) const {
  const int h = layout_.layer_of(s);
  return state_row_begin_[s] + static_cast<size_t>(a) * layout_.layer_size(h + 1);
}

void Counters::update(const Trajectory& traj) {
  for (size_t h = 0; h < traj.steps.size(); ++h) {
    const auto& step = traj.steps[h];
    ++visits_[layout_.pair(step.state, step.action)];
    if (h + 1 < traj.steps.size()) {
      const int next = traj.steps[h + 1].state;
      ++moves_[row_begin(step.state, step.action) + (next - layout_.layer_begin(static_cast<int>(h) + 1))];
    }
  }
}

bool Counters::consistent() const {
  for (int s = 0; s < layout_.num_states(); ++s) {
    const int h = layout_.layer_of(s);
    if (h + 1 >= layout_.horizon()) continue;
    for (int a = 0; a < layout_.num_actions(); ++a) {
      long long sum = 0;
      for (int j = 0; j < layout_.layer_size(h + 1); ++j) sum += transitions(s, a, j);
      if (sum != visits(s, a)) return false;
    }
  }
  return true;
}

std::optional<StateAction> epoch_trigger(const Counters& counters) {
  const MdpLayout& layout = counters.layout();
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      if (counters.visits(s, a) >= std::max(1LL, 2 * counters.snapshot_visits(s, a))) return StateAction{s, a};
    }
  }
  return std::nullopt;
}

TransitionKernel build_empirical_model(const Counters& counters, const MdpLayout& layout) {
  TransitionKernel kernel = TransitionKernel::uniform(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      auto r = kernel.row(s, a);
      const long long m = counters.visits(s, a);
      if (r.empty() || m == 0) continue;
      for (size_t j = 0; j < r.size(); ++j) {
        r[j] = static_cast<double>(counters.transitions(s, a, static_cast<int>(j))) / static_cast<double>(m);
      }
    }
  }
  return kernel;
}

double bernstein_width(double p_hat, long long m, double log_iota) {
  if (m <= 0) return 1.0;
  const double md = static_cast<double>(m);
  return std::min(2.0 * std::sqrt(p_hat * log_iota / md) + 14.0 * log_iota / (3.0 * md), 1.0);
}

double aggregate_width(std::span<const double> widths) {
  return std::min(1.0, std::accumulate(widths.begin(), widths.end(), 0.0));
}

double log_iota(const MdpLayout& layout, long long T, double delta) {
  if (T < 1 || !(delta > 0.0)) throw DomainError("log iota needs T >= 1 and delta > 0");
  return std::log(static_cast<double>(layout.horizon()) * layout.num_states() * layout.num_actions() *
                  static_cast<double>(T) / delta);
}

bool ConfidenceSet::contains(const TransitionKernel& kernel, double slack) const {
  const MdpLayout& layout = center.layout();
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      auto c = center.row(s, a);
      auto w = width.row(s, a);
      auto p = kernel.row(s, a);
      for (size_t j = 0; j < c.size(); ++j) {
        if (std::abs(p[j] - c[j]) > w[j] + slack) return false;
      }
    }
  }
  return true;
}

namespace {

ConfidenceSet make_set(TransitionKernel center, TransitionKernel width) {
  const MdpLayout& layout = center.layout();
  LossVector aggregate(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      auto w = width.row(s, a);
      // Last-layer pairs have no successor uncertainty.
      aggregate(s, a) = w.empty() ? 0.0 : aggregate_width(w);
    }
  }
  return {std::move(center), std::move(width), std::move(aggregate)};
}

}  // namespace

EpochModel initial_epoch_model(const MdpLayout& layout, double log_iota) {
  TransitionKernel width(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      for (double& w : width.row(s, a)) w = 1.0;
    }
  }
  return {1, 1, log_iota, make_set(TransitionKernel::uniform(layout), std::move(width))};
}

EpochModel rebuild_epoch_model(const Counters& counters, int epoch, long long start, double log_iota) {
  const MdpLayout& layout = counters.layout();
  TransitionKernel center = build_empirical_model(counters, layout);
  TransitionKernel width(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      auto c = center.row(s, a);
      auto w = width.row(s, a);
      for (size_t j = 0; j < c.size(); ++j) w[j] = bernstein_width(c[j], counters.visits(s, a), log_iota);
    }
  }
  return {epoch, start, log_iota, make_set(std::move(center), std::move(width))};
}

double greedy_box_max(std::span<const double> center, std::span<const double> width,
                      std::span<const double> weights, std::span<double> argmax) {
  const size_t n = center.size();
  std::vector<double> q(n);
  std::vector<double> hi(n);
  double used = 0.0;
  for (size_t j = 0; j < n; ++j) {
    q[j] = std::max(0.0, center[j] - width[j]);
    hi[j] = std::min(1.0, center[j] + width[j]);
    used += q[j];
  }
  if (used > 1.0) {
    std::fill(q.begin(), q.end(), 0.0);
    used = 0.0;
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t i, size_t k) { return weights[i] > weights[k]; });
  double budget = 1.0 - used;
  for (size_t j : order) {
    if (budget <= 0.0) break;
    const double add = std::min(hi[j] - q[j], budget);
    q[j] += add;
    budget -= add;
  }
  double value = 0.0;
  for (size_t j = 0; j < n; ++j) value += q[j] * weights[j];
  if (!argmax.empty()) std::copy(q.begin(), q.end(), argmax.begin());
  return value;
}

OccupancyMeasure comp_uob(const ConfidenceSet& set, const Policy& policy) {
  const MdpLayout& layout = set.center.layout();
  const int A = layout.num_actions();
  OccupancyMeasure upper(layout);
  std::vector<double> reach(layout.num_states(), 0.0);
  for (int target = 0; target < layout.num_states(); ++target) {
    const int k = layout.layer_of(target);
    double f = 1.0;
    if (k > 0) {
      std::fill(reach.begin(), reach.end(), 0.0);
      reach[target] = 1.0;
      for (int h = k - 1; h >= 0; --h) {
        const int next_begin = layout.layer_begin(h + 1);
        std::span<const double> weights(reach.data() + next_begin, layout.layer_size(h + 1));
        for (int s = layout.layer_begin(h); s < layout.layer_end(h); ++s) {
          double g = 0.0;
          for (int a = 0; a < A; ++a) {
            if (policy(s, a) == 0.0) continue;
            g += policy(s, a) * greedy_box_max(set.center.row(s, a), set.width.row(s, a), weights);
          }
          reach[s] = g;
        }
      }
      f = reach[0];
    }
    for (int a = 0; a < A; ++a) upper(target, a) = f * policy(target, a);
  }
  return upper;
}

}  // namespace htmdp
