#include "htmdp/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "htmdp/errors.hpp"

namespace htmdp {

MdpLayout::MdpLayout(std::vector<int> layer_sizes, int num_actions)
    : layer_sizes_(std::move(layer_sizes)), num_actions_(num_actions) {
  if (layer_sizes_.empty()) throw StructuralError("layout needs at least one layer");
  if (layer_sizes_.front() != 1) throw StructuralError("first layer must hold exactly one state");
  if (num_actions_ < 1) throw StructuralError("action count must be positive");
  for (int h = 0; h < horizon(); ++h) {
    if (layer_sizes_[h] < 1) throw StructuralError("layer " + std::to_string(h) + " is empty");
    layer_begin_.push_back(num_states_);
    for (int j = 0; j < layer_sizes_[h]; ++j) state_layer_.push_back(h);
    num_states_ += layer_sizes_[h];
  }
}

int MdpLayout::max_layer_size() const {
  return *std::max_element(layer_sizes_.begin(), layer_sizes_.end());
}

TransitionKernel::TransitionKernel(MdpLayout layout) : layout_(std::move(layout)) {
  const int A = layout_.num_actions();
  size_t offset = 0;
  row_begin_.resize(layout_.num_states() + 1);
  for (int s = 0; s < layout_.num_states(); ++s) {
    row_begin_[s] = offset;
    const int h = layout_.layer_of(s);
    if (h + 1 < layout_.horizon()) offset += static_cast<size_t>(A) * layout_.layer_size(h + 1);
  }
  row_begin_[layout_.num_states()] = offset;
  probs_.assign(offset, 0.0);
}

TransitionKernel TransitionKernel::uniform(const MdpLayout& layout) {
  TransitionKernel kernel(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      auto r = kernel.row(s, a);
      for (double& p : r) p = 1.0 / static_cast<double>(r.size());
    }
  }
  return kernel;
}

std::span<double> TransitionKernel::row(int s, int a) {
  const int h = layout_.layer_of(s);
  if (h + 1 >= layout_.horizon()) return {};
  const size_t width = layout_.layer_size(h + 1);
  return {probs_.data() + row_begin_[s] + a * width, width};
}

std::span<const double> TransitionKernel::row(int s, int a) const {
  const int h = layout_.layer_of(s);
  if (h + 1 >= layout_.horizon()) return {};
  const size_t width = layout_.layer_size(h + 1);
  return {probs_.data() + row_begin_[s] + a * width, width};
}

double TransitionKernel::prob(int s, int a, int next) const {
  const int h = layout_.layer_of(s);
  if (h + 1 >= layout_.horizon() || layout_.layer_of(next) != h + 1) return 0.0;
  return row(s, a)[next - layout_.layer_begin(h + 1)];
}

void TransitionKernel::validate(double tol) const {
  for (int s = 0; s < layout_.num_states(); ++s) {
    if (layout_.layer_of(s) + 1 >= layout_.horizon()) continue;
    for (int a = 0; a < layout_.num_actions(); ++a) {
      double sum = 0.0;
      for (double p : row(s, a)) {
        if (!(p >= 0.0)) throw StructuralError("negative transition entry");
        sum += p;
      }
      if (std::abs(sum - 1.0) > tol) {
        throw StructuralError("transition row (" + std::to_string(s) + "," + std::to_string(a) +
                              ") sums to " + std::to_string(sum));
      }
    }
  }
}

Policy uniform_policy(const MdpLayout& layout) {
  return Policy(layout, 1.0 / layout.num_actions());
}

Policy deterministic_policy(const MdpLayout& layout, std::span<const int> actions) {
  if (static_cast<int>(actions.size()) != layout.num_states()) {
    throw StructuralError("deterministic policy needs one action per state");
  }
  Policy pi(layout);
  for (int s = 0; s < layout.num_states(); ++s) pi(s, actions[s]) = 1.0;
  return pi;
}

void validate_policy(const Policy& policy, double tol) {
  for (int s = 0; s < policy.num_states(); ++s) {
    double sum = 0.0;
    for (double p : policy.row(s)) {
      if (!(p >= 0.0)) throw StructuralError("negative policy entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) throw StructuralError("policy row does not sum to one");
  }
}

namespace {

template <class Table>
void require_shape(const MdpLayout& layout, const Table& table, const char* what) {
  if (table.num_states() != layout.num_states() || table.num_actions() != layout.num_actions()) {
    throw StructuralError(std::string(what) + " does not match the MDP layout");
  }
}

void require_kernel(const MdpLayout& layout, const TransitionKernel& kernel) {
  if (!(kernel.layout() == layout)) throw StructuralError("kernel does not match the MDP layout");
}

}  // namespace

OccupancyMeasure occupancy_from_policy(const MdpLayout& layout, const TransitionKernel& kernel,
                                       const Policy& policy) {
  require_kernel(layout, kernel);
  require_shape(layout, policy, "policy");
  const int A = layout.num_actions();
  std::vector<double> state_mass(layout.num_states(), 0.0);
  state_mass[0] = 1.0;
  OccupancyMeasure rho(layout);
  for (int h = 0; h < layout.horizon(); ++h) {
    for (int s = layout.layer_begin(h); s < layout.layer_end(h); ++s) {
      for (int a = 0; a < A; ++a) rho(s, a) = state_mass[s] * policy(s, a);
      if (h + 1 == layout.horizon()) continue;
      const int next_begin = layout.layer_begin(h + 1);
      for (int a = 0; a < A; ++a) {
        const double mass = rho(s, a);
        if (mass == 0.0) continue;
        auto r = kernel.row(s, a);
        for (size_t j = 0; j < r.size(); ++j) state_mass[next_begin + j] += mass * r[j];
      }
    }
  }
  return rho;
}

Policy policy_from_occupancy(const MdpLayout& layout, const OccupancyMeasure& rho) {
  require_shape(layout, rho, "occupancy");
  const int A = layout.num_actions();
  Policy pi(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    double total = 0.0;
    for (double v : rho.row(s)) {
      if (v < 0.0) throw StructuralError("occupancy has a negative entry");
      total += v;
    }
    for (int a = 0; a < A; ++a) pi(s, a) = total > 0.0 ? rho(s, a) / total : 1.0 / A;
  }
  return pi;
}

std::vector<double> state_marginal(const OccupancyMeasure& rho) {
  std::vector<double> marginal(rho.num_states(), 0.0);
  for (int s = 0; s < rho.num_states(); ++s) {
    for (double v : rho.row(s)) marginal[s] += v;
  }
  return marginal;
}

ValueTables evaluate_value(const MdpLayout& layout, const TransitionKernel& kernel,
                           const Policy& policy, const LossVector& loss) {
  require_kernel(layout, kernel);
  require_shape(layout, policy, "policy");
  require_shape(layout, loss, "loss");
  ValueTables out{std::vector<double>(layout.num_states(), 0.0), LossVector(layout)};
  for (int h = layout.horizon() - 1; h >= 0; --h) {
    for (int s = layout.layer_begin(h); s < layout.layer_end(h); ++s) {
      double v = 0.0;
      for (int a = 0; a < layout.num_actions(); ++a) {
        double q = loss(s, a);
        if (h + 1 < layout.horizon()) {
          auto r = kernel.row(s, a);
          const int next_begin = layout.layer_begin(h + 1);
          for (size_t j = 0; j < r.size(); ++j) q += r[j] * out.value[next_begin + j];
        }
        out.q(s, a) = q;
        v += policy(s, a) * q;
      }
      out.value[s] = v;
    }
  }
  return out;
}

double occupancy_violation(const MdpLayout& layout, const TransitionKernel& kernel,
                           const OccupancyMeasure& rho) {
  require_kernel(layout, kernel);
  require_shape(layout, rho, "occupancy");
  const auto marginal = state_marginal(rho);
  double worst = 0.0;
  for (int h = 0; h < layout.horizon(); ++h) {
    double layer_total = 0.0;
    for (int s = layout.layer_begin(h); s < layout.layer_end(h); ++s) {
      layer_total += marginal[s];
      for (double v : rho.row(s)) worst = std::max(worst, -v);
    }
    worst = std::max(worst, std::abs(layer_total - 1.0));
    if (h + 1 == layout.horizon()) continue;
    for (int next = layout.layer_begin(h + 1); next < layout.layer_end(h + 1); ++next) {
      double inflow = 0.0;
      for (int s = layout.layer_begin(h); s < layout.layer_end(h); ++s) {
        for (int a = 0; a < layout.num_actions(); ++a) inflow += kernel.prob(s, a, next) * rho(s, a);
      }
      worst = std::max(worst, std::abs(inflow - marginal[next]));
    }
  }
  return worst;
}

int sample_index(std::span<const double> probs, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cumulative = 0.0;
  int last_positive = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    last_positive = static_cast<int>(i);
    if (u < cumulative) return static_cast<int>(i);
  }
  return last_positive;
}

Trajectory sample_trajectory(const MdpLayout& layout, const TransitionKernel& kernel,
                             const Policy& policy, const LossOracle& loss_oracle, Rng& rng) {
  require_kernel(layout, kernel);
  require_shape(layout, policy, "policy");
  Trajectory traj;
  traj.visited.assign(layout.num_pairs(), 0);
  traj.steps.reserve(layout.horizon());
  int s = 0;
  for (int h = 0; h < layout.horizon(); ++h) {
    const int a = sample_index(policy.row(s), rng);
    const double loss = loss_oracle(s, a, rng);
    traj.steps.push_back({s, a, loss});
    traj.visited[layout.pair(s, a)] = 1;
    if (h + 1 < layout.horizon()) s = layout.layer_begin(h + 1) + sample_index(kernel.row(s, a), rng);
  }
  return traj;
}

TransitionKernel random_kernel(const MdpLayout& layout, Rng& rng) {
  TransitionKernel kernel(layout);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      auto r = kernel.row(s, a);
      if (r.empty()) continue;
      double sum = 0.0;
      for (double& p : r) {
        p = 0.05 + unit(rng);
        sum += p;
      }
      for (double& p : r) p /= sum;
    }
  }
  return kernel;
}

}  // namespace htmdp
