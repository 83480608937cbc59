#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace htmdp {

using Rng = std::mt19937_64;

// Layer structure of an episodic MDP. States are enumerated layer-major: the
// flat index of the j-th state of layer h is layer_begin(h) + j. Layer 0 holds
// the single initial state; the last layer transitions to an implicit
// terminal state with probability one.
class MdpLayout {
 public:
  MdpLayout() = default;
  MdpLayout(std::vector<int> layer_sizes, int num_actions);

  int horizon() const { return static_cast<int>(layer_sizes_.size()); }
  int num_actions() const { return num_actions_; }
  int num_states() const { return num_states_; }
  int num_pairs() const { return num_states_ * num_actions_; }
  int layer_size(int h) const { return layer_sizes_[h]; }
  int layer_begin(int h) const { return layer_begin_[h]; }
  int layer_end(int h) const { return layer_begin_[h] + layer_sizes_[h]; }
  int layer_of(int s) const { return state_layer_[s]; }
  int max_layer_size() const;
  int pair(int s, int a) const { return s * num_actions_ + a; }
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }

  bool operator==(const MdpLayout&) const = default;

 private:
  std::vector<int> layer_sizes_;
  std::vector<int> layer_begin_;
  std::vector<int> state_layer_;
  int num_actions_ = 0;
  int num_states_ = 0;
};

// Dense table indexed by (state, action). The tag keeps policies, occupancy
// measures and loss vectors from being mixed up.
template <class Tag>
class StateActionTable {
 public:
  StateActionTable() = default;
  StateActionTable(int num_states, int num_actions, double fill = 0.0)
      : num_states_(num_states),
        num_actions_(num_actions),
        values_(static_cast<size_t>(num_states) * num_actions, fill) {}
  explicit StateActionTable(const MdpLayout& layout, double fill = 0.0)
      : StateActionTable(layout.num_states(), layout.num_actions(), fill) {}

  double& operator()(int s, int a) { return values_[static_cast<size_t>(s) * num_actions_ + a]; }
  double operator()(int s, int a) const {
    return values_[static_cast<size_t>(s) * num_actions_ + a];
  }
  std::span<double> row(int s) {
    return {values_.data() + static_cast<size_t>(s) * num_actions_, static_cast<size_t>(num_actions_)};
  }
  std::span<const double> row(int s) const {
    return {values_.data() + static_cast<size_t>(s) * num_actions_, static_cast<size_t>(num_actions_)};
  }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  size_t size() const { return values_.size(); }

  bool operator==(const StateActionTable&) const = default;

 private:
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> values_;
};

struct PolicyTag {};
struct OccupancyTag {};
struct LossTag {};

using Policy = StateActionTable<PolicyTag>;
using OccupancyMeasure = StateActionTable<OccupancyTag>;
using LossVector = StateActionTable<LossTag>;

// Transition kernel supported on adjacent layers. Rows of the last layer are
// empty (terminal transition).
class TransitionKernel {
 public:
  TransitionKernel() = default;
  explicit TransitionKernel(MdpLayout layout);

  // Every (s, a) row spread uniformly over the successor layer.
  static TransitionKernel uniform(const MdpLayout& layout);

  const MdpLayout& layout() const { return layout_; }
  std::span<double> row(int s, int a);
  std::span<const double> row(int s, int a) const;
  // Probability of moving to the global state `next` from (s, a).
  double prob(int s, int a, int next) const;

  // Throws StructuralError if any row is negative or does not sum to one.
  void validate(double tol = 1e-12) const;

  bool operator==(const TransitionKernel&) const = default;

 private:
  MdpLayout layout_;
  std::vector<size_t> row_begin_;  // per state
  std::vector<double> probs_;
};

struct LayeredMdp {
  TransitionKernel transition;
  const MdpLayout& layout() const { return transition.layout(); }
};

Policy uniform_policy(const MdpLayout& layout);
Policy deterministic_policy(const MdpLayout& layout, std::span<const int> actions);
void validate_policy(const Policy& policy, double tol = 1e-12);

// Forward layer recursion. Throws StructuralError when shapes disagree.
OccupancyMeasure occupancy_from_policy(const MdpLayout& layout, const TransitionKernel& kernel,
                                       const Policy& policy);

// pi(a|s) = rho(s,a) / rho(s); uniform where rho(s) == 0.
Policy policy_from_occupancy(const MdpLayout& layout, const OccupancyMeasure& rho);

std::vector<double> state_marginal(const OccupancyMeasure& rho);

struct ValueTables {
  std::vector<double> value;  // V(s)
  LossVector q;               // Q(s, a)
};

// Backward recursion with V(terminal) = 0.
ValueTables evaluate_value(const MdpLayout& layout, const TransitionKernel& kernel,
                           const Policy& policy, const LossVector& loss);

template <class TagA, class TagB>
double inner(const StateActionTable<TagA>& lhs, const StateActionTable<TagB>& rhs) {
  double sum = 0.0;
  auto a = lhs.values();
  auto b = rhs.values();
  for (size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

// Largest violation of per-layer normalization and flow conservation.
double occupancy_violation(const MdpLayout& layout, const TransitionKernel& kernel,
                           const OccupancyMeasure& rho);

struct TrajectoryStep {
  int state;
  int action;
  double loss;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;  // one per layer
  std::vector<std::uint8_t> visited;  // indicator per (s, a), layout.pair order

  bool was_visited(const MdpLayout& layout, int s, int a) const {
    return visited[layout.pair(s, a)] != 0;
  }
};

using LossOracle = std::function<double(int state, int action, Rng& rng)>;

// Draws one episode. Losses are queried only at visited pairs.
Trajectory sample_trajectory(const MdpLayout& layout, const TransitionKernel& kernel,
                             const Policy& policy, const LossOracle& loss_oracle, Rng& rng);

// Index drawn from a probability vector by inversion of a single uniform.
int sample_index(std::span<const double> probs, Rng& rng);

// Kernel with independent uniform-random rows, normalised.
TransitionKernel random_kernel(const MdpLayout& layout, Rng& rng);

}  // namespace htmdp
