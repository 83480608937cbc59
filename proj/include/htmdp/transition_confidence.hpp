#pragma once

#include <optional>
#include <span>
#include <vector>

#include "htmdp/mdp.hpp"

namespace htmdp {

// Visit counters m(s,a), m(s,a,s') and the epoch snapshot m_old(s,a).
class Counters {
 public:
  explicit Counters(const MdpLayout& layout);

  // Increments m(s_h,a_h) and m(s_h,a_h,s_{h+1}) along the trajectory.
  void update(const Trajectory& traj);
  void snapshot() { visits_old_ = visits_; }

  long long visits(int s, int a) const { return visits_[layout_.pair(s, a)]; }
  long long snapshot_visits(int s, int a) const { return visits_old_[layout_.pair(s, a)]; }
  // Transition count to the j-th state of the next layer.
  long long transitions(int s, int a, int j) const { return moves_[row_begin(s, a) + j]; }
  const MdpLayout& layout() const { return layout_; }

  // sum_s' m(s,a,s') == m(s,a) for every pair outside the last layer.
  bool consistent() const;

 private:
  size_t row_begin(int s, int a) const;

  MdpLayout layout_;
  std::vector<long long> visits_;
  std::vector<long long> visits_old_;
  std::vector<size_t> state_row_begin_;
  std::vector<long long> moves_;
};

struct StateAction {
  int state;
  int action;
  bool operator==(const StateAction&) const = default;
};

// First pair (in state-major order) with m(s,a) >= max(1, 2 m_old(s,a)).
std::optional<StateAction> epoch_trigger(const Counters& counters);

// P_hat[s'|s,a] = m(s,a,s') / m(s,a); rows never visited stay uniform over
// the next layer.
TransitionKernel build_empirical_model(const Counters& counters, const MdpLayout& layout);

// min(2 sqrt(p_hat log_iota / m) + 14 log_iota / (3 m), 1); 1 when m == 0.
double bernstein_width(double p_hat, long long m, double log_iota);

// min(1, sum of the row widths).
double aggregate_width(std::span<const double> widths);

// log(H S A T / delta) with S the total state count.
double log_iota(const MdpLayout& layout, long long T, double delta);

// Elementwise box around an empirical kernel.
struct ConfidenceSet {
  TransitionKernel center;
  TransitionKernel width;  // same row shape as `center`; rows are not distributions
  LossVector aggregate;    // B(s,a)

  // Every row of `kernel` within the box (tolerance `slack`).
  bool contains(const TransitionKernel& kernel, double slack = 0.0) const;
};

struct EpochModel {
  int epoch = 1;
  long long start = 1;  // t_i
  double log_iota = 0.0;
  ConfidenceSet confidence;
};

// Epoch 1: uniform model, all widths 1.
EpochModel initial_epoch_model(const MdpLayout& layout, double log_iota);
EpochModel rebuild_epoch_model(const Counters& counters, int epoch, long long start, double log_iota);

// Maximum of sum_j q_j w_j over distributions q with |q_j - center_j| <= width_j,
// found by filling lower bounds and pouring the remaining mass into the largest
// weights first (ties by index). `argmax`, when given, receives the maximiser.
double greedy_box_max(std::span<const double> center, std::span<const double> width,
                      std::span<const double> weights, std::span<double> argmax = {});

// u(s,a) = max over kernels in the set of rho^{P,pi}(s,a), via one backward
// pass per target state.
OccupancyMeasure comp_uob(const ConfidenceSet& set, const Policy& policy);

}  // namespace htmdp
