#pragma once

#include <random>

#include "htmdp/mdp.hpp"

namespace htmdp::testing {

inline MdpLayout random_layout(Rng& rng, int max_h, int max_width, int max_actions) {
  std::uniform_int_distribution<int> h_dist(1, max_h);
  std::uniform_int_distribution<int> w_dist(1, max_width);
  std::uniform_int_distribution<int> a_dist(1, max_actions);
  std::vector<int> sizes{1};
  const int H = h_dist(rng);
  for (int h = 1; h < H; ++h) sizes.push_back(w_dist(rng));
  return MdpLayout(sizes, a_dist(rng));
}

inline Policy random_policy(const MdpLayout& layout, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  Policy p(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    double total = 0.0;
    for (int a = 0; a < layout.num_actions(); ++a) total += (p(s, a) = unit(rng));
    for (int a = 0; a < layout.num_actions(); ++a) p(s, a) /= total;
  }
  return p;
}

// Deterministic chain: one state per layer, every action moves forward.
inline TransitionKernel chain_kernel(int H, int A) {
  TransitionKernel k(MdpLayout(std::vector<int>(static_cast<size_t>(H), 1), A));
  for (int s = 0; s + 1 < H; ++s) {
    for (int a = 0; a < A; ++a) k.row(s, a)[0] = 1.0;
  }
  return k;
}

// All A^S deterministic policies, as action vectors.
inline std::vector<std::vector<int>> all_deterministic(const MdpLayout& layout) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(static_cast<size_t>(layout.num_states()), 0);
  while (true) {
    out.push_back(cur);
    size_t k = 0;
    while (k < cur.size() && ++cur[k] == layout.num_actions()) cur[k++] = 0;
    if (k == cur.size()) break;
  }
  return out;
}

}  // namespace htmdp::testing
