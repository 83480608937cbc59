#pragma once

#include "htmdp/mdp.hpp"

namespace htmdp {

// Heavy-tail parameters and the two tuning constants derived from the
// instance size.
struct SkipParams {
  double alpha;
  double sigma;
  double C;
  double beta;

  // C and beta from compute_C / compute_beta with S the total state count.
  static SkipParams for_layout(const MdpLayout& layout, double alpha, double sigma);
  void validate() const;
};

// C = ((1 + HSA + HSA^(2-1/alpha)) / (alpha-1))^(-1/alpha)
double compute_C(int H, int S, int A, double alpha);

// beta = (alpha-1)/(4 alpha^2) * alpha^-1 * (alpha-1)^(1-1/alpha)
//        * (1 + HSA + HSA^(2-1/alpha))^(1/alpha-1)
double compute_beta(int H, int S, int A, double alpha);

// tau = C sigma t^(1/alpha) x^(1/alpha). `t_rel` is the global episode index
// for known transitions and t - t_i + 1 inside an epoch otherwise.
double skip_threshold(long long t_rel, double x, const SkipParams& p);

// loss if |loss| <= tau, else 0.
double skipped_loss(double loss, double tau);

// b = C^(1-alpha) sigma t^(1/alpha-1) x^(1/alpha-1); x must be positive.
double skip_bonus(long long t_rel, double x, const SkipParams& p);

// Importance-weighted skipped loss: skipped / x at visited pairs, 0 elsewhere.
double is_estimator_known(double skipped, double x, bool visited);

// skipped / u * 1[visited] - b_skip - D * width.
double pessimistic_estimator(double skipped, double upper_occupancy, bool visited, double b_skip,
                             double D, double width);

// l(s,a) - D * B(s,a)
LossVector pess_loss(const LossVector& loss, double D, const LossVector& widths);

// Q - V of the estimator table under (kernel, policy). Diagnostic only: the
// learners never feed it back into the FTRL sum.
LossVector shifted_loss(const MdpLayout& layout, const TransitionKernel& kernel, const Policy& policy,
                        const LossVector& estimates);

// Largest ratio, over pairs with x > 0, between alpha*eta*|shifted - bonus|
// and the local-stability allowance (alpha-1)/(4 alpha) * x^(1/alpha-1).
// A value <= 1 means the Tsallis stability precondition holds.
double stability_gate_ratio(const OccupancyMeasure& x, const LossVector& shifted, const LossVector& bonus,
                            double alpha, double eta);

}  // namespace htmdp
