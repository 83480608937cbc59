#include "htmdp/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "htmdp/errors.hpp"

namespace htmdp {

namespace {

void require_alpha(double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (1, 2]");
}

double size_term(int H, int S, int A, double alpha) {
  if (H < 1 || S < 1 || A < 1) throw DomainError("H, S and A must be positive");
  const double hsa = static_cast<double>(H) * S * A;
  return 1.0 + hsa + hsa * std::pow(static_cast<double>(A), 1.0 - 1.0 / alpha);
}

}  // namespace

SkipParams SkipParams::for_layout(const MdpLayout& layout, double alpha, double sigma) {
  SkipParams p{alpha, sigma, compute_C(layout.horizon(), layout.num_states(), layout.num_actions(), alpha),
               compute_beta(layout.horizon(), layout.num_states(), layout.num_actions(), alpha)};
  p.validate();
  return p;
}

void SkipParams::validate() const {
  require_alpha(alpha);
  if (!(sigma > 0.0 && C > 0.0 && beta > 0.0)) throw DomainError("sigma, C and beta must be positive");
}

double compute_C(int H, int S, int A, double alpha) {
  require_alpha(alpha);
  return std::pow(size_term(H, S, A, alpha) / (alpha - 1.0), -1.0 / alpha);
}

double compute_beta(int H, int S, int A, double alpha) {
  require_alpha(alpha);
  const double r = size_term(H, S, A, alpha);
  return (alpha - 1.0) / (4.0 * alpha * alpha) / alpha * std::pow(alpha - 1.0, 1.0 - 1.0 / alpha) *
         std::pow(r, 1.0 / alpha - 1.0);
}

double skip_threshold(long long t_rel, double x, const SkipParams& p) {
  if (t_rel < 1) throw DomainError("clock must be at least 1");
  if (x < 0.0) throw DomainError("occupancy must be nonnegative");
  return p.C * p.sigma * std::pow(static_cast<double>(t_rel), 1.0 / p.alpha) * std::pow(x, 1.0 / p.alpha);
}

double skipped_loss(double loss, double tau) { return std::abs(loss) <= tau ? loss : 0.0; }

double skip_bonus(long long t_rel, double x, const SkipParams& p) {
  if (t_rel < 1) throw DomainError("clock must be at least 1");
  if (!(x > 0.0)) throw DomainError("skipping bonus needs a positive occupancy");
  const double e = 1.0 / p.alpha - 1.0;
  return std::pow(p.C, 1.0 - p.alpha) * p.sigma * std::pow(static_cast<double>(t_rel), e) * std::pow(x, e);
}

double is_estimator_known(double skipped, double x, bool visited) {
  if (!visited) return 0.0;
  if (!(x > 0.0)) throw DomainError("visited pair with zero occupancy");
  return skipped / x;
}

double pessimistic_estimator(double skipped, double upper_occupancy, bool visited, double b_skip, double D,
                             double width) {
  if (!(upper_occupancy > 0.0)) throw DomainError("upper occupancy bound must be positive");
  const double weighted = visited ? skipped / upper_occupancy : 0.0;
  return weighted - b_skip - D * width;
}

LossVector pess_loss(const LossVector& loss, double D, const LossVector& widths) {
  if (loss.size() != widths.size()) throw StructuralError("width table does not match the loss");
  LossVector out = loss;
  auto o = out.values();
  auto w = widths.values();
  for (size_t i = 0; i < o.size(); ++i) o[i] -= D * w[i];
  return out;
}

LossVector shifted_loss(const MdpLayout& layout, const TransitionKernel& kernel, const Policy& policy,
                        const LossVector& estimates) {
  const ValueTables tables = evaluate_value(layout, kernel, policy, estimates);
  LossVector out(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) out(s, a) = tables.q(s, a) - tables.value[s];
  }
  return out;
}

double stability_gate_ratio(const OccupancyMeasure& x, const LossVector& shifted, const LossVector& bonus,
                            double alpha, double eta) {
  double worst = 0.0;
  const double allowance = (alpha - 1.0) / (4.0 * alpha);
  auto xv = x.values();
  for (size_t i = 0; i < xv.size(); ++i) {
    if (!(xv[i] > 0.0)) continue;
    const double g = alpha * eta * std::abs(shifted.values()[i] - bonus.values()[i]);
    worst = std::max(worst, g / (allowance * std::pow(xv[i], 1.0 / alpha - 1.0)));
  }
  return worst;
}

}  // namespace htmdp
