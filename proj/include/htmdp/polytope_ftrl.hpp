#pragma once

#include <vector>

#include "htmdp/mdp.hpp"

namespace htmdp {

// The occupancy polytope Q(P) of a kernel, plus the interior floor used by the
// solvers: every returned entry is at least floor * rho_uniform(s, a), where
// rho_uniform is the occupancy of the uniform policy under the same kernel.
class PolytopeSpec {
 public:
  explicit PolytopeSpec(const TransitionKernel& kernel, double floor = 1e-8);
  // The kernel is held by reference and must outlive the spec.
  PolytopeSpec(TransitionKernel&&, double = 1e-8) = delete;

  const TransitionKernel& kernel() const { return *kernel_; }
  const MdpLayout& layout() const { return kernel_->layout(); }
  double floor() const { return floor_; }
  const OccupancyMeasure& uniform_occupancy() const { return uniform_; }
  // States that some policy reaches with positive probability.
  const std::vector<bool>& reachable() const { return reachable_; }

 private:
  const TransitionKernel* kernel_;
  double floor_;
  OccupancyMeasure uniform_;
  std::vector<bool> reachable_;
};

// Psi(x) = -(1/eta) * sum x(s,a)^(1/alpha).
struct TsallisRegularizer {
  double alpha;
  double inverse_rate;  // 1 / eta

  static TsallisRegularizer with_rate(double alpha, double eta);
  double rate() const { return 1.0 / inverse_rate; }
};

double tsallis_value(const OccupancyMeasure& x, const TsallisRegularizer& reg);

// <x, L> + Psi(x)
double ftrl_objective(const OccupancyMeasure& x, const LossVector& cumulative,
                      const TsallisRegularizer& reg);

struct VertexSolution {
  std::vector<int> actions;  // deterministic policy, one action per state
  OccupancyMeasure occupancy;
  double objective;
};

// Minimises <x, c> over Q(P) by backward dynamic programming. Ties go to the
// lowest action index.
VertexSolution linear_min_oracle(const PolytopeSpec& spec, const LossVector& cost);

struct SolveReport {
  double objective = 0.0;
  double gap = 0.0;  // Frank-Wolfe gap max_v <grad F(x), x - v>
  int iterations = 0;
  bool converged = false;
};

enum class SolverMethod { kDualNewton, kFrankWolfe };

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 10000;
  SolverMethod method = SolverMethod::kDualNewton;
};

// Dual multipliers of the flow constraints, reused across consecutive solves.
struct FtrlWarmStart {
  std::vector<double> dual;
};

struct FtrlSolution {
  OccupancyMeasure x;
  SolveReport report;
  FtrlWarmStart warm;
};

// argmin_{x in Q(P)} <x, L> + Psi(x).
//
// kDualNewton maximises the concave dual over the per-state flow multipliers
// v, where x(s,a) = (alpha * eta * B(s,a))^(-alpha/(alpha-1)) with
// B(s,a) = L(s,a) + sum_s' P[s'|s,a] v(s') - v(s). The primal point is then
// re-projected through its policy so the flow constraints hold to rounding.
// kFrankWolfe is the slow reference path (exact line search, floor-clamped
// steps). Both report the Frank-Wolfe gap certified by linear_min_oracle.
// When the unconstrained optimum dips below the floor, the returned point is
// the floored one; its gap is then measured against the whole polytope and
// `converged` can be false even though the solve itself finished.
FtrlSolution ftrl_solve(const PolytopeSpec& spec, const LossVector& cumulative,
                        const TsallisRegularizer& reg, const SolverOptions& options = {},
                        const FtrlWarmStart* warm = nullptr);

// Gradient of the FTRL objective; zero on structurally unreachable pairs.
LossVector ftrl_gradient(const PolytopeSpec& spec, const OccupancyMeasure& x,
                         const LossVector& cumulative, const TsallisRegularizer& reg);

double frank_wolfe_gap(const PolytopeSpec& spec, const OccupancyMeasure& x,
                       const LossVector& cumulative, const TsallisRegularizer& reg);

}  // namespace htmdp
