#include "htmdp/polytope_ftrl.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "htmdp/errors.hpp"

namespace htmdp {

PolytopeSpec::PolytopeSpec(const TransitionKernel& kernel, double floor)
    : kernel_(&kernel), floor_(floor) {
  const MdpLayout& layout = kernel.layout();
  kernel.validate();
  const double max_floor = 1.0 / (static_cast<double>(layout.max_layer_size()) * layout.num_actions());
  if (!(floor > 0.0 && floor < max_floor)) {
    throw DomainError("occupancy floor must lie in (0, 1/(S_max*A))");
  }
  uniform_ = occupancy_from_policy(layout, kernel, uniform_policy(layout));
  reachable_.assign(layout.num_states(), false);
  const auto marginal = state_marginal(uniform_);
  for (int s = 0; s < layout.num_states(); ++s) reachable_[s] = marginal[s] > 0.0;
}

TsallisRegularizer TsallisRegularizer::with_rate(double alpha, double eta) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (1, 2]");
  if (!(eta > 0.0)) throw DomainError("learning rate must be positive");
  return {alpha, 1.0 / eta};
}

double tsallis_value(const OccupancyMeasure& x, const TsallisRegularizer& reg) {
  double sum = 0.0;
  for (double v : x.values()) {
    if (v < 0.0) throw DomainError("Tsallis entropy of a negative entry");
    sum += std::pow(v, 1.0 / reg.alpha);
  }
  return -reg.inverse_rate * sum;
}

double ftrl_objective(const OccupancyMeasure& x, const LossVector& cumulative,
                      const TsallisRegularizer& reg) {
  return inner(x, cumulative) + tsallis_value(x, reg);
}

VertexSolution linear_min_oracle(const PolytopeSpec& spec, const LossVector& cost) {
  const MdpLayout& layout = spec.layout();
  const TransitionKernel& kernel = spec.kernel();
  std::vector<double> value(layout.num_states(), 0.0);
  std::vector<int> actions(layout.num_states(), 0);
  for (int h = layout.horizon() - 1; h >= 0; --h) {
    for (int s = layout.layer_begin(h); s < layout.layer_end(h); ++s) {
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < layout.num_actions(); ++a) {
        double q = cost(s, a);
        if (h + 1 < layout.horizon()) {
          auto r = kernel.row(s, a);
          const int next_begin = layout.layer_begin(h + 1);
          for (size_t j = 0; j < r.size(); ++j) q += r[j] * value[next_begin + j];
        }
        if (q < best) {
          best = q;
          actions[s] = a;
        }
      }
      value[s] = best;
    }
  }
  VertexSolution out{actions, occupancy_from_policy(layout, kernel, deterministic_policy(layout, actions)),
                     0.0};
  out.objective = inner(out.occupancy, cost);
  return out;
}

LossVector ftrl_gradient(const PolytopeSpec& spec, const OccupancyMeasure& x,
                         const LossVector& cumulative, const TsallisRegularizer& reg) {
  const MdpLayout& layout = spec.layout();
  LossVector grad(layout);
  const double scale = reg.inverse_rate / reg.alpha;
  const double exponent = 1.0 / reg.alpha - 1.0;
  for (int s = 0; s < layout.num_states(); ++s) {
    if (!spec.reachable()[s]) continue;
    for (int a = 0; a < layout.num_actions(); ++a) {
      grad(s, a) = cumulative(s, a) - scale * std::pow(x(s, a), exponent);
    }
  }
  return grad;
}

double frank_wolfe_gap(const PolytopeSpec& spec, const OccupancyMeasure& x,
                       const LossVector& cumulative, const TsallisRegularizer& reg) {
  const LossVector grad = ftrl_gradient(spec, x, cumulative, reg);
  const VertexSolution vertex = linear_min_oracle(spec, grad);
  return std::max(0.0, inner(x, grad) - vertex.objective);
}

namespace {

// Moves x towards the uniform occupancy just enough to respect the floor.
void enforce_floor(const PolytopeSpec& spec, OccupancyMeasure& x) {
  const auto& u = spec.uniform_occupancy().values();
  auto v = x.values();
  double mix = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    const double target = spec.floor() * u[i];
    if (v[i] < target) mix = std::max(mix, (target - v[i]) / (u[i] - v[i]));
  }
  if (mix == 0.0) return;
  for (size_t i = 0; i < v.size(); ++i) v[i] = (1.0 - mix) * v[i] + mix * u[i];
}

class DualNewton {
 public:
  DualNewton(const PolytopeSpec& spec, const LossVector& cumulative, const TsallisRegularizer& reg)
      : spec_(spec),
        layout_(spec.layout()),
        kernel_(spec.kernel()),
        loss_(cumulative),
        kappa_(reg.alpha / reg.inverse_rate),
        power_(reg.alpha / (reg.alpha - 1.0)),
        alpha_(reg.alpha) {
    for (int s = 0; s < layout_.num_states(); ++s) {
      if (spec.reachable()[s]) {
        index_.push_back(s);
      }
    }
    slot_.assign(layout_.num_states(), -1);
    for (size_t i = 0; i < index_.size(); ++i) slot_[index_[i]] = static_cast<int>(i);
  }

  // Multipliers that make every B(s,a) positive, with the smallest B in each
  // state giving mass 1/(|S_h| A).
  std::vector<double> cold_start() const {
    std::vector<double> v(layout_.num_states(), 0.0);
    for (int h = layout_.horizon() - 1; h >= 0; --h) {
      const double margin =
          std::pow(static_cast<double>(layout_.layer_size(h)) * layout_.num_actions(), 1.0 / power_) /
          kappa_;
      for (int s = layout_.layer_begin(h); s < layout_.layer_end(h); ++s) {
        if (!spec_.reachable()[s]) continue;
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < layout_.num_actions(); ++a) best = std::min(best, continuation(v, s, a));
        v[s] = best - margin;
      }
    }
    return v;
  }

  bool feasible(const std::vector<double>& v) const {
    for (int s : index_) {
      for (int a = 0; a < layout_.num_actions(); ++a) {
        if (!(advantage(v, s, a) > 0.0)) return false;
      }
    }
    return true;
  }

  double dual_value(const std::vector<double>& v) const {
    double g = v[0];
    for (int s : index_) {
      for (int a = 0; a < layout_.num_actions(); ++a) {
        const double b = advantage(v, s, a);
        g -= (alpha_ - 1.0) * b * std::pow(kappa_ * b, -power_);
      }
    }
    return g;
  }

  OccupancyMeasure primal(const std::vector<double>& v) const {
    OccupancyMeasure x(layout_);
    for (int s : index_) {
      for (int a = 0; a < layout_.num_actions(); ++a) x(s, a) = std::pow(kappa_ * advantage(v, s, a), -power_);
    }
    return x;
  }

  // Flow violation at v (the dual gradient) and, optionally, the Hessian.
  Eigen::VectorXd gradient(const std::vector<double>& v, Eigen::MatrixXd* hess) const {
    const int n = static_cast<int>(index_.size());
    const int A = layout_.num_actions();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
    if (hess != nullptr) *hess = Eigen::MatrixXd::Zero(n, n);
    grad(slot_[0]) += 1.0;
    std::vector<std::pair<int, double>> d;
    for (int s : index_) {
      const int h = layout_.layer_of(s);
      for (int a = 0; a < A; ++a) {
        const double b = advantage(v, s, a);
        const double x = std::pow(kappa_ * b, -power_);
        d.clear();
        d.emplace_back(slot_[s], -1.0);
        if (h + 1 < layout_.horizon()) {
          auto r = kernel_.row(s, a);
          const int next_begin = layout_.layer_begin(h + 1);
          for (size_t j = 0; j < r.size(); ++j) {
            if (r[j] > 0.0) d.emplace_back(slot_[next_begin + j], r[j]);
          }
        }
        const double weight = power_ * x / b;
        for (const auto& [i, di] : d) {
          grad(i) += x * di;
          if (hess == nullptr) continue;
          for (const auto& [k, dk] : d) (*hess)(i, k) += weight * di * dk;
        }
      }
    }
    return grad;
  }

  // Returns the iteration count; `v` holds the final multipliers.
  int run(std::vector<double>& v, int max_iter) const {
    const int n = static_cast<int>(index_.size());
    int iter = 0;
    double current = dual_value(v);
    Eigen::MatrixXd hess;
    Eigen::VectorXd grad = gradient(v, &hess);
    std::vector<double> trial(v);
    for (; iter < max_iter; ++iter) {
      const double residual = grad.cwiseAbs().maxCoeff();
      if (residual <= 1e-15) break;
      const Eigen::VectorXd step = hess.ldlt().solve(grad);
      const double decrement = grad.dot(step);
      if (!(decrement > 0.0) || !std::isfinite(decrement)) break;
      // Once the predicted gain is near the rounding of the dual value, the
      // Armijo test is meaningless; accept steps that shrink the residual.
      const bool endgame = decrement < 1e-10 * std::max(1.0, std::abs(current));
      double t = 1.0;
      bool moved = false;
      for (int k = 0; k < 60; ++k, t *= 0.5) {
        for (int i = 0; i < n; ++i) trial[index_[i]] = v[index_[i]] + t * step(i);
        if (!feasible(trial)) continue;
        if (endgame) {
          Eigen::MatrixXd trial_hess;
          Eigen::VectorXd trial_grad = gradient(trial, &trial_hess);
          if (trial_grad.cwiseAbs().maxCoeff() < residual) {
            v = trial;
            current = dual_value(v);
            grad = std::move(trial_grad);
            hess = std::move(trial_hess);
            moved = true;
          }
          break;
        }
        const double value = dual_value(trial);
        if (value >= current + 1e-4 * t * decrement) {
          v = trial;
          current = value;
          grad = gradient(v, &hess);
          moved = true;
          break;
        }
      }
      if (!moved) {
        ++iter;
        break;
      }
    }
    return iter;
  }

 private:
  double continuation(const std::vector<double>& v, int s, int a) const {
    double q = loss_(s, a);
    const int h = layout_.layer_of(s);
    if (h + 1 < layout_.horizon()) {
      auto r = kernel_.row(s, a);
      const int next_begin = layout_.layer_begin(h + 1);
      for (size_t j = 0; j < r.size(); ++j) q += r[j] * v[next_begin + j];
    }
    return q;
  }
  double advantage(const std::vector<double>& v, int s, int a) const { return continuation(v, s, a) - v[s]; }

  const PolytopeSpec& spec_;
  const MdpLayout& layout_;
  const TransitionKernel& kernel_;
  const LossVector& loss_;
  double kappa_;
  double power_;
  double alpha_;
  std::vector<int> index_;
  std::vector<int> slot_;
};

FtrlSolution solve_dual_newton(const PolytopeSpec& spec, const LossVector& cumulative,
                               const TsallisRegularizer& reg, const SolverOptions& options,
                               const FtrlWarmStart* warm) {
  const MdpLayout& layout = spec.layout();
  DualNewton newton(spec, cumulative, reg);
  std::vector<double> v;
  if (warm != nullptr && static_cast<int>(warm->dual.size()) == layout.num_states() &&
      newton.feasible(warm->dual)) {
    v = warm->dual;
  } else {
    v = newton.cold_start();
  }
  const int iterations = newton.run(v, std::min(options.max_iter, 500));
  OccupancyMeasure x = newton.primal(v);
  // Re-derive through the policy so normalisation and flow hold exactly.
  x = occupancy_from_policy(layout, spec.kernel(), policy_from_occupancy(layout, x));
  enforce_floor(spec, x);
  FtrlSolution out{std::move(x), {}, {std::move(v)}};
  out.report.iterations = iterations;
  out.report.objective = ftrl_objective(out.x, cumulative, reg);
  out.report.gap = frank_wolfe_gap(spec, out.x, cumulative, reg);
  out.report.converged = out.report.gap <= options.tol;
  return out;
}

FtrlSolution solve_frank_wolfe(const PolytopeSpec& spec, const LossVector& cumulative,
                               const TsallisRegularizer& reg, const SolverOptions& options) {
  const MdpLayout& layout = spec.layout();
  const auto& uniform = spec.uniform_occupancy();
  OccupancyMeasure x = uniform;
  FtrlSolution out{x, {}, {}};
  int iter = 0;
  double gap = std::numeric_limits<double>::infinity();
  OccupancyMeasure trial(layout);
  for (; iter < options.max_iter; ++iter) {
    const LossVector grad = ftrl_gradient(spec, x, cumulative, reg);
    const VertexSolution vertex = linear_min_oracle(spec, grad);
    gap = inner(x, grad) - vertex.objective;
    if (gap <= options.tol) break;
    auto xv = x.values();
    auto vv = vertex.occupancy.values();
    double step_max = 1.0;
    for (size_t i = 0; i < xv.size(); ++i) {
      const double d = vv[i] - xv[i];
      const double lower = spec.floor() * uniform.values()[i];
      if (d < 0.0) step_max = std::min(step_max, (xv[i] - lower) / -d);
    }
    step_max = std::max(step_max, 0.0);
    auto slope = [&](double gamma) {
      auto tv = trial.values();
      for (size_t i = 0; i < xv.size(); ++i) tv[i] = xv[i] + gamma * (vv[i] - xv[i]);
      const LossVector g = ftrl_gradient(spec, trial, cumulative, reg);
      double sum = 0.0;
      for (size_t i = 0; i < xv.size(); ++i) sum += g.values()[i] * (vv[i] - xv[i]);
      return sum;
    };
    double gamma;
    if (slope(step_max) <= 0.0) {
      gamma = step_max;
    } else {
      double lo = 0.0;
      double hi = step_max;
      for (int k = 0; k < 60; ++k) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0.0 ? hi : lo) = mid;
      }
      gamma = 0.5 * (lo + hi);
    }
    if (gamma <= 0.0) break;
    for (size_t i = 0; i < xv.size(); ++i) xv[i] += gamma * (vv[i] - xv[i]);
  }
  out.x = std::move(x);
  out.report.iterations = iter;
  out.report.objective = ftrl_objective(out.x, cumulative, reg);
  out.report.gap = std::max(0.0, frank_wolfe_gap(spec, out.x, cumulative, reg));
  out.report.converged = out.report.gap <= options.tol;
  return out;
}

}  // namespace

FtrlSolution ftrl_solve(const PolytopeSpec& spec, const LossVector& cumulative,
                        const TsallisRegularizer& reg, const SolverOptions& options,
                        const FtrlWarmStart* warm) {
  if (!(options.tol > 0.0)) throw DomainError("solver tolerance must be positive");
  if (!(reg.alpha > 1.0 && reg.alpha <= 2.0)) throw DomainError("alpha must lie in (1, 2]");
  if (!(reg.inverse_rate > 0.0)) throw DomainError("inverse learning rate must be positive");
  const MdpLayout& layout = spec.layout();
  if (cumulative.num_states() != layout.num_states() || cumulative.num_actions() != layout.num_actions()) {
    throw StructuralError("cumulative loss does not match the polytope layout");
  }
  for (double v : cumulative.values()) {
    if (!std::isfinite(v)) throw DomainError("cumulative loss must be finite");
  }
  if (options.method == SolverMethod::kFrankWolfe) return solve_frank_wolfe(spec, cumulative, reg, options);
  return solve_dual_newton(spec, cumulative, reg, options, warm);
}

}  // namespace htmdp
