#include "htmdp/environments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "htmdp/errors.hpp"

namespace htmdp {

LossModel LossModel::point_mass(double value) {
  if (!std::isfinite(value)) throw DomainError("point mass must be finite");
  return LossModel(value, NoNoise{});
}

LossModel LossModel::bounded_uniform(double lo, double hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi) && lo <= hi)) throw DomainError("uniform needs lo <= hi");
  return LossModel(0.5 * (lo + hi), UniformNoise{0.5 * (hi - lo)});
}

LossModel LossModel::symmetric_pareto(double tail, double scale) {
  if (!(tail > 1.0)) throw DomainError("Pareto tail index must exceed 1 for a finite mean");
  if (!(scale > 0.0)) throw DomainError("Pareto scale must be positive");
  return LossModel(0.0, ParetoNoise{tail, scale});
}

LossModel LossModel::custom(double mean, std::function<double(Rng&)> centered_draw) {
  if (!centered_draw) throw DomainError("custom noise needs a sampler");
  return LossModel(mean, CustomNoise{std::move(centered_draw)});
}

LossModel LossModel::shifted(double offset) const { return LossModel(mean_ + offset, noise_); }

LossModel LossModel::with_mean(double mean) const { return LossModel(mean, noise_); }

double LossModel::sample_noise(Rng& rng) const {
  struct Visitor {
    Rng& rng;
    double operator()(const NoNoise&) const { return 0.0; }
    double operator()(const UniformNoise& u) const {
      if (u.half_width == 0.0) return 0.0;
      return std::uniform_real_distribution<double>(-u.half_width, u.half_width)(rng);
    }
    double operator()(const ParetoNoise& p) const {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      // 1 - U lies in (0, 1], so the power is finite.
      const double magnitude = p.scale * std::pow(1.0 - unit(rng), -1.0 / p.tail);
      return unit(rng) < 0.5 ? -magnitude : magnitude;
    }
    double operator()(const CustomNoise& c) const { return c.draw(rng); }
  };
  return std::visit(Visitor{rng}, noise_);
}

double sample_loss(const LossModel& model, Rng& rng) { return model.sample(rng); }

namespace {

double uniform_abs_moment(double mu, double w, double alpha) {
  if (w == 0.0) return std::pow(std::abs(mu), alpha);
  // Antiderivative of |u|^alpha.
  auto F = [alpha](double u) { return std::copysign(std::pow(std::abs(u), alpha + 1.0), u) / (alpha + 1.0); };
  return (F(mu + w) - F(mu - w)) / (2.0 * w);
}

double pareto_abs_moment(const ParetoNoise& p, double alpha) {
  if (!(p.tail > alpha)) return std::numeric_limits<double>::infinity();
  return p.tail * std::pow(p.scale, alpha) / (p.tail - alpha);
}

double alpha_moment_bound(const LossModel& model, double alpha) {
  const double mu = model.mean();
  const auto& noise = model.noise();
  if (std::holds_alternative<NoNoise>(noise)) return std::pow(std::abs(mu), alpha);
  if (const auto* u = std::get_if<UniformNoise>(&noise)) return uniform_abs_moment(mu, u->half_width, alpha);
  if (const auto* p = std::get_if<ParetoNoise>(&noise)) {
    const double centred = pareto_abs_moment(*p, alpha);
    if (mu == 0.0) return centred;
    return std::pow(2.0, alpha - 1.0) * (std::pow(std::abs(mu), alpha) + centred);
  }
  throw UnsupportedError("no analytic alpha-moment for custom noise");
}

}  // namespace

MomentCertificate alpha_moment_certificate(const LossModel& model, double sigma, double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (1, 2]");
  if (!(sigma >= 0.0)) throw DomainError("sigma must be non-negative");
  const double bound = alpha_moment_bound(model, alpha);
  return {bound, bound <= std::pow(sigma, alpha)};
}

double certified_sigma(const LossModel& model, double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (1, 2]");
  return std::pow(alpha_moment_bound(model, alpha), 1.0 / alpha);
}

LossVector LossInstance::means(const MdpLayout& layout) const {
  if (static_cast<int>(models.size()) != layout.num_pairs()) {
    throw StructuralError("loss instance does not match the MDP layout");
  }
  LossVector out(layout);
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) out(s, a) = models[layout.pair(s, a)].mean();
  }
  return out;
}

OptimalValues optimal_values(const MdpLayout& layout, const TransitionKernel& kernel, const LossVector& means) {
  if (!(kernel.layout() == layout)) throw StructuralError("kernel does not match the MDP layout");
  if (means.num_states() != layout.num_states() || means.num_actions() != layout.num_actions()) {
    throw StructuralError("means do not match the MDP layout");
  }
  OptimalValues out{std::vector<double>(layout.num_states(), 0.0), LossVector(layout),
                    std::vector<int>(layout.num_states(), 0)};
  for (int h = layout.horizon() - 1; h >= 0; --h) {
    for (int s = layout.layer_begin(h); s < layout.layer_end(h); ++s) {
      double best = std::numeric_limits<double>::infinity();
      for (int a = 0; a < layout.num_actions(); ++a) {
        double q = means(s, a);
        if (h + 1 < layout.horizon()) {
          auto r = kernel.row(s, a);
          const int next_begin = layout.layer_begin(h + 1);
          for (size_t j = 0; j < r.size(); ++j) q += r[j] * out.value[next_begin + j];
        }
        out.q(s, a) = q;
        if (q < best) {
          best = q;
          out.actions[s] = a;
        }
      }
      out.value[s] = best;
    }
  }
  return out;
}

Policy benchmark_policy(const MdpLayout& layout, const TransitionKernel& kernel, const LossVector& means) {
  return deterministic_policy(layout, optimal_values(layout, kernel, means).actions);
}

GapTable gap_table(const MdpLayout& layout, const TransitionKernel& kernel, const LossVector& means,
                   double alpha) {
  if (!(alpha > 1.0 && alpha <= 2.0)) throw DomainError("alpha must lie in (1, 2]");
  const auto opt = optimal_values(layout, kernel, means);
  GapTable table;
  table.gap = LossVector(layout);
  table.benchmark = opt.actions;
  table.min_gap = std::numeric_limits<double>::infinity();
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      const double g = std::max(0.0, opt.q(s, a) - opt.value[s]);
      table.gap(s, a) = g;
      if (a == opt.actions[s]) continue;
      table.min_gap = std::min(table.min_gap, g);
      if (g == 0.0) {
        table.omega_infinite = true;
        continue;
      }
      table.omega_two += 1.0 / g;
      table.omega_alpha += std::pow(g, -1.0 / (alpha - 1.0));
    }
  }
  if (table.omega_infinite) {
    table.omega_two = std::numeric_limits<double>::infinity();
    table.omega_alpha = std::numeric_limits<double>::infinity();
  }
  if (layout.num_actions() == 1) table.min_gap = 0.0;
  return table;
}

double self_bounding_lower_term(const GapTable& gaps, std::span<const OccupancyMeasure> occupancies) {
  double total = 0.0;
  for (const auto& rho : occupancies) total += inner(rho, gaps.gap);
  return total;
}

std::string regime_name(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::kStochastic: return "stochastic";
    case RegimeKind::kFlip: return "flip";
    case RegimeKind::kSinusoid: return "sinusoid";
    case RegimeKind::kCorrupted: return "corrupted";
  }
  return "unknown";
}

RegimeKind parse_regime(const std::string& name) {
  if (name == "stochastic") return RegimeKind::kStochastic;
  if (name == "flip") return RegimeKind::kFlip;
  if (name == "sinusoid") return RegimeKind::kSinusoid;
  if (name == "corrupted") return RegimeKind::kCorrupted;
  throw ConfigError("unknown regime '" + name + "'");
}

Regime::Regime(RegimeConfig config, const MdpLayout& layout, const TransitionKernel& kernel,
               LossVector base_means)
    : config_(config), layout_(layout), base_(std::move(base_means)) {
  if (base_.num_states() != layout.num_states() || base_.num_actions() != layout.num_actions()) {
    throw StructuralError("base means do not match the MDP layout");
  }
  const auto opt = optimal_values(layout, kernel, base_);
  best_ = opt.actions;
  second_.assign(layout.num_states(), best_.empty() ? 0 : 0);
  for (int s = 0; s < layout.num_states(); ++s) {
    int runner = best_[s];
    double value = std::numeric_limits<double>::infinity();
    for (int a = 0; a < layout.num_actions(); ++a) {
      if (a == best_[s]) continue;
      if (opt.q(s, a) < value) {
        value = opt.q(s, a);
        runner = a;
      }
    }
    second_[s] = runner;
  }
  switch (config_.kind) {
    case RegimeKind::kStochastic: break;
    case RegimeKind::kFlip:
      if (config_.flip_period < 1) throw ConfigError("flip period must be positive");
      break;
    case RegimeKind::kSinusoid:
      if (config_.sine_period < 1) throw ConfigError("sine period must be positive");
      if (!(config_.amplitude >= 0.0)) throw ConfigError("amplitude must be non-negative");
      break;
    case RegimeKind::kCorrupted: {
      if (!(config_.corruption_shift >= 0.0) || config_.corruption_episodes < 0) {
        throw ConfigError("corruption shift and episode count must be non-negative");
      }
      const double injected = config_.corruption_shift * static_cast<double>(config_.corruption_episodes);
      if (injected > config_.corruption_budget * (1.0 + 1e-12)) {
        throw ConfigError("corruption schedule injects " + std::to_string(injected) +
                          " which exceeds the budget " + std::to_string(config_.corruption_budget));
      }
      break;
    }
  }
}

LossVector Regime::means(long long t, std::span<const Trajectory> /*history*/) const {
  LossVector out = base_;
  const int A = layout_.num_actions();
  switch (config_.kind) {
    case RegimeKind::kStochastic: break;
    case RegimeKind::kFlip:
      if ((t / config_.flip_period) % 2 == 1) {
        for (int s = 0; s < layout_.num_states(); ++s) {
          std::swap(out(s, best_[s]), out(s, second_[s]));
        }
      }
      break;
    case RegimeKind::kSinusoid: {
      const double phase = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(config_.sine_period);
      for (int s = 0; s < layout_.num_states(); ++s) {
        for (int a = 0; a < A; ++a) {
          out(s, a) += config_.amplitude * std::sin(phase + 2.0 * std::numbers::pi * a / A);
        }
      }
      break;
    }
    case RegimeKind::kCorrupted:
      if (t <= config_.corruption_episodes) {
        for (int s = 0; s < layout_.num_states(); ++s) {
          for (int a = 0; a < A; ++a) {
            out(s, a) += a == best_[s] ? config_.corruption_shift : -config_.corruption_shift;
          }
        }
      }
      break;
  }
  return out;
}

LossVector Regime::average_means(long long T) const {
  LossVector avg(layout_);
  for (long long t = 1; t <= T; ++t) {
    const auto m = means(t);
    for (size_t i = 0; i < avg.size(); ++i) avg.values()[i] += m.values()[i];
  }
  if (T > 0) {
    for (double& v : avg.values()) v /= static_cast<double>(T);
  }
  return avg;
}

double Regime::injected_corruption(long long T) const {
  double total = 0.0;
  for (long long t = 1; t <= T; ++t) {
    const auto m = means(t);
    double worst = 0.0;
    for (size_t i = 0; i < m.size(); ++i) worst = std::max(worst, std::abs(m.values()[i] - base_.values()[i]));
    total += worst;
  }
  return total;
}

double Regime::max_abs_mean(int s, int a) const {
  const double base = std::abs(base_(s, a));
  switch (config_.kind) {
    case RegimeKind::kStochastic: return base;
    case RegimeKind::kFlip: {
      double out = base;
      if (a == best_[s]) out = std::max(out, std::abs(base_(s, second_[s])));
      if (a == second_[s]) out = std::max(out, std::abs(base_(s, best_[s])));
      return out;
    }
    case RegimeKind::kSinusoid: return base + config_.amplitude;
    case RegimeKind::kCorrupted: return base + config_.corruption_shift;
  }
  return base;
}

Environment::Environment(LayeredMdp mdp, LossInstance instance, Regime regime)
    : mdp_(std::move(mdp)), instance_(std::move(instance)), regime_(std::move(regime)) {
  if (static_cast<int>(instance_.models.size()) != mdp_.layout().num_pairs()) {
    throw StructuralError("loss instance does not match the MDP layout");
  }
}

Trajectory Environment::rollout(const Policy& policy, Rng& rng) {
  ++episode_;
  const auto m = regime_.means(episode_);
  const auto& layout = mdp_.layout();
  const LossOracle oracle = [&](int s, int a, Rng& r) {
    return m(s, a) + instance_.models[layout.pair(s, a)].sample_noise(r);
  };
  return sample_trajectory(layout, mdp_.transition, policy, oracle, rng);
}

double Environment::certified_sigma(double alpha) const {
  const auto& layout = mdp_.layout();
  double sigma = 0.0;
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) {
      const auto& model = instance_.models[layout.pair(s, a)];
      sigma = std::max(sigma, htmdp::certified_sigma(model.with_mean(regime_.max_abs_mean(s, a)), alpha));
    }
  }
  return sigma;
}

namespace {

constexpr double kNoiseTail = 1.8;
constexpr double kNoiseScale = 0.02;

LossModel noisy(double mean) { return LossModel::symmetric_pareto(kNoiseTail, kNoiseScale).with_mean(mean); }

}  // namespace

NamedInstance default_instance() {
  MdpLayout layout({1, 2}, 2);
  TransitionKernel P(layout);
  const double rows[2][2] = {{0.7, 0.3}, {0.4, 0.6}};
  for (int a = 0; a < 2; ++a) {
    auto r = P.row(0, a);
    r[0] = rows[a][0];
    r[1] = rows[a][1];
  }
  LossInstance losses;
  // State 0 prefers action 0; states 1 and 2 prefer opposite actions. Both
  // second-layer states have value -0.15, so every suboptimal gap is 0.3.
  const double means[3][2] = {{-0.15, 0.15}, {-0.15, 0.15}, {0.15, -0.15}};
  for (int s = 0; s < 3; ++s) {
    for (int a = 0; a < 2; ++a) losses.models.push_back(noisy(means[s][a]));
  }
  return {LayeredMdp{std::move(P)}, std::move(losses)};
}

NamedInstance bandit_instance() {
  MdpLayout layout({1}, 3);
  LossInstance losses;
  for (double m : {-0.15, 0.15, 0.15}) losses.models.push_back(noisy(m));
  return {LayeredMdp{TransitionKernel(layout)}, std::move(losses)};
}

NamedInstance coverage_instance() {
  MdpLayout layout({1, 3}, 2);
  TransitionKernel P(layout);
  const double rows[2][3] = {{0.5, 0.3, 0.2}, {0.1, 0.2, 0.7}};
  for (int a = 0; a < 2; ++a) {
    auto r = P.row(0, a);
    for (int j = 0; j < 3; ++j) r[j] = rows[a][j];
  }
  LossInstance losses;
  const double means[4][2] = {{-0.1, 0.2}, {-0.2, 0.1}, {0.1, -0.2}, {-0.2, 0.1}};
  for (int s = 0; s < 4; ++s) {
    for (int a = 0; a < 2; ++a) losses.models.push_back(noisy(means[s][a]));
  }
  return {LayeredMdp{std::move(P)}, std::move(losses)};
}

NamedInstance instance_by_name(const std::string& name) {
  if (name == "default") return default_instance();
  if (name == "bandit") return bandit_instance();
  if (name == "coverage") return coverage_instance();
  throw ConfigError("unknown instance '" + name + "'");
}

}  // namespace htmdp
