#include "htmdp/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "htmdp/errors.hpp"
#include "htmdp/transition_confidence.hpp"

namespace htmdp::oracles {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

// Probability of jumping from (s, a) to the global state `next`, read straight
// from the row without going through kernel helpers beyond row access.
double step_prob(const MdpLayout& layout, const TransitionKernel& kernel, int s, int a, int next) {
  const int h = layout.layer_of(s);
  if (h + 1 >= layout.horizon()) return 0.0;
  const int j = next - layout.layer_begin(h + 1);
  return kernel.row(s, a)[static_cast<size_t>(j)];
}

// Visits every composition of n into `parts` nonnegative integers.
template <class Visit>
void for_each_composition(int n, int parts, std::vector<int>& buf, int pos, int remaining, Visit& visit) {
  if (pos == parts - 1) {
    buf[static_cast<size_t>(pos)] = remaining;
    visit(buf);
    return;
  }
  for (int k = 0; k <= remaining; ++k) {
    buf[static_cast<size_t>(pos)] = k;
    for_each_composition(n, parts, buf, pos + 1, remaining - k, visit);
  }
}

int grid_resolution(double step) {
  if (!(step >= 1e-4 && step <= 1.0)) throw DomainError("grid step must lie in [1e-4, 1]");
  const double inv = 1.0 / step;
  const int n = static_cast<int>(std::lround(inv));
  if (std::abs(inv - n) > 1e-6 * inv) throw DomainError("1/step must be an integer");
  return n;
}

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Forward recursion written out locally for the UOB enumeration.
void forward_occupancy(const MdpLayout& layout, const std::vector<std::vector<double>>& rows,
                       const std::vector<int>& row_of_pair, const Policy& policy, std::vector<double>& mass,
                       OccupancyMeasure& out) {
  std::fill(mass.begin(), mass.end(), 0.0);
  mass[0] = 1.0;
  const int A = layout.num_actions();
  for (int s = 0; s < layout.num_states(); ++s) {
    const int h = layout.layer_of(s);
    for (int a = 0; a < A; ++a) {
      const double r = mass[static_cast<size_t>(s)] * policy(s, a);
      out(s, a) = r;
      if (h + 1 >= layout.horizon() || r == 0.0) continue;
      const auto& row = rows[static_cast<size_t>(row_of_pair[static_cast<size_t>(layout.pair(s, a))])];
      const int base = layout.layer_begin(h + 1);
      for (size_t j = 0; j < row.size(); ++j) mass[base + j] += r * row[j];
    }
  }
}

}  // namespace

OccupancyMeasure brute_force_occupancy(const MdpLayout& layout, const TransitionKernel& kernel,
                                       const Policy& policy, long long max_paths) {
  if (!(kernel.layout() == layout) || policy.num_states() != layout.num_states() ||
      policy.num_actions() != layout.num_actions()) {
    throw StructuralError("brute_force_occupancy: shapes disagree");
  }
  OccupancyMeasure occ(layout);
  long long paths = 0;
  const int H = layout.horizon();
  const int A = layout.num_actions();

  // Depth-first over (state, action) prefixes; `prob` is the probability of
  // the prefix ending in state s.
  auto dfs = [&](auto&& self, int s, double prob) -> void {
    const int h = layout.layer_of(s);
    for (int a = 0; a < A; ++a) {
      if (++paths > max_paths) throw SizeError("brute_force_occupancy: path budget exceeded");
      const double pa = prob * policy(s, a);
      occ(s, a) += pa;
      if (h + 1 >= H || pa == 0.0) continue;
      for (int next = layout.layer_begin(h + 1); next < layout.layer_end(h + 1); ++next) {
        const double p = step_prob(layout, kernel, s, a, next);
        if (p > 0.0) self(self, next, pa * p);
      }
    }
  };
  dfs(dfs, 0, 1.0);
  return occ;
}

double simplex_objective(std::span<const double> x, std::span<const double> loss, double alpha, double eta) {
  double lin = 0.0;
  double reg = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    lin += x[i] * loss[i];
    reg += std::pow(std::max(x[i], 0.0), 1.0 / alpha);
  }
  return lin - reg / eta;
}

GridMinimum brute_force_ftrl(std::span<const double> loss, double alpha, double eta, double step) {
  const int A = static_cast<int>(loss.size());
  if (A < 1 || A > 4) throw SizeError("brute_force_ftrl handles 1 to 4 actions");
  const int n = grid_resolution(step);
  if (binomial(n + A - 1, A - 1) > 2e8) throw SizeError("brute_force_ftrl: grid too large");

  GridMinimum best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<int> comp(static_cast<size_t>(A));
  std::vector<double> x(static_cast<size_t>(A));
  auto visit = [&](const std::vector<int>& c) {
    for (int i = 0; i < A; ++i) x[static_cast<size_t>(i)] = c[static_cast<size_t>(i)] / static_cast<double>(n);
    const double v = simplex_objective(x, loss, alpha, eta);
    ++best.points;
    if (v < best.value) {
      best.value = v;
      best.argmin = x;
    }
  };
  for_each_composition(n, A, comp, 0, n, visit);
  return best;
}

double nearest_grid_objective(std::span<const double> x, std::span<const double> loss, double alpha, double eta,
                              double step) {
  const int n = grid_resolution(step);
  const size_t A = x.size();
  std::vector<int> counts(A);
  std::vector<std::pair<double, size_t>> remainders;
  int used = 0;
  for (size_t i = 0; i < A; ++i) {
    const double scaled = std::max(x[i], 0.0) * n;
    counts[i] = static_cast<int>(std::floor(scaled));
    used += counts[i];
    remainders.emplace_back(scaled - counts[i], i);
  }
  std::sort(remainders.begin(), remainders.end(), [](auto& l, auto& r) { return l.first > r.first; });
  for (size_t k = 0; used < n && k < remainders.size(); ++k, ++used) ++counts[remainders[k].second];
  while (used > n) {
    --*std::max_element(counts.begin(), counts.end());
    --used;
  }
  std::vector<double> g(A);
  for (size_t i = 0; i < A; ++i) g[i] = counts[i] / static_cast<double>(n);
  return simplex_objective(g, loss, alpha, eta);
}

OccupancyMeasure brute_force_uob(const TransitionKernel& center, const TransitionKernel& width, const Policy& policy,
                                 double step, long long max_combinations) {
  const MdpLayout& layout = center.layout();
  if (!(width.layout() == layout) || policy.num_states() != layout.num_states()) {
    throw StructuralError("brute_force_uob: shapes disagree");
  }
  const int n = grid_resolution(step);
  const int A = layout.num_actions();

  // Candidate rows per (s, a). Pairs the policy never plays keep their
  // center row: they cannot move any occupancy.
  std::vector<std::vector<std::vector<double>>> candidates;
  std::vector<int> pair_slot(static_cast<size_t>(layout.num_pairs()), -1);
  double total = 1.0;
  for (int s = 0; s < layout.num_states(); ++s) {
    if (layout.layer_of(s) + 1 >= layout.horizon()) continue;
    for (int a = 0; a < A; ++a) {
      auto c = center.row(s, a);
      auto w = width.row(s, a);
      std::vector<std::vector<double>> rows;
      rows.emplace_back(c.begin(), c.end());
      if (policy(s, a) > 0.0) {
        const int m = static_cast<int>(c.size());
        if (binomial(n + m - 1, m - 1) > 1e7) throw SizeError("brute_force_uob: row grid too large");
        std::vector<int> comp(static_cast<size_t>(m));
        std::vector<double> q(static_cast<size_t>(m));
        auto visit = [&](const std::vector<int>& k) {
          for (int j = 0; j < m; ++j) {
            q[static_cast<size_t>(j)] = k[static_cast<size_t>(j)] / static_cast<double>(n);
            if (std::abs(q[static_cast<size_t>(j)] - c[static_cast<size_t>(j)]) > w[static_cast<size_t>(j)] + 1e-12) {
              return;
            }
          }
          rows.push_back(q);
        };
        for_each_composition(n, m, comp, 0, n, visit);
      }
      pair_slot[static_cast<size_t>(layout.pair(s, a))] = static_cast<int>(candidates.size());
      total *= static_cast<double>(rows.size());
      candidates.push_back(std::move(rows));
    }
  }
  if (total > static_cast<double>(max_combinations)) throw SizeError("brute_force_uob: too many kernels");

  OccupancyMeasure best(layout);
  OccupancyMeasure occ(layout);
  std::vector<double> mass(static_cast<size_t>(layout.num_states()));
  std::vector<size_t> choice(candidates.size(), 0);
  std::vector<std::vector<double>> rows(candidates.size());
  std::vector<int> row_of_pair(static_cast<size_t>(layout.num_pairs()), 0);
  for (size_t p = 0; p < pair_slot.size(); ++p) row_of_pair[p] = std::max(pair_slot[p], 0);

  while (true) {
    for (size_t i = 0; i < candidates.size(); ++i) rows[i] = candidates[i][choice[i]];
    forward_occupancy(layout, rows, row_of_pair, policy, mass, occ);
    for (size_t i = 0; i < occ.size(); ++i) best.values()[i] = std::max(best.values()[i], occ.values()[i]);
    size_t k = 0;
    while (k < choice.size() && ++choice[k] == candidates[k].size()) choice[k++] = 0;
    if (k == choice.size()) break;
  }
  if (candidates.empty()) {
    forward_occupancy(layout, rows, row_of_pair, policy, mass, best);
  }
  return best;
}

double mass_propagation_slack(const MdpLayout& layout, const TransitionKernel& kernel, const Policy& pi,
                              std::span<const int> dagger) {
  if (static_cast<int>(dagger.size()) != layout.num_states()) throw StructuralError("dagger needs one action per state");
  Policy det(layout);
  for (int s = 0; s < layout.num_states(); ++s) det(s, dagger[static_cast<size_t>(s)]) = 1.0;
  const auto rho = brute_force_occupancy(layout, kernel, pi);
  const auto rho_dagger = brute_force_occupancy(layout, kernel, det);
  double lhs = 0.0;
  double off = 0.0;
  for (int s = 0; s < layout.num_states(); ++s) {
    double q = 0.0;
    double q_dagger = 0.0;
    for (int a = 0; a < layout.num_actions(); ++a) {
      q += rho(s, a);
      q_dagger += rho_dagger(s, a);
      if (a != dagger[static_cast<size_t>(s)]) off += rho(s, a);
    }
    lhs += std::max(q - q_dagger, 0.0);
  }
  return layout.horizon() * off - lhs;
}

OracleReport check_mass_propagation(const MdpLayout& layout, const TransitionKernel& kernel, const Policy& pi,
                                    std::span<const int> dagger) {
  OracleReport r;
  r.name = "mass_propagation";
  r.tolerance = 1e-10;
  r.samples = 1;
  const double slack = mass_propagation_slack(layout, kernel, pi, dagger);
  r.max_violation = std::max(0.0, -slack);
  r.pass = r.max_violation <= r.tolerance;
  r.detail = fmt("slack=%.17g", slack);
  return r;
}

double shifted_uniform_bound(const ShiftBoundParams& p, long long t, double x) {
  const double hsa = static_cast<double>(p.H) * p.S * p.A;
  const double lead = 1.0 + hsa * (1.0 + std::pow(p.A, 1.0 - 1.0 / p.alpha));
  return lead * p.C * p.sigma * std::pow(static_cast<double>(t), 1.0 / p.alpha) * std::pow(x, 1.0 / p.alpha - 1.0);
}

double shifted_second_moment_bound(const ShiftBoundParams& p, long long t, double x, double pi) {
  return 2.0 * p.H * p.H * (1.0 - pi) * std::pow(p.C, 2.0 - p.alpha) * p.sigma * p.sigma *
         std::pow(static_cast<double>(t), 2.0 / p.alpha - 1.0) * std::pow(x, 2.0 / p.alpha - 2.0);
}

ShiftedBoundsChecker::ShiftedBoundsChecker(const MdpLayout& layout, ShiftBoundParams params)
    : layout_(layout),
      params_(params),
      worst_uniform_(-std::numeric_limits<double>::infinity()),
      ratio_sum_(static_cast<size_t>(layout.num_pairs()), 0.0),
      ratio_sq_sum_(static_cast<size_t>(layout.num_pairs()), 0.0),
      ratio_count_(static_cast<size_t>(layout.num_pairs()), 0) {}

void ShiftedBoundsChecker::add(long long t, const OccupancyMeasure& x, const Policy& policy,
                               const LossVector& shifted) {
  ++samples_;
  for (int s = 0; s < layout_.num_states(); ++s) {
    double centred = 0.0;
    double scale = 1.0;
    for (int a = 0; a < layout_.num_actions(); ++a) {
      const double v = shifted(s, a);
      centred += policy(s, a) * v;
      scale = std::max(scale, std::abs(v));
      const double xa = x(s, a);
      if (!(xa > 0.0)) continue;
      const double u = shifted_uniform_bound(params_, t, xa);
      worst_uniform_ = std::max(worst_uniform_, std::abs(v) / u - 1.0);
      const double m = shifted_second_moment_bound(params_, t, xa, policy(s, a));
      if (m > 0.0) {
        const double r = v * v / m;
        const auto i = static_cast<size_t>(layout_.pair(s, a));
        ratio_sum_[i] += r;
        ratio_sq_sum_[i] += r * r;
        ++ratio_count_[i];
      }
    }
    worst_centering_ = std::max(worst_centering_, std::abs(centred) / scale);
  }
}

OracleReport ShiftedBoundsChecker::uniform_report() const {
  OracleReport r;
  r.name = "shifted_uniform_bound";
  r.samples = samples_;
  r.tolerance = 1e-9;
  r.max_violation = std::max(0.0, worst_uniform_);
  r.pass = r.max_violation <= r.tolerance;
  r.detail = fmt("max |shift|/bound = %.6g", worst_uniform_ + 1.0);
  return r;
}

OracleReport ShiftedBoundsChecker::centering_report() const {
  OracleReport r;
  r.name = "shifted_centering";
  r.samples = samples_;
  r.tolerance = 1e-9;
  r.max_violation = worst_centering_;
  r.pass = r.max_violation <= r.tolerance;
  return r;
}

std::vector<double> ShiftedBoundsChecker::second_moment_means() const {
  std::vector<double> out(ratio_sum_.size(), 0.0);
  for (size_t i = 0; i < out.size(); ++i) {
    if (ratio_count_[i] > 0) out[i] = ratio_sum_[i] / static_cast<double>(ratio_count_[i]);
  }
  return out;
}

OracleReport ShiftedBoundsChecker::second_moment_report() const {
  OracleReport r;
  r.name = "shifted_second_moment";
  r.samples = samples_;
  r.tolerance = 0.0;
  double worst_mean = 0.0;
  for (size_t i = 0; i < ratio_sum_.size(); ++i) {
    const auto n = static_cast<double>(ratio_count_[i]);
    if (n < 2) continue;
    const double mean = ratio_sum_[i] / n;
    const double var = std::max(0.0, (ratio_sq_sum_[i] - n * mean * mean) / (n - 1.0));
    const double se = std::sqrt(var / n);
    r.max_violation = std::max(r.max_violation, mean - (1.0 + 3.0 * se));
    worst_mean = std::max(worst_mean, mean);
  }
  r.pass = r.max_violation <= r.tolerance;
  r.detail = fmt("largest mean ratio = %.6g", worst_mean);
  return r;
}

double path_value(const MdpLayout& layout, const TransitionKernel& kernel, const Policy& policy,
                  const LossVector& loss) {
  const auto occ = brute_force_occupancy(layout, kernel, policy);
  double v = 0.0;
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) v += occ(s, a) * loss(s, a);
  }
  return v;
}

PessimismGap pessimism_gap(const MdpLayout& layout, const TransitionKernel& truth, const TransitionKernel& center,
                           const LossVector& aggregate_width, double D, const Policy& policy,
                           const LossInstance& losses, int draws, Rng& rng) {
  if (draws < 2) throw DomainError("pessimism_gap needs at least two draws");
  // Values are linear in the loss, so the occupancies are enumerated once.
  const auto rho = brute_force_occupancy(layout, truth, policy);
  const auto rho_hat = brute_force_occupancy(layout, center, policy);
  double penalty = 0.0;
  for (int s = 0; s < layout.num_states(); ++s) {
    for (int a = 0; a < layout.num_actions(); ++a) penalty += rho_hat(s, a) * D * aggregate_width(s, a);
  }
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int d = 0; d < draws; ++d) {
    double diff = penalty;
    for (int s = 0; s < layout.num_states(); ++s) {
      for (int a = 0; a < layout.num_actions(); ++a) {
        const double l = losses.at(layout, s, a).sample(rng);
        diff += (rho(s, a) - rho_hat(s, a)) * l;
      }
    }
    sum += diff;
    sum_sq += diff * diff;
  }
  PessimismGap g;
  g.draws = draws;
  g.mean = sum / draws;
  const double var = std::max(0.0, (sum_sq - draws * g.mean * g.mean) / (draws - 1.0));
  g.stderr = std::sqrt(var / draws);
  return g;
}

OracleReport check_pessimism(const NamedInstance& instance, double sigma, const PessimismSuite& suite) {
  const MdpLayout& layout = instance.mdp.layout();
  const TransitionKernel& truth = instance.mdp.transition;
  const double D = layout.horizon() * sigma;
  constexpr long long kHorizonT = 4096;
  const double delta = std::pow(static_cast<double>(kHorizonT), -3.0);
  const double li = log_iota(layout, kHorizonT, delta);

  // Policy battery: uniform, deterministic policies enumerated by index, then
  // random stochastic policies.
  std::vector<Policy> battery;
  battery.push_back(uniform_policy(layout));
  Rng policy_rng(suite.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 1; static_cast<int>(battery.size()) < suite.policies; ++k) {
    Policy p(layout);
    if (k % 2 == 1) {
      long long code = k / 2;
      for (int s = 0; s < layout.num_states(); ++s) {
        p(s, static_cast<int>(code % layout.num_actions())) = 1.0;
        code /= layout.num_actions();
      }
    } else {
      for (int s = 0; s < layout.num_states(); ++s) {
        double total = 0.0;
        for (int a = 0; a < layout.num_actions(); ++a) total += (p(s, a) = 0.05 + unit(policy_rng));
        for (int a = 0; a < layout.num_actions(); ++a) p(s, a) /= total;
      }
    }
    battery.push_back(std::move(p));
  }

  OracleReport r;
  r.name = "pessimism";
  r.tolerance = 0.0;
  long long covered = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  const Policy explore = uniform_policy(layout);
  const LossOracle silent = [](int, int, Rng&) { return 0.0; };
  for (int rep = 0; rep < suite.replicas; ++rep) {
    Rng rng(suite.seed + static_cast<std::uint64_t>(rep));
    const long long episodes = 8LL << (rep % 8);
    Counters counters(layout);
    for (long long e = 0; e < episodes; ++e) counters.update(sample_trajectory(layout, truth, explore, silent, rng));
    const auto model = rebuild_epoch_model(counters, 2, episodes + 1, li);
    if (!model.confidence.contains(truth)) continue;
    ++covered;
    for (const auto& policy : battery) {
      const auto g = pessimism_gap(layout, truth, model.confidence.center, model.confidence.aggregate, D, policy,
                                   instance.losses, suite.draws, rng);
      ++r.samples;
      worst_margin = std::min(worst_margin, g.mean + 3.0 * g.stderr);
      r.max_violation = std::max(r.max_violation, -(g.mean + 3.0 * g.stderr));
    }
  }
  r.pass = covered > 0 && r.max_violation <= r.tolerance;
  char buf[160];
  std::snprintf(buf, sizeof buf, "covered epochs %lld of %d, smallest margin + 3se = %.6g", covered, suite.replicas,
                worst_margin);
  r.detail = buf;
  return r;
}

std::vector<double> tsallis_inf_reference(const TsallisInfConfig& cfg, std::uint64_t seed) {
  const size_t A = cfg.means.size();
  if (A < 2) throw DomainError("the bandit reference needs at least two arms");
  if (!(cfg.alpha > 1.0 && cfg.alpha <= 2.0)) throw DomainError("alpha must lie in (1, 2]");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double best_mean = *std::min_element(cfg.means.begin(), cfg.means.end());
  const double power = -cfg.alpha / (cfg.alpha - 1.0);

  std::vector<double> L(A, 0.0);
  std::vector<double> x(A);
  std::vector<double> regret;
  regret.reserve(static_cast<size_t>(cfg.rounds));
  double cum = 0.0;

  for (long long t = 1; t <= cfg.rounds; ++t) {
    const double tt = static_cast<double>(t);
    const double eta = cfg.beta / (cfg.sigma * std::pow(tt, 1.0 / cfg.alpha));
    // x_a = (alpha eta (L_a + mu))^power with mu chosen so that sum x = 1.
    const double min_l = *std::min_element(L.begin(), L.end());
    const double max_l = *std::max_element(L.begin(), L.end());
    auto mass = [&](double mu) {
      double total = 0.0;
      for (size_t a = 0; a < A; ++a) total += std::pow(cfg.alpha * eta * (L[a] + mu), power);
      return total;
    };
    double lo = -min_l;
    double hi = std::pow(static_cast<double>(A), (cfg.alpha - 1.0) / cfg.alpha) / (cfg.alpha * eta) - min_l +
                (max_l - min_l);
    for (int it = 0; it < 300; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (mass(mid) > 1.0) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    double total = 0.0;
    for (size_t a = 0; a < A; ++a) total += (x[a] = std::pow(cfg.alpha * eta * (L[a] + hi), power));
    for (auto& v : x) v /= total;

    double u = unit(rng);
    size_t arm = A - 1;
    for (size_t a = 0; a < A; ++a) {
      if (u < x[a]) {
        arm = a;
        break;
      }
      u -= x[a];
    }
    const double sign = unit(rng) < 0.5 ? -1.0 : 1.0;
    const double loss = cfg.means[arm] + sign * cfg.scale * std::pow(1.0 - unit(rng), -1.0 / cfg.tail);

    const double tau = cfg.C * cfg.sigma * std::pow(tt, 1.0 / cfg.alpha) * std::pow(x[arm], 1.0 / cfg.alpha);
    const double kept = std::abs(loss) <= tau ? loss : 0.0;
    for (size_t a = 0; a < A; ++a) {
      const double bonus = std::pow(cfg.C, 1.0 - cfg.alpha) * cfg.sigma * std::pow(tt, 1.0 / cfg.alpha - 1.0) *
                           std::pow(x[a], 1.0 / cfg.alpha - 1.0);
      L[a] += (a == arm ? kept / x[a] : 0.0) - bonus;
    }

    double expected = 0.0;
    for (size_t a = 0; a < A; ++a) expected += x[a] * cfg.means[a];
    cum += expected - best_mean;
    regret.push_back(cum);
  }
  return regret;
}

}  // namespace htmdp::oracles
