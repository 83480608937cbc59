#pragma once

#include <span>
#include <string>
#include <vector>

#include "htmdp/environments.hpp"
#include "htmdp/mdp.hpp"

// Brute-force references and lemma checkers. Nothing in here calls the
// dynamic programs, solvers or confidence-set code it is used to check; the
// only shared pieces are the table types from mdp.hpp.
namespace htmdp::oracles {

struct OracleReport {
  std::string name;
  double max_violation = 0.0;  // > tolerance means the check failed
  long long samples = 0;
  double tolerance = 0.0;
  bool pass = true;
  std::string detail;
};

// Sums path probabilities over every trajectory. Throws SizeError when the
// number of (state, action) paths exceeds `max_paths`.
OccupancyMeasure brute_force_occupancy(const MdpLayout& layout, const TransitionKernel& kernel,
                                       const Policy& policy, long long max_paths = 1000000);

// <x, L> - (1/eta) sum x^(1/alpha) on the probability simplex.
double simplex_objective(std::span<const double> x, std::span<const double> loss, double alpha, double eta);

struct GridMinimum {
  std::vector<double> argmin;
  double value = 0.0;
  long long points = 0;
};

// Exhaustive minimum over the simplex grid {k * step}. Requires A <= 4 and
// step >= 1e-4 with 1/step an integer (to rounding).
GridMinimum brute_force_ftrl(std::span<const double> loss, double alpha, double eta, double step);

// Objective at the grid point nearest to x (largest-remainder rounding), for
// bounding the discretisation slack of brute_force_ftrl.
double nearest_grid_objective(std::span<const double> x, std::span<const double> loss, double alpha, double eta,
                              double step);

// Maximum of rho^{P,pi}(s,a) over kernels P whose rows lie on the simplex
// grid of the given step inside |P - center| <= width, plus the center rows
// themselves. Enumerates every combination of rows jointly; throws SizeError
// above `max_combinations`.
OccupancyMeasure brute_force_uob(const TransitionKernel& center, const TransitionKernel& width,
                                 const Policy& policy, double step, long long max_combinations = 50000000);

// sum_s (rho^pi(s) - rho^dagger(s))_+ <= H sum_{a != dagger(s)} rho^pi(s,a) on
// state marginals. max_violation is max(0, LHS - RHS); `detail` carries the
// signed slack RHS - LHS.
OracleReport check_mass_propagation(const MdpLayout& layout, const TransitionKernel& kernel, const Policy& pi,
                                    std::span<const int> dagger);
double mass_propagation_slack(const MdpLayout& layout, const TransitionKernel& kernel, const Policy& pi,
                              std::span<const int> dagger);

struct ShiftBoundParams {
  int H;
  int S;
  int A;
  double alpha;
  double sigma;
  double C;
};

// (1 + HSA(1 + A^(1-1/alpha))) C sigma t^(1/alpha) x^(1/alpha-1)
double shifted_uniform_bound(const ShiftBoundParams& p, long long t, double x);
// 2 H^2 (1 - pi) C^(2-alpha) sigma^2 t^(2/alpha-1) x^(2/alpha-2)
double shifted_second_moment_bound(const ShiftBoundParams& p, long long t, double x, double pi);

// Streams (x_t, pi_t, shifted loss) samples and checks the pointwise uniform
// bound, the centring identity sum_a pi(a|s) shift(s,a) = 0, and the second
// moment bound per pair through the mean of shift^2 / bound, which must stay
// below 1 + 3 standard errors.
class ShiftedBoundsChecker {
 public:
  ShiftedBoundsChecker(const MdpLayout& layout, ShiftBoundParams params);

  void add(long long t, const OccupancyMeasure& x, const Policy& policy, const LossVector& shifted);

  OracleReport uniform_report() const;
  OracleReport centering_report() const;
  OracleReport second_moment_report() const;
  // Mean ratio per pair (diagnostic).
  std::vector<double> second_moment_means() const;

 private:
  MdpLayout layout_;
  ShiftBoundParams params_;
  double worst_uniform_ = 0.0;  // max |shift| / bound - 1
  double worst_centering_ = 0.0;
  long long samples_ = 0;
  std::vector<double> ratio_sum_;
  std::vector<double> ratio_sq_sum_;
  std::vector<long long> ratio_count_;
};

// Expected value V^{P,pi}(s_1; loss) by explicit path enumeration.
double path_value(const MdpLayout& layout, const TransitionKernel& kernel, const Policy& policy,
                  const LossVector& loss);

struct PessimismGap {
  double mean = 0.0;    // mean of V^{P,pi}(l) - V^{Phat,pi}(l - D B) over draws
  double stderr = 0.0;
  long long draws = 0;
};

// Monte Carlo of the pessimism margin for one policy: each draw samples a
// full loss vector from `losses`, and both values are evaluated on it.
PessimismGap pessimism_gap(const MdpLayout& layout, const TransitionKernel& truth, const TransitionKernel& center,
                           const LossVector& aggregate_width, double D, const Policy& policy,
                           const LossInstance& losses, int draws, Rng& rng);

struct PessimismSuite {
  int replicas = 200;
  int draws = 2000;
  int policies = 8;  // uniform, then deterministic and random policies
  std::uint64_t seed = 7;
};

// For each replica: collect uniform-policy data for a replica-dependent number
// of episodes, build the epoch confidence set, skip it unless it covers the
// true kernel, and require a pessimism margin >= -3 standard errors for every
// policy of the battery. max_violation is the worst max(0, -(mean + 3 se)).
OracleReport check_pessimism(const NamedInstance& instance, double sigma, const PessimismSuite& suite = {});

// Independent heavy-tailed Tsallis-INF bandit: FTRL on the simplex with the
// 1/alpha-Tsallis regulariser solved by bisection on the normaliser,
// importance-weighted skipped losses and the skipping bonus. Returns the
// cumulative pseudo-regret after each round.
struct TsallisInfConfig {
  std::vector<double> means;
  double tail = 1.8;   // symmetric Pareto noise
  double scale = 0.02;
  double alpha = 1.5;
  double sigma = 1.0;
  double C = 1.0;
  double beta = 1.0;
  long long rounds = 4096;
};
std::vector<double> tsallis_inf_reference(const TsallisInfConfig& config, std::uint64_t seed);

}  // namespace htmdp::oracles
