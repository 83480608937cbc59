#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "htmdp/errors.hpp"
#include "htmdp/harness.hpp"

namespace htmdp {

ShapeFit fit_shape(const std::vector<double>& series, double window_frac) {
  if (!(window_frac > 0.0 && window_frac < 1.0)) throw DomainError("window fraction must lie in (0, 1)");
  const auto T = static_cast<long long>(series.size());
  ShapeFit fit;
  fit.window_end = T;
  fit.window_begin = std::max<long long>(1, static_cast<long long>(std::ceil(window_frac * T)));
  if (T < 2 * fit.window_begin || fit.window_end - fit.window_begin < 1) {
    throw DomainError("series too short for the fit window");
  }

  double lowest = series[fit.window_begin - 1];
  for (long long t = fit.window_begin; t <= T; ++t) lowest = std::min(lowest, series[t - 1]);
  if (lowest <= 0.0) {
    fit.shifted = true;
    fit.shift = std::max(1.0, 1.0 - lowest);
  }

  // Ordinary least squares on (log t, log(regret + shift)), centred for accuracy.
  const auto n = static_cast<double>(T - fit.window_begin + 1);
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (long long t = fit.window_begin; t <= T; ++t) {
    mean_x += std::log(static_cast<double>(t));
    mean_y += std::log(series[t - 1] + fit.shift);
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (long long t = fit.window_begin; t <= T; ++t) {
    const double dx = std::log(static_cast<double>(t)) - mean_x;
    sxx += dx * dx;
    sxy += dx * (std::log(series[t - 1] + fit.shift) - mean_y);
  }
  fit.exponent = sxy / sxx;
  fit.intercept = mean_y - fit.exponent * mean_x;

  double log_num = 0.0;
  double log_den = 0.0;
  for (long long t = fit.window_begin; t <= T; ++t) {
    const double lt = std::log(static_cast<double>(t));
    log_num += series[t - 1] * lt;
    log_den += lt * lt;
  }
  fit.log_coefficient = log_den > 0.0 ? log_num / log_den : 0.0;

  double power_ss = 0.0;
  double log_ss = 0.0;
  for (long long t = fit.window_begin; t <= T; ++t) {
    const double lt = std::log(static_cast<double>(t));
    const double r1 = std::log(series[t - 1] + fit.shift) - (fit.intercept + fit.exponent * lt);
    const double r2 = series[t - 1] - fit.log_coefficient * lt;
    power_ss += r1 * r1;
    log_ss += r2 * r2;
  }
  fit.power_residual = std::sqrt(power_ss / n);
  fit.log_residual = std::sqrt(log_ss / n);
  return fit;
}

namespace {

void judge(RegimeRow& row, LearnerKind learner, RegimeKind regime, double alpha) {
  row.verdict = "n/a";
  const double p = row.fit.exponent;
  char buf[96];
  if (learner == LearnerKind::kOm) {
    if (regime == RegimeKind::kStochastic) {
      row.criterion = "exponent <= 0.35";
      row.verdict = p <= 0.35 ? "PASS" : "FAIL";
    } else if (regime == RegimeKind::kFlip) {
      const double lo = 1.0 / alpha - 0.2;
      const double hi = 1.0 / alpha + 0.25;
      std::snprintf(buf, sizeof buf, "%.4g <= exponent <= %.4g", lo, hi);
      row.criterion = buf;
      row.verdict = p >= lo && p <= hi ? "PASS" : "FAIL";
    }
  } else if (learner == LearnerKind::kUob) {
    if (regime == RegimeKind::kStochastic) {
      row.criterion = "exponent <= 0.4";
      row.verdict = p <= 0.4 ? "PASS" : "FAIL";
    } else if (regime == RegimeKind::kFlip || regime == RegimeKind::kSinusoid) {
      const double hi = std::max(1.0 / alpha, 0.5) + 0.25;
      std::snprintf(buf, sizeof buf, "exponent <= %.4g", hi);
      row.criterion = buf;
      row.verdict = p <= hi ? "PASS" : "FAIL";
    }
  }
}

}  // namespace

std::vector<RegimeRow> compare_regimes(const std::vector<ExperimentResults>& results, double window_frac) {
  std::vector<RegimeRow> rows;
  for (const auto& res : results) {
    RegimeRow row;
    row.learner = learner_name(res.config.learner);
    row.regime = regime_name(res.config.regime.kind);
    row.replicas = static_cast<int>(res.replicas.size());
    row.benchmark_tie = res.benchmark_tie;
    if (!res.replicas.empty()) {
      double sum = 0.0;
      double sum_sq = 0.0;
      for (const auto& rep : res.replicas) {
        const double v = rep.regret.empty() ? 0.0 : rep.regret.back();
        sum += v;
        sum_sq += v * v;
      }
      const double n = row.replicas;
      row.mean_final_regret = sum / n;
      if (row.replicas > 1) {
        const double var = std::max(0.0, (sum_sq - n * row.mean_final_regret * row.mean_final_regret) / (n - 1.0));
        row.stderr_final_regret = std::sqrt(var / n);
      }
      row.fit = fit_shape(mean_regret(res), window_frac);
    }
    judge(row, res.config.learner, res.config.regime.kind, res.config.alpha);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_comparison(std::ostream& out, const std::vector<RegimeRow>& rows) {
  out << "learner,regime,replicas,mean_final_regret,stderr_final_regret,exponent,log_coefficient,"
         "power_residual,window_begin,window_end,shifted,benchmark_tie,criterion,verdict\n";
  for (const auto& r : rows) {
    out << r.learner << ',' << r.regime << ',' << r.replicas << ',' << format_double(r.mean_final_regret) << ','
        << format_double(r.stderr_final_regret) << ',' << format_double(r.fit.exponent) << ','
        << format_double(r.fit.log_coefficient) << ',' << format_double(r.fit.power_residual) << ','
        << r.fit.window_begin << ',' << r.fit.window_end << ',' << (r.fit.shifted ? 1 : 0) << ','
        << (r.benchmark_tie ? 1 : 0) << ',' << r.criterion << ',' << r.verdict << '\n';
  }
}

}  // namespace htmdp
