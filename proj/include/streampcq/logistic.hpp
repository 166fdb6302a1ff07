#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <vector>

#include "streampcq/error.hpp"
#include "streampcq/fit.hpp"
#include "streampcq/stats.hpp"

namespace streampcq {

/// Monotone four-parameter logistic
///   Q(s) = b2 + (b1 - b2) / (1 + exp(-(s - b3) / |b4|))
/// together with its b4 -> infinity limit, a straight line. The line is
/// used whenever it fits at least as well as any finite logistic found.
struct LogisticMap {
  double b1 = 0, b2 = 0, b3 = 0, b4 = 1;
  bool linear_limit = false;
  double slope = 0, intercept = 0;  // valid when linear_limit

  double operator()(double s) const noexcept
  {
    if (linear_limit)
      return slope * s + intercept;
    return b2 + (b1 - b2) / (1.0 + std::exp(-(s - b3) / std::abs(b4)));
  }
};

struct LogisticFit {
  LogisticMap map;
  std::vector<double> mapped;
  double rss = 0;
  double logistic_rss = 0;  // best finite-logistic RSS, before the line check
  int iterations = 0;
  bool converged = false;
};

struct LogisticOptions {
  int max_iterations = 2000;
  double rel_tolerance = 1e-10;
};

namespace detail {

inline double logistic_rss(const std::array<double, 4>& b, std::span<const double> s,
                           std::span<const double> y)
{
  const LogisticMap m{b[0], b[1], b[2], b[3]};
  double rss = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double r = y[i] - m(s[i]);
    rss += r * r;
  }
  return rss;
}

}  // namespace detail

/// Damped Gauss-Newton (Levenberg-Marquardt) fit of the logistic to
/// (objective, mos) pairs.
inline LogisticFit fit_logistic(
  std::span<const double> objective, std::span<const double> mos, const LogisticOptions& opt = {})
{
  if (objective.size() != mos.size())
    throw Error(ErrorCode::InvalidInput, "fit_logistic", "length mismatch");
  if (objective.size() < 5)
    throw Error(ErrorCode::InvalidInput, "fit_logistic", "fewer than 5 points");
  const auto n = objective.size();
  const double obj_var = sample_variance(objective);
  if (!(obj_var > 0.0))
    throw Error(ErrorCode::ZeroVariance, "fit_logistic", "constant objective");

  std::array<double, 4> b{*std::max_element(mos.begin(), mos.end()),
                          *std::min_element(mos.begin(), mos.end()), mean(objective),
                          std::sqrt(obj_var) / 4.0};
  // start on the decreasing branch when the data fall with the objective
  if (sample_variance(mos) > 0.0 && plcc(objective, mos) < 0.0)
    std::swap(b[0], b[1]);

  double y_scale = 0;
  for (double y : mos)
    y_scale += y * y;
  const double rss_floor = 1e-30 * (1.0 + y_scale);

  LogisticFit out;
  double rss = detail::logistic_rss(b, objective, mos);
  double lambda = 1e-3;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (rss <= rss_floor) {
      out.converged = true;
      break;
    }
    std::array<std::array<double, 4>, 4> jtj{};
    std::array<double, 4> jtr{};
    const double w = std::abs(b[3]);
    const double sign4 = b[3] < 0 ? -1.0 : 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (objective[i] - b[2]) / w;
      const double g = 1.0 / (1.0 + std::exp(-u));
      const double dg = g * (1.0 - g);
      const double q = b[1] + (b[0] - b[1]) * g;
      const std::array<double, 4> jac{g, 1.0 - g, -(b[0] - b[1]) * dg / w,
                                      -(b[0] - b[1]) * dg * u / w * sign4};
      const double r = mos[i] - q;
      for (int a = 0; a < 4; ++a) {
        jtr[a] += jac[a] * r;
        for (int c = 0; c < 4; ++c)
          jtj[a][c] += jac[a] * jac[c];
      }
    }

    bool accepted = false;
    while (!accepted && lambda < 1e20) {
      auto damped = jtj;
      for (int a = 0; a < 4; ++a)
        damped[a][a] += lambda * std::max(jtj[a][a], 1e-12);
      std::array<double, 4> step{};
      try {
        step = solve_linear<4>(damped, jtr);
      }
      catch (const Error&) {
        lambda *= 10;
        continue;
      }
      std::array<double, 4> trial{b[0] + step[0], b[1] + step[1], b[2] + step[2], b[3] + step[3]};
      if (trial[3] == 0.0 || !std::isfinite(trial[3])) {
        lambda *= 10;
        continue;
      }
      const double trial_rss = detail::logistic_rss(trial, objective, mos);
      if (std::isfinite(trial_rss) && trial_rss < rss) {
        const double rel = (rss - trial_rss) / rss;
        b = trial;
        rss = trial_rss;
        lambda = std::max(lambda / 10, 1e-15);
        accepted = true;
        if (rel < opt.rel_tolerance)
          out.converged = true;
      }
      else
        lambda *= 10;
    }
    if (!accepted) {
      // no descent direction left: stationary point
      out.converged = true;
      break;
    }
    if (out.converged)
      break;
  }
  out.iterations = it;
  out.logistic_rss = rss;
  out.map = {b[0], b[1], b[2], b[3]};
  out.rss = rss;

  const auto line = fit_line(objective, mos);
  if (line.rss <= rss) {
    out.map.linear_limit = true;
    out.map.slope = line.slope;
    out.map.intercept = line.intercept;
    out.rss = line.rss;
  }

  out.mapped.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.mapped[i] = out.map(objective[i]);
  return out;
}

}  // namespace streampcq
