#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <set>
#include <span>
#include <utility>

#include "streampcq/error.hpp"

namespace streampcq {

/// Solves A x = b by Gaussian elimination with partial pivoting.
/// Throws DegenerateDesign when a pivot vanishes.
template<std::size_t N>
std::array<double, N>
solve_linear(std::array<std::array<double, N>, N> a, std::array<double, N> b)
{
  double scale = 0.0;
  for (const auto& row : a)
    for (double v : row)
      scale = std::max(scale, std::abs(v));
  const double tiny = scale * 1e-14;

  for (std::size_t col = 0; col < N; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < N; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col]))
        pivot = r;
    if (!(std::abs(a[pivot][col]) > tiny))
      throw Error(ErrorCode::DegenerateDesign, {}, "singular system");
    std::swap(a[col], a[pivot]);
    std::swap(b[col], b[pivot]);
    for (std::size_t r = col + 1; r < N; ++r) {
      const double m = a[r][col] / a[col][col];
      for (std::size_t k = col; k < N; ++k)
        a[r][k] -= m * a[col][k];
      b[r] -= m * b[col];
    }
  }
  std::array<double, N> x{};
  for (std::size_t i = N; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < N; ++k)
      s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double rss = 0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LineFit fit_line(std::span<const double> xs, std::span<const double> ys)
{
  if (xs.size() != ys.size())
    throw Error(ErrorCode::InvalidInput, "fit_line", "length mismatch");
  const auto n = xs.size();
  if (n < 2)
    throw Error(ErrorCode::DegenerateDesign, "fit_line", "fewer than 2 points");

  double xm = 0, ym = 0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += xs[i];
    ym += ys[i];
  }
  xm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - xm) * (xs[i] - xm);
    sxy += (xs[i] - xm) * (ys[i] - ym);
  }
  if (!(sxx > 0.0))
    throw Error(ErrorCode::DegenerateDesign, "fit_line", "all x equal");

  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (f.slope * xs[i] + f.intercept);
    f.rss += r * r;
  }
  return f;
}

struct QuadraticFit {
  double a = 0;  // x^2
  double b = 0;  // x
  double c = 0;  // 1
  double rss = 0;
};

/// Least-squares y = a x^2 + b x + c via the normal equations.
inline QuadraticFit fit_quadratic(std::span<const double> xs, std::span<const double> ys)
{
  if (xs.size() != ys.size())
    throw Error(ErrorCode::InvalidInput, "fit_quadratic", "length mismatch");
  if (std::set<double>(xs.begin(), xs.end()).size() < 3)
    throw Error(ErrorCode::DegenerateDesign, "fit_quadratic", "fewer than 3 distinct x");

  // Moments of x up to 4 and of x^k y up to 2. Centering x keeps the
  // system well conditioned for x in the tens.
  double xm = 0;
  for (double x : xs)
    xm += x;
  xm /= static_cast<double>(xs.size());

  std::array<double, 5> sx{};
  std::array<double, 3> sxy{};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double u = xs[i] - xm;
    double p = 1.0;
    for (std::size_t k = 0; k < 5; ++k) {
      sx[k] += p;
      if (k < 3)
        sxy[k] += p * ys[i];
      p *= u;
    }
  }
  const std::array<std::array<double, 3>, 3> normal{{
    {sx[4], sx[3], sx[2]},
    {sx[3], sx[2], sx[1]},
    {sx[2], sx[1], sx[0]},
  }};
  const auto q = solve_linear<3>(normal, {sxy[2], sxy[1], sxy[0]});

  // expand q0 u^2 + q1 u + q2 with u = x - xm
  QuadraticFit f;
  f.a = q[0];
  f.b = q[1] - 2.0 * q[0] * xm;
  f.c = q[0] * xm * xm - q[1] * xm + q[2];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double u = xs[i] - xm;
    const double r = ys[i] - (q[0] * u * u + q[1] * u + q[2]);
    f.rss += r * r;
  }
  return f;
}

}  // namespace streampcq
