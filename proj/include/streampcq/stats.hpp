#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "streampcq/error.hpp"

namespace streampcq {

inline double mean(std::span<const double> x)
{
  if (x.empty())
    throw Error(ErrorCode::InvalidInput, "mean", "empty");
  double s = 0;
  for (double v : x)
    s += v;
  return s / static_cast<double>(x.size());
}

/// Unbiased (n - 1) variance.
inline double sample_variance(std::span<const double> x)
{
  if (x.size() < 2)
    throw Error(ErrorCode::InvalidInput, "variance", "fewer than 2 values");
  const double m = mean(x);
  double ss = 0;
  for (double v : x)
    ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

namespace detail {

inline void check_pair(std::span<const double> x, std::span<const double> y, const char* what)
{
  if (x.size() != y.size())
    throw Error(ErrorCode::InvalidInput, what, "length mismatch");
  if (x.size() < 2)
    throw Error(ErrorCode::InvalidInput, what, "fewer than 2 values");
}

}  // namespace detail

/// Pearson product-moment correlation.
inline double plcc(std::span<const double> x, std::span<const double> y)
{
  detail::check_pair(x, y, "plcc");
  const double mx = mean(x), my = mean(y);
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw Error(ErrorCode::ZeroVariance, "plcc");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> x)
{
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]])
      ++j;
    const double r = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1..j
    for (std::size_t k = i; k < j; ++k)
      rank[order[k]] = r;
    i = j;
  }
  return rank;
}

/// Spearman rank-order correlation with average-rank tie handling.
inline double srcc(std::span<const double> x, std::span<const double> y)
{
  detail::check_pair(x, y, "srcc");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  try {
    return plcc(rx, ry);
  }
  catch (const Error&) {
    throw Error(ErrorCode::ZeroVariance, "srcc");
  }
}

inline double rmse(std::span<const double> x, std::span<const double> y)
{
  detail::check_pair(x, y, "rmse");
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    ss += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(ss / static_cast<double>(x.size()));
}

}  // namespace streampcq
