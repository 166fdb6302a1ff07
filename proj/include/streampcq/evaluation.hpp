#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "streampcq/calibration.hpp"
#include "streampcq/error.hpp"
#include "streampcq/fdist.hpp"
#include "streampcq/logistic.hpp"
#include "streampcq/model.hpp"
#include "streampcq/rng.hpp"
#include "streampcq/stats.hpp"

namespace streampcq {

struct ScorePairSet {
  std::vector<double> objective;
  std::vector<double> mos;
  std::vector<std::string> labels;
  std::vector<std::string> contents;

  void validate() const
  {
    const auto n = objective.size();
    if (mos.size() != n || (!labels.empty() && labels.size() != n) ||
        (!contents.empty() && contents.size() != n))
      throw Error(ErrorCode::InvalidInput, "scores", "column lengths differ");
    if (n < 4)
      throw Error(ErrorCode::InvalidInput, "scores", "fewer than 4 pairs");
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(objective[i]) || !std::isfinite(mos[i]))
        throw Error(ErrorCode::InvalidInput, "scores", "non-finite value");
  }
};

struct EvalReport {
  double plcc = 0;
  double srcc = 0;
  double rmse = 0;
  LogisticMap map;
  std::vector<double> mapped;
  bool converged = true;
  std::size_t n = 0;
};

/// SRCC on raw scores; PLCC and RMSE after logistic mapping onto MOS.
inline EvalReport evaluate(std::span<const double> objective, std::span<const double> mos)
{
  if (objective.size() != mos.size() || objective.size() < 4)
    throw Error(ErrorCode::InvalidInput, "evaluate", "need >= 4 equal-length pairs");
  EvalReport r;
  r.n = objective.size();
  r.srcc = srcc(objective, mos);
  auto fit = fit_logistic(objective, mos);
  r.map = fit.map;
  r.converged = fit.converged;
  r.mapped = std::move(fit.mapped);
  r.plcc = plcc(r.mapped, mos);
  r.rmse = rmse(r.mapped, mos);
  return r;
}

inline EvalReport evaluate(const ScorePairSet& pairs)
{
  pairs.validate();
  return evaluate(pairs.objective, pairs.mos);
}

inline std::vector<double> residuals(const EvalReport& report, std::span<const double> mos)
{
  std::vector<double> r(mos.size());
  for (std::size_t i = 0; i < mos.size(); ++i)
    r[i] = report.mapped.at(i) - mos[i];
  return r;
}

//============================================================================
// Summaries

struct MetricSummary {
  double mean = 0, std = 0, min = 0, max = 0, median = 0;
  std::size_t n = 0;
};

inline MetricSummary summarize(std::vector<double> v)
{
  MetricSummary s;
  s.n = v.size();
  if (v.empty())
    return s;
  std::sort(v.begin(), v.end());
  s.min = v.front();
  s.max = v.back();
  s.median = v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  s.mean = mean(v);
  s.std = v.size() > 1 ? std::sqrt(sample_variance(v)) : 0.0;
  return s;
}

struct Histogram {
  double lo = 0, hi = 1;
  std::vector<std::size_t> counts;
};

/// Equal-width bins on [lo, hi]; values outside are clamped to the end bins.
inline Histogram make_histogram(std::span<const double> v, double lo, double hi, std::size_t bins)
{
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
  if (bins == 0)
    return h;
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  for (double x : v) {
    auto k = static_cast<std::int64_t>(std::floor((x - lo) / width));
    k = std::clamp<std::int64_t>(k, 0, static_cast<std::int64_t>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(k)];
  }
  return h;
}

//============================================================================
// Content-level cross-validation

/// Trains on records, returns something the predictor understands.
using Trainer = std::function<ModelParams(const std::vector<TrainingRecord>&)>;
using Predictor = std::function<double(const ModelParams&, const TrainingRecord&)>;

inline Trainer default_trainer(Variant variant)
{
  return [variant](const std::vector<TrainingRecord>& rs) { return train_full(rs, variant).params; };
}

inline Predictor default_predictor()
{
  return [](const ModelParams& p, const TrainingRecord& r) {
    return predict(p, r.pqs, r.qp, r.tbpp).pmos;
  };
}

struct FoldResult {
  std::vector<std::string> validation_contents;
  std::size_t n_train = 0;
  std::size_t n_validation = 0;
  bool failed = false;
  std::string error;
  EvalReport report;
};

namespace detail {

inline std::vector<std::string> distinct_contents(const std::vector<TrainingRecord>& records)
{
  std::set<std::string> s;
  for (const auto& r : records)
    s.insert(r.content);
  return {s.begin(), s.end()};
}

inline FoldResult run_fold(
  const std::vector<TrainingRecord>& records, const std::set<std::string>& validation,
  const Trainer& train, const Predictor& predictor)
{
  FoldResult fold;
  fold.validation_contents.assign(validation.begin(), validation.end());
  std::vector<TrainingRecord> train_set, valid_set;
  for (const auto& r : records)
    (validation.contains(r.content) ? valid_set : train_set).push_back(r);
  fold.n_train = train_set.size();
  fold.n_validation = valid_set.size();
  try {
    const auto params = train(train_set);
    std::vector<double> pred, mos;
    for (const auto& r : valid_set) {
      pred.push_back(predictor(params, r));
      mos.push_back(r.mos);
    }
    fold.report = evaluate(pred, mos);
  }
  catch (const Error& e) {
    fold.failed = true;
    fold.error = e.what();
  }
  return fold;
}

/// Runs body(i) for i in [0, n) on up to `jobs` threads; results are
/// written by index so the outcome does not depend on scheduling.
template<typename Body>
void parallel_for(std::size_t n, unsigned jobs, Body&& body)
{
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i)
      body(i);
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += jobs)
        body(i);
    });
}

}  // namespace detail

struct CrossValReport {
  std::vector<FoldResult> folds;
  MetricSummary plcc, srcc, rmse;  // over successful folds
  std::size_t failed = 0;
};

inline CrossValReport summarize_folds(std::vector<FoldResult> folds)
{
  CrossValReport out;
  std::vector<double> p, s, e;
  for (const auto& f : folds) {
    if (f.failed) {
      ++out.failed;
      continue;
    }
    p.push_back(f.report.plcc);
    s.push_back(f.report.srcc);
    e.push_back(f.report.rmse);
  }
  out.plcc = summarize(p);
  out.srcc = summarize(s);
  out.rmse = summarize(e);
  out.folds = std::move(folds);
  return out;
}

/// Leave-one-content-out: every distinct content is held out once.
inline CrossValReport loocv(
  const std::vector<TrainingRecord>& input, const Trainer& train, const Predictor& predictor,
  unsigned jobs = 1)
{
  const auto records = canonical_order(input);
  const auto contents = detail::distinct_contents(records);
  if (contents.size() < 2)
    throw Error(ErrorCode::InvalidInput, "loocv", "fewer than 2 contents");
  std::vector<FoldResult> folds(contents.size());
  detail::parallel_for(contents.size(), jobs, [&](std::size_t i) {
    folds[i] = detail::run_fold(records, {contents[i]}, train, predictor);
  });
  return summarize_folds(std::move(folds));
}

inline CrossValReport loocv(const std::vector<TrainingRecord>& records, Variant variant, unsigned jobs = 1)
{
  return loocv(records, default_trainer(variant), default_predictor(), jobs);
}

struct SplitReport {
  std::uint64_t seed = 0;
  std::size_t train_contents = 0;
  CrossValReport result;
  Histogram plcc_hist, srcc_hist, rmse_hist;
};

namespace detail {

inline double binomial_capped(std::size_t n, std::size_t k)
{
  double c = 1.0;
  for (std::size_t i = 1; i <= k; ++i)
    c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(c);
}

}  // namespace detail

/// Repeated random content-level splits: `train_contents` contents train,
/// the rest validate. Partitions are drawn without repetition from a
/// SplitMix64 stream seeded by `seed`.
inline SplitReport random_split_eval(
  const std::vector<TrainingRecord>& input, std::size_t n_splits, std::size_t train_contents,
  std::uint64_t seed, const Trainer& train, const Predictor& predictor, unsigned jobs = 1)
{
  const auto records = canonical_order(input);
  const auto contents = detail::distinct_contents(records);
  if (contents.size() < 2)
    throw Error(ErrorCode::InvalidInput, "splits", "fewer than 2 contents");
  if (train_contents == 0 || train_contents >= contents.size())
    throw Error(ErrorCode::InvalidInput, "splits", "train size must leave a validation set");
  if (static_cast<double>(n_splits) > detail::binomial_capped(contents.size(), train_contents))
    throw Error(ErrorCode::InvalidInput, "splits", "more splits than distinct partitions");

  SplitMix64 rng(seed);
  std::set<std::vector<std::string>> seen;
  std::vector<std::set<std::string>> validation_sets;
  while (validation_sets.size() < n_splits) {
    auto order = contents;
    shuffle(order, rng);
    std::vector<std::string> train_set(order.begin(), order.begin() + train_contents);
    std::sort(train_set.begin(), train_set.end());
    if (!seen.insert(train_set).second)
      continue;
    validation_sets.emplace_back(order.begin() + train_contents, order.end());
  }

  std::vector<FoldResult> folds(n_splits);
  detail::parallel_for(n_splits, jobs, [&](std::size_t i) {
    folds[i] = detail::run_fold(records, validation_sets[i], train, predictor);
  });

  SplitReport out;
  out.seed = seed;
  out.train_contents = train_contents;
  out.result = summarize_folds(std::move(folds));
  std::vector<double> p, s, e;
  for (const auto& f : out.result.folds)
    if (!f.failed) {
      p.push_back(f.report.plcc);
      s.push_back(f.report.srcc);
      e.push_back(f.report.rmse);
    }
  out.plcc_hist = make_histogram(p, 0.0, 1.0, 20);
  out.srcc_hist = make_histogram(s, 0.0, 1.0, 20);
  out.rmse_hist = make_histogram(e, 0.0, out.result.rmse.n ? out.result.rmse.max : 1.0, 20);
  return out;
}

inline SplitReport random_split_eval(
  const std::vector<TrainingRecord>& records, std::size_t n_splits, std::size_t train_contents,
  std::uint64_t seed, Variant variant, unsigned jobs = 1)
{
  return random_split_eval(records, n_splits, train_contents, seed, default_trainer(variant),
                           default_predictor(), jobs);
}

//============================================================================
// Variance-ratio significance

enum class Decision { RowBetter, ColumnBetter, Equivalent };

constexpr std::string_view decision_name(Decision d) noexcept {
  switch (d) {
  case Decision::RowBetter: return "row-better";
  case Decision::ColumnBetter: return "column-better";
  case Decision::Equivalent: return "equivalent";
  }
  return "?";
}

/// Matrix encoding: row-better 1, equivalent 0.5, column-better 0.
constexpr double decision_code(Decision d) noexcept {
  return d == Decision::RowBetter ? 1.0 : d == Decision::Equivalent ? 0.5 : 0.0;
}

struct SignificanceVerdict {
  double f_statistic = 1;
  double lower = 0, upper = 0;  // acceptance interval of F
  Decision decision = Decision::Equivalent;
  double level = 0.95;
};

/// Two-tailed F-test on the ratio of sample residual variances; "row" is
/// the first argument. A larger variance means larger prediction error.
inline SignificanceVerdict
f_test(std::span<const double> residuals_a, std::span<const double> residuals_b, double level = 0.95)
{
  if (residuals_a.size() < 2 || residuals_b.size() < 2)
    throw Error(ErrorCode::InvalidInput, "f_test", "need >= 2 residuals per model");
  if (!(level > 0.0 && level < 1.0))
    throw Error(ErrorCode::InvalidInput, "f_test", "level must lie in (0, 1)");
  const double va = sample_variance(residuals_a);
  const double vb = sample_variance(residuals_b);
  if (!(va > 0.0) || !(vb > 0.0))
    throw Error(ErrorCode::ZeroVariance, "f_test");

  SignificanceVerdict v;
  v.level = level;
  v.f_statistic = va / vb;
  const double d1 = static_cast<double>(residuals_a.size() - 1);
  const double d2 = static_cast<double>(residuals_b.size() - 1);
  const double tail = (1.0 - level) / 2.0;
  v.lower = f_quantile(tail, d1, d2);
  v.upper = f_quantile(1.0 - tail, d1, d2);
  if (v.f_statistic > v.upper)
    v.decision = Decision::ColumnBetter;
  else if (v.f_statistic < v.lower)
    v.decision = Decision::RowBetter;
  else
    v.decision = Decision::Equivalent;
  return v;
}

/// Pairwise decisions for a set of models; diagonal is 0.5.
inline std::vector<std::vector<double>>
significance_matrix(const std::vector<std::vector<double>>& residuals, double level = 0.95)
{
  const auto n = residuals.size();
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.5));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j)
        m[i][j] = decision_code(f_test(residuals[i], residuals[j], level).decision);
  return m;
}

}  // namespace streampcq
