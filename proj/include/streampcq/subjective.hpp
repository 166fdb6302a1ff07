#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "streampcq/error.hpp"

namespace streampcq {

/// Ratings laid out stimulus-major: value(m, i) is stimulus m rated by
/// subject i. Missing ratings are NaN.
struct SubjectiveMatrix {
  std::vector<std::string> stimuli;
  std::vector<std::string> subjects;
  std::vector<double> values;

  static constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

  SubjectiveMatrix() = default;
  SubjectiveMatrix(std::vector<std::string> stimuli_, std::vector<std::string> subjects_)
    : stimuli(std::move(stimuli_))
    , subjects(std::move(subjects_))
    , values(stimuli.size() * subjects.size(), kMissing)
  {}

  std::size_t n_stimuli() const noexcept { return stimuli.size(); }
  std::size_t n_subjects() const noexcept { return subjects.size(); }

  double& at(std::size_t m, std::size_t i) { return values[m * subjects.size() + i]; }
  double at(std::size_t m, std::size_t i) const { return values[m * subjects.size() + i]; }

  static bool missing(double v) noexcept { return std::isnan(v); }

  std::vector<double> subject_column(std::size_t i) const
  {
    std::vector<double> col;
    for (std::size_t m = 0; m < n_stimuli(); ++m)
      if (!missing(at(m, i)))
        col.push_back(at(m, i));
    return col;
  }

  void validate() const
  {
    if (n_subjects() < 2)
      throw Error(ErrorCode::InvalidInput, "ratings", "fewer than 2 subjects");
    if (n_stimuli() < 2)
      throw Error(ErrorCode::InvalidInput, "ratings", "fewer than 2 stimuli");
    if (values.size() != n_stimuli() * n_subjects())
      throw Error(ErrorCode::InvalidInput, "ratings", "shape mismatch");
    for (std::size_t i = 0; i < n_subjects(); ++i)
      if (subject_column(i).size() < 2)
        throw Error(ErrorCode::InvalidInput, subjects[i], "fewer than 2 ratings");
  }

  SubjectiveMatrix without_subjects(const std::set<std::size_t>& drop) const
  {
    std::vector<std::string> keep_ids;
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < n_subjects(); ++i)
      if (!drop.contains(i)) {
        keep.push_back(i);
        keep_ids.push_back(subjects[i]);
      }
    SubjectiveMatrix out(stimuli, keep_ids);
    for (std::size_t m = 0; m < n_stimuli(); ++m)
      for (std::size_t k = 0; k < keep.size(); ++k)
        out.at(m, k) = at(m, keep[k]);
    return out;
  }
};

/// Per subject: (x - mean) / sample std over that subject's ratings.
inline SubjectiveMatrix zscore(const SubjectiveMatrix& x)
{
  x.validate();
  SubjectiveMatrix z = x;
  for (std::size_t i = 0; i < x.n_subjects(); ++i) {
    const auto col = x.subject_column(i);
    double mu = 0;
    for (double v : col)
      mu += v;
    mu /= static_cast<double>(col.size());
    double ss = 0;
    for (double v : col)
      ss += (v - mu) * (v - mu);
    const double sd = std::sqrt(ss / static_cast<double>(col.size() - 1));
    if (!(sd > 0.0))
      throw Error(ErrorCode::ZeroVarianceSubject, x.subjects[i]);
    for (std::size_t m = 0; m < x.n_stimuli(); ++m)
      if (!SubjectiveMatrix::missing(x.at(m, i)))
        z.at(m, i) = (x.at(m, i) - mu) / sd;
  }
  return z;
}

/// One affine map for the whole matrix: global min -> 0, global max -> 100.
inline SubjectiveMatrix rescale_to_range(const SubjectiveMatrix& z)
{
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : z.values) {
    if (SubjectiveMatrix::missing(v))
      continue;
    if (!std::isfinite(v))
      throw Error(ErrorCode::InvalidInput, "zscores", "non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo))
    throw Error(ErrorCode::DegenerateRange, {}, "global max equals global min");
  SubjectiveMatrix out = z;
  for (double& v : out.values)
    if (!SubjectiveMatrix::missing(v))
      v = std::clamp(100.0 * (v - lo) / (hi - lo), 0.0, 100.0);
  return out;
}

struct ScreeningResult {
  std::vector<std::size_t> rejected;  // subject indices, ascending
  std::vector<std::size_t> p, q;      // per-subject counts
  std::vector<std::size_t> n;         // per-subject ratings considered
};

/// Observer screening on raw scores. Per stimulus the spread threshold is
/// 2 s when the kurtosis lies in [2, 4] and sqrt(20) s otherwise; stimuli
/// whose ratings do not vary are skipped. A subject is rejected when
/// (P + Q) / N > 0.05 and |P - Q| / (P + Q) < 0.3.
inline ScreeningResult screen_outliers(const SubjectiveMatrix& x)
{
  x.validate();
  if (x.n_subjects() < 3)
    throw Error(ErrorCode::InvalidInput, "screen", "fewer than 3 subjects");

  const auto ns = x.n_subjects();
  ScreeningResult r;
  r.p.assign(ns, 0);
  r.q.assign(ns, 0);
  r.n.assign(ns, 0);
  for (std::size_t i = 0; i < ns; ++i)
    r.n[i] = x.subject_column(i).size();

  for (std::size_t m = 0; m < x.n_stimuli(); ++m) {
    std::vector<double> row;
    for (std::size_t i = 0; i < ns; ++i)
      if (!SubjectiveMatrix::missing(x.at(m, i)))
        row.push_back(x.at(m, i));
    if (row.size() < 2)
      continue;
    const double k = static_cast<double>(row.size());
    double u = 0;
    for (double v : row)
      u += v;
    u /= k;
    double m2 = 0, m4 = 0;
    for (double v : row) {
      const double d2 = (v - u) * (v - u);
      m2 += d2;
      m4 += d2 * d2;
    }
    if (!(m2 > 0.0))
      continue;
    const double s = std::sqrt(m2 / (k - 1.0));
    const double beta2 = (m4 / k) / ((m2 / k) * (m2 / k));
    const double width = (beta2 >= 2.0 && beta2 <= 4.0) ? 2.0 * s : std::sqrt(20.0) * s;
    for (std::size_t i = 0; i < ns; ++i) {
      const double v = x.at(m, i);
      if (SubjectiveMatrix::missing(v))
        continue;
      if (v >= u + width)
        ++r.p[i];
      if (v <= u - width)
        ++r.q[i];
    }
  }

  for (std::size_t i = 0; i < ns; ++i) {
    const double pq = static_cast<double>(r.p[i] + r.q[i]);
    if (pq == 0.0)
      continue;
    const double frac = pq / static_cast<double>(r.n[i]);
    const double balance =
      std::abs(static_cast<double>(r.p[i]) - static_cast<double>(r.q[i])) / pq;
    if (frac > 0.05 && balance < 0.3)
      r.rejected.push_back(i);
  }
  return r;
}

struct MosTable {
  std::vector<std::string> stimuli;
  std::vector<double> mos;
  std::vector<double> std;       // sample std of the scaled scores
  std::vector<std::size_t> n_valid;
  std::vector<std::string> rejected_subjects;
};

/// screen -> z-score survivors -> global [0, 100] rescale -> per-stimulus mean.
/// Screening needs at least 3 subjects and is skipped below that.
inline MosTable compute_mos(const SubjectiveMatrix& x)
{
  x.validate();
  MosTable out;
  out.stimuli = x.stimuli;

  SubjectiveMatrix kept = x;
  if (x.n_subjects() >= 3) {
    const auto screening = screen_outliers(x);
    for (auto i : screening.rejected)
      out.rejected_subjects.push_back(x.subjects[i]);
    kept = x.without_subjects({screening.rejected.begin(), screening.rejected.end()});
  }
  const auto scaled = rescale_to_range(zscore(kept));

  for (std::size_t m = 0; m < scaled.n_stimuli(); ++m) {
    std::vector<double> row;
    for (std::size_t i = 0; i < scaled.n_subjects(); ++i)
      if (!SubjectiveMatrix::missing(scaled.at(m, i)))
        row.push_back(scaled.at(m, i));
    double mu = std::numeric_limits<double>::quiet_NaN();
    double sd = 0;
    if (!row.empty()) {
      mu = 0;
      for (double v : row)
        mu += v;
      mu /= static_cast<double>(row.size());
      if (row.size() > 1) {
        double ss = 0;
        for (double v : row)
          ss += (v - mu) * (v - mu);
        sd = std::sqrt(ss / static_cast<double>(row.size() - 1));
      }
    }
    out.mos.push_back(mu);
    out.std.push_back(sd);
    out.n_valid.push_back(row.size());
  }
  return out;
}

}  // namespace streampcq
