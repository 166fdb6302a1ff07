#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "streampcq/error.hpp"
#include "streampcq/fit.hpp"
#include "streampcq/model.hpp"

namespace streampcq {

/// One rated stimulus: a source cloud coded at (pqs, qp).
struct TrainingRecord {
  std::string content;
  double pqs = 1.0;
  double qp = 22;
  double tbpp = 0;
  double tc = 0;   // ground truth from the original cloud
  double mos = 0;

  auto key() const { return std::tie(content, pqs, qp, tbpp, tc, mos); }
  bool operator==(const TrainingRecord& o) const { return key() == o.key(); }
};

/// Records in a canonical order so every reduction is independent of the
/// order the caller supplied them in.
inline std::vector<TrainingRecord> canonical_order(std::vector<TrainingRecord> records)
{
  std::sort(records.begin(), records.end(),
            [](const TrainingRecord& a, const TrainingRecord& b) { return a.key() < b.key(); });
  return records;
}

struct Skipped {
  std::string group;
  std::string reason;
};

//============================================================================
// Stage A: MOS = alpha * TQS + beta per (content, pqs)

struct GroupFit {
  std::string content;
  double pqs = 0;
  double alpha = 0;
  double beta = 0;
  double tc = 0;  // mean ground-truth tc of the group
  std::size_t n = 0;
  double rss = 0;
};

struct StageA {
  std::vector<GroupFit> groups;
  std::vector<Skipped> skipped;
};

inline std::string group_label(const std::string& content, double pqs)
{
  return content + "@pqs=" + std::to_string(pqs);
}

inline StageA stage_a_mos_vs_tqs(const std::vector<TrainingRecord>& records)
{
  std::map<std::pair<std::string, double>, std::vector<const TrainingRecord*>> groups;
  for (const auto& r : records)
    groups[{r.content, r.pqs}].push_back(&r);

  StageA out;
  for (const auto& [key, rows] : groups) {
    std::vector<double> tqs, mos;
    double tc = 0;
    for (const auto* r : rows) {
      tqs.push_back(tqs_from_qp(r->qp));
      mos.push_back(r->mos);
      tc += r->tc;
    }
    try {
      const auto fit = fit_line(tqs, mos);
      out.groups.push_back({key.first, key.second, fit.slope, fit.intercept,
                            tc / static_cast<double>(rows.size()), rows.size(), fit.rss});
    }
    catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDesign)
        throw;
      out.skipped.push_back({group_label(key.first, key.second), "fewer than 2 distinct qp"});
    }
  }
  return out;
}

//============================================================================
// Stage B: TC = H(qp) tbpp + J(qp) per (pqs, qp), then H and J against qp

struct CellFit {
  double pqs = 0;
  double qp = 0;
  double h = 0;
  double j = 0;
  std::size_t n = 0;
  double rss = 0;
};

struct StageB {
  double a1 = 0, a2 = 0, a3 = 0;
  double b1 = 0, b2 = 0;
  double rss_h = 0;
  double rss_j = 0;
  std::vector<CellFit> cells;
  std::vector<Skipped> skipped;
};

inline StageB stage_b_tc_model(const std::vector<TrainingRecord>& records)
{
  std::map<std::pair<double, double>, std::vector<const TrainingRecord*>> cells;
  for (const auto& r : records)
    cells[{r.pqs, r.qp}].push_back(&r);

  StageB out;
  for (const auto& [key, rows] : cells) {
    std::vector<double> tbpp, tc;
    for (const auto* r : rows) {
      tbpp.push_back(r->tbpp);
      tc.push_back(r->tc);
    }
    try {
      const auto fit = fit_line(tbpp, tc);
      out.cells.push_back({key.first, key.second, fit.slope, fit.intercept, rows.size(), fit.rss});
    }
    catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDesign)
        throw;
      out.skipped.push_back({"pqs=" + std::to_string(key.first) + ";qp=" + std::to_string(key.second),
                             "fewer than 2 distinct tbpp"});
    }
  }

  // pooled across pqs by concatenation
  std::vector<double> qp, h, j;
  for (const auto& c : out.cells) {
    qp.push_back(c.qp);
    h.push_back(c.h);
    j.push_back(c.j);
  }
  const auto hq = fit_quadratic(qp, h);
  const auto jl = fit_line(qp, j);
  out.a1 = hq.a;
  out.a2 = hq.b;
  out.a3 = hq.c;
  out.rss_h = hq.rss;
  out.b1 = jl.slope;
  out.b2 = jl.intercept;
  out.rss_j = jl.rss;
  return out;
}

//============================================================================
// Stage C: alpha = c tc + d, pooled over every (content, pqs) group

struct StageC {
  double c = 0, d = 0;
  double rss = 0;
  std::size_t n = 0;
};

inline StageC stage_c_alpha_tc(const std::vector<GroupFit>& groups)
{
  std::vector<double> tc, alpha;
  for (const auto& g : groups) {
    tc.push_back(g.tc);
    alpha.push_back(g.alpha);
  }
  if (tc.size() < 2)
    throw Error(ErrorCode::DegenerateDesign, "stage_c", "fewer than 2 groups");
  const auto fit = fit_line(tc, alpha);
  return {fit.slope, fit.intercept, fit.rss, tc.size()};
}

//============================================================================
// Stage D: beta = f1 / pqs + f2 on the per-pqs mean intercept

struct StageD {
  double f1 = 0, f2 = 0;
  double rss = 0;
  std::map<double, double> mean_beta;
};

inline StageD stage_d_beta_pqs(const std::vector<GroupFit>& groups)
{
  std::map<double, std::pair<double, std::size_t>> acc;
  for (const auto& g : groups) {
    if (!(g.pqs > 0.0))
      throw Error(ErrorCode::NonPositivePqs, "pqs");
    auto& [sum, n] = acc[g.pqs];
    sum += g.beta;
    ++n;
  }
  if (acc.size() < 2)
    throw Error(ErrorCode::DegenerateDesign, "stage_d", "fewer than 2 pqs levels");

  StageD out;
  std::vector<double> inv_pqs, beta;
  for (const auto& [pqs, sn] : acc) {
    const double mean = sn.first / static_cast<double>(sn.second);
    out.mean_beta[pqs] = mean;
    inv_pqs.push_back(1.0 / pqs);
    beta.push_back(mean);
  }
  const auto fit = fit_line(inv_pqs, beta);
  out.f1 = fit.slope;
  out.f2 = fit.intercept;
  out.rss = fit.rss;
  return out;
}

//============================================================================

struct FitDiagnostics {
  StageA stage_a;
  StageB stage_b;
  StageC stage_c;
  StageD stage_d;
  double rss = 0;  // full-model residuals on the training records
  std::size_t n_records = 0;
};

struct TrainResult {
  ModelParams params;
  FitDiagnostics diagnostics;
};

/// Texture chain first (A -> B -> C), then the geometry law (D) on the
/// stage-A intercepts.
inline TrainResult
train_full(const std::vector<TrainingRecord>& input, Variant variant = Variant::Literal)
{
  const auto records = canonical_order(input);
  std::set<double> pqs_levels, qp_levels;
  for (const auto& r : records) {
    pqs_levels.insert(r.pqs);
    qp_levels.insert(r.qp);
  }
  if (pqs_levels.size() < 2)
    throw Error(ErrorCode::DegenerateDesign, "train", "fewer than 2 pqs levels");
  if (qp_levels.size() < 2)
    throw Error(ErrorCode::DegenerateDesign, "train", "fewer than 2 qp levels");

  TrainResult out;
  auto& diag = out.diagnostics;
  diag.n_records = records.size();
  diag.stage_a = stage_a_mos_vs_tqs(records);
  diag.stage_b = stage_b_tc_model(records);
  diag.stage_c = stage_c_alpha_tc(diag.stage_a.groups);
  diag.stage_d = stage_d_beta_pqs(diag.stage_a.groups);

  auto& p = out.params;
  p.a1 = diag.stage_b.a1;
  p.a2 = diag.stage_b.a2;
  p.a3 = diag.stage_b.a3;
  p.b1 = diag.stage_b.b1;
  p.b2 = diag.stage_b.b2;
  p.c = diag.stage_c.c;
  p.d = diag.stage_c.d;
  p.f1 = diag.stage_d.f1;
  p.f2 = diag.stage_d.f2;
  p.variant = variant;

  for (const auto& r : records) {
    const double e = predict(p, r.pqs, r.qp, r.tbpp).pmos - r.mos;
    diag.rss += e * e;
  }
  return out;
}

/// Rows: stage,group,n,coef1,coef2,coef3,rss. Lines carry (slope,
/// intercept) in coef1/coef2; the H quadratic carries (a1,a2,a3).
inline void write_diagnostics_csv(std::ostream& out, const FitDiagnostics& d)
{
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto row = [&](std::string_view stage, const std::string& group, std::size_t n,
                 std::string c1, std::string c2, std::string c3, std::string rss) {
    out << stage << ',' << group << ',' << n << ',' << c1 << ',' << c2 << ',' << c3 << ','
        << rss << '\n';
  };
  out << "stage,group,n,coef1,coef2,coef3,rss\n";
  for (const auto& g : d.stage_a.groups)
    row("A", group_label(g.content, g.pqs), g.n, num(g.alpha), num(g.beta), "", num(g.rss));
  for (const auto& s : d.stage_a.skipped)
    row("A-skipped", s.group, 0, "", "", "", "");
  for (const auto& c : d.stage_b.cells)
    row("B", "pqs=" + num(c.pqs) + ";qp=" + num(c.qp), c.n, num(c.h), num(c.j), "", num(c.rss));
  for (const auto& s : d.stage_b.skipped)
    row("B-skipped", s.group, 0, "", "", "", "");
  row("B-H", "quadratic", d.stage_b.cells.size(), num(d.stage_b.a1), num(d.stage_b.a2),
      num(d.stage_b.a3), num(d.stage_b.rss_h));
  row("B-J", "line", d.stage_b.cells.size(), num(d.stage_b.b1), num(d.stage_b.b2), "",
      num(d.stage_b.rss_j));
  row("C", "alpha~tc", d.stage_c.n, num(d.stage_c.c), num(d.stage_c.d), "", num(d.stage_c.rss));
  row("D", "beta~1/pqs", d.stage_d.mean_beta.size(), num(d.stage_d.f1), num(d.stage_d.f2), "",
      num(d.stage_d.rss));
  row("model", "all", d.n_records, "", "", "", num(d.rss));
}

}  // namespace streampcq
