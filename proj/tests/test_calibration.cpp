#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "streampcq/calibration.hpp"
#include "streampcq/stats.hpp"
#include "support/synthetic.hpp"

using namespace streampcq;
using streampcq::fixtures::synthetic_dataset;

namespace {

void expect_params_near(const ModelParams& got, const ModelParams& want, double tol)
{
  EXPECT_NEAR(got.a1, want.a1, tol);
  EXPECT_NEAR(got.a2, want.a2, tol);
  EXPECT_NEAR(got.a3, want.a3, tol);
  EXPECT_NEAR(got.b1, want.b1, tol);
  EXPECT_NEAR(got.b2, want.b2, tol);
  EXPECT_NEAR(got.c, want.c, tol);
  EXPECT_NEAR(got.d, want.d, tol);
  EXPECT_NEAR(got.f1, want.f1, tol);
  EXPECT_NEAR(got.f2, want.f2, tol);
}

}  // namespace

// ------------------------------------------------------------------ fitting

TEST(FitLine, Examples)
{
  auto f = fit_line(std::vector<double>{0, 1}, std::vector<double>{1, 3});
  EXPECT_DOUBLE_EQ(f.slope, 2.0);
  EXPECT_DOUBLE_EQ(f.intercept, 1.0);

  f = fit_line(std::vector<double>{1, 5, 9}, std::vector<double>{4, 4, 4});
  EXPECT_DOUBLE_EQ(f.slope, 0.0);
  EXPECT_DOUBLE_EQ(f.intercept, 4.0);

  f = fit_line(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 4});
  EXPECT_NEAR(f.slope, 1.5, 1e-12);
  EXPECT_NEAR(f.intercept, -2.0 / 3.0, 1e-12);

  EXPECT_THROW(fit_line(std::vector<double>{2, 2}, std::vector<double>{1, 3}), Error);
  EXPECT_THROW(fit_line(std::vector<double>{2}, std::vector<double>{1}), Error);
}

TEST(FitQuadratic, Examples)
{
  std::vector<double> x{-3, -1, 0, 2, 5}, y;
  for (double v : x)
    y.push_back(v * v);
  auto q = fit_quadratic(x, y);
  EXPECT_NEAR(q.a, 1, 1e-9);
  EXPECT_NEAR(q.b, 0, 1e-9);
  EXPECT_NEAR(q.c, 0, 1e-9);

  q = fit_quadratic(std::vector<double>{10, 20, 30}, std::vector<double>{2, 4, 9});
  EXPECT_NEAR(q.a * 100 + q.b * 10 + q.c, 2, 1e-9);
  EXPECT_NEAR(q.a * 400 + q.b * 20 + q.c, 4, 1e-9);
  EXPECT_NEAR(q.a * 900 + q.b * 30 + q.c, 9, 1e-9);

  const ModelParams p;
  std::vector<double> qp{22, 28, 34, 40, 46}, h;
  for (double v : qp)
    h.push_back(h_of_qp(p, v));
  q = fit_quadratic(qp, h);
  EXPECT_NEAR(q.a, 0.2176, 1e-6);
  EXPECT_NEAR(q.b, -11.1828, 1e-6);
  EXPECT_NEAR(q.c, 146.7245, 1e-6);

  EXPECT_THROW(fit_quadratic(std::vector<double>{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4}), Error);
}

TEST(Fit, ResidualOrthogonality)
{
  std::mt19937_64 gen(4);
  std::normal_distribution<double> n(0, 3);
  std::vector<double> x, y;
  for (int i = 0; i < 60; ++i) {
    x.push_back(i * 0.7 + 20);
    y.push_back(0.3 * x.back() * x.back() - 2 * x.back() + n(gen));
  }
  const auto l = fit_line(x, y);
  const auto q = fit_quadratic(x, y);
  double s0 = 0, s1 = 0, q0 = 0, q1 = 0, q2 = 0, scale = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double rl = y[i] - (l.slope * x[i] + l.intercept);
    const double rq = y[i] - (q.a * x[i] * x[i] + q.b * x[i] + q.c);
    s0 += rl;
    s1 += rl * x[i];
    q0 += rq;
    q1 += rq * x[i];
    q2 += rq * x[i] * x[i];
    scale += std::abs(y[i]) * x[i] * x[i];
  }
  EXPECT_LE(std::abs(s0), 1e-8 * scale);
  EXPECT_LE(std::abs(s1), 1e-8 * scale);
  EXPECT_LE(std::abs(q0), 1e-8 * scale);
  EXPECT_LE(std::abs(q1), 1e-8 * scale);
  EXPECT_LE(std::abs(q2), 1e-8 * scale);
}

// ------------------------------------------------------------------- stages

TEST(StageA, ExactGroupAndSingleQpSkip)
{
  std::vector<TrainingRecord> rs;
  for (double qp : {22.0, 34.0, 46.0})
    rs.push_back({"a", 0.5, qp, 0.1, 40, 0.25 * tqs_from_qp(qp) + 60});
  rs.push_back({"b", 0.5, 22, 0.1, 40, 50});
  const auto a = stage_a_mos_vs_tqs(rs);
  ASSERT_EQ(a.groups.size(), 1u);
  EXPECT_NEAR(a.groups[0].alpha, 0.25, 1e-12);
  EXPECT_NEAR(a.groups[0].beta, 60, 1e-10);
  ASSERT_EQ(a.skipped.size(), 1u);
}

TEST(StageA, SyntheticGridRecoversEveryGroup)
{
  const ModelParams p;
  const auto a = stage_a_mos_vs_tqs(synthetic_dataset(p));
  ASSERT_EQ(a.groups.size(), 80u);
  for (const auto& g : a.groups) {
    EXPECT_NEAR(g.alpha, alpha_from_tc(p, g.tc), 1e-9);
    EXPECT_NEAR(g.beta, pmos_g(p, g.pqs), 1e-9);
  }
}

TEST(StageB, ExactRecoveryAndSkippedCell)
{
  const ModelParams p;
  auto rs = synthetic_dataset(p, 5);
  const auto b = stage_b_tc_model(rs);
  EXPECT_NEAR(b.a1, p.a1, 1e-6);
  EXPECT_NEAR(b.a2, p.a2, 1e-6);
  EXPECT_NEAR(b.a3, p.a3, 1e-6);
  EXPECT_NEAR(b.b1, p.b1, 1e-6);
  EXPECT_NEAR(b.b2, p.b2, 1e-6);
  EXPECT_TRUE(b.skipped.empty());

  rs.push_back({"x", 2.0, 30, 0.4, 10, 50});
  rs.push_back({"y", 2.0, 30, 0.4, 12, 50});
  const auto b2 = stage_b_tc_model(rs);
  EXPECT_EQ(b2.skipped.size(), 1u);
}

TEST(StageB, ThreeCellsInterpolate)
{
  std::vector<TrainingRecord> rs;
  const std::pair<double, double> cells[] = {{10, 2}, {20, 4}, {30, 9}};
  for (auto [qp, h] : cells)
    for (double tbpp : {0.5, 1.5})
      rs.push_back({"c" + std::to_string(tbpp), 1.0, qp, tbpp, h * tbpp + 1.0, 0});
  const auto b = stage_b_tc_model(rs);
  for (auto [qp, h] : cells)
    EXPECT_NEAR(b.a1 * qp * qp + b.a2 * qp + b.a3, h, 1e-9);
  EXPECT_NEAR(b.b1, 0.0, 1e-12);
  EXPECT_NEAR(b.b2, 1.0, 1e-12);
}

TEST(StageC, LineThroughAlphas)
{
  std::vector<GroupFit> g{{"a", 1, 0.0013 * 50 - 0.2042, 0, 50, 5, 0},
                          {"b", 1, 0.0013 * 120 - 0.2042, 0, 120, 5, 0},
                          {"c", 1, 0.0013 * 10 - 0.2042, 0, 10, 5, 0}};
  const auto c = stage_c_alpha_tc(g);
  EXPECT_NEAR(c.c, 0.0013, 1e-12);
  EXPECT_NEAR(c.d, -0.2042, 1e-12);
  g.resize(1);
  EXPECT_THROW(stage_c_alpha_tc(g), Error);
}

TEST(StageD, ReciprocalLaw)
{
  std::vector<GroupFit> g;
  const std::pair<double, double> means[] = {
    {1.0, 85.4838}, {0.5, 82.7833}, {0.25, 77.3823}, {0.125, 66.5803}};
  for (auto [pqs, beta] : means)
    g.push_back({"x", pqs, 0, beta, 0, 5, 0});
  const auto d = stage_d_beta_pqs(g);
  EXPECT_NEAR(d.f1, -2.7005, 1e-4);
  EXPECT_NEAR(d.f2, 88.1843, 1e-4);

  for (auto& x : g)
    x.beta = 70;
  const auto flat = stage_d_beta_pqs(g);
  EXPECT_NEAR(flat.f1, 0, 1e-12);
  EXPECT_NEAR(flat.f2, 70, 1e-12);

  g.resize(1);
  try {
    stage_d_beta_pqs(g);
    FAIL();
  }
  catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateDesign);
  }
}

// --------------------------------------------------------------- full train

TEST(TrainFull, RecoversGeneratorParameters)
{
  const ModelParams p;
  const auto r = train_full(synthetic_dataset(p), Variant::AlphaTimesTqs);
  expect_params_near(r.params, p, 1e-6);
  EXPECT_EQ(r.params.variant, Variant::AlphaTimesTqs);
  EXPECT_EQ(r.diagnostics.n_records, 400u);
  EXPECT_LT(r.diagnostics.rss, 1e-12);
}

TEST(TrainFull, RecoversOtherParameterSets)
{
  ModelParams p;
  p.a1 = 0.1;
  p.a2 = -4.0;
  p.a3 = 60.0;
  p.b1 = 0.5;
  p.b2 = -2.0;
  p.c = -0.002;
  p.d = 0.1;
  p.f1 = -5.0;
  p.f2 = 70.0;
  for (double qp : fixtures::kQpGrid)
    ASSERT_GT(h_of_qp(p, qp), 0.0);
  expect_params_near(train_full(synthetic_dataset(p, 6)).params, p, 1e-6);
}

TEST(TrainFull, SinglePqsLevelIsDegenerate)
{
  auto rs = synthetic_dataset();
  std::erase_if(rs, [](const TrainingRecord& r) { return r.pqs != 0.5; });
  try {
    train_full(rs);
    FAIL();
  }
  catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateDesign);
  }
}

TEST(TrainFull, NoisyMosStillCorrelates)
{
  const auto rs = synthetic_dataset(ModelParams{}, 20, 0.5, 99);
  const auto r = train_full(rs, Variant::AlphaTimesTqs);
  std::vector<double> pred, mos;
  for (const auto& x : rs) {
    pred.push_back(predict(r.params, x.pqs, x.qp, x.tbpp).pmos);
    mos.push_back(x.mos);
  }
  EXPECT_GT(plcc(pred, mos), 0.99);
}

TEST(TrainFull, RecordOrderDoesNotMatter)
{
  auto rs = synthetic_dataset(ModelParams{}, 20, 0.5, 5);
  const auto base = train_full(rs).params;
  std::mt19937_64 gen(8);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(rs.begin(), rs.end(), gen);
    const auto p = train_full(rs).params;
    EXPECT_EQ(p.a1, base.a1);
    EXPECT_EQ(p.a2, base.a2);
    EXPECT_EQ(p.a3, base.a3);
    EXPECT_EQ(p.b1, base.b1);
    EXPECT_EQ(p.b2, base.b2);
    EXPECT_EQ(p.c, base.c);
    EXPECT_EQ(p.d, base.d);
    EXPECT_EQ(p.f1, base.f1);
    EXPECT_EQ(p.f2, base.f2);
  }
}

TEST(TrainFull, DiagnosticsCsvShape)
{
  const auto r = train_full(synthetic_dataset(ModelParams{}, 3));
  std::ostringstream out;
  write_diagnostics_csv(out, r.diagnostics);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "stage,group,n,coef1,coef2,coef3,rss");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6) << line;
  }
  EXPECT_EQ(rows, 12u + 20u + 5u);
}
