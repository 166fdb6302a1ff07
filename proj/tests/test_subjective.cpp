#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "streampcq/stats.hpp"
#include "streampcq/subjective.hpp"
#include "support/synthetic.hpp"

using namespace streampcq;

namespace {

SubjectiveMatrix from_rows(const std::vector<std::vector<double>>& rows)
{
  std::vector<std::string> stim, subj;
  for (std::size_t m = 0; m < rows.size(); ++m)
    stim.push_back("s" + std::to_string(m));
  for (std::size_t i = 0; i < rows[0].size(); ++i)
    subj.push_back("o" + std::to_string(i));
  SubjectiveMatrix x(stim, subj);
  for (std::size_t m = 0; m < rows.size(); ++m)
    for (std::size_t i = 0; i < rows[m].size(); ++i)
      x.at(m, i) = rows[m][i];
  return x;
}

/// 30 subjects. Subjects 0..28 spread evenly over +-1 around a
/// per-stimulus centre; subject 29 rates the centre exactly.
SubjectiveMatrix consensus_panel(std::size_t n_stimuli)
{
  std::vector<std::vector<double>> rows(n_stimuli, std::vector<double>(30));
  for (std::size_t m = 0; m < n_stimuli; ++m) {
    const double centre = 30 + 0.1 * static_cast<double>(m);
    for (std::size_t i = 0; i < 29; ++i)
      rows[m][i] = centre - 1.0 + 2.0 * static_cast<double>(i) / 28.0;
    rows[m][29] = centre;
  }
  return from_rows(rows);
}

}  // namespace

TEST(Zscore, Examples)
{
  const auto x = from_rows({{50, 1}, {70, 2}, {90, 4}});
  const auto z = zscore(x);
  EXPECT_NEAR(z.at(0, 0), -1, 1e-15);
  EXPECT_NEAR(z.at(1, 0), 0, 1e-15);
  EXPECT_NEAR(z.at(2, 0), 1, 1e-15);

  const auto flat = from_rows({{50, 1}, {50, 2}, {50, 4}});
  try {
    zscore(flat);
    FAIL();
  }
  catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroVarianceSubject);
    EXPECT_EQ(e.subject(), "o0");
  }
}

TEST(Zscore, ColumnsAreStandardised)
{
  const auto panel = fixtures::simulate_panel();
  const auto z = zscore(panel.ratings);
  for (std::size_t i = 0; i < z.n_subjects(); ++i) {
    const auto col = z.subject_column(i);
    EXPECT_NEAR(mean(col), 0.0, 1e-10);
    EXPECT_NEAR(std::sqrt(sample_variance(col)), 1.0, 1e-10);
  }
}

TEST(Zscore, AffineInvariantPerSubject)
{
  const auto panel = fixtures::simulate_panel(5, 50);
  auto moved = panel.ratings;
  for (std::size_t m = 0; m < moved.n_stimuli(); ++m)
    moved.at(m, 2) = 3.7 * moved.at(m, 2) - 40;
  const auto a = zscore(panel.ratings), b = zscore(moved);
  for (std::size_t m = 0; m < a.n_stimuli(); ++m)
    EXPECT_NEAR(a.at(m, 2), b.at(m, 2), 1e-12);
}

TEST(Zscore, MissingRatingsAreIgnored)
{
  auto x = from_rows({{50, 1}, {70, 2}, {90, 4}, {0, 8}});
  x.at(3, 0) = SubjectiveMatrix::kMissing;
  const auto z = zscore(x);
  EXPECT_TRUE(SubjectiveMatrix::missing(z.at(3, 0)));
  EXPECT_NEAR(z.at(2, 0), 1, 1e-15);
}

TEST(Rescale, Examples)
{
  const auto z = from_rows({{-1, 0}, {1, 0.5}});
  const auto r = rescale_to_range(z);
  EXPECT_DOUBLE_EQ(r.at(0, 0), 0);
  EXPECT_DOUBLE_EQ(r.at(0, 1), 50);
  EXPECT_DOUBLE_EQ(r.at(1, 0), 100);
  EXPECT_DOUBLE_EQ(r.at(1, 1), 75);
  try {
    rescale_to_range(from_rows({{2, 2}, {2, 2}}));
    FAIL();
  }
  catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateRange);
  }
}

TEST(Rescale, OrderPreserving)
{
  const auto panel = fixtures::simulate_panel(6, 80);
  const auto z = zscore(panel.ratings);
  const auto r = rescale_to_range(z);
  for (std::size_t m = 0; m < z.n_stimuli(); ++m) {
    std::vector<double> a, b;
    for (std::size_t i = 0; i < z.n_subjects(); ++i) {
      a.push_back(z.at(m, i));
      b.push_back(r.at(m, i));
    }
    EXPECT_EQ(average_ranks(a), average_ranks(b));
  }
}

TEST(Screening, IdenticalRatingsRejectNobody)
{
  std::vector<std::vector<double>> rows;
  for (int m = 0; m < 20; ++m)
    rows.push_back(std::vector<double>(5, 10.0 + 4 * m));
  const auto r = screen_outliers(from_rows(rows));
  EXPECT_TRUE(r.rejected.empty());
}

TEST(Screening, OneSidedDeviantIsKept)
{
  auto x = consensus_panel(100);
  // subject 29 rates 50 points high on 20% of stimuli
  for (std::size_t m = 0; m < 100; m += 5)
    x.at(m, 29) += 50;
  const auto r = screen_outliers(x);
  EXPECT_EQ(r.p[29], 20u);
  EXPECT_EQ(r.q[29], 0u);
  EXPECT_TRUE(r.rejected.empty());
}

TEST(Screening, AlternatingDeviantIsRejected)
{
  auto x = consensus_panel(100);
  // subject 29 alternates +-15 on 20% of stimuli. With the deviant included
  // the row std is about 2.8, so 15 is roughly 5 sd; kurtosis is far above
  // 4, giving a sqrt(20) s ~ 12.5 band that the deviant still leaves.
  int sign = 1;
  for (std::size_t m = 0; m < 100; m += 5) {
    x.at(m, 29) += sign * 15.0;
    sign = -sign;
  }
  const auto r = screen_outliers(x);
  EXPECT_EQ(r.p[29], 10u);
  EXPECT_EQ(r.q[29], 10u);
  EXPECT_EQ(r.rejected, (std::vector<std::size_t>{29}));
  EXPECT_THROW(screen_outliers(from_rows({{1, 2}, {3, 5}})), Error);
}

TEST(Mos, TwoIdenticalSubjects)
{
  const auto x = from_rows({{10, 10}, {40, 40}, {70, 70}});
  const auto t = compute_mos(x);
  EXPECT_DOUBLE_EQ(t.mos[0], 0);
  EXPECT_DOUBLE_EQ(t.mos[1], 50);
  EXPECT_DOUBLE_EQ(t.mos[2], 100);
  for (double s : t.std)
    EXPECT_DOUBLE_EQ(s, 0);
  EXPECT_EQ(t.n_valid, (std::vector<std::size_t>{2, 2, 2}));
}

TEST(Mos, MirroredPair)
{
  const auto t = compute_mos(from_rows({{0, 100}, {50, 50}, {100, 0}}));
  for (double v : t.mos)
    EXPECT_NEAR(v, 50, 1e-12);
}

TEST(Mos, SimulatedPanelRecoversPlantedQuality)
{
  const auto panel = fixtures::simulate_panel();
  const auto t = compute_mos(panel.ratings);
  EXPECT_GT(plcc(t.mos, panel.planted), 0.999);
  for (double v : t.mos) {
    EXPECT_GE(v, 0);
    EXPECT_LE(v, 100);
  }
  EXPECT_TRUE(t.rejected_subjects.empty());
}

TEST(Mos, PermutationEquivariant)
{
  const auto panel = fixtures::simulate_panel(8, 60, 2.0, 5);
  const auto base = compute_mos(panel.ratings);

  std::vector<std::size_t> stim(60), subj(8);
  for (std::size_t i = 0; i < 60; ++i)
    stim[i] = (i * 7 + 3) % 60;
  for (std::size_t i = 0; i < 8; ++i)
    subj[i] = (i * 3 + 1) % 8;
  std::vector<std::string> stim_ids, subj_ids;
  for (auto m : stim)
    stim_ids.push_back(panel.ratings.stimuli[m]);
  for (auto i : subj)
    subj_ids.push_back(panel.ratings.subjects[i]);
  SubjectiveMatrix p(stim_ids, subj_ids);
  for (std::size_t m = 0; m < 60; ++m)
    for (std::size_t i = 0; i < 8; ++i)
      p.at(m, i) = panel.ratings.at(stim[m], subj[i]);
  const auto permuted = compute_mos(p);
  for (std::size_t m = 0; m < 60; ++m)
    EXPECT_NEAR(permuted.mos[m], base.mos[stim[m]], 1e-9);
}
