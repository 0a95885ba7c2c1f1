#include "pvm/eval.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "pvm/error.h"
#include "testing/oracles.h"

namespace pvm {
namespace {

double Logistic(double s, double b1, double b2, double b3) {
  return b1 / (1.0 + std::exp(-b2 * (s - b3)));
}

std::vector<EvalRecord> FromLogistic(int n, double b1, double b2, double b3) {
  std::vector<EvalRecord> records;
  for (int i = 0; i < n; ++i) {
    const double s = 10.0 + 50.0 * i / (n - 1);
    records.push_back({"clip" + std::to_string(i), s, Logistic(s, b1, b2, b3)});
  }
  return records;
}

std::vector<EvalRecord> Parse(const std::string& text) {
  std::istringstream in(text);
  return ParseRecords(in, "mem");
}

TEST(LoadRecords, WellFormed) {
  const auto records = Parse(
      "clip_id,metric_score,dmos\n"
      "a,30.5,40\n"
      "b,25,55.5\n"
      "c,40,20\n");
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[1].clip_id, "b");
  EXPECT_EQ(records[1].dmos, 55.5);
  EXPECT_EQ(records[2].dmos_std, 0.0);
  EXPECT_EQ(records[2].group, Group::kNone);
}

TEST(LoadRecords, OptionalColumnsByName) {
  const auto records = Parse(
      "group,dmos,clip_id,dmos_std,metric_score\n"
      "coding,40,a,3.5,30\n"
      ",41,b,,31\n"
      "interpolation,42,c,1,32\n");
  ASSERT_EQ(records.size(), 3u);
  EXPECT_EQ(records[0].group, Group::kCoding);
  EXPECT_EQ(records[0].dmos_std, 3.5);
  EXPECT_EQ(records[1].group, Group::kNone);
  EXPECT_EQ(records[2].group, Group::kCodingWithInterpolation);
  EXPECT_EQ(records[2].metric_score, 32.0);
}

TEST(LoadRecords, RejectsNonFiniteWithRowNumber) {
  try {
    Parse("clip_id,metric_score,dmos\na,1,2\nb,3,NaN\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(Parse("clip_id,metric_score,dmos\na,inf,2\n"), Error);
  EXPECT_THROW(Parse("clip_id,metric_score,dmos\na,1x,2\n"), Error);
}

TEST(LoadRecords, EmptyAndHeaderless) {
  try {
    Parse("clip_id,metric_score,dmos\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty dataset"), std::string::npos);
  }
  EXPECT_THROW(Parse(""), Error);
  EXPECT_THROW(Parse("a,30,40\nb,31,41\n"), Error);
  EXPECT_THROW(Parse("clip_id,metric_score,dmos,group\na,1,2,sports\n"), Error);
}

TEST(FitLogistic, RecoversKnownParameters) {
  const auto records = FromLogistic(20, 80.0, -0.2, 35.0);
  const LogisticFit fit = FitLogistic(records);
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.b1, 80.0, 80.0 * 1e-6);
  EXPECT_NEAR(fit.b2, -0.2, 0.2 * 1e-6);
  EXPECT_NEAR(fit.b3, 35.0, 35.0 * 1e-6);
  EXPECT_LE(fit.iterations, kMaxFitIterations);
}

TEST(FitLogistic, IncreasingRelationship) {
  const auto records = FromLogistic(15, 60.0, 0.15, 30.0);
  const LogisticFit fit = FitLogistic(records);
  EXPECT_NEAR(fit.b1, 60.0, 1e-5);
  EXPECT_NEAR(fit.b2, 0.15, 1e-7);
  EXPECT_NEAR(fit.b3, 30.0, 1e-5);
}

TEST(FitLogistic, WeightsFavourPreciseRecords) {
  auto records = FromLogistic(12, 80.0, -0.2, 35.0);
  for (auto& r : records) r.dmos_std = 1.0;
  // One wildly wrong but very uncertain point.
  records[5].dmos += 30.0;
  records[5].dmos_std = 1000.0;
  const LogisticFit fit = FitLogistic(records);
  EXPECT_NEAR(fit.b1, 80.0, 0.05);
  EXPECT_NEAR(fit.b3, 35.0, 0.05);
}

TEST(FitLogistic, ConstantDmosIsFlagged) {
  auto records = FromLogistic(8, 80.0, -0.2, 35.0);
  for (auto& r : records) r.dmos = 42.0;
  const LogisticFit fit = FitLogistic(records);
  EXPECT_TRUE(fit.degenerate);
  EXPECT_EQ(fit.b2, 0.0);
  EXPECT_EQ(ComputeStats(records, fit).rmse, 0.0);
}

TEST(FitLogistic, DuplicatedDataGivesSameFit) {
  std::mt19937 rng(4);
  std::normal_distribution<double> noise(0.0, 2.0);
  auto records = FromLogistic(14, 80.0, -0.2, 35.0);
  for (auto& r : records) r.dmos += noise(rng);
  std::vector<EvalRecord> doubled;
  for (const auto& r : records) {
    doubled.push_back(r);
    doubled.push_back(r);
  }
  const LogisticFit a = FitLogistic(records);
  const LogisticFit b = FitLogistic(doubled);
  EXPECT_NEAR(a.b1, b.b1, 1e-9 * std::abs(a.b1));
  EXPECT_NEAR(a.b2, b.b2, 1e-9 * std::abs(a.b2));
  EXPECT_NEAR(a.b3, b.b3, 1e-9 * std::abs(a.b3));
}

TEST(FitLogistic, Deterministic) {
  std::mt19937 rng(9);
  std::normal_distribution<double> noise(0.0, 3.0);
  auto records = FromLogistic(30, 70.0, -0.3, 40.0);
  for (auto& r : records) r.dmos += noise(rng);
  const LogisticFit a = FitLogistic(records);
  const LogisticFit b = FitLogistic(records);
  EXPECT_EQ(a.b1, b.b1);
  EXPECT_EQ(a.b2, b.b2);
  EXPECT_EQ(a.b3, b.b3);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_EQ(a.residual, b.residual);
}

TEST(FitLogistic, Errors) {
  EXPECT_THROW(FitLogistic(FromLogistic(3, 80, -0.2, 35)), Error);
  auto flat = FromLogistic(6, 80, -0.2, 35);
  for (auto& r : flat) r.metric_score = 5.0;
  EXPECT_THROW(FitLogistic(flat), Error);
}

TEST(ComputeStats, PerfectMonotoneAndExactLogistic) {
  const auto records = FromLogistic(20, 80.0, -0.2, 35.0);
  const LogisticFit truth{80.0, -0.2, 35.0};
  const CorrelationStats s = ComputeStats(records, truth);
  EXPECT_EQ(s.n, 20u);
  EXPECT_DOUBLE_EQ(s.srocc, -1.0);
  EXPECT_NEAR(s.lcc, 1.0, 1e-12);
  EXPECT_LE(s.rmse, 1e-12);
  EXPECT_EQ(s.outlier_ratio, 0.0);

  std::vector<EvalRecord> increasing;
  for (int i = 0; i < 6; ++i) increasing.push_back({"", double(i), std::exp(double(i))});
  EXPECT_DOUBLE_EQ(ComputeStats(increasing, truth).srocc, 1.0);
}

TEST(ComputeStats, TiedRanksMatchBruteForce) {
  const std::vector<double> scores = {3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 4.0};
  const std::vector<double> dmos = {10, 20, 5, 18, 7, 1, 15, 6};
  EXPECT_EQ(MidRanks(scores), testing::OracleMidRanks(scores));
  EXPECT_EQ(MidRanks(scores)[2], 5.5);
  std::vector<EvalRecord> records;
  for (std::size_t i = 0; i < scores.size(); ++i) records.push_back({"", scores[i], dmos[i]});
  const CorrelationStats s = ComputeStats(records, LogisticFit{20, -0.5, 4});
  EXPECT_NEAR(s.srocc,
              testing::OraclePearson(testing::OracleMidRanks(scores),
                                     testing::OracleMidRanks(dmos)),
              1e-12);
}

TEST(ComputeStats, MatchesBruteForceOnSmallSets) {
  std::mt19937 rng(23);
  std::uniform_real_distribution<double> score(10, 60);
  std::normal_distribution<double> noise(0.0, 4.0);
  std::uniform_real_distribution<double> sd(0.5, 6.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 4 + trial % 7;
    std::vector<EvalRecord> records;
    for (int i = 0; i < n; ++i) {
      const double s = std::round(score(rng) * 2) / 2;  // some ties
      records.push_back({"", s, Logistic(s, 80, -0.2, 35) + noise(rng),
                         trial % 3 == 0 ? 0.0 : sd(rng)});
    }
    const LogisticFit fit = FitLogistic(records);
    const CorrelationStats s = ComputeStats(records, fit);
    const auto o = testing::OracleStats(records, fit);
    EXPECT_NEAR(s.lcc, o.lcc, 1e-9);
    EXPECT_NEAR(s.srocc, o.srocc, 1e-9);
    EXPECT_NEAR(s.rmse, o.rmse, 1e-9 * std::max(1.0, o.rmse));
    EXPECT_EQ(s.outlier_ratio, o.outlier_ratio);
    EXPECT_EQ(s.outlier_threshold_substituted, trial % 3 == 0);
  }
}

TEST(ComputeStats, SroccInvariantUnderMonotoneTransforms) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(1.0, 50.0);
  std::vector<double> s, d;
  for (int i = 0; i < 40; ++i) {
    s.push_back(u(rng));
    d.push_back(u(rng) + s.back());
  }
  const double base = Spearman(s, d);
  std::vector<double> affine, cubic;
  for (double v : s) {
    affine.push_back(2 * v + 7);
    cubic.push_back(v * v * v);
  }
  EXPECT_NEAR(Spearman(affine, d), base, 1e-12);
  EXPECT_NEAR(Spearman(cubic, d), base, 1e-12);
}

TEST(ComputeStats, OrderInvariant) {
  std::mt19937 rng(5);
  std::normal_distribution<double> noise(0.0, 3.0);
  auto records = FromLogistic(25, 80.0, -0.2, 35.0);
  for (auto& r : records) r.dmos += noise(rng);
  const LogisticFit fit = FitLogistic(records);
  const CorrelationStats a = ComputeStats(records, fit);
  std::shuffle(records.begin(), records.end(), rng);
  const CorrelationStats b = ComputeStats(records, fit);
  EXPECT_NEAR(a.lcc, b.lcc, 1e-12);
  EXPECT_NEAR(a.rmse, b.rmse, 1e-12);
  EXPECT_NEAR(a.srocc, b.srocc, 1e-12);
  EXPECT_EQ(a.outlier_ratio, b.outlier_ratio);
  EXPECT_GE(a.outlier_ratio, 0.0);
  EXPECT_LE(a.outlier_ratio, 1.0);
}

TEST(ComputeStats, NeedsTwoRecords) {
  EXPECT_THROW(ComputeStats(std::vector<EvalRecord>{{"", 1, 2}}, LogisticFit{}), Error);
}

TEST(EvalReport, RoundTripsAndGroups) {
  std::mt19937 rng(6);
  std::normal_distribution<double> noise(0.0, 2.0);
  auto records = FromLogistic(24, 80.0, -0.2, 35.0);
  const Group groups[] = {Group::kCoding, Group::kCodingWithErrors,
                          Group::kCodingWithInterpolation, Group::kNone};
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].dmos += noise(rng);
    records[i].group = groups[i % 4];
  }
  const auto report = BuildEvalReport(records, "placeholder");
  EXPECT_EQ(report["schema_version"], kReportSchemaVersion);
  EXPECT_EQ(report["tool"]["version"], kToolVersion);
  EXPECT_EQ(report["parameter_provenance"], "placeholder");
  EXPECT_EQ(report["curve"].size(), static_cast<std::size_t>(kCurveSamples));
  EXPECT_EQ(report["records"].size(), records.size());
  EXPECT_EQ(report["groups"].size(), 3u);
  for (const char* g : {"coding", "coding_with_errors", "coding_with_interpolation"}) {
    EXPECT_EQ(report["groups"][g]["stats"]["n"], 6u);
  }
  EXPECT_EQ(report["aggregate"]["stats"]["n"], 24u);

  const auto parsed = nlohmann::json::parse(report.dump());
  const LogisticFit fit = FitLogistic(records);
  const CorrelationStats stats = ComputeStats(records, fit);
  EXPECT_EQ(parsed["aggregate"]["stats"]["lcc"].get<double>(), stats.lcc);
  EXPECT_EQ(parsed["aggregate"]["stats"]["srocc"].get<double>(), stats.srocc);
  EXPECT_EQ(parsed["aggregate"]["stats"]["rmse"].get<double>(), stats.rmse);
  EXPECT_EQ(parsed["aggregate"]["stats"]["outlier_ratio"].get<double>(),
            stats.outlier_ratio);

  const std::string csv = EvalReportCsv(report);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.rfind("block,n,lcc", 0), 0u);
}

TEST(EvalReport, SmallGroupsFallBackToAggregateFit) {
  auto records = FromLogistic(10, 80.0, -0.2, 35.0);
  records[0].group = Group::kOther;
  records[1].group = Group::kCoding;
  records[2].group = Group::kCoding;
  const auto report = BuildEvalReport(records, "calibrated");
  EXPECT_EQ(report["groups"]["coding"]["fit_source"], "aggregate");
  EXPECT_TRUE(report["groups"]["other"].contains("error"));
}

}  // namespace
}  // namespace pvm
