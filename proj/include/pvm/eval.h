#ifndef PVM_EVAL_H_
#define PVM_EVAL_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace pvm {

// Distortion sub-groups used for per-group analysis.
enum class Group { kNone, kCoding, kCodingWithErrors, kCodingWithInterpolation, kOther };

Group ParseGroup(std::string_view text);
std::string_view GroupName(Group group);

struct EvalRecord {
  std::string clip_id;
  double metric_score = 0.0;
  double dmos = 0.0;
  double dmos_std = 0.0;
  Group group = Group::kNone;
};

// CSV with header clip_id,metric_score,dmos[,dmos_std][,group]. Columns are
// matched by name.
std::vector<EvalRecord> LoadRecords(const std::filesystem::path& path);
std::vector<EvalRecord> ParseRecords(std::istream& in,
                                     const std::string& origin);

// DMOS_p(s) = b1 / (1 + exp(-b2 (s - b3)))
struct LogisticFit {
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 0.0;
  bool converged = false;
  // DMOS was constant; the fit is the flat line through it.
  bool degenerate = false;
  int iterations = 0;
  double residual = 0.0;  // weighted sum of squared residuals

  double predict(double score) const;
};

inline constexpr double kWeightFloor = 1e-6;
inline constexpr int kMaxFitIterations = 200;

// Weighted least squares, damped Gauss-Newton (Levenberg-Marquardt) from a
// deterministic start. Throws a data error on fewer than 4 records or when
// all scores are equal.
LogisticFit FitLogistic(std::span<const EvalRecord> records);

struct CorrelationStats {
  double lcc = 0.0;
  double srocc = 0.0;
  double outlier_ratio = 0.0;
  double rmse = 0.0;
  std::size_t n = 0;
  // Some records had no dmos_std and used 2 x residual sample std instead.
  bool outlier_threshold_substituted = false;
};

CorrelationStats ComputeStats(std::span<const EvalRecord> records,
                              const LogisticFit& fit);

// Pearson correlation; 0 when either side has zero variance.
double Pearson(std::span<const double> x, std::span<const double> y);
// 1-based ranks with ties sharing their average rank.
std::vector<double> MidRanks(std::span<const double> values);
double Spearman(std::span<const double> x, std::span<const double> y);

inline constexpr int kReportSchemaVersion = 1;
inline constexpr int kCurveSamples = 129;
inline constexpr const char* kToolName = "pvm-tools";
inline constexpr const char* kToolVersion = "0.1.0";

// Aggregate fit and stats, per-group blocks, per-record predictions and the
// fitted curve sampled over the score range.
nlohmann::json BuildEvalReport(std::span<const EvalRecord> records,
                               std::string_view parameter_provenance);

// Flat CSV mirror of the stats blocks in an evaluation report.
std::string EvalReportCsv(const nlohmann::json& report);

}  // namespace pvm

#endif  // PVM_EVAL_H_
