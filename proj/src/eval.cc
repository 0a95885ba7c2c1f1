#include "pvm/eval.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

#include "pvm/error.h"

namespace pvm {
namespace {

std::string Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(Trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

// Solves the 3x3 system a x = b by Gaussian elimination with partial
// pivoting. Returns nullopt when singular.
std::optional<std::array<double, 3>> Solve3(std::array<std::array<double, 3>, 3> a,
                                            std::array<double, 3> b) {
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    }
    if (!(std::abs(a[pivot][col]) > 0.0)) return std::nullopt;
    std::swap(a[pivot], a[col]);
    std::swap(b[pivot], b[col]);
    for (int r = col + 1; r < 3; ++r) {
      const double f = a[r][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  std::array<double, 3> x{};
  for (int r = 2; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 3; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  for (double v : x) {
    if (!std::isfinite(v)) return std::nullopt;
  }
  return x;
}

struct Problem {
  std::vector<double> s;
  std::vector<double> y;
  std::vector<double> w;
};

double Residual(const Problem& p, const std::array<double, 3>& b) {
  const LogisticFit f{b[0], b[1], b[2]};
  double sum = 0.0;
  for (std::size_t i = 0; i < p.s.size(); ++i) {
    const double r = f.predict(p.s[i]) - p.y[i];
    sum += p.w[i] * r * r;
  }
  return sum;
}

}  // namespace

Group ParseGroup(std::string_view text) {
  if (text.empty()) return Group::kNone;
  if (text == "coding") return Group::kCoding;
  if (text == "coding_with_errors" || text == "errors") {
    return Group::kCodingWithErrors;
  }
  if (text == "coding_with_interpolation" || text == "interpolation") {
    return Group::kCodingWithInterpolation;
  }
  if (text == "other") return Group::kOther;
  throw DataError("unknown group '" + std::string(text) + "'");
}

std::string_view GroupName(Group group) {
  switch (group) {
    case Group::kNone: return "";
    case Group::kCoding: return "coding";
    case Group::kCodingWithErrors: return "coding_with_errors";
    case Group::kCodingWithInterpolation: return "coding_with_interpolation";
    case Group::kOther: return "other";
  }
  return "";
}

std::vector<EvalRecord> ParseRecords(std::istream& in,
                                     const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": empty dataset");
  const auto header = SplitCsv(line);
  auto column = [&](std::string_view name) -> int {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  const int id_col = column("clip_id");
  const int score_col = column("metric_score");
  const int dmos_col = column("dmos");
  const int std_col = column("dmos_std");
  const int group_col = column("group");
  if (id_col < 0 || score_col < 0 || dmos_col < 0) {
    throw DataError(origin +
                    ": missing header (need clip_id,metric_score,dmos)");
  }

  std::vector<EvalRecord> records;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (Trim(line).empty()) continue;
    const auto fields = SplitCsv(line);
    const std::string where = origin + " row " + std::to_string(row);
    auto field = [&](int col) -> std::string {
      return col >= 0 && col < static_cast<int>(fields.size()) ? fields[col]
                                                               : std::string();
    };
    auto number = [&](int col, const char* name, bool optional) {
      const std::string text = field(col);
      if (text.empty()) {
        if (optional) return 0.0;
        throw DataError(where + ": missing " + name);
      }
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        std::size_t used = 0;
        v = std::stod(text, &used);
        if (used != text.size()) v = std::numeric_limits<double>::quiet_NaN();
      } catch (const std::exception&) {
      }
      if (!std::isfinite(v)) {
        throw DataError(where + ": " + name + " is not a finite number ('" +
                        text + "')");
      }
      return v;
    };
    EvalRecord r;
    r.clip_id = field(id_col);
    r.metric_score = number(score_col, "metric_score", false);
    r.dmos = number(dmos_col, "dmos", false);
    r.dmos_std = number(std_col, "dmos_std", true);
    if (r.dmos_std < 0) throw DataError(where + ": dmos_std is negative");
    try {
      r.group = ParseGroup(field(group_col));
    } catch (const Error& e) {
      throw DataError(where + ": " + e.what());
    }
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError(origin + ": empty dataset");
  return records;
}

std::vector<EvalRecord> LoadRecords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open records '" + path.string() + "'");
  return ParseRecords(in, path.string());
}

double LogisticFit::predict(double score) const {
  return b1 / (1.0 + std::exp(-b2 * (score - b3)));
}

LogisticFit FitLogistic(std::span<const EvalRecord> records) {
  if (records.size() < 4) {
    throw DataError("logistic fit needs at least 4 records");
  }
  Problem p;
  bool any_std = false;
  for (const auto& r : records) {
    p.s.push_back(r.metric_score);
    p.y.push_back(r.dmos);
    any_std = any_std || r.dmos_std > 0.0;
  }
  for (const auto& r : records) {
    p.w.push_back(any_std ? 1.0 / std::max(r.dmos_std * r.dmos_std, kWeightFloor)
                          : 1.0);
  }
  const auto [s_min, s_max] = std::minmax_element(p.s.begin(), p.s.end());
  const double range = *s_max - *s_min;
  if (!(range > 0.0)) {
    throw DataError("degenerate score spread: all metric scores are equal");
  }

  LogisticFit fit;
  const auto [y_min, y_max] = std::minmax_element(p.y.begin(), p.y.end());
  if (*y_min == *y_max) {
    // Flat target: b2 = 0 puts the curve at b1 / 2 everywhere.
    fit.b1 = 2.0 * *y_min;
    fit.b2 = 0.0;
    fit.b3 = Median(p.s);
    fit.converged = true;
    fit.degenerate = true;
    fit.residual = 0.0;
    return fit;
  }

  const double direction = Spearman(p.s, p.y) > 0.0 ? 1.0 : -1.0;
  std::array<double, 3> b = {*y_max, direction * 4.0 / range, Median(p.s)};
  double residual = Residual(p, b);
  double lambda = 1e-3;
  double scale = 0.0;
  for (std::size_t i = 0; i < p.y.size(); ++i) scale += p.w[i] * p.y[i] * p.y[i];

  int iteration = 0;
  bool converged = false;
  while (iteration < kMaxFitIterations && !converged) {
    ++iteration;
    std::array<std::array<double, 3>, 3> jtj{};
    std::array<double, 3> jtr{};
    for (std::size_t i = 0; i < p.s.size(); ++i) {
      const double e = std::exp(-b[1] * (p.s[i] - b[2]));
      const double g = 1.0 / (1.0 + e);
      const double f = b[0] * g;
      const double dg = b[0] * e * g * g;
      const std::array<double, 3> j = {g, dg * (p.s[i] - b[2]), -dg * b[1]};
      const double r = f - p.y[i];
      for (int a = 0; a < 3; ++a) {
        jtr[a] -= p.w[i] * j[a] * r;
        for (int c = 0; c < 3; ++c) jtj[a][c] += p.w[i] * j[a] * j[c];
      }
    }
    // Damping grows until a step lowers the residual.
    bool stepped = false;
    while (lambda < 1e20) {
      auto damped = jtj;
      for (int a = 0; a < 3; ++a) damped[a][a] += lambda * jtj[a][a];
      const auto delta = Solve3(damped, jtr);
      if (delta) {
        const std::array<double, 3> trial = {b[0] + (*delta)[0],
                                             b[1] + (*delta)[1],
                                             b[2] + (*delta)[2]};
        const double trial_residual = Residual(p, trial);
        if (std::isfinite(trial_residual) && trial_residual < residual) {
          const double change = residual - trial_residual;
          b = trial;
          converged = change <= 1e-10 * residual ||
                      trial_residual <= 1e-30 * scale;
          residual = trial_residual;
          lambda = std::max(lambda / 10.0, 1e-12);
          stepped = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      // No descent direction left at working precision.
      converged = true;
    }
  }

  fit.b1 = b[0];
  fit.b2 = b[1];
  fit.b3 = b[2];
  fit.converged = converged;
  fit.iterations = iteration;
  fit.residual = residual;
  return fit;
}

double Pearson(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n == 0 || y.size() != n) return 0.0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> MidRanks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double Spearman(std::span<const double> x, std::span<const double> y) {
  const auto rx = MidRanks(x);
  const auto ry = MidRanks(y);
  return Pearson(rx, ry);
}

CorrelationStats ComputeStats(std::span<const EvalRecord> records,
                              const LogisticFit& fit) {
  if (records.size() < 2) {
    throw DataError("statistics need at least 2 records");
  }
  const std::size_t n = records.size();
  std::vector<double> scores(n), dmos(n), predicted(n), residual(n);
  for (std::size_t i = 0; i < n; ++i) {
    scores[i] = records[i].metric_score;
    dmos[i] = records[i].dmos;
    predicted[i] = fit.predict(scores[i]);
    residual[i] = predicted[i] - dmos[i];
  }

  CorrelationStats stats;
  stats.n = n;
  stats.lcc = Pearson(predicted, dmos);
  stats.srocc = Spearman(scores, dmos);
  double sq = 0.0;
  for (double r : residual) sq += r * r;
  stats.rmse = std::sqrt(sq / n);

  const double mean_r = std::accumulate(residual.begin(), residual.end(), 0.0) / n;
  double var_r = 0.0;
  for (double r : residual) var_r += (r - mean_r) * (r - mean_r);
  const double residual_std = std::sqrt(var_r / static_cast<double>(n - 1));

  std::size_t outliers = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double threshold = 2.0 * records[i].dmos_std;
    if (records[i].dmos_std == 0.0) {
      threshold = 2.0 * residual_std;
      stats.outlier_threshold_substituted = true;
    }
    if (std::abs(residual[i]) > threshold) ++outliers;
  }
  stats.outlier_ratio = static_cast<double>(outliers) / n;
  return stats;
}

}  // namespace pvm
