#include <algorithm>
#include <cstdio>
#include <sstream>

#include "pvm/error.h"
#include "pvm/eval.h"

namespace pvm {
namespace {

using nlohmann::json;

json FitJson(const LogisticFit& fit) {
  return {{"b1", fit.b1},
          {"b2", fit.b2},
          {"b3", fit.b3},
          {"converged", fit.converged},
          {"degenerate", fit.degenerate},
          {"iterations", fit.iterations},
          {"residual", fit.residual}};
}

json StatsJson(const CorrelationStats& s) {
  return {{"n", s.n},
          {"lcc", s.lcc},
          {"srocc", s.srocc},
          {"outlier_ratio", s.outlier_ratio},
          {"rmse", s.rmse},
          {"outlier_threshold",
           s.outlier_threshold_substituted ? "residual_std" : "dmos_std"}};
}

bool CanFit(std::span<const EvalRecord> records) {
  if (records.size() < 4) return false;
  const auto [lo, hi] = std::minmax_element(
      records.begin(), records.end(),
      [](const auto& a, const auto& b) { return a.metric_score < b.metric_score; });
  return lo->metric_score < hi->metric_score;
}

std::string Number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

json BuildEvalReport(std::span<const EvalRecord> records,
                     std::string_view parameter_provenance) {
  const LogisticFit fit = FitLogistic(records);
  const CorrelationStats stats = ComputeStats(records, fit);

  json report;
  report["schema_version"] = kReportSchemaVersion;
  report["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  report["command"] = "evaluate";
  report["parameter_provenance"] = std::string(parameter_provenance);
  report["logistic"] = "b1 / (1 + exp(-b2 * (score - b3)))";
  report["aggregate"] = {{"fit", FitJson(fit)}, {"stats", StatsJson(stats)}};

  json groups = json::object();
  for (Group g : {Group::kCoding, Group::kCodingWithErrors,
                  Group::kCodingWithInterpolation, Group::kOther}) {
    std::vector<EvalRecord> subset;
    std::copy_if(records.begin(), records.end(), std::back_inserter(subset),
                 [g](const EvalRecord& r) { return r.group == g; });
    if (subset.empty()) continue;
    json block;
    if (subset.size() < 2) {
      block["n"] = subset.size();
      block["error"] = "fewer than 2 records";
    } else if (CanFit(subset)) {
      const LogisticFit group_fit = FitLogistic(subset);
      block["fit_source"] = "group";
      block["fit"] = FitJson(group_fit);
      block["stats"] = StatsJson(ComputeStats(subset, group_fit));
    } else {
      block["fit_source"] = "aggregate";
      block["fit"] = FitJson(fit);
      block["stats"] = StatsJson(ComputeStats(subset, fit));
    }
    groups[std::string(GroupName(g))] = std::move(block);
  }
  report["groups"] = std::move(groups);

  json rows = json::array();
  for (const auto& r : records) {
    rows.push_back({{"clip_id", r.clip_id},
                    {"group", std::string(GroupName(r.group))},
                    {"metric_score", r.metric_score},
                    {"dmos", r.dmos},
                    {"dmos_std", r.dmos_std},
                    {"predicted_dmos", fit.predict(r.metric_score)}});
  }
  report["records"] = std::move(rows);

  const auto [lo, hi] = std::minmax_element(
      records.begin(), records.end(),
      [](const auto& a, const auto& b) { return a.metric_score < b.metric_score; });
  json curve = json::array();
  for (int k = 0; k < kCurveSamples; ++k) {
    const double s = lo->metric_score + (hi->metric_score - lo->metric_score) *
                                            k / (kCurveSamples - 1);
    curve.push_back({{"score", s}, {"dmos", fit.predict(s)}});
  }
  report["curve"] = std::move(curve);
  return report;
}

std::string EvalReportCsv(const json& report) {
  std::ostringstream out;
  out << "block,n,lcc,srocc,outlier_ratio,rmse,b1,b2,b3,converged,fit_source\n";
  auto row = [&](const std::string& name, const json& block,
                 const std::string& source) {
    const auto& s = block.at("stats");
    const auto& f = block.at("fit");
    out << name << ',' << s.at("n").get<std::size_t>() << ','
        << Number(s.at("lcc").get<double>()) << ','
        << Number(s.at("srocc").get<double>()) << ','
        << Number(s.at("outlier_ratio").get<double>()) << ','
        << Number(s.at("rmse").get<double>()) << ','
        << Number(f.at("b1").get<double>()) << ','
        << Number(f.at("b2").get<double>()) << ','
        << Number(f.at("b3").get<double>()) << ','
        << (f.at("converged").get<bool>() ? 1 : 0) << ',' << source << '\n';
  };
  row("aggregate", report.at("aggregate"), "aggregate");
  for (const auto& [name, block] : report.at("groups").items()) {
    if (block.contains("error")) continue;
    row(name, block, block.at("fit_source").get<std::string>());
  }
  return out.str();
}

}  // namespace pvm
