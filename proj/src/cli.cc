#include "pvm/cli.h"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pvm/calibrate.h"
#include "pvm/error.h"
#include "pvm/eval.h"
#include "pvm/metric.h"
#include "pvm/parallel.h"
#include "pvm/video_io.h"

namespace pvm {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct VideoArgs {
  int width = 0;
  int height = 0;
  std::string format = "420";

  VideoSpec spec() const {
    VideoSpec s{width, height, ParseChromaFormat(format), 8};
    s.validate();
    return s;
  }
};

struct ScoreArgs {
  std::string ref;
  std::string dist;
  VideoArgs video;
  std::optional<std::string> mode;
  int crop = 20;
  std::string params;
  std::string out;
  std::string emit = "json";
  bool psnr = false;
  int threads = 0;
  std::string dump_motion;
  int search_range = kDefaultSearchRange;
  std::string filter_bank;
  bool no_timing = false;
};

struct EvaluateArgs {
  std::string records;
  std::string out;
  std::string emit = "json";
  std::string provenance = "unspecified";
};

struct CalibrateArgs {
  std::string manifest;
  VideoArgs video;
  std::optional<std::string> mode;
  int crop = 20;
  std::string params;
  std::string out;
  int budget = 200;
  int threads = 0;
  int search_range = kDefaultSearchRange;
  std::string filter_bank;
};

void AddVideoOptions(CLI::App* cmd, VideoArgs& video) {
  cmd->add_option("--width", video.width, "Frame width in pixels")->required();
  cmd->add_option("--height", video.height, "Frame height in pixels")->required();
  cmd->add_option("--format", video.format, "Chroma format: 420, 422, 444, luma")
      ->capture_default_str();
}

// Writes the whole payload or throws; partial files are removed.
void WriteOutput(const std::string& path, const std::string& payload,
                 std::ostream& out) {
  if (path.empty() || path == "-") {
    out << payload;
    out.flush();
    if (!out) throw DataError("failed writing report to stdout");
    return;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    file << payload;
    file.flush();
    if (!file) {
      std::remove(tmp.c_str());
      throw DataError("cannot write '" + path + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw DataError("cannot write '" + path + "'");
  }
}

MetricParams ResolveParams(const std::string& path,
                           const std::optional<std::string>& mode) {
  MetricParams params = path.empty() ? MetricParams{} : LoadParams(path);
  if (mode) params.mode = ParseMode(*mode);
  params.validate();
  return params;
}

json ParamsJson(const MetricParams& p) {
  return {{"rho1", p.rho1},       {"rho2", p.rho2},
          {"beta1", p.beta1},     {"beta2", p.beta2},
          {"chi", p.chi},         {"blur_floor", p.blur_floor},
          {"qbar_floor", p.qbar_floor}};
}

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int CmdScore(const ScoreArgs& args, std::ostream& out, std::ostream& err) {
  const VideoSpec spec = args.video.spec();
  const MetricParams params = ResolveParams(args.params, args.mode);
  if (args.emit != "json" && args.emit != "csv") {
    throw UsageError("--emit must be json or csv");
  }
  ScoreOptions options;
  options.crop_margin = args.crop;
  options.search_range = args.search_range;
  options.threads = ResolveThreads(args.threads);
  options.keep_motion = !args.dump_motion.empty();
  if (!args.filter_bank.empty()) options.bank = LoadFilterBank(args.filter_bank);

  const auto ref = OpenSequence(args.ref, spec);
  const auto dist = OpenSequence(args.dist, spec);
  CheckMatched(*ref, *dist);

  const auto t0 = Clock::now();
  const SequenceScore score = ScoreSequence(*ref, *dist, params, options);
  const double metric_seconds =
      std::chrono::duration<double>(Clock::now() - t0).count();

  std::optional<PsnrResult> psnr;
  double psnr_seconds = 0.0;
  if (args.psnr) {
    const auto t1 = Clock::now();
    psnr = Psnr(*ref, *dist, args.crop);
    psnr_seconds = std::chrono::duration<double>(Clock::now() - t1).count();
  }

  if (!args.dump_motion.empty()) {
    std::ostringstream csv;
    csv << "frame,block_row,block_col,u,v\n";
    for (std::size_t t = 0; t < score.motion.size(); ++t) {
      if (score.motion[t]) WriteMotionCsv(csv, static_cast<int>(t), *score.motion[t]);
    }
    WriteOutput(args.dump_motion, csv.str(), out);
  }

  const std::size_t n = score.frames.size();
  std::string payload;
  if (args.emit == "json") {
    json report;
    report["schema_version"] = kReportSchemaVersion;
    report["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
    report["command"] = "score";
    report["mode"] = std::string(ModeName(score.mode));
    report["window_frames"] = score.window_frames;
    report["parameter_provenance"] =
        params.calibrated ? "calibrated" : "placeholder";
    report["uncalibrated"] = !params.calibrated;
    report["params"] = ParamsJson(params);
    report["video"] = {{"width", spec.width},
                       {"height", spec.height},
                       {"format", std::string(ChromaFormatName(spec.chroma))},
                       {"frame_count", n},
                       {"crop_margin", args.crop},
                       {"search_range", args.search_range}};
    json frames = json::array();
    for (std::size_t t = 0; t < n; ++t) {
      const FrameScore& f = score.frames[t];
      frames.push_back({{"index", t},
                        {"D", f.d},
                        {"B", f.b},
                        {"alpha", f.alpha},
                        {"Q", f.q},
                        {"mask", f.temporal_mask ? "spatial+temporal" : "spatial"}});
    }
    report["frames"] = std::move(frames);
    report["q_bar"] = score.q_bar;
    report["q_db"] = score.q_db;
    report["identical"] = score.identical;
    report["at_ceiling"] = score.at_ceiling;
    if (psnr) {
      report["psnr"] = {{"db", psnr->db},
                        {"mse", psnr->mse},
                        {"identical", psnr->identical}};
    }
    if (!args.no_timing) {
      json timing = {{"metric_seconds", metric_seconds},
                     {"seconds_per_frame", metric_seconds / n},
                     {"threads", options.threads}};
      if (psnr) {
        timing["psnr_seconds"] = psnr_seconds;
        if (psnr_seconds > 0.0) {
          timing["relative_to_psnr"] = metric_seconds / psnr_seconds;
        }
      }
      report["timing"] = std::move(timing);
    }
    payload = report.dump(2) + "\n";
  } else {
    std::ostringstream csv;
    csv << "record,index,D,B,alpha,Q,mask,q_bar,q_db,identical,psnr_db\n";
    for (std::size_t t = 0; t < n; ++t) {
      const FrameScore& f = score.frames[t];
      csv << "frame," << t << ',' << Num(f.d) << ',' << Num(f.b) << ','
          << Num(f.alpha) << ',' << Num(f.q) << ','
          << (f.temporal_mask ? "spatial+temporal" : "spatial") << ",,,,\n";
    }
    csv << "sequence,,,,,,," << Num(score.q_bar) << ',' << Num(score.q_db)
        << ',' << (score.identical ? 1 : 0) << ','
        << (psnr ? Num(psnr->db) : std::string()) << '\n';
    payload = csv.str();
  }
  WriteOutput(args.out, payload, out);
  if (score.identical) err << "note: sequences are identical; Q_dB is the ceiling\n";
  return 0;
}

int CmdEvaluate(const EvaluateArgs& args, std::ostream& out) {
  if (args.emit != "json" && args.emit != "csv") {
    throw UsageError("--emit must be json or csv");
  }
  const auto records = LoadRecords(args.records);
  const json report = BuildEvalReport(records, args.provenance);
  WriteOutput(args.out,
              args.emit == "json" ? report.dump(2) + "\n" : EvalReportCsv(report),
              out);
  return 0;
}

std::vector<CalibrationClip> LoadManifest(const std::string& path,
                                          const VideoSpec& spec) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest '" + path + "'");
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::string line;
  if (!std::getline(in, line) || line.find("dmos") == std::string::npos) {
    throw DataError(path + ": missing header (need ref,dist,dmos)");
  }
  std::vector<CalibrationClip> clips;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(line);
    std::string ref, dist, dmos;
    std::getline(fields, ref, ',');
    std::getline(fields, dist, ',');
    std::getline(fields, dmos, ',');
    auto resolve = [&](std::string p) {
      while (!p.empty() && (p.back() == '\r' || p.back() == ' ')) p.pop_back();
      const std::filesystem::path fp(p);
      return fp.is_absolute() ? fp : base / fp;
    };
    CalibrationClip clip;
    clip.id = dist;
    try {
      clip.dmos = std::stod(dmos);
    } catch (const std::exception&) {
      throw DataError(path + " row " + std::to_string(row) + ": bad dmos");
    }
    if (!std::isfinite(clip.dmos)) {
      throw DataError(path + " row " + std::to_string(row) + ": bad dmos");
    }
    clip.ref = std::shared_ptr<const FrameSource>(OpenSequence(resolve(ref), spec));
    clip.dist = std::shared_ptr<const FrameSource>(OpenSequence(resolve(dist), spec));
    CheckMatched(*clip.ref, *clip.dist);
    clips.push_back(std::move(clip));
  }
  if (clips.size() < 2) {
    throw DataError("insufficient data: manifest lists " +
                    std::to_string(clips.size()) + " clip(s), need at least 2");
  }
  return clips;
}

int CmdCalibrate(const CalibrateArgs& args, std::ostream& out,
                 std::ostream& err) {
  const VideoSpec spec = args.video.spec();
  const MetricParams initial = ResolveParams(args.params, args.mode);
  const auto clips = LoadManifest(args.manifest, spec);

  CalibrationOptions options;
  options.budget = args.budget;
  options.threads = ResolveThreads(args.threads);
  options.score.crop_margin = args.crop;
  options.score.search_range = args.search_range;
  if (!args.filter_bank.empty()) {
    options.score.bank = LoadFilterBank(args.filter_bank);
  }
  options.log = [&err](const std::string& m) { err << "calibrate: " << m << '\n'; };
  const CalibrationResult result = Calibrate(clips, initial, options);

  std::ostringstream text;
  text << "# " << kToolName << ' ' << kToolVersion << " calibration over "
       << clips.size() << " clips\n";
  WriteParams(text, result.params,
              {{"initial_srocc", Num(result.initial_srocc)},
               {"achieved_srocc", Num(result.final_srocc)},
               {"evaluations", std::to_string(result.evaluations)}});
  WriteOutput(args.out, text.str(), out);
  return 0;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Perceptual video quality metrics (PVM / PIM) and evaluation"};
  app.require_subcommand(1);

  ScoreArgs score;
  auto* score_cmd = app.add_subcommand("score", "Score a distorted sequence");
  score_cmd->add_option("--ref", score.ref, "Reference YUV file")->required();
  score_cmd->add_option("--dist", score.dist, "Distorted YUV file")->required();
  AddVideoOptions(score_cmd, score.video);
  score_cmd->add_option("--mode", score.mode, "pvm or pim");
  score_cmd->add_option("--crop", score.crop, "Crop margin in pixels")
      ->capture_default_str();
  score_cmd->add_option("--params", score.params, "Params file (key=value)");
  score_cmd->add_option("--out", score.out, "Report path (default stdout)");
  score_cmd->add_option("--emit", score.emit, "json or csv")->capture_default_str();
  score_cmd->add_flag("--psnr", score.psnr, "Also report PSNR");
  score_cmd->add_option("--threads", score.threads, "Worker threads (0 = auto)");
  score_cmd->add_option("--dump-motion", score.dump_motion, "Write motion field CSV");
  score_cmd->add_option("--search-range", score.search_range,
                        "Motion search range in pixels")
      ->capture_default_str();
  score_cmd->add_option("--filter-bank", score.filter_bank, "Tap-list file");
  score_cmd->add_flag("--no-timing", score.no_timing,
                      "Omit wall-clock timing from the report");

  EvaluateArgs evaluate;
  auto* eval_cmd = app.add_subcommand("evaluate", "Fit logistic and report LCC/SROCC/OR/RMSE");
  eval_cmd->add_option("--records", evaluate.records, "Records CSV")->required();
  eval_cmd->add_option("--out", evaluate.out, "Report path (default stdout)");
  eval_cmd->add_option("--emit", evaluate.emit, "json or csv")->capture_default_str();
  eval_cmd->add_option("--provenance", evaluate.provenance,
                       "Provenance of the metric parameters behind the scores")
      ->capture_default_str();

  CalibrateArgs calibrate;
  auto* cal_cmd = app.add_subcommand("calibrate", "Fit metric parameters to DMOS");
  cal_cmd->add_option("--manifest", calibrate.manifest, "CSV: ref,dist,dmos")->required();
  AddVideoOptions(cal_cmd, calibrate.video);
  cal_cmd->add_option("--mode", calibrate.mode, "pvm or pim");
  cal_cmd->add_option("--crop", calibrate.crop, "Crop margin in pixels")
      ->capture_default_str();
  cal_cmd->add_option("--params", calibrate.params, "Starting params file");
  cal_cmd->add_option("--out", calibrate.out, "Output params file")->required();
  cal_cmd->add_option("--budget", calibrate.budget, "Objective evaluations")
      ->capture_default_str();
  cal_cmd->add_option("--threads", calibrate.threads, "Worker threads (0 = auto)");
  cal_cmd->add_option("--search-range", calibrate.search_range,
                      "Motion search range in pixels")
      ->capture_default_str();
  cal_cmd->add_option("--filter-bank", calibrate.filter_bank, "Tap-list file");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::kUsage);
  }

  try {
    if (score_cmd->parsed()) return CmdScore(score, out, err);
    if (eval_cmd->parsed()) return CmdEvaluate(evaluate, out);
    if (cal_cmd->parsed()) return CmdCalibrate(calibrate, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::kData);
  }
  return static_cast<int>(ErrorKind::kUsage);
}

}  // namespace pvm
