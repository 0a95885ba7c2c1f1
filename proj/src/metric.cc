#include "pvm/metric.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "pvm/error.h"
#include "pvm/parallel.h"

namespace pvm {
namespace {

std::string Trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::string FormatExact(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void RequireSameShape(const auto& a, const auto& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DataError(std::string(what) + ": dimension mismatch (" +
                    std::to_string(a.width()) + "x" +
                    std::to_string(a.height()) + " vs " +
                    std::to_string(b.width()) + "x" +
                    std::to_string(b.height()) + ")");
  }
}

}  // namespace

Mode ParseMode(std::string_view text) {
  if (text == "pvm" || text == "PVM") return Mode::kPvm;
  if (text == "pim" || text == "PIM") return Mode::kPim;
  throw UsageError("unknown mode '" + std::string(text) +
                   "' (expected pvm or pim)");
}

std::string_view ModeName(Mode mode) {
  return mode == Mode::kPvm ? "pvm" : "pim";
}

void MetricParams::validate() const {
  for (double v : {rho1, rho2, beta1, beta2, chi, blur_floor, qbar_floor}) {
    if (!std::isfinite(v)) throw UsageError("metric parameters must be finite");
  }
  if (rho1 < 0 || rho2 < 0) throw UsageError("rho1 and rho2 must be >= 0");
  if (beta1 <= 0 || beta2 <= 0 || chi <= 0) {
    throw UsageError("beta1, beta2 and chi must be > 0");
  }
  if (blur_floor <= 0 || qbar_floor <= 0) {
    throw UsageError("numerical floors must be > 0");
  }
}

MetricParams ParseParams(std::istream& in, const std::string& origin) {
  MetricParams params;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const std::string text = Trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    const std::string where = origin + ":" + std::to_string(line_no);
    if (eq == std::string::npos) {
      throw UsageError(where + ": expected key=value");
    }
    const std::string key = Trim(std::string_view(text).substr(0, eq));
    const std::string value = Trim(std::string_view(text).substr(eq + 1));
    auto number = [&]() {
      try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
      } catch (const std::exception&) {
        throw UsageError(where + ": '" + key + "' is not a number");
      }
    };
    if (key == "rho1") params.rho1 = number();
    else if (key == "rho2") params.rho2 = number();
    else if (key == "beta1") params.beta1 = number();
    else if (key == "beta2") params.beta2 = number();
    else if (key == "chi") params.chi = number();
    else if (key == "blur_floor") params.blur_floor = number();
    else if (key == "qbar_floor") params.qbar_floor = number();
    else if (key == "mode") params.mode = ParseMode(value);
    else if (key == "provenance") {
      if (value != "calibrated" && value != "placeholder") {
        throw UsageError(where + ": provenance must be calibrated or placeholder");
      }
      params.calibrated = value == "calibrated";
    } else if (key == "achieved_srocc" || key == "initial_srocc" ||
               key == "evaluations" || key == "note") {
      // Informational, written by calibrate.
    } else {
      throw UsageError(where + ": unknown key '" + key + "'");
    }
  }
  params.validate();
  return params;
}

MetricParams LoadParams(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open params file '" + path.string() + "'");
  return ParseParams(in, path.string());
}

void WriteParams(std::ostream& out, const MetricParams& params,
                 const std::map<std::string, std::string>& extra) {
  out << "rho1=" << FormatExact(params.rho1) << '\n'
      << "rho2=" << FormatExact(params.rho2) << '\n'
      << "beta1=" << FormatExact(params.beta1) << '\n'
      << "beta2=" << FormatExact(params.beta2) << '\n'
      << "chi=" << FormatExact(params.chi) << '\n'
      << "blur_floor=" << FormatExact(params.blur_floor) << '\n'
      << "qbar_floor=" << FormatExact(params.qbar_floor) << '\n'
      << "mode=" << ModeName(params.mode) << '\n'
      << "provenance=" << (params.calibrated ? "calibrated" : "placeholder")
      << '\n';
  for (const auto& [key, value] : extra) out << key << '=' << value << '\n';
}

MaskMap SpatialMask(const SubbandSet& original) {
  const auto magnitudes = Magnitudes(original);
  RealPlane peak(original.width(), original.height(), 0.0);
  auto dst = peak.samples();
  for (const auto& band : magnitudes) {
    const auto src = band.samples();
    for (std::size_t k = 0; k < src.size(); ++k) {
      dst[k] = std::max(dst[k], src[k]);
    }
  }
  return UpsampleReplicate(peak, original.source_width,
                           original.source_height);
}

MaskMap SpatialMask(const LumaFrame& original, const FilterBank& bank) {
  return SpatialMask(ForwardLevel1(original, bank));
}

MaskMap CombineMasks(const MaskMap& spatial, const MaskMap* temporal,
                     const MetricParams& params) {
  MaskMap out(spatial.width(), spatial.height());
  auto dst = out.samples();
  const auto ms = spatial.samples();
  if (params.mode == Mode::kPvm && temporal != nullptr) {
    RequireSameShape(spatial, *temporal, "combine_masks");
    const auto mt = temporal->samples();
    for (std::size_t k = 0; k < ms.size(); ++k) {
      dst[k] = std::max(params.rho1 * ms[k], params.rho2 * mt[k]);
    }
  } else {
    for (std::size_t k = 0; k < ms.size(); ++k) dst[k] = params.rho1 * ms[k];
  }
  return out;
}

MappedMean NoticeableDistortion(const LumaFrame& original,
                                const LumaFrame& distorted,
                                const MaskMap& mask) {
  RequireSameShape(original, distorted, "noticeable_distortion");
  RequireSameShape(original, mask, "noticeable_distortion");
  MappedMean out{RealPlane(original.width(), original.height()), 0.0};
  const auto io = original.samples();
  const auto id = distorted.samples();
  const auto m = mask.samples();
  auto nd = out.map.samples();
  double sum = 0.0;
  for (std::size_t k = 0; k < io.size(); ++k) {
    const double ad = std::abs(static_cast<double>(io[k]) - id[k]);
    nd[k] = std::max(0.0, ad - m[k]);
    sum += nd[k] * nd[k];
  }
  out.mean = io.empty() ? 0.0 : sum / static_cast<double>(io.size());
  return out;
}

MappedMean Blurring(const SubbandSet& original, const SubbandSet& distorted) {
  if (original.width() != distorted.width() ||
      original.height() != distorted.height() ||
      original.source_width != distorted.source_width ||
      original.source_height != distorted.source_height) {
    throw DataError("blurring: subband dimension mismatch");
  }
  RealPlane loss(original.width(), original.height(), 0.0);
  auto dst = loss.samples();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    double sum_o = 0.0;
    double sum_d = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      sum_o += std::abs(original.bands[i].samples()[k]);
      sum_d += std::abs(distorted.bands[i].samples()[k]);
    }
    dst[k] = std::max(0.0, sum_o - sum_d);
  }
  MappedMean out{UpsampleReplicate(loss, original.source_width,
                                   original.source_height),
                 0.0};
  double sum = 0.0;
  for (double v : out.map.samples()) sum += v;
  out.mean = out.map.empty() ? 0.0 : sum / static_cast<double>(out.map.size());
  return out;
}

FrameScore PoolFrame(double d, double b, const MetricParams& params) {
  FrameScore score;
  score.d = d;
  score.b = b;
  if (d <= 0.0) {
    score.alpha = 1.0;
    score.q = 0.0;
    return score;
  }
  score.alpha = 1.0 / (1.0 + params.beta1 * std::pow(d, params.beta2));
  const double artefact = params.chi * std::max(b, params.blur_floor);
  score.q = std::pow(d, score.alpha) * std::pow(artefact, 1.0 - score.alpha);
  return score;
}

double DecibelIndex(double q_bar, const MetricParams& params) {
  return 10.0 * std::log10(kPeakSquared / std::max(q_bar, params.qbar_floor));
}

void CheckMatched(const FrameSource& ref, const FrameSource& dist) {
  if (ref.frame_count() != dist.frame_count()) {
    throw DataError("frame count mismatch: reference has " +
                    std::to_string(ref.frame_count()) + ", distorted has " +
                    std::to_string(dist.frame_count()));
  }
  if (ref.width() != dist.width() || ref.height() != dist.height()) {
    throw DataError("dimension mismatch between reference and distorted");
  }
  if (ref.frame_count() == 0) throw DataError("sequences are empty");
}

FrameMeasures MeasureFrame(const FrameSource& ref, const FrameSource& dist,
                           std::size_t t, const MetricParams& params,
                           const ScoreOptions& options) {
  const LumaFrame original = Crop(ref.read_luma(t), options.crop_margin);
  const LumaFrame distorted = Crop(dist.read_luma(t), options.crop_margin);
  RequireSameShape(original, distorted, "score");

  const SubbandSet original_sb = ForwardLevel1(original, options.bank);
  const SubbandSet distorted_sb = ForwardLevel1(distorted, options.bank);
  const MaskMap spatial = SpatialMask(original_sb);

  FrameMeasures out;
  MaskMap mask;
  if (params.mode == Mode::kPvm && t > 0) {
    const LumaFrame previous =
        Crop(ref.read_luma(t - 1), options.crop_margin);
    MotionField field =
        EstimateMotion(original, previous, options.search_range);
    const MaskMap temporal = TemporalMask(field);
    mask = CombineMasks(spatial, &temporal, params);
    out.temporal_mask = true;
    if (options.keep_motion) out.motion = std::move(field);
  } else {
    mask = CombineMasks(spatial, nullptr, params);
  }

  out.d = NoticeableDistortion(original, distorted, mask).mean;
  out.b = Blurring(original_sb, distorted_sb).mean;
  out.identical = original == distorted;
  return out;
}

std::vector<FrameMeasures> MeasureSequence(const FrameSource& ref,
                                           const FrameSource& dist,
                                           const MetricParams& params,
                                           const ScoreOptions& options) {
  params.validate();
  CheckMatched(ref, dist);
  std::vector<FrameMeasures> measures(ref.frame_count());
  ParallelFor(measures.size(), options.threads, [&](std::size_t t) {
    measures[t] = MeasureFrame(ref, dist, t, params, options);
  });
  return measures;
}

SequenceScore PoolSequence(std::vector<FrameMeasures> measures,
                           const MetricParams& params) {
  SequenceScore out;
  out.mode = params.mode;
  out.window_frames = params.mode == Mode::kPvm ? 2 : 1;
  out.identical = true;
  double sum = 0.0;
  for (auto& m : measures) {
    FrameScore score = PoolFrame(m.d, m.b, params);
    score.temporal_mask = m.temporal_mask;
    if (!std::isfinite(score.q)) {
      throw NumericalError("non-finite frame quality index");
    }
    sum += score.q;
    out.identical = out.identical && m.identical;
    out.frames.push_back(score);
    out.motion.push_back(std::move(m.motion));
  }
  if (out.frames.empty()) throw DataError("no frames to pool");
  out.q_bar = sum / static_cast<double>(out.frames.size());
  out.at_ceiling = out.q_bar < params.qbar_floor;
  out.q_db = DecibelIndex(out.q_bar, params);
  return out;
}

SequenceScore ScoreSequence(const FrameSource& ref, const FrameSource& dist,
                            const MetricParams& params,
                            const ScoreOptions& options) {
  return PoolSequence(MeasureSequence(ref, dist, params, options), params);
}

PsnrResult Psnr(const FrameSource& ref, const FrameSource& dist,
                int crop_margin) {
  CheckMatched(ref, dist);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < ref.frame_count(); ++t) {
    const LumaFrame a = Crop(ref.read_luma(t), crop_margin);
    const LumaFrame b = Crop(dist.read_luma(t), crop_margin);
    const auto sa = a.samples();
    const auto sb = b.samples();
    for (std::size_t k = 0; k < sa.size(); ++k) {
      const double e = static_cast<double>(sa[k]) - sb[k];
      sum += e * e;
    }
    count += sa.size();
  }
  PsnrResult out;
  out.mse = sum / static_cast<double>(count);
  if (out.mse == 0.0) {
    out.identical = true;
    out.db = kPsnrCeilingDb;
  } else {
    out.db = 10.0 * std::log10(kPeakSquared / out.mse);
  }
  return out;
}

}  // namespace pvm
