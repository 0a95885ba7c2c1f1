#ifndef PVM_METRIC_H_
#define PVM_METRIC_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pvm/dtcwt.h"
#include "pvm/motion.h"
#include "pvm/plane.h"
#include "pvm/video_io.h"

namespace pvm {

// PVM combines spatial and temporal masks; PIM uses the spatial mask only
// and needs nothing but the current frame.
enum class Mode { kPvm, kPim };

Mode ParseMode(std::string_view text);
std::string_view ModeName(Mode mode);

inline constexpr double kPeak = 255.0;
inline constexpr double kPeakSquared = kPeak * kPeak;

struct MetricParams {
  double rho1 = 1.0;
  double rho2 = 1.0;
  double beta1 = 0.1;
  double beta2 = 1.0;
  double chi = 1.0;
  // Stands in for B when a frame has noise but no blur, so Q stays driven
  // by D instead of collapsing to zero.
  double blur_floor = 1e-6;
  // Lower bound on the mean frame index; caps Q_dB at 100 dB.
  double qbar_floor = kPeakSquared * 1e-10;
  Mode mode = Mode::kPvm;
  // False for the shipped placeholder values.
  bool calibrated = false;

  void validate() const;
};

// Flat key=value text. Unknown keys are rejected; `#` starts a comment.
MetricParams LoadParams(const std::filesystem::path& path);
MetricParams ParseParams(std::istream& in, const std::string& origin);
// `extra` lines are appended verbatim as additional key=value pairs.
void WriteParams(std::ostream& out, const MetricParams& params,
                 const std::map<std::string, std::string>& extra = {});

// Per-pixel maximum of the six level-1 subband magnitudes of the original
// frame, at pixel resolution.
MaskMap SpatialMask(const SubbandSet& original);
MaskMap SpatialMask(const LumaFrame& original, const FilterBank& bank);

// max(rho1 * Ms, rho2 * Mt) in PVM mode with a temporal mask present,
// rho1 * Ms otherwise.
MaskMap CombineMasks(const MaskMap& spatial, const MaskMap* temporal,
                     const MetricParams& params);

struct MappedMean {
  RealPlane map;
  double mean = 0.0;
};

// map = max(0, |orig - dist| - mask), mean = average of map^2.
MappedMean NoticeableDistortion(const LumaFrame& original,
                                const LumaFrame& distorted,
                                const MaskMap& mask);

// Loss of summed highpass magnitude, clamped at zero, replicated to pixels
// and averaged.
MappedMean Blurring(const SubbandSet& original, const SubbandSet& distorted);

struct FrameScore {
  double d = 0.0;
  double b = 0.0;
  double alpha = 1.0;
  double q = 0.0;
  bool temporal_mask = false;
};

FrameScore PoolFrame(double d, double b, const MetricParams& params);

double DecibelIndex(double q_bar, const MetricParams& params);

// Everything about a frame that depends on the masks (rho1, rho2, mode) but
// not on the pooling parameters.
struct FrameMeasures {
  double d = 0.0;
  double b = 0.0;
  bool temporal_mask = false;
  bool identical = false;
  std::optional<MotionField> motion;
};

struct ScoreOptions {
  int crop_margin = 20;
  int search_range = kDefaultSearchRange;
  int threads = 1;
  bool keep_motion = false;
  FilterBank bank = FilterBank::NearSymmetricA();
};

struct SequenceScore {
  std::vector<FrameScore> frames;
  double q_bar = 0.0;
  double q_db = 0.0;
  Mode mode = Mode::kPvm;
  // Frames of each sequence read to score one frame.
  int window_frames = 1;
  // Every cropped distorted frame equals its reference.
  bool identical = false;
  // q_bar was raised to qbar_floor.
  bool at_ceiling = false;
  std::vector<std::optional<MotionField>> motion;
};

// Reads frame t of both sequences, plus frame t-1 of the reference in PVM
// mode when t > 0.
FrameMeasures MeasureFrame(const FrameSource& ref, const FrameSource& dist,
                           std::size_t t, const MetricParams& params,
                           const ScoreOptions& options);

std::vector<FrameMeasures> MeasureSequence(const FrameSource& ref,
                                           const FrameSource& dist,
                                           const MetricParams& params,
                                           const ScoreOptions& options);

SequenceScore PoolSequence(std::vector<FrameMeasures> measures,
                           const MetricParams& params);

SequenceScore ScoreSequence(const FrameSource& ref, const FrameSource& dist,
                            const MetricParams& params,
                            const ScoreOptions& options);

struct PsnrResult {
  double db = 0.0;
  double mse = 0.0;
  // MSE was zero; db holds the ceiling value.
  bool identical = false;
};

inline constexpr double kPsnrCeilingDb = 100.0;

PsnrResult Psnr(const FrameSource& ref, const FrameSource& dist,
                int crop_margin);

// Throws a data error unless both sequences have equal frame counts and
// dimensions.
void CheckMatched(const FrameSource& ref, const FrameSource& dist);

}  // namespace pvm

#endif  // PVM_METRIC_H_
