#ifndef PVM_CALIBRATE_H_
#define PVM_CALIBRATE_H_

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pvm/metric.h"
#include "pvm/video_io.h"

namespace pvm {

struct CalibrationClip {
  std::string id;
  std::shared_ptr<const FrameSource> ref;
  std::shared_ptr<const FrameSource> dist;
  double dmos = 0.0;
};

struct CalibrationOptions {
  // Maximum number of objective evaluations, including the starting point.
  int budget = 200;
  // Candidates per parameter sweep, spread log-uniformly over
  // [v / span, v * span].
  int grid_points = 7;
  double initial_span = 10.0;
  // A sweep gaining less than this refines the grid; two such sweeps in a
  // row end the search.
  double min_gain = 1e-4;
  // Clips are scored in parallel; per-clip frame loops stay serial.
  int threads = 1;
  ScoreOptions score;
  std::function<void(const std::string&)> log;
};

struct CalibrationResult {
  MetricParams params;
  double initial_srocc = 0.0;  // |SROCC(Q_dB, DMOS)| at p0
  double final_srocc = 0.0;
  int evaluations = 0;
  int skipped = 0;   // parameter points with non-finite outputs
  int rescored = 0;  // distinct (rho1, rho2) points scored from video
};

// Maximises |SROCC| between Q_dB and DMOS by coordinate descent over rho1,
// rho2 (PVM only), beta1, beta2 and chi. Per-frame (D, B) are cached per
// (rho1, rho2), so pooling-parameter moves never rescore video.
CalibrationResult Calibrate(const std::vector<CalibrationClip>& clips,
                            const MetricParams& initial,
                            const CalibrationOptions& options);

}  // namespace pvm

#endif  // PVM_CALIBRATE_H_
