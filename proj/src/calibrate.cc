#include "pvm/calibrate.h"

#include <cmath>
#include <map>
#include <optional>
#include <utility>

#include "pvm/error.h"
#include "pvm/eval.h"
#include "pvm/parallel.h"

namespace pvm {
namespace {

class Objective {
 public:
  Objective(const std::vector<CalibrationClip>& clips,
            const CalibrationOptions& options)
      : clips_(clips), options_(options) {
    for (const auto& clip : clips_) dmos_.push_back(clip.dmos);
  }

  // nullopt when any clip produces a non-finite index.
  std::optional<double> operator()(const MetricParams& params) {
    ++evaluations_;
    const auto& measures = Measures(params);
    std::vector<double> q_db;
    for (const auto& clip_measures : measures) {
      SequenceScore score;
      try {
        score = PoolSequence(clip_measures, params);
      } catch (const Error&) {
        return std::nullopt;
      }
      if (!std::isfinite(score.q_db)) return std::nullopt;
      q_db.push_back(score.q_db);
    }
    const double srocc = std::abs(Spearman(q_db, dmos_));
    if (!std::isfinite(srocc)) return std::nullopt;
    return srocc;
  }

  int evaluations() const { return evaluations_; }
  int rescored() const { return static_cast<int>(cache_.size()); }

 private:
  using Key = std::pair<double, double>;

  const std::vector<std::vector<FrameMeasures>>& Measures(
      const MetricParams& params) {
    const Key key{params.rho1, params.rho2};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    std::vector<std::vector<FrameMeasures>> measures(clips_.size());
    ScoreOptions per_clip = options_.score;
    per_clip.threads = 1;
    per_clip.keep_motion = false;
    ParallelFor(clips_.size(), options_.threads, [&](std::size_t i) {
      measures[i] =
          MeasureSequence(*clips_[i].ref, *clips_[i].dist, params, per_clip);
    });
    return cache_.emplace(key, std::move(measures)).first->second;
  }

  const std::vector<CalibrationClip>& clips_;
  const CalibrationOptions& options_;
  std::vector<double> dmos_;
  std::map<Key, std::vector<std::vector<FrameMeasures>>> cache_;
  int evaluations_ = 0;
};

}  // namespace

CalibrationResult Calibrate(const std::vector<CalibrationClip>& clips,
                            const MetricParams& initial,
                            const CalibrationOptions& options) {
  if (clips.size() < 2) {
    throw DataError("insufficient data: calibration needs at least 2 clips");
  }
  if (options.budget < 1) throw UsageError("calibration budget must be >= 1");
  if (options.grid_points < 2) throw UsageError("grid needs >= 2 points");
  initial.validate();
  auto log = [&](const std::string& message) {
    if (options.log) options.log(message);
  };

  Objective objective(clips, options);
  CalibrationResult result;
  result.params = initial;
  const auto start = objective(initial);
  if (!start) throw NumericalError("metric is non-finite at the initial parameters");
  result.initial_srocc = *start;
  double best = *start;

  std::vector<double MetricParams::*> axes = {&MetricParams::rho1};
  if (initial.mode == Mode::kPvm) axes.push_back(&MetricParams::rho2);
  axes.insert(axes.end(),
              {&MetricParams::beta1, &MetricParams::beta2, &MetricParams::chi});

  double span = options.initial_span;
  int stale_sweeps = 0;
  bool exhausted = false;
  while (!exhausted && best < 1.0 && stale_sweeps < 2) {
    const double sweep_start = best;
    for (auto axis : axes) {
      const double centre =
          result.params.*axis > 0.0 ? result.params.*axis : 1e-3;
      for (int k = 0; k < options.grid_points && !exhausted; ++k) {
        const double exponent =
            2.0 * k / (options.grid_points - 1) - 1.0;
        const double value = centre * std::pow(span, exponent);
        if (value == result.params.*axis) continue;
        if (objective.evaluations() >= options.budget) {
          exhausted = true;
          break;
        }
        MetricParams candidate = result.params;
        candidate.*axis = value;
        const auto score = objective(candidate);
        if (!score) {
          ++result.skipped;
          log("skipped non-finite parameter point");
          continue;
        }
        if (*score > best) {
          best = *score;
          result.params = candidate;
        }
      }
    }
    const double gain = best - sweep_start;
    log("sweep span=" + std::to_string(span) + " srocc=" + std::to_string(best));
    if (gain < options.min_gain) {
      ++stale_sweeps;
      span = std::sqrt(span);
    } else {
      stale_sweeps = 0;
    }
  }

  result.params.calibrated = true;
  result.final_srocc = best;
  result.evaluations = objective.evaluations();
  result.rescored = objective.rescored();
  return result;
}

}  // namespace pvm
