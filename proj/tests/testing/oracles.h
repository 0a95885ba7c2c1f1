#ifndef PVM_TESTING_ORACLES_H_
#define PVM_TESTING_ORACLES_H_

// Straightforward reference computations used to cross-check the library.
// They deliberately take different routes from the production code
// (no early exits, explicit enumeration, textbook formulas).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <tuple>
#include <vector>

#include "pvm/dtcwt.h"
#include "pvm/eval.h"
#include "pvm/metric.h"
#include "pvm/motion.h"

namespace pvm::testing {

// Enumerates every admissible candidate, sorts by (SAD, |u|+|v|, v, u).
inline Plane<MotionVector> OracleMotion(const LumaFrame& cur,
                                        const LumaFrame& ref, int range) {
  const int cols = (cur.width() + 7) / 8;
  const int rows = (cur.height() + 7) / 8;
  Plane<MotionVector> out(cols, rows);
  for (int by = 0; by < rows; ++by) {
    for (int bx = 0; bx < cols; ++bx) {
      std::vector<std::tuple<long, int, int, int>> candidates;
      for (int v = -range; v <= range; ++v) {
        for (int u = -range; u <= range; ++u) {
          bool inside = true;
          long sad = 0;
          for (int y = by * 8; y < std::min(by * 8 + 8, cur.height()); ++y) {
            for (int x = bx * 8; x < std::min(bx * 8 + 8, cur.width()); ++x) {
              const int rx = x - u;
              const int ry = y - v;
              if (rx < 0 || ry < 0 || rx >= ref.width() || ry >= ref.height()) {
                inside = false;
                continue;
              }
              sad += std::abs(int(cur.at(x, y)) - int(ref.at(rx, ry)));
            }
          }
          if (inside) candidates.emplace_back(sad, std::abs(u) + std::abs(v), v, u);
        }
      }
      const auto best = *std::min_element(candidates.begin(), candidates.end());
      out.at(bx, by) = MotionVector{std::get<3>(best), std::get<2>(best)};
    }
  }
  return out;
}

inline double OracleNoticeableDistortion(const LumaFrame& o, const LumaFrame& d,
                                         const MaskMap& m) {
  double sum = 0.0;
  for (int y = 0; y < o.height(); ++y) {
    for (int x = 0; x < o.width(); ++x) {
      double nd = std::fabs(double(o.at(x, y)) - double(d.at(x, y))) - m.at(x, y);
      if (nd < 0) nd = 0;
      sum += nd * nd;
    }
  }
  return sum / (double(o.width()) * o.height());
}

inline double OracleBlurring(const SubbandSet& o, const SubbandSet& d) {
  const int w = o.source_width;
  const int h = o.source_height;
  double sum = 0.0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double so = 0.0;
      double sd = 0.0;
      for (int i = 0; i < 6; ++i) {
        const auto a = o.bands[i].at(x / 2, y / 2);
        const auto b = d.bands[i].at(x / 2, y / 2);
        so += std::hypot(a.real(), a.imag());
        sd += std::hypot(b.real(), b.imag());
      }
      sum += std::max(0.0, so - sd);
    }
  }
  return sum / (double(w) * h);
}

inline MaskMap OracleSpatialMask(const SubbandSet& o) {
  MaskMap out(o.source_width, o.source_height);
  for (int y = 0; y < o.source_height; ++y) {
    for (int x = 0; x < o.source_width; ++x) {
      double best = 0.0;
      for (int i = 0; i < 6; ++i) {
        const auto c = o.bands[i].at(x / 2, y / 2);
        best = std::max(best, std::hypot(c.real(), c.imag()));
      }
      out.at(x, y) = best;
    }
  }
  return out;
}

struct OraclePooled {
  double alpha;
  double q;
};

// Evaluated in the log domain.
inline OraclePooled OraclePool(double d, double b, const MetricParams& p) {
  if (d == 0.0) return {1.0, 0.0};
  const double alpha = 1.0 / (1.0 + p.beta1 * std::exp(p.beta2 * std::log(d)));
  const double bb = b > p.blur_floor ? b : p.blur_floor;
  const double q = std::exp(alpha * std::log(d) + (1.0 - alpha) * std::log(p.chi * bb));
  return {alpha, q};
}

inline double OraclePsnr(const std::vector<LumaFrame>& a,
                         const std::vector<LumaFrame>& b) {
  double sum = 0.0;
  double count = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (int y = 0; y < a[t].height(); ++y) {
      for (int x = 0; x < a[t].width(); ++x) {
        const double e = double(a[t].at(x, y)) - double(b[t].at(x, y));
        sum += e * e;
        count += 1.0;
      }
    }
  }
  return 10.0 * std::log10(255.0 * 255.0 / (sum / count));
}

// rank = 1 + #smaller + (#equal - 1) / 2
inline std::vector<double> OracleMidRanks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double smaller = 0.0;
    double equal = 0.0;
    for (double w : v) {
      if (w < v[i]) smaller += 1.0;
      if (w == v[i]) equal += 1.0;
    }
    r[i] = 1.0 + smaller + (equal - 1.0) / 2.0;
  }
  return r;
}

// Single-pass textbook formula.
inline double OraclePearson(const std::vector<double>& x,
                            const std::vector<double>& y) {
  const double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) /
         std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

struct OracleStatsResult {
  double lcc, srocc, outlier_ratio, rmse;
};

inline OracleStatsResult OracleStats(const std::vector<EvalRecord>& records,
                                     const LogisticFit& fit) {
  std::vector<double> s, y, p;
  for (const auto& r : records) {
    s.push_back(r.metric_score);
    y.push_back(r.dmos);
    p.push_back(fit.b1 / (1.0 + std::exp(-fit.b2 * (r.metric_score - fit.b3))));
  }
  const double n = double(records.size());
  double sq = 0.0, mean_res = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sq += (p[i] - y[i]) * (p[i] - y[i]);
    mean_res += (p[i] - y[i]) / n;
  }
  double var = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    var += (p[i] - y[i] - mean_res) * (p[i] - y[i] - mean_res);
  }
  const double res_sd = std::sqrt(var / (n - 1));
  double outliers = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double thr = records[i].dmos_std > 0 ? 2 * records[i].dmos_std : 2 * res_sd;
    if (std::fabs(p[i] - y[i]) > thr) outliers += 1.0;
  }
  return {OraclePearson(p, y), OraclePearson(OracleMidRanks(s), OracleMidRanks(y)),
          outliers / n, std::sqrt(sq / n)};
}

}  // namespace pvm::testing

#endif  // PVM_TESTING_ORACLES_H_
