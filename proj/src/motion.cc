#include "pvm/motion.h"

#include <cstdlib>
#include <limits>
#include <string>

#include "pvm/error.h"

namespace pvm {
namespace {

bool Precedes(const MotionVector& a, const MotionVector& b) {
  const int la = std::abs(a.u) + std::abs(a.v);
  const int lb = std::abs(b.u) + std::abs(b.v);
  if (la != lb) return la < lb;
  if (a.v != b.v) return a.v < b.v;
  return a.u < b.u;
}

}  // namespace

MotionField EstimateMotion(const LumaFrame& cur, const LumaFrame& ref,
                           int search_range) {
  if (!cur.same_shape(ref)) {
    throw DataError("motion estimation needs frames of equal size");
  }
  if (cur.width() < kBlockSize || cur.height() < kBlockSize) {
    throw DataError("frame smaller than one " + std::to_string(kBlockSize) +
                    "x" + std::to_string(kBlockSize) + " block");
  }
  if (search_range < 0) throw UsageError("search range must be >= 0");

  MotionField field;
  field.search_range = search_range;
  field.frame_width = cur.width();
  field.frame_height = cur.height();
  const int cols = (cur.width() + kBlockSize - 1) / kBlockSize;
  const int rows = (cur.height() + kBlockSize - 1) / kBlockSize;
  field.vectors = Plane<MotionVector>(cols, rows);

  for (int by = 0; by < rows; ++by) {
    for (int bx = 0; bx < cols; ++bx) {
      const int x0 = bx * kBlockSize;
      const int y0 = by * kBlockSize;
      const int bw = std::min(kBlockSize, cur.width() - x0);
      const int bh = std::min(kBlockSize, cur.height() - y0);

      long best_sad = std::numeric_limits<long>::max();
      MotionVector best;
      for (int v = -search_range; v <= search_range; ++v) {
        const int ry = y0 - v;
        if (ry < 0 || ry + bh > ref.height()) continue;
        for (int u = -search_range; u <= search_range; ++u) {
          const int rx = x0 - u;
          if (rx < 0 || rx + bw > ref.width()) continue;
          long sad = 0;
          for (int y = 0; y < bh && sad <= best_sad; ++y) {
            const auto c = cur.row(y0 + y).subspan(x0, bw);
            const auto r = ref.row(ry + y).subspan(rx, bw);
            for (int x = 0; x < bw; ++x) sad += std::abs(c[x] - r[x]);
          }
          const MotionVector candidate{u, v};
          if (sad < best_sad ||
              (sad == best_sad && Precedes(candidate, best))) {
            best_sad = sad;
            best = candidate;
          }
        }
      }
      field.vectors.at(bx, by) = best;
    }
  }
  return field;
}

MaskMap TemporalMask(const MotionField& field) {
  const auto& mv = field.vectors;
  MaskMap mask(field.frame_width, field.frame_height, 0.0);
  for (int by = 1; by + 1 < mv.height(); ++by) {
    for (int bx = 1; bx + 1 < mv.width(); ++bx) {
      const MotionVector c = mv.at(bx, by);
      const MotionVector l = mv.at(bx - 1, by);
      const MotionVector r = mv.at(bx + 1, by);
      const MotionVector t = mv.at(bx, by - 1);
      const MotionVector b = mv.at(bx, by + 1);
      const int sd_x = std::abs(l.u - 2 * c.u + r.u) +
                       std::abs(l.v - 2 * c.v + r.v);
      const int sd_y = std::abs(t.u - 2 * c.u + b.u) +
                       std::abs(t.v - 2 * c.v + b.v);
      const double value = sd_x + sd_y;
      if (value == 0.0) continue;
      const int x_end = std::min((bx + 1) * field.block_size, mask.width());
      const int y_end = std::min((by + 1) * field.block_size, mask.height());
      for (int y = by * field.block_size; y < y_end; ++y) {
        for (int x = bx * field.block_size; x < x_end; ++x) {
          mask.at(x, y) = value;
        }
      }
    }
  }
  return mask;
}

void WriteMotionCsv(std::ostream& out, int frame, const MotionField& field) {
  const auto& mv = field.vectors;
  for (int by = 0; by < mv.height(); ++by) {
    for (int bx = 0; bx < mv.width(); ++bx) {
      const MotionVector v = mv.at(bx, by);
      out << frame << ',' << by << ',' << bx << ',' << v.u << ',' << v.v
          << '\n';
    }
  }
}

}  // namespace pvm
