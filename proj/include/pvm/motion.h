#ifndef PVM_MOTION_H_
#define PVM_MOTION_H_

#include <ostream>

#include "pvm/plane.h"

namespace pvm {

inline constexpr int kBlockSize = 8;
inline constexpr int kDefaultSearchRange = 16;

// Integer-pel displacement of a block's content from the reference frame to
// the current frame: cur(x, y) ~ ref(x - u, y - v).
struct MotionVector {
  int u = 0;
  int v = 0;

  friend bool operator==(const MotionVector&, const MotionVector&) = default;
};

struct MotionField {
  int block_size = kBlockSize;
  int search_range = kDefaultSearchRange;
  int frame_width = 0;
  int frame_height = 0;
  Plane<MotionVector> vectors;  // ceil(W/8) x ceil(H/8)
};

// Exhaustive SAD block matching over [-range, range]^2. Candidates that
// would read outside the reference frame are skipped. Ties go to the
// smallest |u|+|v|, then smallest v, then smallest u.
MotionField EstimateMotion(const LumaFrame& cur, const LumaFrame& ref,
                           int search_range = kDefaultSearchRange);

// Block-level |SD_x| + |SD_y| from three-point second differences of the
// vector field, replicated to pixel resolution. Border blocks are zero.
MaskMap TemporalMask(const MotionField& field);

// CSV rows: frame,block_row,block_col,u,v
void WriteMotionCsv(std::ostream& out, int frame, const MotionField& field);

}  // namespace pvm

#endif  // PVM_MOTION_H_
