#ifndef PVM_DTCWT_H_
#define PVM_DTCWT_H_

#include <array>
#include <complex>
#include <filesystem>
#include <vector>

#include "pvm/plane.h"

namespace pvm {

using ComplexPlane = Plane<std::complex<double>>;

// Analysis filters for one tree of the level-1 dual-tree transform. Taps are
// applied centred on index (size - 1) / 2; `phase` selects which polyphase
// component (0 = even samples, 1 = odd samples) the tree keeps after
// filtering.
struct FilterTree {
  std::vector<double> lowpass;
  std::vector<double> highpass;
  int phase = 0;
};

struct FilterBank {
  FilterTree a;
  FilterTree b;

  // Kingsbury's near-symmetric (5,7)-tap biorthogonal pair, shared by both
  // trees with a one-sample offset between them.
  static FilterBank NearSymmetricA();

  // Offset between the trees, in units of decimated output samples.
  // 0.5 for a proper dual tree.
  double tree_delay_difference() const;

  std::size_t max_taps() const;

  // Throws a usage error if taps are empty or non-finite, or if the trees
  // are not half a sample apart (to 1e-6).
  void validate() const;
};

// Reads a tap-list file: `[a_lowpass]`, `[a_highpass]`, `[b_lowpass]`,
// `[b_highpass]`, `[a_phase]`, `[b_phase]` sections, one number per line,
// `#` comments. Missing b-tree taps default to the a-tree taps.
FilterBank LoadFilterBank(const std::filesystem::path& path);

// Orientation of each highpass subband, in degrees.
inline constexpr std::array<int, 6> kSubbandAngles = {15, 45, 75, -75, -45, -15};

// Level-1 decomposition. All grids are ceil(H/2) x ceil(W/2).
struct SubbandSet {
  std::array<ComplexPlane, 6> bands;
  RealPlane lowpass;
  int source_width = 0;
  int source_height = 0;

  int width() const { return lowpass.width(); }
  int height() const { return lowpass.height(); }
};

SubbandSet ForwardLevel1(const RealPlane& image, const FilterBank& bank);
SubbandSet ForwardLevel1(const LumaFrame& frame, const FilterBank& bank);

std::array<RealPlane, 6> Magnitudes(const SubbandSet& subbands);

// Replicates each half-resolution value over its 2x2 pixel support. Odd
// targets drop the last replicated row/column.
RealPlane UpsampleReplicate(const RealPlane& grid, int width, int height);

RealPlane ToReal(const LumaFrame& frame);

}  // namespace pvm

#endif  // PVM_DTCWT_H_
