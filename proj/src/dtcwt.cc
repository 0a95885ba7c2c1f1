#include "pvm/dtcwt.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "pvm/error.h"

namespace pvm {
namespace {

// Half-sample symmetric extension: x[-1] = x[0], x[n] = x[n-1].
int Reflect(int index, int size) {
  const int period = 2 * size;
  index %= period;
  if (index < 0) index += period;
  return index < size ? index : period - 1 - index;
}

// Centroid of the taps relative to the centre tap. The lowpass uses the
// coefficient centroid; the highpass sums to zero, so its energy centroid
// is used instead.
double GroupDelay(const std::vector<double>& taps, bool energy) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const double w = energy ? taps[k] * taps[k] : taps[k];
    num += w * static_cast<double>(k);
    den += w;
  }
  const double centre = static_cast<double>((taps.size() - 1) / 2);
  return num / den - centre;
}

// Filters along columns (vertical direction) and keeps rows 2k + phase.
RealPlane FilterColumns(const RealPlane& in, const std::vector<double>& taps,
                        int phase) {
  const int out_h = in.height() / 2;
  const int centre = static_cast<int>((taps.size() - 1) / 2);
  RealPlane out(in.width(), out_h);
  for (int k = 0; k < out_h; ++k) {
    const int n = 2 * k + phase;
    auto dst = out.row(k);
    for (std::size_t t = 0; t < taps.size(); ++t) {
      const auto src = in.row(Reflect(n + static_cast<int>(t) - centre,
                                      in.height()));
      const double h = taps[t];
      for (int x = 0; x < in.width(); ++x) dst[x] += h * src[x];
    }
  }
  return out;
}

// Filters along rows (horizontal direction) and keeps columns 2l + phase.
RealPlane FilterRows(const RealPlane& in, const std::vector<double>& taps,
                     int phase) {
  const int out_w = in.width() / 2;
  const int centre = static_cast<int>((taps.size() - 1) / 2);
  RealPlane out(out_w, in.height());
  for (int y = 0; y < in.height(); ++y) {
    const auto src = in.row(y);
    auto dst = out.row(y);
    for (int l = 0; l < out_w; ++l) {
      const int n = 2 * l + phase;
      double acc = 0.0;
      for (std::size_t t = 0; t < taps.size(); ++t) {
        acc += taps[t] * src[Reflect(n + static_cast<int>(t) - centre,
                                     in.width())];
      }
      dst[l] = acc;
    }
  }
  return out;
}

// Pads odd dimensions by repeating the last row/column.
RealPlane PadToEven(const RealPlane& in) {
  const int w = in.width() + (in.width() & 1);
  const int h = in.height() + (in.height() & 1);
  if (w == in.width() && h == in.height()) return in;
  RealPlane out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto src = in.row(std::min(y, in.height() - 1));
    auto dst = out.row(y);
    for (int x = 0; x < w; ++x) dst[x] = src[std::min(x, in.width() - 1)];
  }
  return out;
}

enum Pass { kLow = 0, kHigh = 1 };

const std::vector<double>& Taps(const FilterTree& tree, Pass pass) {
  return pass == kLow ? tree.lowpass : tree.highpass;
}

// Combines the four tree outputs (vertical tree, horizontal tree) of one
// separable filter pair into the two complex subbands of opposite
// orientation.
//   a = (a, a)  b = (a, b)  c = (b, a)  d = (b, b)
//   p = (a + jb) / sqrt2, q = (d - jc) / sqrt2, bands = p - q, p + q
void QuadToComplex(const RealPlane& qa, const RealPlane& qb,
                   const RealPlane& qc, const RealPlane& qd,
                   ComplexPlane& minus, ComplexPlane& plus) {
  const double s = std::sqrt(0.5);
  minus = ComplexPlane(qa.width(), qa.height());
  plus = ComplexPlane(qa.width(), qa.height());
  const auto a = qa.samples();
  const auto b = qb.samples();
  const auto c = qc.samples();
  const auto d = qd.samples();
  auto m = minus.samples();
  auto p_out = plus.samples();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::complex<double> p(s * a[i], s * b[i]);
    const std::complex<double> q(s * d[i], -s * c[i]);
    m[i] = p - q;
    p_out[i] = p + q;
  }
}

}  // namespace

FilterBank FilterBank::NearSymmetricA() {
  const std::vector<double> h0 = {-0.05, 0.25, 0.6, 0.25, -0.05};
  const std::vector<double> h1 = {-3.0 / 280,  15.0 / 280, 73.0 / 280,
                                  -170.0 / 280, 73.0 / 280, 15.0 / 280,
                                  -3.0 / 280};
  return FilterBank{FilterTree{h0, h1, 0}, FilterTree{h0, h1, 1}};
}

double FilterBank::tree_delay_difference() const {
  const double lo = (b.phase + GroupDelay(b.lowpass, false)) -
                    (a.phase + GroupDelay(a.lowpass, false));
  return lo / 2.0;
}

std::size_t FilterBank::max_taps() const {
  return std::max({a.lowpass.size(), a.highpass.size(), b.lowpass.size(),
                   b.highpass.size()});
}

void FilterBank::validate() const {
  for (const FilterTree* tree : {&a, &b}) {
    for (const auto* taps : {&tree->lowpass, &tree->highpass}) {
      if (taps->empty()) throw UsageError("filter bank has an empty tap list");
      for (double t : *taps) {
        if (!std::isfinite(t)) {
          throw UsageError("filter bank has a non-finite tap");
        }
      }
    }
    if (tree->phase != 0 && tree->phase != 1) {
      throw UsageError("filter tree phase must be 0 or 1");
    }
  }
  const double lo = tree_delay_difference();
  const double hi = ((b.phase + GroupDelay(b.highpass, true)) -
                     (a.phase + GroupDelay(a.highpass, true))) /
                    2.0;
  if (std::abs(std::abs(lo) - 0.5) > 1e-6 ||
      std::abs(std::abs(hi) - 0.5) > 1e-6) {
    throw UsageError("filter trees are not half a sample apart (lowpass " +
                     std::to_string(lo) + ", highpass " + std::to_string(hi) +
                     ")");
  }
}

FilterBank LoadFilterBank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open filter bank '" + path.string() + "'");
  std::map<std::string, std::vector<double>> sections;
  std::string section;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    if (token.front() == '[' && token.back() == ']') {
      section = token.substr(1, token.size() - 2);
      sections[section];
      continue;
    }
    if (section.empty()) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) +
                       ": value outside a section");
    }
    try {
      std::size_t used = 0;
      const double value = std::stod(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      sections[section].push_back(value);
    } catch (const std::exception&) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) +
                       ": not a number '" + token + "'");
    }
  }
  auto take = [&](const std::string& name) {
    auto it = sections.find(name);
    return it == sections.end() ? std::vector<double>{} : it->second;
  };
  auto phase = [&](const std::string& name, int fallback) {
    const auto v = take(name);
    return v.empty() ? fallback : static_cast<int>(v.front());
  };
  FilterBank bank;
  bank.a = {take("a_lowpass"), take("a_highpass"), phase("a_phase", 0)};
  bank.b = {take("b_lowpass"), take("b_highpass"), phase("b_phase", 1)};
  if (bank.b.lowpass.empty()) bank.b.lowpass = bank.a.lowpass;
  if (bank.b.highpass.empty()) bank.b.highpass = bank.a.highpass;
  bank.validate();
  return bank;
}

SubbandSet ForwardLevel1(const RealPlane& image, const FilterBank& bank) {
  const auto support = static_cast<int>(bank.max_taps());
  if (image.width() < support || image.height() < support) {
    throw DataError("frame " + std::to_string(image.width()) + "x" +
                    std::to_string(image.height()) +
                    " is smaller than the filter support (" +
                    std::to_string(support) + " taps)");
  }
  const RealPlane padded = PadToEven(image);
  const std::array<const FilterTree*, 2> trees = {&bank.a, &bank.b};

  // columns[tree][pass]: vertical filtering with that tree's filter.
  RealPlane columns[2][2];
  for (int t = 0; t < 2; ++t) {
    for (Pass pass : {kLow, kHigh}) {
      columns[t][pass] =
          FilterColumns(padded, Taps(*trees[t], pass), trees[t]->phase);
    }
  }
  // quad[v][h] for vertical tree v and horizontal tree h.
  auto quad = [&](Pass vertical, Pass horizontal, int v, int h) {
    return FilterRows(columns[v][vertical], Taps(*trees[h], horizontal),
                      trees[h]->phase);
  };
  auto pair = [&](Pass vertical, Pass horizontal, ComplexPlane& minus,
                  ComplexPlane& plus) {
    QuadToComplex(quad(vertical, horizontal, 0, 0),
                  quad(vertical, horizontal, 0, 1),
                  quad(vertical, horizontal, 1, 0),
                  quad(vertical, horizontal, 1, 1), minus, plus);
  };

  SubbandSet out;
  out.source_width = image.width();
  out.source_height = image.height();
  // Vertical highpass + horizontal lowpass: near-horizontal structure.
  pair(kHigh, kLow, out.bands[0], out.bands[5]);
  // Both highpass: diagonals.
  pair(kHigh, kHigh, out.bands[1], out.bands[4]);
  // Vertical lowpass + horizontal highpass: near-vertical structure.
  pair(kLow, kHigh, out.bands[2], out.bands[3]);
  out.lowpass = quad(kLow, kLow, 0, 0);
  return out;
}

SubbandSet ForwardLevel1(const LumaFrame& frame, const FilterBank& bank) {
  return ForwardLevel1(ToReal(frame), bank);
}

std::array<RealPlane, 6> Magnitudes(const SubbandSet& subbands) {
  std::array<RealPlane, 6> out;
  for (std::size_t i = 0; i < 6; ++i) {
    const auto& band = subbands.bands[i];
    out[i] = RealPlane(band.width(), band.height());
    auto dst = out[i].samples();
    const auto src = band.samples();
    for (std::size_t k = 0; k < src.size(); ++k) dst[k] = std::abs(src[k]);
  }
  return out;
}

RealPlane UpsampleReplicate(const RealPlane& grid, int width, int height) {
  if (width <= 0 || height <= 0 || grid.width() != (width + 1) / 2 ||
      grid.height() != (height + 1) / 2) {
    throw DataError("cannot replicate " + std::to_string(grid.width()) + "x" +
                    std::to_string(grid.height()) + " grid onto " +
                    std::to_string(width) + "x" + std::to_string(height));
  }
  RealPlane out(width, height);
  for (int y = 0; y < height; ++y) {
    const auto src = grid.row(y / 2);
    auto dst = out.row(y);
    for (int x = 0; x < width; ++x) dst[x] = src[x / 2];
  }
  return out;
}

RealPlane ToReal(const LumaFrame& frame) {
  RealPlane out(frame.width(), frame.height());
  const auto src = frame.samples();
  auto dst = out.samples();
  std::copy(src.begin(), src.end(), dst.begin());
  return out;
}

}  // namespace pvm
