#ifndef PVM_PLANE_H_
#define PVM_PLANE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace pvm {

// Row-major 2-D grid. Coordinates are (x, y) with x the column index.
template <typename T>
class Plane {
 public:
  using value_type = T;

  Plane() = default;
  Plane(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) {
      throw std::invalid_argument("plane dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  Plane(int width, int height, std::vector<T> samples)
      : width_(width), height_(height), data_(std::move(samples)) {
    if (width < 0 || height < 0 ||
        data_.size() != static_cast<std::size_t>(width) * height) {
      throw std::invalid_argument("sample count does not match dimensions");
    }
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y) { return data_[index(x, y)]; }
  const T& at(int x, int y) const { return data_[index(x, y)]; }

  std::span<T> row(int y) {
    return {data_.data() + static_cast<std::size_t>(y) * width_,
            static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int y) const {
    return {data_.data() + static_cast<std::size_t>(y) * width_,
            static_cast<std::size_t>(width_)};
  }

  std::span<T> samples() { return data_; }
  std::span<const T> samples() const { return data_; }

  bool same_shape(const auto& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

// One frame's 8-bit luminance plane.
using LumaFrame = Plane<std::uint8_t>;

// Real-valued pixel or coefficient grid.
using RealPlane = Plane<double>;

// Pixel-resolution tolerance map; entries are non-negative.
using MaskMap = Plane<double>;

}  // namespace pvm

#endif  // PVM_PLANE_H_
