#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace lacnet {

/// Binary W×H mask, row-major, one byte per pixel holding 0 or 1.
struct Bitmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  Bitmap() = default;
  Bitmap(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0) {}

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  bool get(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v = true) {
    data[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }
  bool same_shape(const Bitmap& o) const { return width == o.width && height == o.height; }

  std::size_t count() const;
  bool empty() const { return count() == 0; }

  friend bool operator==(const Bitmap&, const Bitmap&) = default;
};

Bitmap operator&(const Bitmap& a, const Bitmap& b);
Bitmap operator|(const Bitmap& a, const Bitmap& b);
/// a AND NOT b
Bitmap subtract(const Bitmap& a, const Bitmap& b);
std::size_t intersection_count(const Bitmap& a, const Bitmap& b);
/// True when every set pixel of `inner` is also set in `outer`.
bool is_subset(const Bitmap& inner, const Bitmap& outer);

/// Dense interleaved image (row-major, channels innermost).
template <typename T>
struct Image {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

  T& at(int x, int y, int c = 0) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  const T& at(int x, int y, int c = 0) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

using RgbImage = Image<std::uint8_t>;
using DepthImage = Image<float>;
using ProbMap = Image<float>;

}  // namespace lacnet
