#include "lacnet/bitmap.hpp"

#include <algorithm>
#include <cassert>
#include <numeric>
#include <stdexcept>

namespace lacnet {

namespace {

void require_same_shape(const Bitmap& a, const Bitmap& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("bitmap shape mismatch");
}

}  // namespace

std::size_t Bitmap::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

Bitmap operator&(const Bitmap& a, const Bitmap& b) {
  require_same_shape(a, b);
  Bitmap out(a.width, a.height);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = (a.data[i] && b.data[i]) ? 1 : 0;
  return out;
}

Bitmap operator|(const Bitmap& a, const Bitmap& b) {
  require_same_shape(a, b);
  Bitmap out(a.width, a.height);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = (a.data[i] || b.data[i]) ? 1 : 0;
  return out;
}

Bitmap subtract(const Bitmap& a, const Bitmap& b) {
  require_same_shape(a, b);
  Bitmap out(a.width, a.height);
  for (std::size_t i = 0; i < a.data.size(); ++i) out.data[i] = (a.data[i] && !b.data[i]) ? 1 : 0;
  return out;
}

std::size_t intersection_count(const Bitmap& a, const Bitmap& b) {
  require_same_shape(a, b);
  std::size_t n = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) n += (a.data[i] && b.data[i]) ? 1 : 0;
  return n;
}

bool is_subset(const Bitmap& inner, const Bitmap& outer) {
  require_same_shape(inner, outer);
  for (std::size_t i = 0; i < inner.data.size(); ++i)
    if (inner.data[i] && !outer.data[i]) return false;
  return true;
}

}  // namespace lacnet
