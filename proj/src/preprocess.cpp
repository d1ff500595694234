#include "lacnet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lacnet/errors.hpp"

namespace lacnet {

void CropSpec::validate() const {
  if (expansion_factor < 1.0) throw ConfigError("expansion_factor must be >= 1");
  if (output_size <= 0 || output_size % 32 != 0) throw ConfigError("output_size must be a positive multiple of 32");
}

void AugmentParams::validate() const {
  if (dilate_radius_range.first < 0 || dilate_radius_range.second < dilate_radius_range.first)
    throw ConfigError("dilate_radius_range must be non-negative and ordered");
  if (erode_radius_range.first < 0 || erode_radius_range.second < erode_radius_range.first)
    throw ConfigError("erode_radius_range must be non-negative and ordered");
  if (blur_sigma_range.first < 0 || blur_sigma_range.second < blur_sigma_range.first)
    throw ConfigError("blur_sigma_range must be non-negative and ordered");
  for (double p : {dilate_probability, erode_probability, blur_probability})
    if (p < 0 || p > 1) throw ConfigError("augmentation probabilities must lie in [0, 1]");
}

BBox bbox_of_mask(const Bitmap& mask) {
  int x0 = mask.width, y0 = mask.height, x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.get(x, y)) {
        x0 = std::min(x0, x);
        y0 = std::min(y0, y);
        x1 = std::max(x1, x);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) throw DataError("bbox_of_mask: empty mask (missing visible prior)");
  return {x0, y0, x1 + 1, y1 + 1};
}

BBox expand_bbox(const BBox& box, double factor) {
  const double cx = 0.5 * (box.x0 + box.x1), cy = 0.5 * (box.y0 + box.y1);
  const double hw = 0.5 * box.width() * factor, hh = 0.5 * box.height() * factor;
  return {static_cast<int>(std::floor(cx - hw)), static_cast<int>(std::floor(cy - hh)),
          static_cast<int>(std::ceil(cx + hw)), static_cast<int>(std::ceil(cy + hh))};
}

namespace {

void require_valid_box(const BBox& box) {
  if (box.width() <= 0 || box.height() <= 0) throw std::invalid_argument("crop: zero-area bounding box");
}

/// Source coordinate of an output pixel center.
inline double source_coord(int origin, int extent, int out_size, int i) {
  return origin + (i + 0.5) * static_cast<double>(extent) / out_size - 0.5;
}

template <typename Fetch>
float bilinear_sample(Fetch&& fetch, int width, int height, double sx, double sy) {
  if (sx + 0.5 < 0 || sy + 0.5 < 0 || sx + 0.5 >= width || sy + 0.5 >= height) return 0.0f;
  sx = std::clamp(sx, 0.0, static_cast<double>(width - 1));
  sy = std::clamp(sy, 0.0, static_cast<double>(height - 1));
  const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
  const double fx = sx - x0, fy = sy - y0;
  const double top = (1 - fx) * fetch(x0, y0) + fx * fetch(x1, y0);
  const double bottom = (1 - fx) * fetch(x0, y1) + fx * fetch(x1, y1);
  return static_cast<float>((1 - fy) * top + fy * bottom);
}

}  // namespace

Image<float> crop_and_resize(const Image<float>& image, const BBox& box, int output_size, Interp mode) {
  require_valid_box(box);
  Image<float> out(output_size, output_size, image.channels);
  for (int oy = 0; oy < output_size; ++oy) {
    const double sy = source_coord(box.y0, box.height(), output_size, oy);
    for (int ox = 0; ox < output_size; ++ox) {
      const double sx = source_coord(box.x0, box.width(), output_size, ox);
      for (int c = 0; c < image.channels; ++c) {
        if (mode == Interp::bilinear) {
          out.at(ox, oy, c) = bilinear_sample([&](int x, int y) { return image.at(x, y, c); }, image.width,
                                              image.height, sx, sy);
        } else {
          const int x = static_cast<int>(std::floor(sx + 0.5)), y = static_cast<int>(std::floor(sy + 0.5));
          out.at(ox, oy, c) = (x >= 0 && y >= 0 && x < image.width && y < image.height) ? image.at(x, y, c) : 0.0f;
        }
      }
    }
  }
  return out;
}

Bitmap crop_and_resize(const Bitmap& mask, const BBox& box, int output_size) {
  require_valid_box(box);
  Bitmap out(output_size, output_size);
  for (int oy = 0; oy < output_size; ++oy) {
    const int y = static_cast<int>(std::floor(source_coord(box.y0, box.height(), output_size, oy) + 0.5));
    for (int ox = 0; ox < output_size; ++ox) {
      const int x = static_cast<int>(std::floor(source_coord(box.x0, box.width(), output_size, ox) + 0.5));
      if (mask.in_bounds(x, y) && mask.get(x, y)) out.set(ox, oy);
    }
  }
  return out;
}

Image<float> resize_bilinear(const Image<float>& image, int out_width, int out_height) {
  Image<float> out(out_width, out_height, image.channels);
  for (int oy = 0; oy < out_height; ++oy) {
    const double sy = source_coord(0, image.height, out_height, oy);
    for (int ox = 0; ox < out_width; ++ox) {
      const double sx = source_coord(0, image.width, out_width, ox);
      for (int c = 0; c < image.channels; ++c)
        out.at(ox, oy, c) =
            bilinear_sample([&](int x, int y) { return image.at(x, y, c); }, image.width, image.height, sx, sy);
    }
  }
  return out;
}

NormalizedInputs normalize_inputs(const Image<float>& rgb_patch, const Image<float>& depth_patch) {
  NormalizedInputs out{rgb_patch, depth_patch};
  for (auto& v : out.rgb.data) v /= 255.0f;
  float lo = std::numeric_limits<float>::max(), hi = std::numeric_limits<float>::lowest();
  for (float d : depth_patch.data)
    if (d > 0.0f) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  for (auto& d : out.depth.data) {
    if (!(d > 0.0f)) {
      d = 0.0f;
    } else if (hi > lo) {
      d = (d - lo) / (hi - lo);
    } else {
      d = 0.5f;
    }
  }
  return out;
}

namespace {

Bitmap morph(const Bitmap& mask, int radius, bool grow) {
  if (radius <= 0) return mask;
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= radius * radius) offsets.emplace_back(dx, dy);
  Bitmap out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) {
      bool v = !grow;
      for (auto [dx, dy] : offsets) {
        const int sx = x + dx, sy = y + dy;
        const bool s = mask.in_bounds(sx, sy) && mask.get(sx, sy);
        if (grow && s) {
          v = true;
          break;
        }
        if (!grow && !s) {
          v = false;
          break;
        }
      }
      if (v) out.set(x, y);
    }
  return out;
}

}  // namespace

Bitmap dilate(const Bitmap& mask, int radius) { return morph(mask, radius, true); }
Bitmap erode(const Bitmap& mask, int radius) { return morph(mask, radius, false); }

Bitmap blur_threshold(const Bitmap& mask, double sigma) {
  if (sigma <= 0) return mask;
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * r + 1));
  double sum = 0;
  for (int i = -r; i <= r; ++i) sum += k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
  for (auto& v : k) v /= sum;
  const int w = mask.width, h = mask.height;
  std::vector<double> tmp(static_cast<std::size_t>(w) * h), res(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i)
        if (x + i >= 0 && x + i < w && mask.get(x + i, y)) acc += k[static_cast<std::size_t>(i + r)];
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  Bitmap out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0;
      for (int i = -r; i <= r; ++i)
        if (y + i >= 0 && y + i < h) acc += k[static_cast<std::size_t>(i + r)] * tmp[static_cast<std::size_t>(y + i) * w + x];
      if (acc >= 0.5) out.set(x, y);
    }
  return out;
}

Bitmap augment_mask(const Bitmap& mask, const AugmentParams& p, Rng& rng) {
  Bitmap current = mask;
  auto apply = [&current](Bitmap next) {
    if (!next.empty()) current = std::move(next);
  };
  // Every draw happens regardless of outcome so the stream consumption is fixed.
  const bool do_dilate = rng.bernoulli(p.dilate_probability);
  const int dilate_r = static_cast<int>(rng.uniform_int(p.dilate_radius_range.first, p.dilate_radius_range.second));
  const bool do_erode = rng.bernoulli(p.erode_probability);
  const int erode_r = static_cast<int>(rng.uniform_int(p.erode_radius_range.first, p.erode_radius_range.second));
  const bool do_blur = rng.bernoulli(p.blur_probability);
  const double sigma = rng.uniform(p.blur_sigma_range.first, p.blur_sigma_range.second);
  if (do_dilate) apply(dilate(current, dilate_r));
  if (do_erode) apply(erode(current, erode_r));
  if (do_blur) apply(blur_threshold(current, sigma));
  return current;
}

Image<float> paste_back_prob(const Image<float>& prob_map, const BBox& box, int image_width, int image_height) {
  require_valid_box(box);
  const Image<float> resized = resize_bilinear(prob_map, box.width(), box.height());
  Image<float> out(image_width, image_height, 1);
  const int ys = std::max(0, box.y0), ye = std::min(image_height, box.y1);
  const int xs = std::max(0, box.x0), xe = std::min(image_width, box.x1);
  for (int y = ys; y < ye; ++y)
    for (int x = xs; x < xe; ++x) out.at(x, y) = resized.at(x - box.x0, y - box.y0);
  return out;
}

Bitmap paste_back(const Image<float>& prob_map, const BBox& box, int image_width, int image_height,
                  double threshold) {
  const Image<float> prob = paste_back_prob(prob_map, box, image_width, image_height);
  Bitmap out(image_width, image_height);
  for (std::size_t i = 0; i < prob.data.size(); ++i) out.data[i] = prob.data[i] >= threshold ? 1 : 0;
  return out;
}

Image<float> to_float(const Image<std::uint8_t>& image) {
  Image<float> out(image.width, image.height, image.channels);
  for (std::size_t i = 0; i < image.data.size(); ++i) out.data[i] = image.data[i];
  return out;
}

Image<float> to_float(const Bitmap& mask) {
  Image<float> out(mask.width, mask.height, 1);
  for (std::size_t i = 0; i < mask.data.size(); ++i) out.data[i] = mask.data[i] ? 1.0f : 0.0f;
  return out;
}

}  // namespace lacnet
