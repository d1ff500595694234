#pragma once

#include <cstdint>

#include "lacnet/bitmap.hpp"
#include "lacnet/rng.hpp"

namespace lacnet {

/// Half-open pixel box [x0, x1) × [y0, y1). May extend past the image.
struct BBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct CropSpec {
  double expansion_factor = 2.0;
  int output_size = 256;  // multiple of 32; the desk-scale model crops at its input_size (64)
  void validate() const;
};

struct AugmentParams {
  std::pair<int, int> dilate_radius_range{1, 3};
  std::pair<int, int> erode_radius_range{1, 3};
  std::pair<double, double> blur_sigma_range{0.5, 2.0};
  double dilate_probability = 0.3;
  double erode_probability = 0.3;
  double blur_probability = 0.3;

  static AugmentParams none() { return {{0, 0}, {0, 0}, {0.0, 0.0}, 0.0, 0.0, 0.0}; }
  void validate() const;
};

enum class Interp { bilinear, nearest };

/// Tightest box around the set pixels. Throws DataError for an empty mask.
BBox bbox_of_mask(const Bitmap& mask);

/// Scales width and height about the center, rounding outward.
BBox expand_bbox(const BBox& box, double factor);

/// Resamples `box` of the image to output_size × output_size using pixel-center alignment.
/// Samples falling outside the image are zero; inside, coordinates are clamped to the edge pixels.
Image<float> crop_and_resize(const Image<float>& image, const BBox& box, int output_size, Interp mode);
Bitmap crop_and_resize(const Bitmap& mask, const BBox& box, int output_size);

/// Bilinear resize of a whole map (same convention as crop_and_resize over the full extent).
Image<float> resize_bilinear(const Image<float>& image, int out_width, int out_height);

struct NormalizedInputs {
  Image<float> rgb;    // [0, 1]
  Image<float> depth;  // [0, 1], invalid -> 0
};

/// rgb / 255; depth min-max scaled over valid (> 0) pixels, constant valid depth -> 0.5.
NormalizedInputs normalize_inputs(const Image<float>& rgb_patch, const Image<float>& depth_patch);

/// Random dilation, erosion and blur+threshold, each applied with its probability.
/// A step that would empty the mask is skipped.
Bitmap augment_mask(const Bitmap& mask, const AugmentParams& params, Rng& rng);

Bitmap dilate(const Bitmap& mask, int radius);
Bitmap erode(const Bitmap& mask, int radius);
/// Gaussian blur of the 0/1 mask then threshold at 0.5.
Bitmap blur_threshold(const Bitmap& mask, double sigma);

/// Resizes the patch map onto `box`, clipped to the image. Pixels outside the box are 0.
Image<float> paste_back_prob(const Image<float>& prob_map, const BBox& box, int image_width, int image_height);
/// paste_back_prob followed by value >= threshold.
Bitmap paste_back(const Image<float>& prob_map, const BBox& box, int image_width, int image_height,
                  double threshold = 0.5);

Image<float> to_float(const Image<std::uint8_t>& image);
Image<float> to_float(const Bitmap& mask);

}  // namespace lacnet
