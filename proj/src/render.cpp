#include "lacnet/render.hpp"

#include <cmath>

#include "lacnet/grasp.hpp"

namespace lacnet {
namespace {

void paint(RgbImage& img, int x, int y, const Color& c) {
  if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
  for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[static_cast<std::size_t>(k)];
}

void contour(RgbImage& img, const Bitmap& mask, const Color& c) {
  const Bitmap b = boundary_pixels(mask);
  for (int y = 0; y < b.height; ++y)
    for (int x = 0; x < b.width; ++x)
      if (b.get(x, y)) paint(img, x, y, c);
}

}  // namespace

RgbImage render_overlay(const RgbdScene& scene, const std::vector<MaskPrediction>& preds) {
  RgbImage img = scene.rgb;
  if (preds.empty()) {
    for (const auto& inst : scene.instances) contour(img, inst.amodal_mask, kGtAmodalContour);
    return img;
  }
  for (const auto& p : preds)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        if (p.visible.get(x, y))
          for (int k = 0; k < 3; ++k) {
            auto& px = img.at(x, y, k);
            px = static_cast<std::uint8_t>((px + kPredVisibleFill[static_cast<std::size_t>(k)] + 1) / 2);
          }
  for (const auto& p : preds) contour(img, p.amodal, kPredAmodalContour);
  for (const auto& p : preds) {
    if (p.amodal.empty()) continue;
    const PixelCoord c = mask_center(p.amodal);
    const int u = static_cast<int>(std::lround(c.u)), v = static_cast<int>(std::lround(c.v));
    for (int d = -2; d <= 2; ++d) {
      paint(img, u + d, v, kGraspMarker);
      paint(img, u, v + d, kGraspMarker);
    }
  }
  return img;
}

}  // namespace lacnet
