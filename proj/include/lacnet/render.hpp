#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "lacnet/metrics.hpp"
#include "lacnet/scene.hpp"

namespace lacnet {

using Color = std::array<std::uint8_t, 3>;

// Overlay palette.
inline constexpr Color kGtAmodalContour{255, 220, 0};     // yellow, drawn when there are no predictions
inline constexpr Color kPredVisibleFill{0, 200, 80};      // green, blended 50%
inline constexpr Color kPredAmodalContour{255, 0, 255};   // magenta
inline constexpr Color kGraspMarker{255, 0, 0};           // red cross, 2 px arms

/// With no predictions: the RGB image with ground-truth amodal contours.
/// Otherwise per prediction: visible fill, amodal contour and the grasp pixel.
RgbImage render_overlay(const RgbdScene& scene, const std::vector<MaskPrediction>& preds);

}  // namespace lacnet
