#pragma once

#include <array>
#include <string>

#include "lacnet/bitmap.hpp"
#include "lacnet/scene.hpp"

namespace lacnet {

struct PixelCoord {
  double u = 0, v = 0;
};

struct Point3 {
  double x = 0, y = 0, z = 0;
};

struct GraspPoint {
  PixelCoord pixel;
  Point3 point3d;  // meters, camera frame
  std::string strategy = "top-grasp";
};

enum class GraspRegion { region_a, region_b, outside };

const char* region_name(GraspRegion r);

/// Mean of set-pixel coordinates. Throws DataError for an empty mask.
PixelCoord mask_center(const Bitmap& mask);
/// Median of valid (> 0) depth under the mask; mean of the two middle values for an even count.
double center_depth(const RgbdScene& scene, const Bitmap& visible_mask);

Point3 back_project(double u, double v, double z, const CameraIntrinsics& k);
PixelCoord project(const Point3& p, const CameraIntrinsics& k);

/// Unit eigenvector of the larger eigenvalue of the pixel-coordinate covariance.
/// The first nonzero component is positive; isotropic masks give (1, 0).
std::array<double, 2> principal_axis(const Bitmap& mask);

/// Projection range of the mask pixels onto its principal axis.
struct AxisExtent {
  std::array<double, 2> axis;
  double t_min = 0, t_max = 0;
  double length() const { return t_max - t_min; }
};
AxisExtent axis_extent(const Bitmap& mask);

/// RegionA: on the mask with axis projection in (t_min + L/3, t_min + 2L/3]. RegionB: on the mask elsewhere.
/// Outside: the nearest pixel is not set.
GraspRegion classify_grasp_region(PixelCoord point, const Bitmap& amodal_mask);

/// Pixel = center of the amodal mask, depth = median over the visible mask, then back-projected.
GraspPoint generate_grasp(const RgbdScene& scene, const Bitmap& amodal_mask, const Bitmap& visible_mask);

}  // namespace lacnet
