#include "lacnet/grasp.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "lacnet/errors.hpp"

namespace lacnet {

const char* region_name(GraspRegion r) {
  switch (r) {
    case GraspRegion::region_a: return "RegionA";
    case GraspRegion::region_b: return "RegionB";
    case GraspRegion::outside: return "Outside";
  }
  return "Outside";
}

PixelCoord mask_center(const Bitmap& mask) {
  double su = 0, sv = 0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.get(x, y)) {
        su += x;
        sv += y;
        ++n;
      }
  if (n == 0) throw DataError("mask_center: empty mask");
  return {su / static_cast<double>(n), sv / static_cast<double>(n)};
}

double center_depth(const RgbdScene& scene, const Bitmap& visible_mask) {
  if (visible_mask.width != scene.depth.width || visible_mask.height != scene.depth.height)
    throw DataError("center_depth: mask and depth sizes differ");
  std::vector<float> vals;
  for (int y = 0; y < visible_mask.height; ++y)
    for (int x = 0; x < visible_mask.width; ++x)
      if (visible_mask.get(x, y) && scene.depth.at(x, y) > 0) vals.push_back(scene.depth.at(x, y));
  if (vals.empty()) throw DataError("center_depth: no valid depth under the visible mask");
  std::sort(vals.begin(), vals.end());
  const std::size_t n = vals.size();
  return n % 2 ? vals[n / 2] : 0.5 * (static_cast<double>(vals[n / 2 - 1]) + vals[n / 2]);
}

Point3 back_project(double u, double v, double z, const CameraIntrinsics& k) {
  if (!(z > 0)) throw DataError("back_project: depth must be positive");
  return {(u - k.cx) * z / k.fx, (v - k.cy) * z / k.fy, z};
}

PixelCoord project(const Point3& p, const CameraIntrinsics& k) {
  if (!(p.z > 0)) throw DataError("project: point must lie in front of the camera");
  return {k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy};
}

std::array<double, 2> principal_axis(const Bitmap& mask) {
  const PixelCoord c = mask_center(mask);
  double sxx = 0, syy = 0, sxy = 0;
  std::size_t n = 0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.get(x, y)) {
        const double dx = x - c.u, dy = y - c.v;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
        ++n;
      }
  if (n < 2) throw DataError("principal_axis: mask needs at least two pixels");
  const double tr = sxx + syy;
  const double disc = std::sqrt(0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy);
  if (disc <= 1e-12 * tr) return {1.0, 0.0};
  const double lmax = 0.5 * tr + disc;
  std::array<double, 2> e;
  // Use whichever row of (C - lmax I) is better conditioned.
  if (std::abs(sxx - lmax) >= std::abs(syy - lmax))
    e = {sxy, lmax - sxx};
  else
    e = {lmax - syy, sxy};
  const double norm = std::hypot(e[0], e[1]);
  e = {e[0] / norm, e[1] / norm};
  if (e[0] < 0 || (e[0] == 0 && e[1] < 0)) e = {-e[0], -e[1]};
  if (e[0] == 0) e[0] = 0.0;  // drop a negative zero
  return e;
}

AxisExtent axis_extent(const Bitmap& mask) {
  AxisExtent ext;
  ext.axis = principal_axis(mask);
  ext.t_min = INFINITY;
  ext.t_max = -INFINITY;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.get(x, y)) {
        const double t = x * ext.axis[0] + y * ext.axis[1];
        ext.t_min = std::min(ext.t_min, t);
        ext.t_max = std::max(ext.t_max, t);
      }
  return ext;
}

GraspRegion classify_grasp_region(PixelCoord point, const Bitmap& amodal_mask) {
  const long px = std::lround(point.u), py = std::lround(point.v);
  if (!amodal_mask.in_bounds(static_cast<int>(px), static_cast<int>(py)) ||
      !amodal_mask.get(static_cast<int>(px), static_cast<int>(py)))
    return GraspRegion::outside;
  if (amodal_mask.count() < 2) return GraspRegion::region_a;
  const AxisExtent ext = axis_extent(amodal_mask);
  const double t = point.u * ext.axis[0] + point.v * ext.axis[1];
  const double third = ext.length() / 3.0;
  const bool middle = t > ext.t_min + third && t <= ext.t_min + 2 * third;
  return middle ? GraspRegion::region_a : GraspRegion::region_b;
}

GraspPoint generate_grasp(const RgbdScene& scene, const Bitmap& amodal_mask, const Bitmap& visible_mask) {
  GraspPoint g;
  g.pixel = mask_center(amodal_mask);
  const double z = center_depth(scene, visible_mask);
  g.point3d = back_project(g.pixel.u, g.pixel.v, z, scene.intrinsics);
  return g;
}

}  // namespace lacnet
