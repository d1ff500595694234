#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lacnet/errors.hpp"
#include "lacnet/grasp.hpp"
#include "test_util.hpp"

using namespace lacnet;
using testutil::rect;

namespace {

RgbdScene flat_scene(int w, int h, float depth) {
  RgbdScene s;
  s.scene_id = "t";
  s.rgb = RgbImage(w, h, 3);
  s.depth = DepthImage(w, h, 1);
  for (auto& d : s.depth.data) d = depth;
  s.intrinsics = {100.0, 110.0, w / 2.0, h / 2.0, w, h};
  return s;
}

Bitmap rotate90(const Bitmap& m) {
  Bitmap out(m.height, m.width);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.get(x, y)) out.set(m.height - 1 - y, x);
  return out;
}

Bitmap shift(const Bitmap& m, int dx, int dy) {
  Bitmap out(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.get(x, y) && out.in_bounds(x + dx, y + dy)) out.set(x + dx, y + dy);
  return out;
}

}  // namespace

TEST_CASE("mask center examples") {
  const PixelCoord c = mask_center(rect(20, 20, 0, 0, 10, 10));
  CHECK(c.u == 4.5);
  CHECK(c.v == 4.5);
  Bitmap one(10, 10);
  one.set(3, 7);
  CHECK(mask_center(one).u == 3.0);
  CHECK(mask_center(one).v == 7.0);
  // L: a 3x1 bar on row 0 plus (0,1) and (0,2).
  Bitmap l(5, 5);
  for (auto [x, y] : {std::pair{0, 0}, {1, 0}, {2, 0}, {0, 1}, {0, 2}}) l.set(x, y);
  CHECK(mask_center(l).u == doctest::Approx(3.0 / 5.0));
  CHECK(mask_center(l).v == doctest::Approx(3.0 / 5.0));
  CHECK_THROWS_AS(mask_center(Bitmap(4, 4)), DataError);
}

TEST_CASE("center depth is a median over valid visible pixels") {
  RgbdScene s = flat_scene(8, 8, 0.6f);
  const Bitmap m = rect(8, 8, 0, 0, 3, 1);
  CHECK(center_depth(s, m) == doctest::Approx(0.6));
  s.depth.at(0, 0) = 0.5f;
  s.depth.at(1, 0) = 0.9f;
  CHECK(center_depth(s, m) == doctest::Approx(0.6));
  s.depth.at(1, 0) = 0.0f;  // invalid pixels drop out: median of {0.5, 0.6}
  CHECK(center_depth(s, m) == doctest::Approx(0.55));
  s.depth.at(0, 0) = 0.0f;
  s.depth.at(2, 0) = 0.0f;
  CHECK_THROWS_AS(center_depth(s, m), DataError);
}

TEST_CASE("pinhole back-projection") {
  const CameraIntrinsics k{500.0, 400.0, 320.0, 240.0, 640, 480};
  const Point3 c = back_project(320.0, 240.0, 0.7, k);
  CHECK(c.x == 0.0);
  CHECK(c.y == 0.0);
  CHECK(c.z == 0.7);
  const Point3 p = back_project(820.0, 240.0, 1.0, k);
  CHECK(p.x == doctest::Approx(1.0));
  CHECK(p.y == 0.0);
  CHECK_THROWS(back_project(1, 1, 0.0, k));
  CHECK_THROWS(back_project(1, 1, -1.0, k));
  Rng rng(1);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const Point3 q{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.1, 10)};
    const PixelCoord uv = project(q, k);
    const Point3 r = back_project(uv.u, uv.v, q.z, k);
    worst = std::max({worst, std::abs(r.x - q.x), std::abs(r.y - q.y), std::abs(r.z - q.z)});
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("principal axis examples") {
  const auto h = principal_axis(rect(64, 64, 5, 5, 35, 15));
  CHECK(h[0] == doctest::Approx(1.0));
  CHECK(h[1] == doctest::Approx(0.0));
  const auto v = principal_axis(rect(64, 64, 5, 5, 15, 35));
  CHECK(v[0] == doctest::Approx(0.0));
  CHECK(v[1] == doctest::Approx(1.0));
  Bitmap bar(64, 64);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (std::abs(x - y) <= 2 && x + y >= 10 && x + y <= 100) bar.set(x, y);
  const auto d = principal_axis(bar);
  CHECK(d[0] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  CHECK(d[1] == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
  const auto iso = principal_axis(rect(64, 64, 0, 0, 8, 8));
  CHECK(iso[0] == 1.0);
  CHECK(iso[1] == 0.0);
  Bitmap one(4, 4);
  one.set(1, 1);
  CHECK_THROWS(principal_axis(one));
}

TEST_CASE("grasp region examples") {
  const Bitmap r = rect(64, 64, 0, 0, 30, 10);
  CHECK(classify_grasp_region(mask_center(r), r) == GraspRegion::region_a);
  CHECK(classify_grasp_region({3.0, 5.0}, r) == GraspRegion::region_b);
  CHECK(classify_grasp_region({26.0, 5.0}, r) == GraspRegion::region_b);
  CHECK(classify_grasp_region({15.0, 2.0}, r) == GraspRegion::region_a);
  CHECK(classify_grasp_region({45.0, 5.0}, r) == GraspRegion::outside);
  CHECK(classify_grasp_region({-3.0, 5.0}, r) == GraspRegion::outside);
  CHECK(std::string(region_name(GraspRegion::region_a)) == "RegionA");
}

TEST_CASE("grasp region is invariant under translation and 90 degree rotation") {
  Rng rng(5);
  int checked = 0;
  for (int t = 0; t < 120; ++t) {
    const Bitmap m = testutil::random_blob(48, 48, rng);
    if (m.count() < 2) continue;
    const Bitmap rot = rotate90(m);
    // The axis of an isotropic mask is a convention, not a property of the shape.
    const auto a = principal_axis(m), b = principal_axis(rot);
    if (std::abs(std::abs(b[0]) - std::abs(a[1])) > 1e-9) {
      INFO("isotropic mask, axes " << a[0] << "," << a[1] << " and " << b[0] << "," << b[1]);
      CHECK(a[0] == 1.0);
      CHECK(b[0] == 1.0);
      continue;
    }
    const Bitmap moved = shift(m, 3, -2);
    if (moved.count() != m.count()) continue;
    for (int k = 0; k < 30; ++k) {
      const double u = rng.uniform(0, 47), v = rng.uniform(0, 47);
      const GraspRegion g = classify_grasp_region({u, v}, m);
      // A point exactly at x.5 may round differently after the transform.
      if (std::abs(u - std::floor(u) - 0.5) < 1e-9 || std::abs(v - std::floor(v) - 0.5) < 1e-9) continue;
      CHECK(classify_grasp_region({u + 3, v - 2}, moved) == g);
      CHECK(classify_grasp_region({47 - v, u}, rot) == g);
      ++checked;
    }
  }
  CHECK(checked > 800);
}

TEST_CASE("centroid of symmetric convex masks is in region A") {
  for (int w = 4; w < 40; w += 3)
    for (int h = 3; h < 40; h += 5) {
      const Bitmap r = rect(64, 64, 2, 3, 2 + w, 3 + h);
      CHECK(classify_grasp_region(mask_center(r), r) == GraspRegion::region_a);
    }
  for (int rad = 2; rad < 20; ++rad) {
    Bitmap e(64, 64);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        if ((x - 30) * (x - 30) / double(rad * rad) + (y - 31) * (y - 31) / double((rad + 3) * (rad + 3)) <= 1) e.set(x, y);
    CHECK(classify_grasp_region(mask_center(e), e) == GraspRegion::region_a);
  }
}

TEST_CASE("generate_grasp uses the amodal center and the visible depth") {
  RgbdScene s = flat_scene(64, 64, 0.8f);
  const Bitmap amodal = rect(64, 64, 10, 20, 40, 30);
  const Bitmap visible = rect(64, 64, 10, 20, 25, 30);
  // The hidden half is covered by something nearer.
  for (int y = 20; y < 30; ++y)
    for (int x = 25; x < 40; ++x) s.depth.at(x, y) = 0.3f;
  const GraspPoint g = generate_grasp(s, amodal, visible);
  CHECK(g.pixel.u == 24.5);
  CHECK(g.pixel.v == 24.5);
  CHECK(g.point3d.z == doctest::Approx(0.8));
  CHECK(g.point3d.x == doctest::Approx((24.5 - 32.0) * 0.8 / 100.0));
  CHECK(g.point3d.y == doctest::Approx((24.5 - 32.0) * 0.8 / 110.0));
  CHECK(g.strategy == "top-grasp");

  // Copying the visible mask moves the grasp to the visible half.
  const GraspPoint c = generate_grasp(s, visible, visible);
  CHECK(c.pixel.u == 17.0);
  CHECK(c.pixel.u < g.pixel.u);
  CHECK(classify_grasp_region(g.pixel, amodal) == GraspRegion::region_a);
  CHECK(classify_grasp_region(c.pixel, amodal) == GraspRegion::region_b);
}

TEST_CASE("perfect predictions on generated scenes grasp inside the object") {
  const GeneratorConfig g;
  int convex = 0, in_a = 0;
  for (int i = 0; i < 20; ++i) {
    const RgbdScene s = generate_scene(g, i);
    for (const auto& inst : s.instances) {
      const GraspPoint p = generate_grasp(s, inst.amodal_mask, inst.visible_mask);
      CHECK(p.point3d.z > 0);
      if (inst.label == "rectangle" || inst.label == "ellipse" || inst.label == "capsule") {
        ++convex;
        in_a += classify_grasp_region(p.pixel, inst.amodal_mask) == GraspRegion::region_a;
      }
    }
  }
  CHECK(convex > 0);
  CHECK(in_a == convex);
}
