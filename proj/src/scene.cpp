#include "lacnet/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <stdexcept>

#include "lacnet/errors.hpp"
#include "lacnet/rng.hpp"

namespace lacnet {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw DataError("camera intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw DataError("camera intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw DataError("camera intrinsics: principal point outside the image");
}

bool occlusion_flag(std::size_t visible_area, std::size_t amodal_area) {
  if (amodal_area == 0) throw DataError("occlusion_flag: empty amodal mask");
  if (visible_area > amodal_area) throw DataError("occlusion_flag: visible area exceeds amodal area");
  // Integer form of V/A < 0.95 avoids rounding at the boundary.
  return visible_area * 100 < amodal_area * 95;
}

InstanceAnnotation InstanceAnnotation::make(Bitmap amodal, Bitmap visible, int depth_rank, std::string label) {
  if (!amodal.same_shape(visible)) throw DataError("instance: amodal and visible masks differ in size");
  if (!is_subset(visible, amodal)) throw DataError("instance: visible mask is not contained in the amodal mask");
  const std::size_t a = amodal.count();
  if (a == 0) throw DataError("instance: empty amodal mask");
  InstanceAnnotation inst;
  inst.occluded_mask = subtract(amodal, visible);
  inst.occluded_flag = occlusion_flag(visible.count(), a);
  inst.amodal_mask = std::move(amodal);
  inst.visible_mask = std::move(visible);
  inst.depth_rank = depth_rank;
  inst.label = std::move(label);
  return inst;
}

void RgbdScene::validate() const {
  if (rgb.channels != 3) throw DataError("scene " + scene_id + ": rgb must have 3 channels");
  if (depth.channels != 1) throw DataError("scene " + scene_id + ": depth must have 1 channel");
  if (rgb.width != depth.width || rgb.height != depth.height)
    throw DataError("scene " + scene_id + ": rgb and depth sizes differ");
  for (const auto& inst : instances) {
    if (inst.amodal_mask.width != rgb.width || inst.amodal_mask.height != rgb.height)
      throw DataError("scene " + scene_id + ": instance mask size differs from image size");
    if (!is_subset(inst.visible_mask, inst.amodal_mask))
      throw DataError("scene " + scene_id + ": visible mask not contained in amodal mask");
    if (inst.amodal_mask.empty()) throw DataError("scene " + scene_id + ": empty amodal mask");
  }
}

const char* shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::rectangle: return "rectangle";
    case ShapeKind::ellipse: return "ellipse";
    case ShapeKind::capsule: return "capsule";
    case ShapeKind::triangle: return "triangle";
    case ShapeKind::l_shape: return "l_shape";
  }
  return "unknown";
}

ShapeKind parse_shape(const std::string& name) {
  for (auto k : {ShapeKind::rectangle, ShapeKind::ellipse, ShapeKind::capsule, ShapeKind::triangle,
                 ShapeKind::l_shape})
    if (name == shape_name(k)) return k;
  throw ConfigError("unknown shape '" + name + "'");
}

bool is_convex(ShapeKind kind) { return kind != ShapeKind::l_shape; }

void GeneratorConfig::validate() const {
  if (canvas_size < 8) throw ConfigError("canvas_size must be at least 8");
  if (object_count_range.first < 1 || object_count_range.second < object_count_range.first)
    throw ConfigError("object_count_range must satisfy 1 <= min <= max");
  if (shape_set.empty()) throw ConfigError("shape_set must not be empty");
  if (!(object_size_range.first > 0) || object_size_range.second < object_size_range.first)
    throw ConfigError("object_size_range must be positive and ordered");
  if (!(object_depth_range.first > 0) || object_depth_range.second < object_depth_range.first)
    throw ConfigError("object_depth_range must be positive and ordered");
  if (!(background_depth > object_depth_range.second))
    throw ConfigError("background_depth must exceed the maximum object depth");
  if (foam_cover_fraction_range.first < 0 || foam_cover_fraction_range.second > 1 ||
      foam_cover_fraction_range.second < foam_cover_fraction_range.first)
    throw ConfigError("foam_cover_fraction_range must lie in [0, 1] and be ordered");
  if (!(foam_disc_radius_range.first > 0) || foam_disc_radius_range.second < foam_disc_radius_range.first)
    throw ConfigError("foam_disc_radius_range must be positive and ordered");
  if (color_noise_std < 0) throw ConfigError("color_noise_std must be non-negative");
  if (min_visible_fraction < 0 || min_visible_fraction >= 1)
    throw ConfigError("min_visible_fraction must lie in [0, 1)");
}

std::string scene_id_for(std::int64_t scene_index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%06lld", static_cast<long long>(scene_index));
  return buf;
}

std::vector<InstanceAnnotation> derive_visible_masks(const std::vector<Bitmap>& amodal_masks,
                                                     const std::vector<int>& depth_ranks,
                                                     const Bitmap& foam_mask) {
  if (amodal_masks.size() != depth_ranks.size())
    throw std::invalid_argument("derive_visible_masks: mask and rank lists differ in length");
  if (std::set<int>(depth_ranks.begin(), depth_ranks.end()).size() != depth_ranks.size())
    throw std::invalid_argument("derive_visible_masks: depth ranks must be unique");
  std::vector<InstanceAnnotation> out;
  out.reserve(amodal_masks.size());
  for (std::size_t i = 0; i < amodal_masks.size(); ++i) {
    Bitmap visible = subtract(amodal_masks[i], foam_mask);
    for (std::size_t j = 0; j < amodal_masks.size(); ++j)
      if (depth_ranks[j] < depth_ranks[i]) visible = subtract(visible, amodal_masks[j]);
    out.push_back(InstanceAnnotation::make(amodal_masks[i], std::move(visible), depth_ranks[i], {}));
  }
  return out;
}

namespace {

constexpr int kMaxAttempts = 100;

struct ShapeParams {
  ShapeKind kind{};
  double cx = 0, cy = 0;
  double half_w = 0, half_h = 0;  // local half extents
  double angle = 0;
  double tri[6]{};  // triangle vertices in local coordinates
  double thickness = 0;
};

bool inside_triangle(const double* t, double x, double y) {
  auto edge = [](double ax, double ay, double bx, double by, double px, double py) {
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax);
  };
  const double d0 = edge(t[0], t[1], t[2], t[3], x, y);
  const double d1 = edge(t[2], t[3], t[4], t[5], x, y);
  const double d2 = edge(t[4], t[5], t[0], t[1], x, y);
  const bool neg = d0 < 0 || d1 < 0 || d2 < 0;
  const bool pos = d0 > 0 || d1 > 0 || d2 > 0;
  return !(neg && pos);
}

bool inside_local(const ShapeParams& s, double x, double y) {
  const double a = s.half_w, b = s.half_h;
  switch (s.kind) {
    case ShapeKind::rectangle:
      return std::abs(x) <= a && std::abs(y) <= b;
    case ShapeKind::ellipse:
      return (x * x) / (a * a) + (y * y) / (b * b) <= 1.0;
    case ShapeKind::capsule: {
      const double seg = std::max(0.0, a - b);
      const double dx = std::max(0.0, std::abs(x) - seg);
      return dx * dx + y * y <= b * b;
    }
    case ShapeKind::triangle:
      return inside_triangle(s.tri, x, y);
    case ShapeKind::l_shape: {
      const bool bottom = std::abs(x) <= a && y >= b - s.thickness && y <= b;
      const bool left = x >= -a && x <= -a + s.thickness && std::abs(y) <= b;
      return bottom || left;
    }
  }
  return false;
}

ShapeParams sample_shape(const GeneratorConfig& cfg, Rng& rng) {
  ShapeParams s;
  s.kind = cfg.shape_set[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(cfg.shape_set.size()) - 1))];
  const double size = rng.uniform(cfg.object_size_range.first, cfg.object_size_range.second);
  s.half_w = size / 2.0;
  s.angle = rng.uniform(0.0, 3.14159265358979323846);
  switch (s.kind) {
    case ShapeKind::rectangle:
    case ShapeKind::ellipse:
      s.half_h = s.half_w * rng.uniform(0.3, 1.0);
      break;
    case ShapeKind::capsule:
      s.half_h = s.half_w * rng.uniform(0.25, 0.5);
      break;
    case ShapeKind::triangle: {
      s.half_h = s.half_w * rng.uniform(0.6, 1.0);
      // Vertices on three sides of the local box keep the triangle well-conditioned.
      s.tri[0] = -s.half_w;
      s.tri[1] = rng.uniform(-s.half_h, s.half_h);
      s.tri[2] = s.half_w;
      s.tri[3] = rng.uniform(-s.half_h, s.half_h);
      s.tri[4] = rng.uniform(-s.half_w, s.half_w);
      s.tri[5] = rng.bernoulli(0.5) ? s.half_h : -s.half_h;
      break;
    }
    case ShapeKind::l_shape:
      s.half_h = s.half_w * rng.uniform(0.6, 1.0);
      s.thickness = 2.0 * std::min(s.half_w, s.half_h) * rng.uniform(0.3, 0.45);
      break;
  }
  return s;
}

Bitmap rasterize(const ShapeParams& s, int canvas) {
  Bitmap m(canvas, canvas);
  const double c = std::cos(s.angle), sn = std::sin(s.angle);
  const double r = std::hypot(s.half_w, s.half_h) + 1.0;
  const int x0 = std::max(0, static_cast<int>(std::floor(s.cx - r)));
  const int x1 = std::min(canvas - 1, static_cast<int>(std::ceil(s.cx + r)));
  const int y0 = std::max(0, static_cast<int>(std::floor(s.cy - r)));
  const int y1 = std::min(canvas - 1, static_cast<int>(std::ceil(s.cy + r)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - s.cx, dy = y + 0.5 - s.cy;
      const double lx = c * dx + sn * dy;
      const double ly = -sn * dx + c * dy;
      if (inside_local(s, lx, ly)) m.set(x, y);
    }
  return m;
}

/// Places one shape fully inside the canvas. Throws ConfigError after kMaxAttempts misses.
std::pair<ShapeParams, Bitmap> place_shape(const GeneratorConfig& cfg, Rng& rng) {
  const int canvas = cfg.canvas_size;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    ShapeParams s = sample_shape(cfg, rng);
    const double r = std::hypot(s.half_w, s.half_h) + 1.0;
    if (2.0 * r >= canvas) continue;
    s.cx = rng.uniform(r, canvas - r);
    s.cy = rng.uniform(r, canvas - r);
    Bitmap m = rasterize(s, canvas);
    if (m.count() >= 4) return {s, std::move(m)};
  }
  throw ConfigError("generator: objects cannot fit the canvas after 100 placement attempts");
}

void paint_disc(Bitmap& m, double cx, double cy, double radius) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(m.width - 1, static_cast<int>(std::ceil(cx + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(m.height - 1, static_cast<int>(std::ceil(cy + radius)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy <= radius * radius) m.set(x, y);
    }
}

std::uint8_t clamp_u8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

RgbdScene generate_scene(const GeneratorConfig& cfg, std::int64_t scene_index) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(scene_index)));
  const int canvas = cfg.canvas_size;
  const int n = static_cast<int>(rng.uniform_int(cfg.object_count_range.first, cfg.object_count_range.second));

  // Depths sorted ascending: object k has depth rank k.
  std::vector<double> depths(static_cast<std::size_t>(n));
  for (auto& d : depths) d = rng.uniform(cfg.object_depth_range.first, cfg.object_depth_range.second);
  std::sort(depths.begin(), depths.end());

  // Nearest first, so accepting an object never changes the visibility of one already accepted.
  std::vector<Bitmap> amodal;
  std::vector<ShapeKind> kinds;
  Bitmap nearer(canvas, canvas);
  for (int k = 0; k < n; ++k) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      auto [shape, mask] = place_shape(cfg, rng);
      const std::size_t area = mask.count();
      const std::size_t vis = area - intersection_count(mask, nearer);
      if (vis == 0 || static_cast<double>(vis) < cfg.min_visible_fraction * static_cast<double>(area)) continue;
      nearer = nearer | mask;
      amodal.push_back(std::move(mask));
      kinds.push_back(shape.kind);
      placed = true;
    }
    if (!placed) throw ConfigError("generator: objects cannot fit the canvas after 100 placement attempts");
  }

  std::vector<int> ranks(static_cast<std::size_t>(n));
  std::iota(ranks.begin(), ranks.end(), 0);
  Bitmap no_foam(canvas, canvas);
  auto prefoam = derive_visible_masks(amodal, ranks, no_foam);

  // Foam: discs centered on each object's visible part. A disc is skipped when it would push
  // any instance under the minimum visible fraction.
  Bitmap foam(canvas, canvas);
  std::vector<std::size_t> visible_count(static_cast<std::size_t>(n));
  std::vector<std::size_t> min_keep(static_cast<std::size_t>(n));
  std::vector<int> owner(static_cast<std::size_t>(canvas) * canvas, -1);  // instance visible at each pixel
  for (int k = 0; k < n; ++k) {
    const auto& vis = prefoam[static_cast<std::size_t>(k)].visible_mask;
    visible_count[static_cast<std::size_t>(k)] = vis.count();
    const auto area = static_cast<double>(amodal[static_cast<std::size_t>(k)].count());
    min_keep[static_cast<std::size_t>(k)] =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(cfg.min_visible_fraction * area)));
    for (std::size_t i = 0; i < vis.data.size(); ++i)
      if (vis.data[i]) owner[i] = k;
  }
  for (int k = 0; k < n; ++k) {
    const auto& vis = prefoam[static_cast<std::size_t>(k)].visible_mask;
    std::vector<std::size_t> pixels;
    for (std::size_t i = 0; i < vis.data.size(); ++i)
      if (vis.data[i]) pixels.push_back(i);
    const double fraction = rng.uniform(cfg.foam_cover_fraction_range.first, cfg.foam_cover_fraction_range.second);
    const auto target = static_cast<std::size_t>(fraction * static_cast<double>(pixels.size()));
    std::size_t covered = 0;
    for (int disc = 0; disc < 200 && covered < target; ++disc) {
      const std::size_t p = pixels[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pixels.size()) - 1))];
      const double dcx = static_cast<double>(p % static_cast<std::size_t>(canvas)) + rng.uniform();
      const double dcy = static_cast<double>(p / static_cast<std::size_t>(canvas)) + rng.uniform();
      const double radius = rng.uniform(cfg.foam_disc_radius_range.first, cfg.foam_disc_radius_range.second);
      Bitmap disc_mask(canvas, canvas);
      paint_disc(disc_mask, dcx, dcy, radius);
      std::vector<std::size_t> loss(static_cast<std::size_t>(n), 0);
      for (std::size_t i = 0; i < disc_mask.data.size(); ++i)
        if (disc_mask.data[i] && !foam.data[i] && owner[i] >= 0) ++loss[static_cast<std::size_t>(owner[i])];
      bool ok = true;
      for (int j = 0; j < n; ++j)
        if (visible_count[static_cast<std::size_t>(j)] - loss[static_cast<std::size_t>(j)] < min_keep[static_cast<std::size_t>(j)]) ok = false;
      if (!ok) continue;
      for (int j = 0; j < n; ++j) visible_count[static_cast<std::size_t>(j)] -= loss[static_cast<std::size_t>(j)];
      covered += loss[static_cast<std::size_t>(k)];
      foam = foam | disc_mask;
    }
  }

  RgbdScene scene;
  scene.scene_id = scene_id_for(scene_index);
  scene.intrinsics = CameraIntrinsics{static_cast<double>(canvas), static_cast<double>(canvas), canvas / 2.0,
                                      canvas / 2.0, canvas, canvas};
  scene.instances = derive_visible_masks(amodal, ranks, foam);
  for (int k = 0; k < n; ++k) scene.instances[static_cast<std::size_t>(k)].label = shape_name(kinds[static_cast<std::size_t>(k)]);

  // Painter's algorithm, far to near, then foam on top.
  std::vector<double> color(3);
  Image<double> rgbf(canvas, canvas, 3);
  const double bg[3] = {rng.uniform(60, 140), rng.uniform(60, 140), rng.uniform(60, 140)};
  for (int y = 0; y < canvas; ++y)
    for (int x = 0; x < canvas; ++x)
      for (int c = 0; c < 3; ++c) rgbf.at(x, y, c) = bg[c];
  // Depth is held on the 1 mm grid used on disk so saved datasets reload bit-identically.
  const auto to_mm = [](double meters) { return static_cast<int>(std::lround(meters * 1000.0)); };
  const auto from_mm = [](int mm) { return static_cast<float>(mm) / 1000.0f; };
  std::vector<int> depth_mm(static_cast<std::size_t>(canvas) * canvas, to_mm(cfg.background_depth));
  for (int k = n - 1; k >= 0; --k) {
    for (auto& v : color) v = rng.uniform(20, 220);
    const auto& m = amodal[static_cast<std::size_t>(k)];
    for (int y = 0; y < canvas; ++y)
      for (int x = 0; x < canvas; ++x)
        if (m.get(x, y)) {
          for (int c = 0; c < 3; ++c) rgbf.at(x, y, c) = color[static_cast<std::size_t>(c)];
          depth_mm[static_cast<std::size_t>(y) * canvas + x] = to_mm(depths[static_cast<std::size_t>(k)]);
        }
  }
  for (int y = 0; y < canvas; ++y)
    for (int x = 0; x < canvas; ++x)
      if (foam.get(x, y)) {
        for (int c = 0; c < 3; ++c) rgbf.at(x, y, c) = 240.0;
        auto& d = depth_mm[static_cast<std::size_t>(y) * canvas + x];
        d = std::max(50, d - 10);
      }
  scene.depth = DepthImage(canvas, canvas, 1);
  for (std::size_t i = 0; i < depth_mm.size(); ++i) scene.depth.data[i] = from_mm(depth_mm[i]);
  scene.rgb = RgbImage(canvas, canvas, 3);
  for (std::size_t i = 0; i < rgbf.data.size(); ++i)
    scene.rgb.data[i] = clamp_u8(rgbf.data[i] + cfg.color_noise_std * rng.normal());
  return scene;
}

std::vector<RgbdScene> generate_scenes(const GeneratorConfig& config, std::int64_t first, std::int64_t count) {
  config.validate();
  std::vector<RgbdScene> scenes(static_cast<std::size_t>(std::max<std::int64_t>(count, 0)));
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      scenes[static_cast<std::size_t>(i)] = generate_scene(config, first + i);
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return scenes;
}

}  // namespace lacnet
