#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "lacnet/dataset_io.hpp"
#include "lacnet/errors.hpp"
#include "lacnet/png_io.hpp"
#include "lacnet/scene.hpp"
#include "test_util.hpp"

using namespace lacnet;
using testutil::rect;

TEST_CASE("occlusion flag threshold") {
  CHECK_FALSE(occlusion_flag(100, 100));
  CHECK(occlusion_flag(50, 100));
  CHECK_FALSE(occlusion_flag(19, 20));
  CHECK_FALSE(occlusion_flag(95, 100));
  CHECK(occlusion_flag(94, 100));
  CHECK_THROWS_AS(occlusion_flag(0, 0), DataError);
  CHECK_THROWS_AS(occlusion_flag(5, 4), DataError);
}

TEST_CASE("occlusion flag is monotone in visible area") {
  for (std::size_t a = 1; a <= 300; ++a) {
    bool seen_true = false;
    for (std::size_t v = a + 1; v-- > 0;) {
      const bool f = occlusion_flag(v, a);
      if (seen_true) CHECK(f);
      seen_true = seen_true || f;
      // Independent evaluation of the strict ratio test.
      CHECK(f == (static_cast<long double>(v) / a < 0.95L));
    }
  }
}

TEST_CASE("derive visible masks") {
  const Bitmap empty(40, 40);
  SUBCASE("disjoint rectangles") {
    auto inst = derive_visible_masks({rect(40, 40, 0, 0, 10, 10), rect(40, 40, 20, 20, 30, 30)}, {0, 1}, empty);
    REQUIRE(inst.size() == 2);
    for (const auto& i : inst) {
      CHECK(i.visible_mask == i.amodal_mask);
      CHECK_FALSE(i.occluded_flag);
      CHECK(i.occluded_mask.empty());
    }
  }
  SUBCASE("nearer square inside farther square") {
    auto inst = derive_visible_masks({rect(40, 40, 5, 5, 15, 15), rect(40, 40, 0, 0, 20, 20)}, {0, 1}, empty);
    CHECK(inst[0].visible_mask.count() == 100);
    CHECK(inst[1].visible_mask.count() == 300);
    CHECK(inst[1].occluded_mask.count() == 100);
    CHECK(inst[1].occluded_flag);
    CHECK_FALSE(inst[0].occluded_flag);
  }
  SUBCASE("rank order not list order") {
    auto inst = derive_visible_masks({rect(40, 40, 0, 0, 20, 20), rect(40, 40, 5, 5, 15, 15)}, {1, 0}, empty);
    CHECK(inst[0].visible_mask.count() == 300);
    CHECK(inst[1].visible_mask.count() == 100);
  }
  SUBCASE("ratio exactly 0.95 is not occluded") {
    auto inst = derive_visible_masks({rect(40, 40, 0, 0, 10, 10)}, {0}, rect(40, 40, 0, 0, 5, 1));
    CHECK(inst[0].visible_mask.count() == 95);
    CHECK_FALSE(inst[0].occluded_flag);
  }
  SUBCASE("foam removes pixels of every instance") {
    auto inst = derive_visible_masks({rect(40, 40, 0, 0, 10, 10)}, {0}, rect(40, 40, 0, 0, 10, 5));
    CHECK(inst[0].visible_mask.count() == 50);
    CHECK(inst[0].occluded_flag);
  }
  CHECK_THROWS(derive_visible_masks({rect(40, 40, 0, 0, 2, 2), rect(40, 40, 4, 4, 6, 6)}, {0, 0}, empty));
  CHECK_THROWS(derive_visible_masks({rect(40, 40, 0, 0, 2, 2)}, {0, 1}, empty));
}

TEST_CASE("generator is deterministic and honours the object count") {
  GeneratorConfig cfg;
  cfg.seed = 7;
  const RgbdScene a = generate_scene(cfg, 3), b = generate_scene(cfg, 3);
  CHECK(a.rgb == b.rgb);
  CHECK(a.depth == b.depth);
  REQUIRE(a.instances.size() == b.instances.size());
  for (std::size_t i = 0; i < a.instances.size(); ++i) CHECK(a.instances[i].amodal_mask == b.instances[i].amodal_mask);
  CHECK_FALSE(generate_scene(cfg, 4).rgb == a.rgb);

  cfg.object_count_range = {3, 3};
  for (int s = 0; s < 20; ++s) CHECK(generate_scene(cfg, s).instances.size() == 3);
}

TEST_CASE("generated scenes satisfy the annotation invariants by brute force") {
  GeneratorConfig cfg;
  cfg.foam_cover_fraction_range = {0.2, 0.5};
  cfg.seed = 11;
  const auto scenes = generate_scenes(cfg, 0, 1000);
  std::size_t foamed = 0;
  for (const auto& s : scenes) {
    s.validate();
    CHECK(s.intrinsics.fx == cfg.canvas_size);
    CHECK(s.intrinsics.cx == cfg.canvas_size / 2.0);
    std::vector<int> claims(static_cast<std::size_t>(s.width() * s.height()), 0);
    std::vector<char> ranks(s.instances.size(), 0);
    for (const auto& inst : s.instances) {
      REQUIRE(inst.depth_rank >= 0);
      REQUIRE(inst.depth_rank < static_cast<int>(s.instances.size()));
      ranks[static_cast<std::size_t>(inst.depth_rank)] = 1;
      CHECK(inst.visible_mask.count() > 0);
      bool ok_subset = true, ok_disjoint = true, ok_occ = true;
      for (int y = 0; y < s.height(); ++y)
        for (int x = 0; x < s.width(); ++x) {
          const bool a = inst.amodal_mask.get(x, y), v = inst.visible_mask.get(x, y), o = inst.occluded_mask.get(x, y);
          if (v && !a) ok_subset = false;
          if (v && o) ok_disjoint = false;
          if (o != (a && !v)) ok_occ = false;
          if (v) ++claims[static_cast<std::size_t>(y * s.width() + x)];
        }
      CHECK(ok_subset);
      CHECK(ok_disjoint);
      CHECK(ok_occ);
      CHECK(inst.occluded_flag == (inst.visible_mask.count() * 100 < inst.amodal_mask.count() * 95));
      foamed += inst.occluded_flag;
    }
    for (char r : ranks) CHECK(r);
    CHECK(std::all_of(claims.begin(), claims.end(), [](int c) { return c <= 1; }));
  }
  CHECK(foamed > 0);
}

TEST_CASE("nearer objects are painted over farther ones") {
  GeneratorConfig cfg;
  cfg.color_noise_std = 0;
  cfg.foam_cover_fraction_range = {0, 0};
  const RgbdScene s = generate_scene(cfg, 5);
  for (const auto& inst : s.instances) {
    // Constant per-object depth on the visible region, increasing with rank.
    float d = -1;
    for (int y = 0; y < s.height(); ++y)
      for (int x = 0; x < s.width(); ++x)
        if (inst.visible_mask.get(x, y)) {
          if (d < 0) d = s.depth.at(x, y);
          CHECK(s.depth.at(x, y) == d);
        }
  }
}

TEST_CASE("parallel generation equals serial generation") {
  GeneratorConfig cfg;
  cfg.seed = 99;
  const auto par = generate_scenes(cfg, 10, 16);
  for (int i = 0; i < 16; ++i) {
    const RgbdScene ser = generate_scene(cfg, 10 + i);
    CHECK(par[static_cast<std::size_t>(i)].scene_id == ser.scene_id);
    CHECK(par[static_cast<std::size_t>(i)].rgb == ser.rgb);
    CHECK(par[static_cast<std::size_t>(i)].depth == ser.depth);
  }
}

TEST_CASE("generator config validation") {
  GeneratorConfig c;
  c.object_count_range = {0, 3};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.background_depth = 0.9;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.object_depth_range = {0.0, 1.0};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.canvas_size = 32;
  c.object_size_range = {30, 31};
  c.object_count_range = {8, 8};
  CHECK_THROWS_AS(generate_scene(c, 0), ConfigError);
}

TEST_CASE("depth quantization") {
  CHECK(depth_to_millimeters(0.4321f) == 432);
  CHECK(millimeters_to_depth(432) == doctest::Approx(0.432).epsilon(1e-7));
  CHECK(depth_to_millimeters(0.0f) == 0);
  CHECK(depth_to_millimeters(1.0f) == 1000);
}

TEST_CASE("dataset round trip") {
  testutil::TempDir dir("scene_io");
  GeneratorConfig cfg;
  cfg.seed = 5;
  const auto scenes = generate_scenes(cfg, 0, 5);
  save_dataset(scenes, dir.path);
  const auto loaded = load_dataset(dir.path);
  REQUIRE(loaded.size() == 5);
  for (std::size_t s = 0; s < 5; ++s) {
    CHECK(loaded[s].scene_id == scenes[s].scene_id);
    CHECK(loaded[s].rgb == scenes[s].rgb);
    CHECK(loaded[s].intrinsics == scenes[s].intrinsics);
    for (std::size_t i = 0; i < scenes[s].depth.data.size(); ++i)
      CHECK(std::abs(loaded[s].depth.data[i] - scenes[s].depth.data[i]) <= 0.0005f + 1e-6f);
    REQUIRE(loaded[s].instances.size() == scenes[s].instances.size());
    for (std::size_t i = 0; i < scenes[s].instances.size(); ++i) {
      const auto &a = loaded[s].instances[i], &b = scenes[s].instances[i];
      CHECK(a.amodal_mask == b.amodal_mask);
      CHECK(a.visible_mask == b.visible_mask);
      CHECK(a.occluded_mask == b.occluded_mask);
      CHECK(a.occluded_flag == b.occluded_flag);
      CHECK(a.depth_rank == b.depth_rank);
      CHECK(a.label == b.label);
    }
  }
}

TEST_CASE("loader errors name the offending file") {
  testutil::TempDir dir("scene_err");
  GeneratorConfig cfg;
  save_dataset(generate_scenes(cfg, 0, 1), dir.path);
  const auto sd = dir.path / scene_id_for(0);
  SUBCASE("missing camera file") {
    std::filesystem::remove(sd / "camera.json");
    try {
      load_dataset(dir.path);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("camera.json") != std::string::npos);
    }
  }
  SUBCASE("malformed instances file") {
    std::ofstream(sd / "instances.json") << "[{\"amodal\": 3";
    try {
      load_scene(sd);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("instances.json") != std::string::npos);
    }
  }
  SUBCASE("missing mask image") {
    std::filesystem::remove(sd / "masks" / "0_amodal.png");
    try {
      load_scene(sd);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("0_amodal.png") != std::string::npos);
    }
  }
}
