#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "flaresynth/depth_stub.hpp"
#include "flaresynth/errors.hpp"
#include "flaresynth/pipeline.hpp"
#include "flaresynth/png_io.hpp"
#include "json.hpp"
#include "synth_fixtures.hpp"

using namespace flaresynth;
using namespace flaresynth::testing;

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::istringstream in(read_bytes(p));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<Background> stub_backgrounds(int count, int w, int h) {
  std::vector<Background> out;
  for (int i = 0; i < count; ++i) {
    out.push_back({"bg" + std::to_string(i), random_image(w, h, 3, 900 + i, Encoding::kGammaEncoded),
                   synth_depth(w, h, DepthProfile::radial(1.0 + i, 3.0 + i))});
  }
  return out;
}

}  // namespace

TEST_CASE("a single flare adds onto the background") {
  const FlareTemplate tpl = flat_template(16, 0.2, 4.0);
  SynthConfig cfg = linear_config(1);
  pin_placement(cfg);
  cfg.flare_count = {1, 1};
  cfg.fixed_gain = 1.0;
  const ImagePlane bg = uniform_image(16, 16, 3, 0.5, Encoding::kGammaEncoded);
  const auto pair = synth_one(bg, constant_depth(16, 16, 2.0), std::span(&tpl, 1), cfg, 0);

  for (double v : pair.input.values()) REQUIRE(v == 0.5 + 0.2);
  for (double v : pair.gt_background.values()) REQUIRE(v == 0.5);
  for (double v : pair.flare_layer.values()) REQUIRE(v == 0.2);
  CHECK(pair.meta.overflow_px == 0);
  CHECK(pair.meta.flares.size() == 1);
  CHECK(pair.meta.flares[0].gain == 1.0);
  CHECK(pair.source_mask.count() == source_region(tpl.source_annotation).count());
  CHECK(pair.input.encoding() == Encoding::kGammaEncoded);
}

TEST_CASE("overflow is counted and clipped") {
  const FlareTemplate tpl = flat_template(16, 0.2, 4.0);
  SynthConfig cfg = linear_config(1);
  pin_placement(cfg);
  cfg.flare_count = {2, 2};
  cfg.fixed_gain = 1.0;
  const ImagePlane bg = uniform_image(16, 16, 3, 0.7, Encoding::kGammaEncoded);
  const auto pair = synth_one(bg, constant_depth(16, 16, 2.0), std::span(&tpl, 1), cfg, 0);
  CHECK(pair.meta.overflow_px == 256);
  CHECK(pair.meta.flare_overflow_px == 0);
  for (double v : pair.input.values()) REQUIRE(v == 1.0);
  for (double v : pair.linear.flare_sum.values()) REQUIRE(v == 0.4);
}

TEST_CASE("synth_one is deterministic per (seed, index)") {
  const auto pool = small_pool(32, 4, 5);
  const ImagePlane bg = random_image(40, 30, 3, 2, Encoding::kGammaEncoded);
  const DepthMap depth = random_depth(40, 30, 3);
  SynthConfig cfg;
  cfg.seed = 77;
  cfg.affine.min_visible_source_px = 4;
  const auto a = synth_one(bg, depth, pool, cfg, 3);
  const auto b = synth_one(bg, depth, pool, cfg, 3);
  CHECK(a.input == b.input);
  CHECK(a.gt_background == b.gt_background);
  CHECK(a.source_mask == b.source_mask);
  CHECK(meta_json(a.meta) == meta_json(b.meta));
  const auto c = synth_one(bg, depth, pool, cfg, 4);
  CHECK(meta_json(a.meta) != meta_json(c.meta));
  cfg.seed = 78;
  CHECK(meta_json(synth_one(bg, depth, pool, cfg, 3).meta) != meta_json(a.meta));
}

TEST_CASE("gamma and noise are drawn from their ranges") {
  const auto pool = small_pool(32, 2, 6);
  const ImagePlane bg = random_image(32, 32, 3, 4, Encoding::kGammaEncoded);
  SynthConfig cfg;
  cfg.affine.min_visible_source_px = 1;
  for (std::uint64_t i = 0; i < 20; ++i) {
    cfg.seed = i;
    try {
      const auto p = synth_one(bg, constant_depth(32, 32, 1.0), pool, cfg, i);
      CHECK(p.meta.gamma >= 1.8);
      CHECK(p.meta.gamma <= 2.2);
      CHECK(p.meta.noise_sigma >= 0.0);
      CHECK(p.meta.noise_sigma <= 0.01);
      CHECK(p.meta.requested_flares >= 1);
      CHECK(p.meta.requested_flares <= 3);
    } catch (const SynthesisSkipped&) {
    }
  }
}

TEST_CASE("same_template reuses one template for every flare") {
  const auto pool = small_pool(32, 6, 7);
  const ImagePlane bg = random_image(48, 48, 3, 5, Encoding::kGammaEncoded);
  SynthConfig cfg = linear_config(9);
  cfg.flare_count = {3, 3};
  cfg.same_template = true;
  cfg.affine.max_retries = 50;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto p = synth_one(bg, constant_depth(48, 48, 1.0), pool, cfg, i);
    REQUIRE(!p.meta.flares.empty());
    for (const auto& f : p.meta.flares) CHECK(f.template_name == p.meta.flares[0].template_name);
  }
}

TEST_CASE("ground truth differs from the input only under the flare") {
  const auto pool = small_pool(48, 5, 8);
  const ImagePlane bg = random_image(64, 48, 3, 6, Encoding::kGammaEncoded);
  const DepthMap depth = random_depth(64, 48, 7);
  SynthConfig cfg;
  cfg.seed = 10;
  cfg.affine.min_visible_source_px = 4;
  int checked = 0;
  for (std::uint64_t i = 0; i < 12; ++i) {
    try {
      const auto p = synth_one(bg, depth, pool, cfg, i);
      ++checked;
      for (int y = 0; y < 48; ++y) {
        for (int x = 0; x < 64; ++x) {
          double flare = 0.0;
          bool differs = false;
          for (int c = 0; c < 3; ++c) {
            flare = std::max(flare, p.flare_layer.at(x, y, c));
            differs |= p.input.at(x, y, c) != p.gt_background.at(x, y, c);
          }
          if (differs) REQUIRE(flare > 0.0);
        }
      }
    } catch (const SynthesisSkipped&) {
    }
  }
  CHECK(checked > 6);
}

TEST_CASE("source mask is the union of the transformed annotations") {
  const auto pool = small_pool(40, 4, 9);
  const ImagePlane bg = random_image(50, 50, 3, 8, Encoding::kGammaEncoded);
  SynthConfig cfg;
  cfg.seed = 11;
  cfg.flare_count = {2, 3};
  cfg.affine.min_visible_source_px = 2;
  int checked = 0;
  for (std::uint64_t i = 0; i < 10; ++i) {
    try {
      const auto p = synth_one(bg, constant_depth(50, 50, 2.0), pool, cfg, i);
      RegionMask expect(50, 50);
      for (const auto& f : p.meta.flares) {
        const auto& tpl = find_template(pool, f.template_name);
        const RegionMask m = source_region(
            apply_affine(tpl.source_annotation, f.affine, 50, 50, Interpolation::kNearest), cfg.tau);
        CHECK(m.count() == static_cast<std::size_t>(f.estimate.visible_px));
        for (int y = 0; y < 50; ++y)
          for (int x = 0; x < 50; ++x)
            if (m.at(x, y)) expect.set(x, y, true);
      }
      REQUIRE(p.source_mask == expect);
      ++checked;
    } catch (const SynthesisSkipped&) {
    }
  }
  CHECK(checked > 5);
}

TEST_CASE("gain falls with field of view for an off-center flare") {
  FlareRecipe r;
  r.width = r.height = 40;
  r.source_pos = {0.85, 0.5};
  r.source_radius = 0.08;
  const FlareTemplate tpl = generate_template(r);
  SynthConfig cfg = linear_config(3);
  pin_placement(cfg);
  cfg.flare_count = {1, 1};
  cfg.gain_clamp.reset();
  const ImagePlane bg = uniform_image(40, 40, 3, 0.1, Encoding::kGammaEncoded);
  double previous = INFINITY;
  for (double fov : {40.0, 60.0, 84.0, 120.0}) {
    cfg.fov_deg = fov;
    const auto p = synth_one(bg, constant_depth(40, 40, 1.5), std::span(&tpl, 1), cfg, 0);
    CHECK(p.meta.flares[0].estimate.radius_px > 0.0);
    CHECK(p.meta.flares[0].gain < previous);
    previous = p.meta.flares[0].gain;
  }
}

TEST_CASE("a deeper source contributes less") {
  const auto pool = small_pool(32, 3, 10);
  const ImagePlane bg = random_image(40, 40, 3, 9, Encoding::kGammaEncoded);
  SynthConfig cfg;
  cfg.seed = 12;
  cfg.flare_count = {1, 1};
  cfg.affine.min_visible_source_px = 3;
  const DepthMap near = random_depth(40, 40, 13, 1.0, 4.0);
  int checked = 0;
  for (std::uint64_t i = 0; i < 8; ++i) {
    try {
      const auto a = synth_one(bg, near, pool, cfg, i);
      std::vector<double> d(near.values().begin(), near.values().end());
      for (std::size_t k = 0; k < d.size(); ++k) {
        if (a.source_mask.values()[k]) d[k] *= 2.0;
      }
      const auto b = synth_one(bg, DepthMap(40, 40, d), pool, cfg, i);
      REQUIRE(b.meta.flares.size() == 1);
      CHECK(b.meta.flares[0].affine == a.meta.flares[0].affine);
      CHECK(b.meta.flares[0].gain <= a.meta.flares[0].gain);
      const auto fa = a.linear.flare_sum.values();
      const auto fb = b.linear.flare_sum.values();
      for (std::size_t k = 0; k < fa.size(); ++k) REQUIRE(fb[k] <= fa[k]);
      ++checked;
    } catch (const SynthesisSkipped&) {
    }
  }
  CHECK(checked > 3);
}

TEST_CASE("synth_one rejects bad inputs") {
  const auto pool = small_pool(16, 1, 11);
  const ImagePlane bg = random_image(16, 16, 3, 1, Encoding::kGammaEncoded);
  const DepthMap depth = constant_depth(16, 16, 1.0);
  SynthConfig cfg;
  CHECK_THROWS_AS(synth_one(bg, constant_depth(8, 16, 1.0), pool, cfg, 0), DimensionMismatch);
  CHECK_THROWS_AS(synth_one(bg, depth, {}, cfg, 0), InvalidArgument);
  CHECK_THROWS_AS(synth_one(random_image(16, 16, 1, 1), depth, pool, cfg, 0), InvalidArgument);
  SynthConfig bad = cfg;
  bad.fov_deg = 200.0;
  CHECK_THROWS_AS(synth_one(bg, depth, pool, bad, 0), InvalidArgument);
  bad = cfg;
  bad.gamma = {0.5, 2.0};
  CHECK_THROWS_AS(synth_one(bg, depth, pool, bad, 0), InvalidArgument);
  bad = cfg;
  bad.flare_count = {3, 1};
  CHECK_THROWS_AS(synth_one(bg, depth, pool, bad, 0), InvalidArgument);
  bad = cfg;
  bad.affine.min_visible_source_px = 100000;
  CHECK_THROWS_AS(synth_one(bg, depth, pool, bad, 0), SynthesisSkipped);
}

TEST_CASE("synth_batch writes pairs and a manifest") {
  TempDir dir("batch");
  const auto pool = small_pool(48, 4, 12);
  const auto backgrounds = stub_backgrounds(3, 48, 40);
  SynthConfig cfg;
  cfg.seed = 21;
  cfg.affine.min_visible_source_px = 4;

  SUBCASE("one pair") {
    const auto res = synth_batch(backgrounds, pool, cfg, 1, dir.path());
    CHECK(res.written == 1);
    CHECK(res.skipped == 0);
    for (const char* suffix : {"_input.png", "_gt.png", "_gt_src.png", "_flare.png", "_mask.png", "_meta.json"}) {
      CHECK(std::filesystem::exists(dir / ("000000" + std::string(suffix))));
    }
    CHECK(read_lines(res.manifest).size() == 1);
    CHECK(load_image(dir / "000000_input.png", Encoding::kGammaEncoded).width() == 48);
    const RawRaster raw = read_png(dir / "000000_input.png");
    CHECK(raw.bit_depth == 16);
  }

  SUBCASE("ten pairs over three backgrounds") {
    const auto res = synth_batch(backgrounds, pool, cfg, 10, dir.path());
    CHECK(res.written + res.skipped == 10);
    const auto lines = read_lines(res.manifest);
    REQUIRE(lines.size() == static_cast<std::size_t>(res.written));
    long overflow = 0;
    int previous = -1;
    for (const auto& line : lines) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j["index"].get<int>() > previous);
      previous = j["index"].get<int>();
      CHECK(j["n"].get<int>() == static_cast<int>(j["flares"].size()));
      CHECK(j["fov_deg"].get<double>() == 84.0);
      for (const auto& f : j["flares"]) {
        CHECK(f.contains("affine"));
        CHECK(f["gain"].get<double>() > 0.0);
        CHECK(f["d_i"].get<double>() > 0.0);
      }
      overflow += j["overflow_px"].get<long>();
      const std::string bg = j["background"];
      CHECK((bg == "bg0" || bg == "bg1" || bg == "bg2"));
    }
    CHECK(overflow == res.overflow_px);
  }

  SUBCASE("options change the written files") {
    cfg.emit_source_in_gt = false;
    cfg.output_bit_depth = 8;
    synth_batch(backgrounds, pool, cfg, 1, dir.path());
    CHECK_FALSE(std::filesystem::exists(dir / "000000_gt_src.png"));
    CHECK(read_png(dir / "000000_gt.png").bit_depth == 8);
  }
}

TEST_CASE("synth_batch output does not depend on the worker count") {
  TempDir a("workers1"), b("workers8");
  const auto pool = small_pool(48, 4, 13);
  const auto backgrounds = stub_backgrounds(2, 40, 40);
  SynthConfig cfg;
  cfg.seed = 5;
  cfg.affine.min_visible_source_px = 4;
  int progress_calls = 0;
  synth_batch(backgrounds, pool, cfg, 12, a.path(), 1, [&](int) { ++progress_calls; });
  synth_batch(backgrounds, pool, cfg, 12, b.path(), 8);
  CHECK(progress_calls == 12);
  CHECK(tree_bytes(a.path()) == tree_bytes(b.path()));
}

TEST_CASE("load_corpus pairs backgrounds with depth maps") {
  TempDir dir("corpus");
  std::filesystem::create_directories(dir / "bg");
  std::filesystem::create_directories(dir / "depth");
  save_image(random_image(12, 10, 3, 1), dir / "bg/b.png", 8);
  save_image(random_image(12, 10, 1, 2), dir / "bg/a.png", 8);
  save_image(random_image(12, 10, 3, 3), dir / "bg/orphan.png", 8);
  save_depth(constant_depth(12, 10, 2.0), dir / "depth/a.png");
  save_depth(constant_depth(12, 10, 3.0), dir / "depth/b.png");
  const Corpus c = load_corpus(dir / "bg", dir / "depth");
  REQUIRE(c.backgrounds.size() == 2);
  CHECK(c.backgrounds[0].stem == "a");
  CHECK(c.backgrounds[0].image.channels() == 3);
  CHECK(c.backgrounds[0].image.encoding() == Encoding::kGammaEncoded);
  CHECK(c.backgrounds[1].depth.at(0, 0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(c.missing_depth == std::vector<std::string>{"orphan"});

  save_depth(constant_depth(5, 5, 2.0), dir / "depth/orphan.png");
  CHECK_THROWS_AS(load_corpus(dir / "bg", dir / "depth"), DimensionMismatch);
  CHECK_THROWS_AS(load_corpus(dir / "nope", dir / "depth"), IoError);
}

TEST_CASE("pair_stem") {
  CHECK(pair_stem(0) == "000000");
  CHECK(pair_stem(42) == "000042");
  CHECK(pair_stem(1234567) == "1234567");
}
