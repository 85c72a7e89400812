#include "flaresynth/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "flaresynth/errors.hpp"
#include "flaresynth/parallel.hpp"
#include "flaresynth/png_io.hpp"
#include "flaresynth/random.hpp"
#include "json.hpp"

namespace flaresynth {
namespace {

using ordered_json = nlohmann::ordered_json;

// Stream tags mixed into derived seeds.
constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;
constexpr std::uint64_t kBackgroundStream = 0x6267ULL;
constexpr std::uint64_t kMaxSalts = 16;

void check_range(const Range& r, const char* name) {
  if (!std::isfinite(r.min) || !std::isfinite(r.max) || r.min > r.max) {
    throw InvalidArgument(std::string(name) + " range must be finite with min <= max");
  }
}

struct PlacedFlare {
  AffineParams params;
  int attempts = 0;
  ImagePlane annotation;
  RegionMask mask;
};

std::optional<PlacedFlare> place_flare(const FlareTemplate& tpl, const AffineRanges& ranges,
                                       int width, int height, double tau, Rng& rng) {
  for (int attempt = 1; attempt <= ranges.max_retries; ++attempt) {
    PlacedFlare placed;
    placed.params = sample_affine(ranges, rng);
    placed.attempts = attempt;
    placed.annotation =
        apply_affine(tpl.source_annotation, placed.params, width, height, Interpolation::kNearest);
    placed.mask = source_region(placed.annotation, tau);
    if (placed.mask.count() >= static_cast<std::size_t>(ranges.min_visible_source_px)) {
      return placed;
    }
  }
  return std::nullopt;
}

ordered_json affine_json(const AffineParams& p) {
  return ordered_json{{"scale", p.scale},     {"rotation", p.rotation}, {"tx", p.tx},
                      {"ty", p.ty},           {"shear_x", p.shear_x},   {"shear_y", p.shear_y}};
}

ordered_json flare_json(const FlareRecord& f, bool full) {
  ordered_json j;
  j["template"] = f.template_name;
  j["affine"] = affine_json(f.affine);
  if (full) {
    j["attempts"] = f.attempts;
    j["visible_px"] = f.estimate.visible_px;
    j["centroid"] = {f.estimate.centroid_x, f.estimate.centroid_y};
  }
  j["d_i"] = f.estimate.depth;
  j["r_i"] = f.estimate.radius_px;
  j["theta_i"] = f.estimate.theta;
  j["gain"] = f.gain;
  return j;
}

ImagePlane expand_to_rgb(const ImagePlane& gray) {
  ImagePlane rgb(gray.width(), gray.height(), 3, gray.encoding());
  for (int y = 0; y < gray.height(); ++y) {
    for (int x = 0; x < gray.width(); ++x) {
      for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = gray.at(x, y);
    }
  }
  return rgb;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.flare_count.min < 1 || cfg.flare_count.min > cfg.flare_count.max) {
    throw InvalidArgument("flare count range must satisfy 1 <= min <= max");
  }
  check_range(cfg.gamma, "gamma");
  if (cfg.gamma.min < 1.0 || cfg.gamma.max > 3.0) throw InvalidArgument("gamma range must lie in [1, 3]");
  check_range(cfg.noise_sigma, "noise sigma");
  if (cfg.noise_sigma.min < 0.0) throw InvalidArgument("noise sigma must be >= 0");
  if (!(cfg.fov_deg > 0.0 && cfg.fov_deg < 180.0)) {
    throw InvalidArgument("field of view must lie in (0, 180) degrees");
  }
  validate(cfg.affine);
  if (!(cfg.tau >= 0.0 && cfg.tau < 1.0)) throw InvalidArgument("tau must lie in [0, 1)");
  if (cfg.gain_clamp && !(cfg.gain_clamp->min >= 0.0 && cfg.gain_clamp->min <= cfg.gain_clamp->max)) {
    throw InvalidArgument("gain clamp must satisfy 0 <= min <= max");
  }
  if (cfg.fixed_gain && !(*cfg.fixed_gain >= 0.0 && std::isfinite(*cfg.fixed_gain))) {
    throw InvalidArgument("fixed gain must be finite and >= 0");
  }
  if (cfg.output_bit_depth != 8 && cfg.output_bit_depth != 16) {
    throw InvalidArgument("output bit depth must be 8 or 16");
  }
}

SynthPair synth_one(const ImagePlane& background, const DepthMap& depth,
                    std::span<const FlareTemplate> templates, const SynthConfig& cfg,
                    std::uint64_t index, std::uint64_t salt) {
  validate(cfg);
  if (templates.empty()) throw InvalidArgument("template pool is empty");
  if (background.channels() != 3) throw InvalidArgument("background must be RGB");
  const int width = background.width();
  const int height = background.height();
  if (depth.width() != width || depth.height() != height) {
    throw DimensionMismatch("depth map does not match the background size");
  }

  Rng rng(derive_seed({cfg.seed, index, salt}));
  SynthPair pair;
  SynthMeta& meta = pair.meta;
  meta.seed = cfg.seed;
  meta.index = index;
  meta.salt = salt;
  meta.fov_deg = cfg.fov_deg;
  meta.gamma = rng.uniform(cfg.gamma.min, cfg.gamma.max);
  meta.noise_sigma = rng.uniform(cfg.noise_sigma.min, cfg.noise_sigma.max);
  meta.requested_flares =
      static_cast<int>(rng.uniform_int(cfg.flare_count.min, cfg.flare_count.max));

  std::vector<std::size_t> picks(meta.requested_flares);
  const auto last = static_cast<std::int64_t>(templates.size()) - 1;
  if (cfg.same_template) {
    std::fill(picks.begin(), picks.end(), static_cast<std::size_t>(rng.uniform_int(0, last)));
  } else {
    for (auto& p : picks) p = static_cast<std::size_t>(rng.uniform_int(0, last));
  }

  // Linear, noisy background; this is the ground truth.
  ImagePlane bg = background.encoding() == Encoding::kGammaEncoded
                      ? to_linear(background, meta.gamma)
                      : background;
  if (meta.noise_sigma > 0.0) {
    Rng noise(derive_seed({cfg.seed, index, salt, kNoiseStream}));
    for (double& v : bg.values()) v += meta.noise_sigma * noise.normal();
    bg = clip01(bg);
  }

  CameraModel cam{cfg.fov_deg, width, height};
  meta.mean_depth = mean_depth(depth);
  AffineRanges ranges = cfg.affine;
  if (cfg.translation_from_canvas) {
    const AffineRanges canvas = AffineRanges::defaults_for(width, height);
    ranges.tx = canvas.tx;
    ranges.ty = canvas.ty;
  }

  ImagePlane flare_sum(width, height, 3);
  ImagePlane source_sum(width, height, 3);
  RegionMask source_mask(width, height);

  for (int i = 0; i < meta.requested_flares; ++i) {
    const FlareTemplate& tpl = templates[picks[i]];
    Rng flare_rng(derive_seed({cfg.seed, index, salt, static_cast<std::uint64_t>(i) + 1}));
    auto placed = place_flare(tpl, ranges, width, height, cfg.tau, flare_rng);
    if (!placed) {
      ++meta.skipped_flares;
      continue;
    }
    FlareRecord record;
    record.template_name = tpl.name;
    record.affine = placed->params;
    record.attempts = placed->attempts;
    record.estimate = estimate_spatial(placed->mask, depth, cam);
    record.gain = cfg.fixed_gain ? *cfg.fixed_gain
                                 : bam_gain(record.estimate, meta.mean_depth, cam, cfg.gain_clamp);

    const ImagePlane gained = apply_gain(
        apply_affine(tpl.flare, placed->params, width, height, Interpolation::kBilinear),
        record.gain);
    auto sum = flare_sum.values();
    auto src = source_sum.values();
    const auto g = gained.values();
    const auto annotation = placed->annotation.values();
    for (std::size_t k = 0; k < sum.size(); ++k) {
      sum[k] += g[k];
      src[k] += g[k] * annotation[k / 3];
    }
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        if (placed->mask.at(x, y)) source_mask.set(x, y, true);
      }
    }
    meta.flares.push_back(std::move(record));
  }
  if (meta.flares.empty()) {
    throw SynthesisSkipped("pair " + std::to_string(index) + ": no flare passed the visibility check");
  }

  // Clip(B + sum of flares).
  ImagePlane input(width, height, 3);
  ImagePlane with_source(width, height, 3);
  {
    const auto b = bg.values();
    const auto f = flare_sum.values();
    const auto s = source_sum.values();
    auto in = input.values();
    auto ws = with_source.values();
    for (std::size_t k = 0; k < b.size(); ++k) {
      in[k] = b[k] + f[k];
      ws[k] = b[k] + s[k];
    }
    for (std::size_t p = 0; p < bg.pixel_count(); ++p) {
      bool over = false;
      bool flare_over = false;
      for (int c = 0; c < 3; ++c) {
        over |= in[3 * p + c] > 1.0;
        flare_over |= f[3 * p + c] > 1.0;
      }
      meta.overflow_px += over;
      meta.flare_overflow_px += flare_over;
    }
  }
  input = clip01(input);

  pair.input = to_encoded(input, meta.gamma);
  pair.gt_background = to_encoded(bg, meta.gamma);
  if (cfg.emit_source_in_gt) pair.gt_with_source = to_encoded(clip01(with_source), meta.gamma);
  pair.flare_layer = to_encoded(clip01(flare_sum), meta.gamma);
  pair.source_mask = std::move(source_mask);
  pair.linear = {std::move(bg), std::move(flare_sum), std::move(input)};
  return pair;
}

Corpus load_corpus(const std::filesystem::path& background_dir,
                   const std::filesystem::path& depth_dir) {
  if (!std::filesystem::is_directory(background_dir)) {
    throw IoError("background directory not found: " + background_dir.string());
  }
  if (!std::filesystem::is_directory(depth_dir)) {
    throw IoError("depth directory not found: " + depth_dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(background_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  Corpus corpus;
  for (const auto& file : files) {
    const std::string stem = file.stem().string();
    const auto depth_path = depth_dir / (stem + ".png");
    if (!std::filesystem::exists(depth_path)) {
      corpus.missing_depth.push_back(stem);
      continue;
    }
    Background bg;
    bg.stem = stem;
    bg.image = load_image(file, Encoding::kGammaEncoded);
    if (bg.image.channels() == 1) bg.image = expand_to_rgb(bg.image);
    bg.depth = load_depth(depth_path);
    if (bg.depth.width() != bg.image.width() || bg.depth.height() != bg.image.height()) {
      throw DimensionMismatch("depth map for '" + stem + "' does not match the background size");
    }
    corpus.backgrounds.push_back(std::move(bg));
  }
  return corpus;
}

std::string pair_stem(std::uint64_t index) {
  std::ostringstream s;
  s.width(6);
  s.fill('0');
  s << index;
  return s.str();
}

std::string meta_json(const SynthMeta& meta) {
  ordered_json j;
  j["index"] = meta.index;
  j["salt"] = meta.salt;
  j["seed"] = meta.seed;
  j["background"] = meta.background;
  j["gamma"] = meta.gamma;
  j["noise_sigma"] = meta.noise_sigma;
  j["fov_deg"] = meta.fov_deg;
  j["mean_depth"] = meta.mean_depth;
  j["n"] = meta.flares.size();
  j["requested_flares"] = meta.requested_flares;
  j["skipped_flares"] = meta.skipped_flares;
  j["overflow_px"] = meta.overflow_px;
  j["flare_overflow_px"] = meta.flare_overflow_px;
  ordered_json flares = ordered_json::array();
  for (const auto& f : meta.flares) flares.push_back(flare_json(f, true));
  j["flares"] = flares;
  return j.dump(2) + "\n";
}

BatchResult synth_batch(std::span<const Background> backgrounds,
                        std::span<const FlareTemplate> templates, const SynthConfig& cfg, int count,
                        const std::filesystem::path& out, int workers, const ProgressFn& progress) {
  validate(cfg);
  if (count < 1) throw InvalidArgument("pair count must be >= 1");
  if (backgrounds.empty()) throw InvalidArgument("no backgrounds with matching depth maps");
  if (templates.empty()) throw InvalidArgument("template pool is empty");
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec || !std::filesystem::is_directory(out)) throw IoError("cannot create output directory " + out.string());

  std::vector<std::optional<SynthMeta>> results(count);
  std::mutex progress_mutex;
  int finished = 0;

  parallel_for(results.size(), workers, [&](std::size_t i) {
    const std::uint64_t index = i;
    Rng pick(derive_seed({cfg.seed, index, kBackgroundStream}));
    const Background& bg = backgrounds[static_cast<std::size_t>(
        pick.uniform_int(0, static_cast<std::int64_t>(backgrounds.size()) - 1))];

    std::optional<SynthPair> pair;
    for (std::uint64_t salt = 0; salt < kMaxSalts && !pair; ++salt) {
      try {
        pair = synth_one(bg.image, bg.depth, templates, cfg, index, salt);
      } catch (const SynthesisSkipped&) {
      }
    }
    if (pair) {
      pair->meta.background = bg.stem;
      const std::string stem = pair_stem(index);
      save_image(pair->input, out / (stem + "_input.png"), cfg.output_bit_depth);
      save_image(pair->gt_background, out / (stem + "_gt.png"), cfg.output_bit_depth);
      if (cfg.emit_source_in_gt) {
        save_image(pair->gt_with_source, out / (stem + "_gt_src.png"), cfg.output_bit_depth);
      }
      save_image(pair->flare_layer, out / (stem + "_flare.png"), cfg.output_bit_depth);
      save_mask(pair->source_mask, out / (stem + "_mask.png"));
      write_text(out / (stem + "_meta.json"), meta_json(pair->meta));
      results[i] = std::move(pair->meta);
    }
    if (progress) {
      std::lock_guard lock(progress_mutex);
      progress(++finished);
    }
  });

  BatchResult result;
  std::string manifest;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i]) {
      ++result.skipped;
      continue;
    }
    const SynthMeta& meta = *results[i];
    const std::string stem = pair_stem(i);
    ordered_json j;
    j["index"] = meta.index;
    j["input"] = stem + "_input.png";
    j["gt"] = stem + "_gt.png";
    if (cfg.emit_source_in_gt) j["gt_src"] = stem + "_gt_src.png";
    j["flare"] = stem + "_flare.png";
    j["mask"] = stem + "_mask.png";
    j["meta"] = stem + "_meta.json";
    j["background"] = meta.background;
    j["gamma"] = meta.gamma;
    j["noise_sigma"] = meta.noise_sigma;
    j["fov_deg"] = meta.fov_deg;
    j["n"] = meta.flares.size();
    j["overflow_px"] = meta.overflow_px;
    ordered_json flares = ordered_json::array();
    for (const auto& f : meta.flares) flares.push_back(flare_json(f, false));
    j["flares"] = flares;
    manifest += j.dump() + "\n";
    ++result.written;
    result.overflow_px += meta.overflow_px;
  }
  result.manifest = out / "manifest.jsonl";
  write_text(result.manifest, manifest);
  return result;
}

}  // namespace flaresynth
