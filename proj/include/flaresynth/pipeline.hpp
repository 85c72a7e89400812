#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flaresynth/geometry.hpp"
#include "flaresynth/illumination.hpp"
#include "flaresynth/image.hpp"
#include "flaresynth/template_forge.hpp"

namespace flaresynth {

struct IntRange {
  int min = 1;
  int max = 3;
  bool operator==(const IntRange&) const = default;
};

struct SynthConfig {
  IntRange flare_count{1, 3};
  bool same_template = false;
  Range gamma{1.8, 2.2};
  Range noise_sigma{0.0, 0.01};
  double fov_deg = 84.0;
  AffineRanges affine;
  // When set, affine.tx / affine.ty are replaced by a range spanning the background.
  bool translation_from_canvas = true;
  double tau = 0.5;
  std::optional<GainClamp> gain_clamp = GainClamp{};
  // Overrides the illumination-law gain for every flare (ablations, oracle tests).
  std::optional<double> fixed_gain;
  std::uint64_t seed = 0;
  bool emit_source_in_gt = true;
  int output_bit_depth = 16;
};

void validate(const SynthConfig& cfg);

struct FlareRecord {
  std::string template_name;
  AffineParams affine;
  int attempts = 0;
  SpatialEstimate estimate;
  double gain = 0.0;
};

struct SynthMeta {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::uint64_t salt = 0;
  std::string background;
  double gamma = 1.0;
  double noise_sigma = 0.0;
  double fov_deg = 0.0;
  double mean_depth = 0.0;
  int requested_flares = 0;
  int skipped_flares = 0;
  long overflow_px = 0;        // pixels where background + flares exceeded 1 in any channel
  long flare_overflow_px = 0;  // pixels where the flare layer alone exceeded 1
  std::vector<FlareRecord> flares;
};

struct SynthPair {
  // Output planes, encoded with meta.gamma.
  ImagePlane input;
  ImagePlane gt_background;
  ImagePlane gt_with_source;  // empty unless emit_source_in_gt
  ImagePlane flare_layer;     // clipped to [0,1]
  RegionMask source_mask;
  SynthMeta meta;

  // Linear-space planes before clipping and encoding.
  struct Linear {
    ImagePlane background;  // noisy background, the ground truth
    ImagePlane flare_sum;   // sum of gained flares, unclipped
    ImagePlane input;       // clip01(background + flare_sum)
  } linear;
};

// Generates pair `index`. All randomness comes from streams seeded by
// (cfg.seed, index, salt) and (cfg.seed, index, salt, flare). Throws
// SynthesisSkipped when every flare failed the visibility check.
SynthPair synth_one(const ImagePlane& background, const DepthMap& depth,
                    std::span<const FlareTemplate> templates, const SynthConfig& cfg,
                    std::uint64_t index, std::uint64_t salt = 0);

struct Background {
  std::string stem;
  ImagePlane image;  // RGB, gamma-encoded
  DepthMap depth;
};

struct Corpus {
  std::vector<Background> backgrounds;
  std::vector<std::string> missing_depth;  // background stems without a depth file
};

// Pairs <stem>.png in `background_dir` with <stem>.png in `depth_dir`.
// Grayscale backgrounds are expanded to RGB. Sorted by stem.
Corpus load_corpus(const std::filesystem::path& background_dir,
                   const std::filesystem::path& depth_dir);

struct BatchResult {
  int written = 0;
  int skipped = 0;
  long overflow_px = 0;
  std::filesystem::path manifest;
};

using ProgressFn = std::function<void(int finished)>;

// Writes `count` pairs plus manifest.jsonl into `out`. Output bytes do not depend on `workers`.
BatchResult synth_batch(std::span<const Background> backgrounds,
                        std::span<const FlareTemplate> templates, const SynthConfig& cfg, int count,
                        const std::filesystem::path& out, int workers = 1,
                        const ProgressFn& progress = {});

std::string pair_stem(std::uint64_t index);
std::string meta_json(const SynthMeta& meta);

}  // namespace flaresynth
