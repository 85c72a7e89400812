#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "flaresynth/image.hpp"

namespace flaresynth {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Vec2&) const = default;
};

using Rgb = std::array<double, 3>;

// Iris ghost outline: sides == 0 is a circle, sides >= 3 a regular polygon.
struct GhostShape {
  int sides = 0;
  bool operator==(const GhostShape&) const = default;
};

std::string to_string(GhostShape shape);        // "circle" or "polygon-<k>"
GhostShape parse_ghost_shape(const std::string& text);

// Parameters of one procedural flare. Positions are normalized to the canvas
// ([0,1]^2, x by width and y by height); lengths are normalized to the shorter
// canvas side.
struct FlareRecipe {
  int width = 512;
  int height = 512;

  Vec2 source_pos{0.5, 0.5};
  double source_radius = 0.02;

  double glare_sigma = 0.06;
  Rgb glare_tint{1.0, 0.85, 0.65};
  double glare_strength = 0.6;

  int streak_count = 0;
  std::vector<double> streak_angles;
  double streak_length = 0.35;
  double streak_width = 0.004;
  double streak_strength = 0.7;

  int ghost_count = 0;
  double ghost_spacing = 0.5;
  std::vector<GhostShape> ghost_shapes;
  double ghost_alpha = 0.15;
  double ghost_radius = 0.04;

  std::uint64_t seed = 0;

  bool operator==(const FlareRecipe&) const = default;
};

// Empty string when the recipe is valid, otherwise the first violated rule.
std::string recipe_violation(const FlareRecipe& recipe);
void validate_recipe(const FlareRecipe& recipe);

struct FlareTemplate {
  std::string name;
  std::string type_id;
  FlareRecipe recipe;
  ImagePlane flare;              // RGB, additive over black, linear
  ImagePlane source_annotation;  // single channel, light-source disc only
};

// Ghost centers in normalized coordinates:
// source_pos + k * ghost_spacing * (center - source_pos), k = 1..ghost_count.
std::vector<Vec2> ghost_centers(const FlareRecipe& recipe);

FlareTemplate generate_template(const FlareRecipe& recipe, std::string type_id = "custom");

// Per-field jitter. Fields marked "absolute" add U(-r, r); all others scale the
// base value by 1 + U(-r, r).
struct JitterRanges {
  double source_pos = 0.2;  // absolute
  double source_radius = 0.3;
  double glare_sigma = 0.3;
  double glare_strength = 0.2;
  double tint = 0.1;          // absolute, per channel
  double streak_angle = 0.2;  // absolute, radians, per streak
  double streak_length = 0.3;
  double streak_width = 0.3;
  double streak_strength = 0.2;
  double ghost_spacing = 0.3;
  double ghost_alpha = 0.3;
  double ghost_radius = 0.3;

  static JitterRanges none() {
    return {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  }
};

// The recipe of batch element `index`, drawn from a generator seeded by
// (seed, index) alone. Invalid draws are resampled up to 16 times per field.
FlareRecipe jitter_recipe(const FlareRecipe& base, const JitterRanges& jitter, std::uint64_t seed,
                          std::uint64_t index);

std::vector<FlareTemplate> generate_batch(const std::string& type_id, const FlareRecipe& base,
                                          int count, const JitterRanges& jitter,
                                          std::uint64_t seed, int workers = 1);

// Built-in presets: 9 basic types and 10 composite "xt" types.
const std::vector<std::string>& preset_names();
bool is_preset(const std::string& type_id);
FlareRecipe preset_recipe(const std::string& type_id, int width = 512, int height = 512);

// <name>_flare.png (16-bit RGB), <name>_source.png (16-bit gray), <name>_meta.json.
void save_template(const FlareTemplate& tpl, const std::filesystem::path& dir);
FlareTemplate load_template(const std::filesystem::path& dir, const std::string& name);
// Every template in `dir`, sorted by name.
std::vector<FlareTemplate> load_template_pool(const std::filesystem::path& dir);

std::string template_meta_json(const FlareTemplate& tpl);

}  // namespace flaresynth
