#include "flaresynth/template_forge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "flaresynth/errors.hpp"
#include "flaresynth/parallel.hpp"
#include "flaresynth/png_io.hpp"
#include "flaresynth/random.hpp"
#include "json.hpp"

namespace flaresynth {
namespace {

using std::numbers::pi;
using ordered_json = nlohmann::ordered_json;

constexpr int kMinCanvas = 4;
constexpr double kMinSourceRadiusPx = 2.0;
constexpr int kMaxFieldResamples = 16;
// Value of exp(-r^2 / 2 sigma^2) at the 4-sigma cutoff, subtracted so profiles reach 0 there.
const double kTail = std::exp(-8.0);

double smoothstep(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Gaussian falloff shifted and rescaled to hit exactly 0 at 4 sigma.
double truncated_gaussian(double dist, double sigma) {
  if (dist >= 4.0 * sigma) return 0.0;
  const double g = std::exp(-dist * dist / (2.0 * sigma * sigma));
  return (g - kTail) / (1.0 - kTail);
}

double unit_length(const FlareRecipe& r) { return std::min(r.width, r.height); }

Vec2 to_pixels(const FlareRecipe& r, Vec2 normalized) {
  return {normalized.x * r.width, normalized.y * r.height};
}

// Filled disc with a smooth edge: 1 inside radius - edge, 0 from radius outward.
double soft_disc(double dist, double radius) {
  const double edge = std::min(1.5, 0.5 * radius);
  if (dist <= radius - edge) return 1.0;
  if (dist >= radius) return 0.0;
  return smoothstep((radius - dist) / edge);
}

// Distance from the center of a regular polygon to its outline along `angle`.
double polygon_extent(double radius, int sides, double rotation, double angle) {
  const double sector = 2.0 * pi / sides;
  double a = std::fmod(angle - rotation, sector);
  if (a < 0) a += sector;
  return radius * std::cos(pi / sides) / std::cos(a - pi / sides);
}

struct Ghost {
  Vec2 center_px;
  double radius_px;
  int sides;
  double rotation;
  Rgb tint;
};

std::vector<Ghost> layout_ghosts(const FlareRecipe& r) {
  std::vector<Ghost> ghosts;
  const auto centers = ghost_centers(r);
  for (int k = 0; k < r.ghost_count; ++k) {
    Rng rng(derive_seed({r.seed, 0x67686f7374ULL, static_cast<std::uint64_t>(k)}));
    Ghost g;
    g.center_px = to_pixels(r, centers[k]);
    g.radius_px = r.ghost_radius * unit_length(r) * rng.uniform(0.7, 1.3);
    g.sides = r.ghost_shapes[k].sides;
    g.rotation = rng.uniform(0.0, 2.0 * pi);
    for (double& c : g.tint) c = rng.uniform(0.45, 1.0);
    ghosts.push_back(g);
  }
  return ghosts;
}

double ghost_coverage(const Ghost& g, double px, double py) {
  const double dx = px - g.center_px.x;
  const double dy = py - g.center_px.y;
  const double rho = std::hypot(dx, dy);
  const double extent =
      g.sides == 0 ? g.radius_px : polygon_extent(g.radius_px, g.sides, g.rotation, std::atan2(dy, dx));
  const double edge = std::max(1.0, 0.1 * g.radius_px);
  if (rho >= extent) return 0.0;
  // Iris ghosts are slightly brighter towards the rim.
  const double rim = 0.75 + 0.25 * std::min(rho / extent, 1.0);
  return rim * smoothstep((extent - rho) / edge);
}

std::uint64_t draw_attempt_seed(std::uint64_t seed, std::uint64_t index, std::uint64_t field) {
  return derive_seed({seed, index, field});
}

}  // namespace

std::string to_string(GhostShape shape) {
  return shape.sides == 0 ? "circle" : "polygon-" + std::to_string(shape.sides);
}

GhostShape parse_ghost_shape(const std::string& text) {
  if (text == "circle") return {0};
  const std::string prefix = "polygon-";
  if (text.rfind(prefix, 0) == 0) {
    try {
      const int sides = std::stoi(text.substr(prefix.size()));
      if (sides >= 3) return {sides};
    } catch (const std::exception&) {
    }
  }
  throw InvalidArgument("unknown ghost shape '" + text + "'");
}

std::string recipe_violation(const FlareRecipe& r) {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  auto unit = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; };
  if (r.width < kMinCanvas || r.height < kMinCanvas) return "canvas is degenerate";
  if (!unit(r.source_pos.x) || !unit(r.source_pos.y)) return "source_pos outside [0,1]^2";
  if (!positive(r.source_radius)) return "source_radius must be > 0";
  if (r.source_radius * unit_length(r) < kMinSourceRadiusPx) return "source_radius below 2 px";
  if (!positive(r.glare_sigma)) return "glare_sigma must be > 0";
  if (!std::all_of(r.glare_tint.begin(), r.glare_tint.end(), unit)) return "glare_tint outside [0,1]";
  if (!unit(r.glare_strength)) return "glare_strength outside [0,1]";
  if (r.streak_count < 0) return "streak_count must be >= 0";
  if (static_cast<int>(r.streak_angles.size()) != r.streak_count) {
    return "streak_angles length must equal streak_count";
  }
  if (!std::all_of(r.streak_angles.begin(), r.streak_angles.end(),
                   [](double a) { return std::isfinite(a); })) {
    return "streak angles must be finite";
  }
  if (!positive(r.streak_length)) return "streak_length must be > 0";
  if (!positive(r.streak_width)) return "streak_width must be > 0";
  if (!unit(r.streak_strength)) return "streak_strength outside [0,1]";
  if (r.ghost_count < 0) return "ghost_count must be >= 0";
  if (static_cast<int>(r.ghost_shapes.size()) != r.ghost_count) {
    return "ghost_shapes length must equal ghost_count";
  }
  for (const auto& s : r.ghost_shapes) {
    if (s.sides != 0 && s.sides < 3) return "ghost polygon needs at least 3 sides";
  }
  if (!positive(r.ghost_spacing)) return "ghost_spacing must be > 0";
  if (!(r.ghost_alpha > 0.0 && r.ghost_alpha <= 1.0)) return "ghost_alpha outside (0,1]";
  if (!positive(r.ghost_radius)) return "ghost_radius must be > 0";
  return {};
}

void validate_recipe(const FlareRecipe& recipe) {
  if (auto why = recipe_violation(recipe); !why.empty()) {
    throw InvalidArgument("invalid flare recipe: " + why);
  }
}

std::vector<Vec2> ghost_centers(const FlareRecipe& r) {
  std::vector<Vec2> centers;
  centers.reserve(r.ghost_count);
  const Vec2 towards_center{0.5 - r.source_pos.x, 0.5 - r.source_pos.y};
  for (int k = 1; k <= r.ghost_count; ++k) {
    const double step = k * r.ghost_spacing;
    centers.push_back({r.source_pos.x + step * towards_center.x,
                       r.source_pos.y + step * towards_center.y});
  }
  return centers;
}

FlareTemplate generate_template(const FlareRecipe& recipe, std::string type_id) {
  validate_recipe(recipe);
  const int w = recipe.width;
  const int h = recipe.height;
  const double unit = unit_length(recipe);
  const Vec2 src = to_pixels(recipe, recipe.source_pos);
  const double source_r = recipe.source_radius * unit;
  const double glare_s = recipe.glare_sigma * unit;
  const double streak_len = recipe.streak_length * unit;
  const double streak_w = recipe.streak_width * unit;

  std::vector<Vec2> streak_dirs;
  for (double a : recipe.streak_angles) streak_dirs.push_back({std::cos(a), std::sin(a)});
  Rgb streak_tint;
  for (int c = 0; c < 3; ++c) streak_tint[c] = 0.5 * (1.0 + recipe.glare_tint[c]);
  const auto ghosts = layout_ghosts(recipe);

  FlareTemplate tpl;
  tpl.type_id = std::move(type_id);
  tpl.recipe = recipe;
  tpl.flare = ImagePlane(w, h, 3);
  tpl.source_annotation = ImagePlane(w, h, 1);

  for (int y = 0; y < h; ++y) {
    const double py = y + 0.5;
    for (int x = 0; x < w; ++x) {
      const double px = x + 0.5;
      const double dx = px - src.x;
      const double dy = py - src.y;
      const double dist = std::hypot(dx, dy);
      Rgb rgb{0.0, 0.0, 0.0};

      const double disc = soft_disc(dist, source_r);
      tpl.source_annotation.at(x, y) = disc;
      for (double& c : rgb) c += disc;

      const double glare = recipe.glare_strength * truncated_gaussian(dist, glare_s);
      for (int c = 0; c < 3; ++c) rgb[c] += glare * recipe.glare_tint[c];

      for (const Vec2& u : streak_dirs) {
        const double along = std::abs(dx * u.x + dy * u.y);
        if (along >= streak_len) continue;
        const double across = std::abs(-dx * u.y + dy * u.x);
        const double profile = truncated_gaussian(across, streak_w);
        if (profile <= 0.0) continue;
        const double fade = (1.0 - along / streak_len) * (1.0 - along / streak_len);
        const double v = recipe.streak_strength * fade * profile;
        for (int c = 0; c < 3; ++c) rgb[c] += v * streak_tint[c];
      }

      for (const Ghost& g : ghosts) {
        const double cover = ghost_coverage(g, px, py);
        if (cover <= 0.0) continue;
        for (int c = 0; c < 3; ++c) rgb[c] += recipe.ghost_alpha * cover * g.tint[c];
      }

      for (int c = 0; c < 3; ++c) tpl.flare.at(x, y, c) = std::min(rgb[c], 1.0);
    }
  }
  return tpl;
}

FlareRecipe jitter_recipe(const FlareRecipe& base, const JitterRanges& jitter, std::uint64_t seed,
                          std::uint64_t index) {
  FlareRecipe r = base;
  std::uint64_t field = 0;

  // Draws a candidate for one field until `apply` yields a valid recipe.
  auto jitter_field = [&](const char* name, auto&& apply) {
    Rng rng(draw_attempt_seed(seed, index, field++));
    const FlareRecipe before = r;
    for (int attempt = 0; attempt < kMaxFieldResamples; ++attempt) {
      r = before;
      apply(rng);
      if (recipe_violation(r).empty()) return;
    }
    throw InvalidArgument("template " + std::to_string(index) + ": jitter of '" + name +
                          "' produced no valid recipe after 16 draws");
  };
  auto relative = [](Rng& rng, double value, double range) {
    return value * (1.0 + rng.uniform(-range, range));
  };

  jitter_field("source_pos", [&](Rng& rng) {
    r.source_pos.x += rng.uniform(-jitter.source_pos, jitter.source_pos);
    r.source_pos.y += rng.uniform(-jitter.source_pos, jitter.source_pos);
  });
  jitter_field("source_radius",
               [&](Rng& rng) { r.source_radius = relative(rng, r.source_radius, jitter.source_radius); });
  jitter_field("glare_sigma",
               [&](Rng& rng) { r.glare_sigma = relative(rng, r.glare_sigma, jitter.glare_sigma); });
  jitter_field("glare_strength", [&](Rng& rng) {
    r.glare_strength = relative(rng, r.glare_strength, jitter.glare_strength);
  });
  jitter_field("glare_tint", [&](Rng& rng) {
    for (double& c : r.glare_tint) c += rng.uniform(-jitter.tint, jitter.tint);
  });
  jitter_field("streak_angles", [&](Rng& rng) {
    for (double& a : r.streak_angles) a += rng.uniform(-jitter.streak_angle, jitter.streak_angle);
  });
  jitter_field("streak_length",
               [&](Rng& rng) { r.streak_length = relative(rng, r.streak_length, jitter.streak_length); });
  jitter_field("streak_width",
               [&](Rng& rng) { r.streak_width = relative(rng, r.streak_width, jitter.streak_width); });
  jitter_field("streak_strength", [&](Rng& rng) {
    r.streak_strength = relative(rng, r.streak_strength, jitter.streak_strength);
  });
  jitter_field("ghost_spacing",
               [&](Rng& rng) { r.ghost_spacing = relative(rng, r.ghost_spacing, jitter.ghost_spacing); });
  jitter_field("ghost_alpha",
               [&](Rng& rng) { r.ghost_alpha = relative(rng, r.ghost_alpha, jitter.ghost_alpha); });
  jitter_field("ghost_radius",
               [&](Rng& rng) { r.ghost_radius = relative(rng, r.ghost_radius, jitter.ghost_radius); });
  return r;
}

std::vector<FlareTemplate> generate_batch(const std::string& type_id, const FlareRecipe& base,
                                          int count, const JitterRanges& jitter,
                                          std::uint64_t seed, int workers) {
  if (count < 1) throw InvalidArgument("template count must be >= 1");
  validate_recipe(base);
  std::vector<FlareTemplate> batch(count);
  parallel_for(batch.size(), workers, [&](std::size_t i) {
    batch[i] = generate_template(jitter_recipe(base, jitter, seed, i), type_id);
    std::ostringstream name;
    name << type_id << '_';
    name.width(4);
    name.fill('0');
    name << i;
    batch[i].name = name.str();
  });
  return batch;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

std::vector<GhostShape> shapes(std::initializer_list<int> sides) {
  std::vector<GhostShape> out;
  for (int s : sides) out.push_back({s});
  return out;
}

std::vector<double> star(int lines, double offset = 0.0) {
  std::vector<double> angles;
  for (int i = 0; i < lines; ++i) angles.push_back(offset + pi * i / lines);
  return angles;
}

void set_streaks(FlareRecipe& r, std::vector<double> angles) {
  r.streak_count = static_cast<int>(angles.size());
  r.streak_angles = std::move(angles);
}

void set_ghosts(FlareRecipe& r, std::vector<GhostShape> s) {
  r.ghost_count = static_cast<int>(s.size());
  r.ghost_shapes = std::move(s);
}

using PresetFn = void (*)(FlareRecipe&);

const std::vector<std::pair<std::string, PresetFn>>& preset_table() {
  static const std::vector<std::pair<std::string, PresetFn>> table = {
      {"basic-glare", [](FlareRecipe& r) { r.glare_sigma = 0.08; }},
      {"basic-streak",
       [](FlareRecipe& r) {
         set_streaks(r, {0.0});
         r.streak_length = 0.6;
         r.streak_width = 0.003;
       }},
      {"basic-star4", [](FlareRecipe& r) { set_streaks(r, star(2)); }},
      {"basic-star6", [](FlareRecipe& r) { set_streaks(r, star(3, pi / 6)); }},
      {"basic-star8",
       [](FlareRecipe& r) {
         set_streaks(r, star(4, pi / 8));
         r.streak_length = 0.25;
       }},
      {"basic-iris-circle", [](FlareRecipe& r) { set_ghosts(r, shapes({0, 0, 0, 0})); }},
      {"basic-iris-hex", [](FlareRecipe& r) { set_ghosts(r, shapes({6, 6, 6, 6})); }},
      {"basic-iris-pent", [](FlareRecipe& r) { set_ghosts(r, shapes({5, 5, 5, 5})); }},
      {"basic-halo",
       [](FlareRecipe& r) {
         r.glare_sigma = 0.18;
         r.glare_strength = 0.35;
         r.glare_tint = {1.0, 0.75, 0.45};
       }},
      {"xt-star4-circles",
       [](FlareRecipe& r) {
         set_streaks(r, star(2, pi / 4));
         set_ghosts(r, shapes({0, 0, 0}));
       }},
      {"xt-star6-hex",
       [](FlareRecipe& r) {
         set_streaks(r, star(3));
         set_ghosts(r, shapes({6, 6, 6, 6, 6}));
         r.ghost_spacing = 0.35;
       }},
      {"xt-star8-pent",
       [](FlareRecipe& r) {
         set_streaks(r, star(4));
         set_ghosts(r, shapes({5, 5, 5}));
         r.ghost_spacing = 0.6;
       }},
      {"xt-anamorphic-ghosts",
       [](FlareRecipe& r) {
         set_streaks(r, {0.0});
         r.streak_length = 0.8;
         r.glare_tint = {0.6, 0.8, 1.0};
         set_ghosts(r, shapes({0, 0, 0, 0, 0}));
         r.ghost_spacing = 0.4;
       }},
      {"xt-dense-ghosts",
       [](FlareRecipe& r) {
         set_ghosts(r, shapes({0, 6, 0, 6, 8, 0, 6, 0}));
         r.ghost_spacing = 0.25;
         r.ghost_radius = 0.025;
       }},
      {"xt-star12",
       [](FlareRecipe& r) {
         set_streaks(r, star(6));
         r.streak_length = 0.2;
         set_ghosts(r, shapes({6, 6, 6}));
       }},
      {"xt-blue-streak",
       [](FlareRecipe& r) {
         r.glare_tint = {0.45, 0.65, 1.0};
         set_streaks(r, {0.0});
         r.streak_length = 0.7;
         set_ghosts(r, shapes({8, 8, 8, 8}));
       }},
      {"xt-warm-long",
       [](FlareRecipe& r) {
         r.glare_tint = {1.0, 0.7, 0.4};
         set_streaks(r, star(2, 0.2));
         r.streak_length = 0.55;
         set_ghosts(r, shapes({0, 0}));
         r.ghost_radius = 0.07;
         r.ghost_alpha = 0.1;
       }},
      {"xt-chain",
       [](FlareRecipe& r) {
         set_ghosts(r, shapes({0, 0, 0, 0, 0, 0, 0, 0, 0, 0}));
         r.ghost_spacing = 0.2;
         r.ghost_radius = 0.015;
         r.ghost_alpha = 0.25;
       }},
      {"xt-mixed-polygons",
       [](FlareRecipe& r) {
         set_streaks(r, star(3, 0.3));
         set_ghosts(r, shapes({3, 4, 5, 6, 7, 8}));
         r.ghost_spacing = 0.3;
       }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : preset_table()) out.push_back(name);
    return out;
  }();
  return names;
}

bool is_preset(const std::string& type_id) {
  const auto& names = preset_names();
  return std::find(names.begin(), names.end(), type_id) != names.end();
}

FlareRecipe preset_recipe(const std::string& type_id, int width, int height) {
  const auto& table = preset_table();
  for (std::size_t i = 0; i < table.size(); ++i) {
    if (table[i].first != type_id) continue;
    FlareRecipe r;
    r.width = width;
    r.height = height;
    r.source_pos = {0.3, 0.35};
    r.seed = i + 1;
    table[i].second(r);
    // Keep the light source at least a few pixels wide on small canvases.
    r.source_radius = std::max(r.source_radius, 3.0 / std::min(width, height));
    return r;
  }
  std::string valid;
  for (const auto& name : preset_names()) valid += (valid.empty() ? "" : ", ") + name;
  throw InvalidArgument("unknown flare type '" + type_id + "'; valid presets: " + valid);
}

// ---------------------------------------------------------------------------
// Disk format
// ---------------------------------------------------------------------------

namespace {

ordered_json recipe_to_json(const FlareRecipe& r) {
  ordered_json j;
  j["canvas"] = {{"width", r.width}, {"height", r.height}};
  j["source_pos"] = {r.source_pos.x, r.source_pos.y};
  j["source_radius"] = r.source_radius;
  j["glare_sigma"] = r.glare_sigma;
  j["glare_tint"] = r.glare_tint;
  j["glare_strength"] = r.glare_strength;
  j["streak_count"] = r.streak_count;
  j["streak_angles"] = r.streak_angles;
  j["streak_length"] = r.streak_length;
  j["streak_width"] = r.streak_width;
  j["streak_strength"] = r.streak_strength;
  j["ghost_count"] = r.ghost_count;
  j["ghost_spacing"] = r.ghost_spacing;
  ordered_json ghost_shapes = ordered_json::array();
  for (const auto& s : r.ghost_shapes) ghost_shapes.push_back(to_string(s));
  j["ghost_shapes"] = ghost_shapes;
  j["ghost_alpha"] = r.ghost_alpha;
  j["ghost_radius"] = r.ghost_radius;
  j["seed"] = r.seed;
  return j;
}

FlareRecipe recipe_from_json(const ordered_json& j) {
  FlareRecipe r;
  r.width = j.at("canvas").at("width").get<int>();
  r.height = j.at("canvas").at("height").get<int>();
  r.source_pos = {j.at("source_pos").at(0).get<double>(), j.at("source_pos").at(1).get<double>()};
  r.source_radius = j.at("source_radius").get<double>();
  r.glare_sigma = j.at("glare_sigma").get<double>();
  r.glare_tint = j.at("glare_tint").get<Rgb>();
  r.glare_strength = j.at("glare_strength").get<double>();
  r.streak_count = j.at("streak_count").get<int>();
  r.streak_angles = j.at("streak_angles").get<std::vector<double>>();
  r.streak_length = j.at("streak_length").get<double>();
  r.streak_width = j.at("streak_width").get<double>();
  r.streak_strength = j.at("streak_strength").get<double>();
  r.ghost_count = j.at("ghost_count").get<int>();
  r.ghost_spacing = j.at("ghost_spacing").get<double>();
  r.ghost_shapes.clear();
  for (const auto& s : j.at("ghost_shapes")) r.ghost_shapes.push_back(parse_ghost_shape(s));
  r.ghost_alpha = j.at("ghost_alpha").get<double>();
  r.ghost_radius = j.at("ghost_radius").get<double>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

constexpr std::string_view kFlareSuffix = "_flare.png";

}  // namespace

std::string template_meta_json(const FlareTemplate& tpl) {
  ordered_json j;
  j["name"] = tpl.name;
  j["type_id"] = tpl.type_id;
  j["seed"] = tpl.recipe.seed;
  j["recipe"] = recipe_to_json(tpl.recipe);
  return j.dump(2) + "\n";
}

void save_template(const FlareTemplate& tpl, const std::filesystem::path& dir) {
  if (tpl.name.empty()) throw InvalidArgument("template needs a name before it can be saved");
  std::filesystem::create_directories(dir);
  save_image(tpl.flare, dir / (tpl.name + "_flare.png"), 16);
  save_image(tpl.source_annotation, dir / (tpl.name + "_source.png"), 16);
  std::ofstream meta(dir / (tpl.name + "_meta.json"), std::ios::binary);
  if (!meta) throw IoError("cannot write template metadata for " + tpl.name);
  meta << template_meta_json(tpl);
}

FlareTemplate load_template(const std::filesystem::path& dir, const std::string& name) {
  FlareTemplate tpl;
  tpl.name = name;
  tpl.flare = load_image(dir / (name + "_flare.png"), Encoding::kLinear);
  tpl.source_annotation = load_image(dir / (name + "_source.png"), Encoding::kLinear);
  if (tpl.flare.channels() != 3) throw IoError(name + ": flare image must be RGB");
  if (tpl.source_annotation.channels() != 1) throw IoError(name + ": source image must be gray");
  if (!tpl.flare.same_size(tpl.source_annotation.width(), tpl.source_annotation.height())) {
    throw IoError(name + ": flare and source images differ in size");
  }
  std::ifstream meta(dir / (name + "_meta.json"), std::ios::binary);
  if (!meta) throw IoError("missing metadata for template " + name);
  try {
    const ordered_json j = ordered_json::parse(meta);
    tpl.type_id = j.at("type_id").get<std::string>();
    tpl.recipe = recipe_from_json(j.at("recipe"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed metadata for template " + name + ": " + e.what());
  }
  return tpl;
}

std::vector<FlareTemplate> load_template_pool(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("template directory not found: " + dir.string());
  std::vector<std::string> names;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string file = entry.path().filename().string();
    if (file.size() > kFlareSuffix.size() && file.ends_with(kFlareSuffix)) {
      names.push_back(file.substr(0, file.size() - kFlareSuffix.size()));
    }
  }
  std::sort(names.begin(), names.end());
  std::vector<FlareTemplate> pool;
  for (const auto& name : names) pool.push_back(load_template(dir, name));
  return pool;
}

}  // namespace flaresynth
