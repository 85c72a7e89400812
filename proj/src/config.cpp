#include "flaresynth/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "flaresynth/errors.hpp"

namespace flaresynth {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "': expected a number, got '" + value + "'");
}

long long to_integer(const std::string& key, const std::string& value) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw InvalidArgument("config key '" + key + "': expected an integer, got '" + value + "'");
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw InvalidArgument("config key '" + key + "': expected an unsigned integer, got '" + value + "'");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw InvalidArgument("config key '" + key + "': expected a boolean, got '" + value + "'");
}

using Setter = std::function<void(PipelineConfig&, const std::string& key, const std::string& value)>;

struct KeySpec {
  const char* key;
  const char* help;
  Setter set;
};

Setter real(double SynthConfig::*field) {
  return [field](PipelineConfig& c, const std::string& k, const std::string& v) {
    c.synth.*field = to_double(k, v);
  };
}

Setter range_bound(Range AffineRanges::*range, double Range::*bound, bool translation = false) {
  return [=](PipelineConfig& c, const std::string& k, const std::string& v) {
    (c.synth.affine.*range).*bound = to_double(k, v);
    if (translation) c.synth.translation_from_canvas = false;
  };
}

Setter synth_range(Range SynthConfig::*range, double Range::*bound) {
  return [=](PipelineConfig& c, const std::string& k, const std::string& v) {
    (c.synth.*range).*bound = to_double(k, v);
  };
}

GainClamp& clamp_of(PipelineConfig& c) {
  if (!c.synth.gain_clamp) c.synth.gain_clamp = GainClamp{};
  return *c.synth.gain_clamp;
}

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"seed", "root seed for every random draw",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.synth.seed = to_unsigned(k, v); }},
      {"count", "number of pairs to synthesize",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.count = static_cast<int>(to_integer(k, v)); }},
      {"workers", "worker threads (output is identical for any value)",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.workers = static_cast<int>(to_integer(k, v)); }},
      {"strict", "fail when a background has no depth map",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.strict = to_bool(k, v); }},
      {"verbosity", "quiet | normal | verbose",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         if (v == "quiet") c.verbosity = Verbosity::kQuiet;
         else if (v == "normal") c.verbosity = Verbosity::kNormal;
         else if (v == "verbose") c.verbosity = Verbosity::kVerbose;
         else throw InvalidArgument("config key '" + k + "': expected quiet, normal or verbose");
       }},
      {"paths.templates", "template directory",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.templates = v; }},
      {"paths.backgrounds", "background directory (<stem>.png)",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.backgrounds = v; }},
      {"paths.depths", "depth directory (<stem>.png, 16-bit gray)",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.depths = v; }},
      {"paths.out", "output directory",
       [](PipelineConfig& c, const std::string&, const std::string& v) { c.out = v; }},
      {"fov", "horizontal field of view in degrees, (0, 180)", real(&SynthConfig::fov_deg)},
      {"tau", "light-source annotation threshold", real(&SynthConfig::tau)},
      {"same_template", "use one template for every flare of an image",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.synth.same_template = to_bool(k, v); }},
      {"emit_source_in_gt", "also write <index>_gt_src.png",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.synth.emit_source_in_gt = to_bool(k, v); }},
      {"output.bitdepth", "8 or 16",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.synth.output_bit_depth = static_cast<int>(to_integer(k, v));
       }},
      {"flares.min", "minimum flares per image",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.synth.flare_count.min = static_cast<int>(to_integer(k, v));
       }},
      {"flares.max", "maximum flares per image",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.synth.flare_count.max = static_cast<int>(to_integer(k, v));
       }},
      {"gamma.min", "lower bound of the per-image gamma", synth_range(&SynthConfig::gamma, &Range::min)},
      {"gamma.max", "upper bound of the per-image gamma", synth_range(&SynthConfig::gamma, &Range::max)},
      {"noise.min", "lower bound of the per-image noise sigma", synth_range(&SynthConfig::noise_sigma, &Range::min)},
      {"noise.max", "upper bound of the per-image noise sigma", synth_range(&SynthConfig::noise_sigma, &Range::max)},
      {"gain_clamp.enabled", "clamp brightness gains",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         if (to_bool(k, v)) clamp_of(c);
         else c.synth.gain_clamp.reset();
       }},
      {"gain_clamp.min", "lower gain bound",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { clamp_of(c).min = to_double(k, v); }},
      {"gain_clamp.max", "upper gain bound",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { clamp_of(c).max = to_double(k, v); }},
      {"gain.fixed", "use this gain for every flare instead of the illumination law",
       [](PipelineConfig& c, const std::string& k, const std::string& v) { c.synth.fixed_gain = to_double(k, v); }},
      {"affine.scale.min", "", range_bound(&AffineRanges::scale, &Range::min)},
      {"affine.scale.max", "", range_bound(&AffineRanges::scale, &Range::max)},
      {"affine.rotation.min", "radians", range_bound(&AffineRanges::rotation, &Range::min)},
      {"affine.rotation.max", "radians", range_bound(&AffineRanges::rotation, &Range::max)},
      {"affine.tx.min", "pixels; setting any translation bound replaces the canvas-wide default",
       range_bound(&AffineRanges::tx, &Range::min, true)},
      {"affine.tx.max", "pixels", range_bound(&AffineRanges::tx, &Range::max, true)},
      {"affine.ty.min", "pixels", range_bound(&AffineRanges::ty, &Range::min, true)},
      {"affine.ty.max", "pixels", range_bound(&AffineRanges::ty, &Range::max, true)},
      {"affine.shear_x.min", "", range_bound(&AffineRanges::shear_x, &Range::min)},
      {"affine.shear_x.max", "", range_bound(&AffineRanges::shear_x, &Range::max)},
      {"affine.shear_y.min", "", range_bound(&AffineRanges::shear_y, &Range::min)},
      {"affine.shear_y.max", "", range_bound(&AffineRanges::shear_y, &Range::max)},
      {"affine.min_visible_source_px", "visible light-source pixels required to keep a placement",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.synth.affine.min_visible_source_px = static_cast<int>(to_integer(k, v));
       }},
      {"affine.max_retries", "placement attempts per flare",
       [](PipelineConfig& c, const std::string& k, const std::string& v) {
         c.synth.affine.max_retries = static_cast<int>(to_integer(k, v));
       }},
  };
  return specs;
}

}  // namespace

ConfigMap parse_config_text(std::string_view text) {
  ConfigMap values;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(content).substr(0, eq));
    const std::string value = trim(std::string_view(content).substr(eq + 1));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(line_no) + ": empty key");
    if (!values.emplace(key, value).second) {
      throw InvalidArgument("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return values;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str());
}

void apply_config(const ConfigMap& values, PipelineConfig& cfg) {
  const auto& specs = key_specs();
  // Keys are applied in table order so gain_clamp.enabled precedes its bounds.
  for (const auto& [key, value] : values) {
    const bool known = std::any_of(specs.begin(), specs.end(),
                                   [&](const KeySpec& s) { return key == s.key; });
    if (!known) throw InvalidArgument("unknown config key '" + key + "'");
  }
  for (const auto& spec : specs) {
    if (auto it = values.find(spec.key); it != values.end()) spec.set(cfg, it->first, it->second);
  }
}

std::string config_reference() {
  std::string out;
  for (const auto& spec : key_specs()) {
    out += "  ";
    out += spec.key;
    if (*spec.help) {
      out += "  ";
      out += spec.help;
    }
    out += "\n";
  }
  return out;
}

}  // namespace flaresynth
