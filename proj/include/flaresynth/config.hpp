#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "flaresynth/pipeline.hpp"

namespace flaresynth {

enum class Verbosity { kQuiet, kNormal, kVerbose };

// Everything `synth` needs: the synthesis parameters plus paths and execution settings.
struct PipelineConfig {
  SynthConfig synth;
  std::filesystem::path templates;
  std::filesystem::path backgrounds;
  std::filesystem::path depths;
  std::filesystem::path out;
  int count = 1;
  int workers = 1;
  bool strict = false;
  Verbosity verbosity = Verbosity::kNormal;
};

// Flat `key = value` text with dotted keys, '#' comments and blank lines.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(std::string_view text);
ConfigMap load_config_file(const std::filesystem::path& path);

// Applies every key to `cfg`; unknown keys and malformed values throw InvalidArgument.
void apply_config(const ConfigMap& values, PipelineConfig& cfg);

// One line per accepted key, for --help and the README.
std::string config_reference();

}  // namespace flaresynth
