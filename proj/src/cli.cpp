#include "flaresynth/cli.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "flaresynth/config.hpp"
#include "flaresynth/depth_stub.hpp"
#include "flaresynth/errors.hpp"
#include "flaresynth/evaluation.hpp"
#include "flaresynth/illumination.hpp"
#include "flaresynth/pipeline.hpp"
#include "flaresynth/png_io.hpp"
#include "flaresynth/random.hpp"
#include "flaresynth/template_forge.hpp"

namespace flaresynth::cli {
namespace {

namespace fs = std::filesystem;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) h = (h ^ ch) * 0x100000001b3ULL;
  return h;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : sep) + s;
  return out;
}

// ---------------------------------------------------------------------------
// gen-templates
// ---------------------------------------------------------------------------

struct GenTemplatesArgs {
  std::vector<std::string> types;
  int count = 1;
  std::uint64_t seed = 0;
  fs::path out;
  int width = 512;
  int height = 512;
  bool no_jitter = false;
  int workers = 1;
};

int gen_templates(const GenTemplatesArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<std::string> types;
  for (const auto& t : a.types) {
    if (t == "all") {
      types.insert(types.end(), preset_names().begin(), preset_names().end());
    } else if (!is_preset(t)) {
      err << "unknown flare type '" << t << "'; valid presets: " << join(preset_names(), ", ")
          << " (or 'all')\n";
      return kExitUsage;
    } else {
      types.push_back(t);
    }
  }
  if (a.count < 1) throw InvalidArgument("--count must be >= 1");
  if (a.workers < 1) throw InvalidArgument("--workers must be >= 1");
  const JitterRanges jitter = a.no_jitter ? JitterRanges::none() : JitterRanges{};
  int files = 0;
  for (std::size_t t = 0; t < types.size(); ++t) {
    const FlareRecipe base = preset_recipe(types[t], a.width, a.height);
    // Each type gets its own stream so adding a type does not change the others.
    const std::uint64_t type_seed = derive_seed({a.seed, fnv1a(types[t])});
    const auto batch = generate_batch(types[t], base, a.count, jitter, type_seed, a.workers);
    for (const auto& tpl : batch) {
      save_template(tpl, a.out);
      files += 3;
    }
    out << "type " << types[t] << ": " << batch.size() << " templates\n";
  }
  out << "types: " << types.size() << ", files written: " << files << " in " << a.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

int synth(const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg.synth);
  if (cfg.workers < 1) throw InvalidArgument("--workers must be >= 1");
  if (cfg.count < 1) throw InvalidArgument("--count must be >= 1");
  for (const auto& [path, flag] : {std::pair{cfg.templates, "--templates"},
                                   std::pair{cfg.backgrounds, "--backgrounds"},
                                   std::pair{cfg.depths, "--depths"}, std::pair{cfg.out, "--out"}}) {
    if (path.empty()) throw InvalidArgument(std::string(flag) + " is required");
  }

  const auto templates = load_template_pool(cfg.templates);
  if (templates.empty()) throw InvalidArgument("no templates found in " + cfg.templates.string());
  const Corpus corpus = load_corpus(cfg.backgrounds, cfg.depths);
  if (!corpus.missing_depth.empty()) {
    err << "backgrounds without a depth map: " << join(corpus.missing_depth, ", ") << "\n";
    if (cfg.strict) return kExitFailure;
  }
  if (corpus.backgrounds.empty()) throw InvalidArgument("no background has a matching depth map");

  ProgressFn progress;
  if (cfg.verbosity != Verbosity::kQuiet) {
    progress = [&out, total = cfg.count](int finished) {
      if (finished % 1000 == 0) out << "synth: " << finished << "/" << total << "\n";
    };
  }
  const BatchResult result =
      synth_batch(corpus.backgrounds, templates, cfg.synth, cfg.count, cfg.out, cfg.workers, progress);
  out << "pairs written: " << result.written << ", skipped: " << result.skipped
      << ", overflow pixels: " << result.overflow_px << "\n";
  if (cfg.verbosity == Verbosity::kVerbose) out << "manifest: " << result.manifest.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
  fs::path pred;
  fs::path gt;
  fs::path mask;
  fs::path report;
  std::string rule = "center";
  int workers = 1;
};

int eval(const EvalArgs& a, std::ostream& out) {
  const SsimMaskRule rule =
      a.rule == "inside" ? SsimMaskRule::kFullyInside : SsimMaskRule::kCenterPixel;
  const std::optional<fs::path> mask_dir = a.mask.empty() ? std::nullopt : std::optional(a.mask);
  const EvalReport report = evaluate_set(a.pred, a.gt, mask_dir, a.report, rule, a.workers);
  out << report_table(report);
  return report.error_count > 0 ? kExitFailure : kExitOk;
}

// ---------------------------------------------------------------------------
// depth-stub
// ---------------------------------------------------------------------------

struct DepthStubArgs {
  std::string mode = "constant";
  double value = 1.0;
  double near = 1.0;
  double far = 3.0;
  double left = 1.0;
  double right = 2.0;
  int width = 512;
  int height = 512;
  fs::path like;
  fs::path out;
};

int depth_stub(const DepthStubArgs& a, std::ostream& out) {
  DepthProfile profile;
  switch (parse_depth_kind(a.mode)) {
    case DepthProfile::Kind::kConstant: profile = DepthProfile::constant(a.value); break;
    case DepthProfile::Kind::kRadial: profile = DepthProfile::radial(a.near, a.far); break;
    case DepthProfile::Kind::kHorizontalRamp: profile = DepthProfile::ramp(a.left, a.right); break;
  }
  if (a.like.empty()) {
    save_depth(synth_depth(a.width, a.height, profile), a.out);
    out << "wrote " << a.out.string() << " (" << a.width << "x" << a.height << ")\n";
    return kExitOk;
  }
  if (!fs::is_directory(a.like)) throw IoError("--like directory not found: " + a.like.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.like)) {
    if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  fs::create_directories(a.out);
  for (const auto& f : files) {
    const RawRaster header = read_png(f);
    save_depth(synth_depth(header.width, header.height, profile), a.out / f.filename());
  }
  out << "wrote " << files.size() << " depth maps to " << a.out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// inspect
// ---------------------------------------------------------------------------

struct InspectArgs {
  fs::path path;
  std::string kind = "auto";
  int bins = 10;
  double tau = 0.5;
};

void print_histogram(const ImagePlane& luma, int bins, std::ostream& out) {
  std::vector<long> counts(bins, 0);
  for (double v : luma.values()) {
    const int b = std::min(bins - 1, std::max(0, static_cast<int>(v * bins)));
    ++counts[b];
  }
  out << "luminance histogram:\n";
  for (int b = 0; b < bins; ++b) {
    out << "  [" << std::fixed << std::setprecision(2) << static_cast<double>(b) / bins << ", "
        << static_cast<double>(b + 1) / bins << (b + 1 == bins ? "]" : ")") << "  " << counts[b] << "\n";
  }
  out.unsetf(std::ios::floatfield);
}

std::optional<std::pair<fs::path, std::string>> template_name_of(const fs::path& path) {
  const std::string file = path.filename().string();
  for (const std::string suffix : {"_flare.png", "_source.png", "_meta.json"}) {
    if (file.size() > suffix.size() && file.ends_with(suffix)) {
      return std::pair{path.parent_path(), file.substr(0, file.size() - suffix.size())};
    }
  }
  return std::nullopt;
}

int inspect(const InspectArgs& a, std::ostream& out) {
  if (a.bins < 1) throw InvalidArgument("--bins must be >= 1");
  std::string kind = a.kind;
  const auto tpl_name = template_name_of(a.path);
  if (kind == "auto") kind = tpl_name ? "template" : "image";

  if (kind == "template") {
    if (!tpl_name) throw InvalidArgument("not a template file: " + a.path.string());
    const FlareTemplate tpl = load_template(tpl_name->first, tpl_name->second);
    out << "template: " << tpl.name << "\n";
    out << "type: " << tpl.type_id << "\n";
    out << "size: " << tpl.flare.width() << "x" << tpl.flare.height() << "\n";
    out << "recipe:\n" << template_meta_json(tpl);
    out << "source pixels: " << source_region(tpl.source_annotation, a.tau).count() << "\n";
    print_histogram(luminance(tpl.flare), a.bins, out);
    return kExitOk;
  }
  if (kind == "depth") {
    const DepthMap depth = load_depth(a.path);
    const auto [lo, hi] = std::minmax_element(depth.values().begin(), depth.values().end());
    out << "depth: " << depth.width() << "x" << depth.height() << "\n";
    out << std::setprecision(10) << "min: " << *lo << "\nmax: " << *hi
        << "\nmean: " << mean_depth(depth) << "\n";
    return kExitOk;
  }
  if (kind == "image") {
    const ImagePlane img = load_image(a.path, Encoding::kGammaEncoded);
    out << "image: " << img.width() << "x" << img.height() << ", " << img.channels() << " channel(s)\n";
    for (int c = 0; c < img.channels(); ++c) {
      double sum = 0.0;
      for (std::size_t p = 0; p < img.pixel_count(); ++p) sum += img.values()[p * img.channels() + c];
      out << "channel " << c << " mean: " << sum / img.pixel_count() << "\n";
    }
    print_histogram(luminance(img), a.bins, out);
    return kExitOk;
  }
  throw InvalidArgument("--kind must be auto, template, depth or image");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthesize lens-flare training pairs and score flare-removal results."};
  app.name("flaresynth");
  app.require_subcommand(1);

  GenTemplatesArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-templates", "Generate procedural flare templates");
  gen_cmd->add_option("--types", gen.types, "Preset type ids, or 'all'")->required()->delimiter(',');
  gen_cmd->add_option("--count", gen.count, "Templates per type")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Root seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->required();
  gen_cmd->add_option("--width", gen.width, "Canvas width")->capture_default_str();
  gen_cmd->add_option("--height", gen.height, "Canvas height")->capture_default_str();
  gen_cmd->add_flag("--no-jitter", gen.no_jitter, "Emit identical copies of each preset");
  gen_cmd->add_option("--workers", gen.workers, "Worker threads")->capture_default_str();

  PipelineConfig synth_cfg;
  PipelineConfig cli_cfg;
  std::string config_file;
  double fov = 0, tau = 0, fixed_gain = 0;
  std::uint64_t seed = 0;
  int count = 0, workers = 0, min_flares = 0, max_flares = 0, bitdepth = 0;
  bool strict = false, same_template = false, no_clamp = false, no_gt_src = false;
  std::string verbosity;
  auto* synth_cmd = app.add_subcommand(
      "synth", "Synthesize flare-corrupted / flare-free pairs\n\nConfig file keys (key = value):\n" +
                   config_reference());
  synth_cmd->add_option("--config", config_file, "Flat key = value config file");
  auto* o_templates = synth_cmd->add_option("--templates", cli_cfg.templates, "Template directory");
  auto* o_backgrounds = synth_cmd->add_option("--backgrounds", cli_cfg.backgrounds, "Background directory");
  auto* o_depths = synth_cmd->add_option("--depths", cli_cfg.depths, "Depth directory");
  auto* o_out = synth_cmd->add_option("--out", cli_cfg.out, "Output directory");
  auto* o_count = synth_cmd->add_option("--count", count, "Number of pairs");
  auto* o_seed = synth_cmd->add_option("--seed", seed, "Root seed");
  auto* o_fov = synth_cmd->add_option("--fov", fov, "Horizontal field of view in degrees");
  auto* o_tau = synth_cmd->add_option("--tau", tau, "Light-source annotation threshold");
  auto* o_workers = synth_cmd->add_option("--workers", workers, "Worker threads");
  auto* o_min = synth_cmd->add_option("--min-flares", min_flares, "Minimum flares per image");
  auto* o_max = synth_cmd->add_option("--max-flares", max_flares, "Maximum flares per image");
  auto* o_bitdepth = synth_cmd->add_option("--bitdepth", bitdepth, "Output bit depth (8 or 16)");
  auto* o_fixed = synth_cmd->add_option("--fixed-gain", fixed_gain, "Bypass the illumination-law gain");
  auto* o_strict = synth_cmd->add_flag("--strict", strict, "Fail if a background lacks a depth map");
  auto* o_same = synth_cmd->add_flag("--same-template", same_template, "One template per image");
  auto* o_noclamp = synth_cmd->add_flag("--no-gain-clamp", no_clamp, "Use the unclamped gain");
  auto* o_nogtsrc = synth_cmd->add_flag("--no-gt-src", no_gt_src, "Skip <index>_gt_src.png");
  auto* o_verbosity = synth_cmd->add_option("--verbosity", verbosity, "quiet | normal | verbose");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Masked PSNR / SSIM of predictions against ground truth");
  eval_cmd->add_option("--pred", eval_args.pred, "Prediction directory")->required();
  eval_cmd->add_option("--gt", eval_args.gt, "Ground-truth directory")->required();
  eval_cmd->add_option("--mask", eval_args.mask, "Mask directory (0 = excluded)");
  eval_cmd->add_option("--report", eval_args.report, "Line-delimited JSON report path");
  eval_cmd->add_option("--ssim-rule", eval_args.rule, "center | inside")
      ->check(CLI::IsMember({"center", "inside"}));
  eval_cmd->add_option("--workers", eval_args.workers, "Worker threads");

  DepthStubArgs depth_args;
  auto* depth_cmd = app.add_subcommand("depth-stub", "Write synthetic 16-bit depth maps");
  depth_cmd->add_option("--mode", depth_args.mode, "constant | radial | ramp")
      ->check(CLI::IsMember({"constant", "radial", "ramp"}));
  depth_cmd->add_option("--value", depth_args.value, "Depth for constant mode");
  depth_cmd->add_option("--near", depth_args.near, "Center depth for radial mode");
  depth_cmd->add_option("--far", depth_args.far, "Corner depth for radial mode");
  depth_cmd->add_option("--left", depth_args.left, "Left-column depth for ramp mode");
  depth_cmd->add_option("--right", depth_args.right, "Right-column depth for ramp mode");
  depth_cmd->add_option("--width", depth_args.width, "Width when writing a single file");
  depth_cmd->add_option("--height", depth_args.height, "Height when writing a single file");
  depth_cmd->add_option("--like", depth_args.like, "Write one map per PNG in this directory");
  depth_cmd->add_option("--out", depth_args.out, "Output file, or directory with --like")->required();

  InspectArgs inspect_args;
  auto* inspect_cmd = app.add_subcommand("inspect", "Describe a template, depth map or image");
  inspect_cmd->add_option("path", inspect_args.path, "File to inspect")->required();
  inspect_cmd->add_option("--kind", inspect_args.kind, "auto | template | depth | image")
      ->check(CLI::IsMember({"auto", "template", "depth", "image"}));
  inspect_cmd->add_option("--bins", inspect_args.bins, "Histogram bins");
  inspect_cmd->add_option("--tau", inspect_args.tau, "Light-source threshold");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    for (const auto* sub : app.get_subcommands()) err << sub->help();
    if (app.get_subcommands().empty()) err << app.help();
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return gen_templates(gen, out, err);
    if (eval_cmd->parsed()) return eval(eval_args, out);
    if (depth_cmd->parsed()) return depth_stub(depth_args, out);
    if (inspect_cmd->parsed()) return inspect(inspect_args, out);
    if (synth_cmd->parsed()) {
      // Precedence: command line > config file > built-in defaults.
      if (!config_file.empty()) apply_config(load_config_file(config_file), synth_cfg);
      if (o_templates->count()) synth_cfg.templates = cli_cfg.templates;
      if (o_backgrounds->count()) synth_cfg.backgrounds = cli_cfg.backgrounds;
      if (o_depths->count()) synth_cfg.depths = cli_cfg.depths;
      if (o_out->count()) synth_cfg.out = cli_cfg.out;
      if (o_count->count()) synth_cfg.count = count;
      if (o_seed->count()) synth_cfg.synth.seed = seed;
      if (o_fov->count()) synth_cfg.synth.fov_deg = fov;
      if (o_tau->count()) synth_cfg.synth.tau = tau;
      if (o_workers->count()) synth_cfg.workers = workers;
      if (o_min->count()) synth_cfg.synth.flare_count.min = min_flares;
      if (o_max->count()) synth_cfg.synth.flare_count.max = max_flares;
      if (o_bitdepth->count()) synth_cfg.synth.output_bit_depth = bitdepth;
      if (o_fixed->count()) synth_cfg.synth.fixed_gain = fixed_gain;
      if (o_strict->count()) synth_cfg.strict = strict;
      if (o_same->count()) synth_cfg.synth.same_template = same_template;
      if (o_noclamp->count()) synth_cfg.synth.gain_clamp.reset();
      if (o_nogtsrc->count()) synth_cfg.synth.emit_source_in_gt = false;
      if (o_verbosity->count()) apply_config({{"verbosity", verbosity}}, synth_cfg);
      return synth(synth_cfg, out, err);
    }
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace flaresynth::cli
