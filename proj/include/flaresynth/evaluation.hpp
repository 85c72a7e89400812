#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flaresynth/image.hpp"

namespace flaresynth {

// Which SSIM map entries count towards the masked mean.
enum class SsimMaskRule {
  kCenterPixel,  // window center lies in the mask
  kFullyInside,  // every pixel of the window (after border reflection) lies in the mask
};

// PSNR over mask pixels and all channels jointly, peak 1. +inf when MSE is 0.
double masked_psnr(const ImagePlane& pred, const ImagePlane& gt, const RegionMask& mask);

// Single-scale SSIM on Rec.601 luma: 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, L = 1, symmetric border padding.
double masked_ssim(const ImagePlane& pred, const ImagePlane& gt, const RegionMask& mask,
                   SsimMaskRule rule = SsimMaskRule::kCenterPixel);

// The full per-pixel SSIM map (luma inputs of the same size).
ImagePlane ssim_map(const ImagePlane& pred_luma, const ImagePlane& gt_luma);

struct EvalRecord {
  std::string name;
  double psnr_db = 0.0;  // +inf for identical images
  double ssim = 0.0;
  long evaluated_px = 0;
  long excluded_px = 0;
  std::string error;  // non-empty when the file could not be evaluated
};

struct EvalReport {
  std::vector<EvalRecord> records;
  double mean_psnr = 0.0;  // over finite PSNR entries
  double mean_ssim = 0.0;
  int infinite_psnr_count = 0;
  int evaluated_count = 0;
  int error_count = 0;
};

struct EvalInput {
  std::string name;
  std::filesystem::path pred;
  std::filesystem::path gt;
  std::optional<std::filesystem::path> mask;  // absent: evaluate every pixel
};

// Scores each input and aggregates; records are ordered by name, so the
// result does not depend on the order of `inputs`.
EvalReport evaluate_pairs(std::vector<EvalInput> inputs,
                          SsimMaskRule rule = SsimMaskRule::kCenterPixel, int workers = 1);

// Stem-matched <stem>.png files; missing masks mean full-frame evaluation.
// Writes the report as line-delimited JSON when report_path is non-empty.
EvalReport evaluate_set(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                        const std::optional<std::filesystem::path>& mask_dir,
                        const std::filesystem::path& report_path,
                        SsimMaskRule rule = SsimMaskRule::kCenterPixel, int workers = 1);

std::string report_jsonl(const EvalReport& report);
std::string report_table(const EvalReport& report);

}  // namespace flaresynth
