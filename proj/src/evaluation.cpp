#include "flaresynth/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "flaresynth/errors.hpp"
#include "flaresynth/parallel.hpp"
#include "flaresynth/png_io.hpp"
#include "json.hpp"

namespace flaresynth {
namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kRadius = 5;  // 11x11 window
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_inputs(const ImagePlane& pred, const ImagePlane& gt, const RegionMask& mask) {
  if (!pred.same_shape(gt)) throw DimensionMismatch("prediction and ground truth differ in shape");
  if (mask.width() != pred.width() || mask.height() != pred.height()) {
    throw DimensionMismatch("mask does not match the image size");
  }
  if (mask.empty_region()) throw InvalidArgument("evaluation mask has no included pixel");
}

std::array<double, 2 * kRadius + 1> gaussian_window() {
  std::array<double, 2 * kRadius + 1> w{};
  double total = 0.0;
  for (int i = -kRadius; i <= kRadius; ++i) {
    w[i + kRadius] = std::exp(-(i * i) / (2.0 * kSigma * kSigma));
    total += w[i + kRadius];
  }
  for (double& v : w) v /= total;
  return w;
}

// Symmetric (half-sample) reflection: ... c b a | a b c ...
int reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

// Separable Gaussian filter with symmetric padding.
std::vector<double> blur(const std::vector<double>& src, int width, int height) {
  static const auto w = gaussian_window();
  std::vector<double> tmp(src.size());
  std::vector<double> out(src.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) {
        acc += w[k + kRadius] * src[static_cast<std::size_t>(y) * width + reflect(x + k, width)];
      }
      tmp[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double acc = 0.0;
      for (int k = -kRadius; k <= kRadius; ++k) {
        acc += w[k + kRadius] * tmp[static_cast<std::size_t>(reflect(y + k, height)) * width + x];
      }
      out[static_cast<std::size_t>(y) * width + x] = acc;
    }
  }
  return out;
}

bool window_inside(const RegionMask& mask, int cx, int cy) {
  for (int dy = -kRadius; dy <= kRadius; ++dy) {
    for (int dx = -kRadius; dx <= kRadius; ++dx) {
      if (!mask.at(reflect(cx + dx, mask.width()), reflect(cy + dy, mask.height()))) return false;
    }
  }
  return true;
}

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    comp_ += std::abs(sum_) >= std::abs(v) ? (sum_ - t) + v : (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::string format_number(double v) {
  if (std::isinf(v)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

ordered_json psnr_json(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

std::map<std::string, std::filesystem::path> pngs_by_stem(const std::filesystem::path& dir) {
  std::map<std::string, std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) throw IoError("directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      out.emplace(entry.path().stem().string(), entry.path());
    }
  }
  return out;
}

}  // namespace

double masked_psnr(const ImagePlane& pred, const ImagePlane& gt, const RegionMask& mask) {
  check_inputs(pred, gt, mask);
  CompensatedSum sse;
  long samples = 0;
  for (int y = 0; y < pred.height(); ++y) {
    for (int x = 0; x < pred.width(); ++x) {
      if (!mask.at(x, y)) continue;
      for (int c = 0; c < pred.channels(); ++c) {
        const double d = pred.at(x, y, c) - gt.at(x, y, c);
        sse.add(d * d);
        ++samples;
      }
    }
  }
  const double mse = sse.value() / samples;
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

ImagePlane ssim_map(const ImagePlane& x_img, const ImagePlane& y_img) {
  if (!x_img.same_shape(y_img) || x_img.channels() != 1) {
    throw DimensionMismatch("SSIM needs two single-channel images of equal size");
  }
  const int w = x_img.width();
  const int h = x_img.height();
  if (w < 2 * kRadius + 1 || h < 2 * kRadius + 1) {
    throw InvalidArgument("image is smaller than the 11x11 SSIM window");
  }
  const std::vector<double> xs(x_img.values().begin(), x_img.values().end());
  const std::vector<double> ys(y_img.values().begin(), y_img.values().end());
  std::vector<double> xx(xs.size()), yy(xs.size()), xy(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    xx[i] = xs[i] * xs[i];
    yy[i] = ys[i] * ys[i];
    xy[i] = xs[i] * ys[i];
  }
  const auto mu_x = blur(xs, w, h);
  const auto mu_y = blur(ys, w, h);
  const auto e_xx = blur(xx, w, h);
  const auto e_yy = blur(yy, w, h);
  const auto e_xy = blur(xy, w, h);

  ImagePlane map(w, h, 1);
  auto out = map.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double var_x = e_xx[i] - mu_x[i] * mu_x[i];
    const double var_y = e_yy[i] - mu_y[i] * mu_y[i];
    const double cov = e_xy[i] - mu_x[i] * mu_y[i];
    out[i] = ((2.0 * mu_x[i] * mu_y[i] + kC1) * (2.0 * cov + kC2)) /
             ((mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1) * (var_x + var_y + kC2));
  }
  return map;
}

double masked_ssim(const ImagePlane& pred, const ImagePlane& gt, const RegionMask& mask,
                   SsimMaskRule rule) {
  check_inputs(pred, gt, mask);
  const ImagePlane map = ssim_map(luminance(pred), luminance(gt));
  CompensatedSum total;
  long n = 0;
  for (int y = 0; y < map.height(); ++y) {
    for (int x = 0; x < map.width(); ++x) {
      if (!mask.at(x, y)) continue;
      if (rule == SsimMaskRule::kFullyInside && !window_inside(mask, x, y)) continue;
      total.add(map.at(x, y));
      ++n;
    }
  }
  if (n == 0) throw InvalidArgument("no SSIM window lies fully inside the evaluation mask");
  return total.value() / n;
}

EvalReport evaluate_pairs(std::vector<EvalInput> inputs, SsimMaskRule rule, int workers) {
  if (inputs.empty()) throw InvalidArgument("no matched prediction / ground-truth pairs");
  std::sort(inputs.begin(), inputs.end(),
            [](const EvalInput& a, const EvalInput& b) { return a.name < b.name; });

  EvalReport report;
  report.records.resize(inputs.size());
  parallel_for(inputs.size(), workers, [&](std::size_t i) {
    EvalRecord& rec = report.records[i];
    rec.name = inputs[i].name;
    try {
      const ImagePlane pred = load_image(inputs[i].pred, Encoding::kGammaEncoded);
      const ImagePlane gt = load_image(inputs[i].gt, Encoding::kGammaEncoded);
      const RegionMask mask = inputs[i].mask ? load_mask(*inputs[i].mask)
                                             : RegionMask(gt.width(), gt.height(), 1);
      rec.psnr_db = masked_psnr(pred, gt, mask);
      rec.ssim = masked_ssim(pred, gt, mask, rule);
      rec.evaluated_px = static_cast<long>(mask.count());
      rec.excluded_px = static_cast<long>(mask.values().size()) - rec.evaluated_px;
    } catch (const Error& e) {
      rec.error = e.what();
    }
  });

  CompensatedSum psnr_sum;
  CompensatedSum ssim_sum;
  int finite_psnr = 0;
  for (const auto& rec : report.records) {
    if (!rec.error.empty()) {
      ++report.error_count;
      continue;
    }
    ++report.evaluated_count;
    ssim_sum.add(rec.ssim);
    if (std::isinf(rec.psnr_db)) {
      ++report.infinite_psnr_count;
    } else {
      psnr_sum.add(rec.psnr_db);
      ++finite_psnr;
    }
  }
  if (report.evaluated_count == 0) throw Error("every pair failed to evaluate");
  report.mean_ssim = ssim_sum.value() / report.evaluated_count;
  report.mean_psnr = finite_psnr > 0 ? psnr_sum.value() / finite_psnr
                                     : std::numeric_limits<double>::infinity();
  return report;
}

EvalReport evaluate_set(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                        const std::optional<std::filesystem::path>& mask_dir,
                        const std::filesystem::path& report_path, SsimMaskRule rule, int workers) {
  const auto preds = pngs_by_stem(pred_dir);
  const auto gts = pngs_by_stem(gt_dir);
  std::map<std::string, std::filesystem::path> masks;
  if (mask_dir) masks = pngs_by_stem(*mask_dir);

  std::vector<EvalInput> inputs;
  for (const auto& [stem, pred] : preds) {
    const auto gt = gts.find(stem);
    if (gt == gts.end()) continue;
    EvalInput in{stem, pred, gt->second, std::nullopt};
    if (auto m = masks.find(stem); m != masks.end()) in.mask = m->second;
    inputs.push_back(std::move(in));
  }
  EvalReport report = evaluate_pairs(std::move(inputs), rule, workers);
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw IoError("cannot write report " + report_path.string());
    out << report_jsonl(report);
  }
  return report;
}

std::string report_jsonl(const EvalReport& report) {
  std::string text;
  for (const auto& rec : report.records) {
    ordered_json j;
    j["name"] = rec.name;
    if (!rec.error.empty()) {
      j["error"] = rec.error;
    } else {
      j["psnr_db"] = psnr_json(rec.psnr_db);
      j["ssim"] = rec.ssim;
      j["evaluated_px"] = rec.evaluated_px;
      j["excluded_px"] = rec.excluded_px;
    }
    text += j.dump() + "\n";
  }
  ordered_json agg;
  agg["aggregate"] = true;
  agg["count"] = report.evaluated_count;
  agg["mean_psnr"] = psnr_json(report.mean_psnr);
  agg["mean_ssim"] = report.mean_ssim;
  agg["infinite_psnr_count"] = report.infinite_psnr_count;
  agg["error_count"] = report.error_count;
  text += agg.dump() + "\n";
  return text;
}

std::string report_table(const EvalReport& report) {
  std::ostringstream out;
  std::size_t width = 4;
  for (const auto& rec : report.records) width = std::max(width, rec.name.size());
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %10s  %8s  %10s\n", static_cast<int>(width), "name",
                "PSNR(dB)", "SSIM", "pixels");
  out << line;
  for (const auto& rec : report.records) {
    if (!rec.error.empty()) {
      out << rec.name << "  error: " << rec.error << "\n";
      continue;
    }
    std::snprintf(line, sizeof line, "%-*s  %10s  %8.5f  %10ld\n", static_cast<int>(width),
                  rec.name.c_str(), format_number(rec.psnr_db).c_str(), rec.ssim, rec.evaluated_px);
    out << line;
  }
  std::snprintf(line, sizeof line, "%-*s  %10s  %8.5f  (%d pairs, %d infinite PSNR excluded, %d errors)\n",
                static_cast<int>(width), "mean", format_number(report.mean_psnr).c_str(),
                report.mean_ssim, report.evaluated_count, report.infinite_psnr_count,
                report.error_count);
  out << line;
  return out.str();
}

}  // namespace flaresynth
