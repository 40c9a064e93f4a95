#include "mpview/metrics.hpp"

#include <cmath>
#include <cstdio>

namespace mpview {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void require_same_shape(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height)
    throw MetricError("image shape mismatch");
}

std::vector<double> luminance(const Image& im) {
  std::vector<double> y(static_cast<size_t>(im.width) * im.height);
  for (size_t i = 0; i < y.size(); ++i)
    y[i] = 0.299 * im.data[3 * i] + 0.587 * im.data[3 * i + 1] +
           0.114 * im.data[3 * i + 2];
  return y;
}

}  // namespace

double psnr(const Image& a, const Image& b, double cap_db) {
  require_same_shape(a, b);
  double acc = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    acc += d * d;
  }
  const double mse = acc / static_cast<double>(a.data.size());
  if (mse == 0.0) return cap_db;
  return std::min(cap_db, -10.0 * std::log10(mse));
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b);
  if (a.width < kWindow || a.height < kWindow)
    throw MetricError("image smaller than the SSIM window");

  // Normalized 2D Gaussian window.
  double kernel[kWindow][kWindow];
  double ksum = 0.0;
  for (int i = 0; i < kWindow; ++i)
    for (int j = 0; j < kWindow; ++j) {
      const double di = i - (kWindow - 1) / 2.0;
      const double dj = j - (kWindow - 1) / 2.0;
      kernel[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * kSigma * kSigma));
      ksum += kernel[i][j];
    }
  for (int i = 0; i < kWindow; ++i)
    for (int j = 0; j < kWindow; ++j) kernel[i][j] /= ksum;

  const auto ya = luminance(a);
  const auto yb = luminance(b);

  double total = 0.0;
  long windows = 0;
  for (int y = 0; y + kWindow <= a.height; ++y) {
    for (int x = 0; x + kWindow <= a.width; ++x) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (int i = 0; i < kWindow; ++i)
        for (int j = 0; j < kWindow; ++j) {
          const double w = kernel[i][j];
          const double pa = ya[static_cast<size_t>(y + i) * a.width + (x + j)];
          const double pb = yb[static_cast<size_t>(y + i) * a.width + (x + j)];
          mu_a += w * pa;
          mu_b += w * pb;
          aa += w * (pa * pa);
          bb += w * (pb * pb);
          // Grouped so the accumulation is symmetric in (a, b) bit-for-bit.
          ab += w * (pa * pb);
        }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      total += ((2.0 * (mu_a * mu_b) + kC1) * (2.0 * cov + kC2)) /
               ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

double average_score(double psnr_db, double ssim_value) {
  return std::sqrt(std::pow(10.0, -psnr_db / 10.0) *
                   std::sqrt(std::max(0.0, 1.0 - ssim_value)));
}

std::string format_eval_report(const std::vector<EvalRow>& rows) {
  std::string out = "view\tpsnr_db\tssim\taverage\n";
  char line[160];
  double psnr_sum = 0.0, ssim_sum = 0.0;
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line), "%s\t%.6f\t%.6f\t%.6f\n", row.name.c_str(),
                  row.psnr_db, row.ssim, average_score(row.psnr_db, row.ssim));
    out += line;
    psnr_sum += row.psnr_db;
    ssim_sum += row.ssim;
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    std::snprintf(line, sizeof(line), "mean\t%.6f\t%.6f\t%.6f\n", psnr_sum / n,
                  ssim_sum / n, average_score(psnr_sum / n, ssim_sum / n));
    out += line;
  }
  return out;
}

}  // namespace mpview
