#pragma once

#include <string>
#include <vector>

#include "mpview/image.hpp"

namespace mpview {

struct MetricError : std::runtime_error {
  explicit MetricError(const std::string& msg) : std::runtime_error(msg) {}
};

// -10 log10(MSE) over all pixels and channels, values in [0, 1]. A zero MSE
// reports the cap instead of infinity.
double psnr(const Image& a, const Image& b, double cap_db = 99.0);

// Mean local SSIM on the Rec.601 luminance channel, 11x11 Gaussian window
// with sigma 1.5 and the standard stabilizers for unit dynamic range.
double ssim(const Image& a, const Image& b);

struct EvalRow {
  std::string name;
  double psnr_db;
  double ssim;
};

// Geometric mean of 10^(-PSNR/10) and sqrt(1-SSIM); the two-term variant of
// the combined error score (no perceptual term).
double average_score(double psnr_db, double ssim_value);

// Tab-delimited per-view table plus aggregate line; identical bytes for
// identical inputs.
std::string format_eval_report(const std::vector<EvalRow>& rows);

}  // namespace mpview
