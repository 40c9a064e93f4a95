#include "mpview/losses.hpp"

#include <stdexcept>

namespace mpview {

namespace {

void check_batch_shapes(size_t views, size_t rays, size_t got_views, size_t got_rays) {
  if (views != got_views || rays != got_rays)
    throw std::invalid_argument("loss batch shape mismatch");
}

}  // namespace

double loss_mse(std::span<const std::vector<Vec3>> renders,
                std::span<const Vec3> gt) {
  const size_t n = renders.size();
  const size_t rays = gt.size();
  double acc = 0.0;
  for (const auto& view : renders) {
    check_batch_shapes(n, rays, n, view.size());
    for (size_t r = 0; r < rays; ++r) acc += (view[r] - gt[r]).squaredNorm();
  }
  return acc / (static_cast<double>(n) * static_cast<double>(rays));
}

void loss_mse_backward(std::span<const std::vector<Vec3>> renders,
                       std::span<const Vec3> gt,
                       std::vector<std::vector<Vec3>>& grad) {
  const size_t n = renders.size();
  const size_t rays = gt.size();
  const double scale = 2.0 / (static_cast<double>(n) * static_cast<double>(rays));
  grad.assign(n, std::vector<Vec3>(rays, Vec3::Zero()));
  for (size_t i = 0; i < n; ++i)
    for (size_t r = 0; r < rays; ++r)
      grad[i][r] = scale * (renders[i][r] - gt[r]);
}

double loss_ac(std::span<const std::vector<Vec3>> renders) {
  const size_t n = renders.size();
  if (n < 2) throw TooFewViews();
  const size_t rays = renders[0].size();
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    check_batch_shapes(n, rays, n, renders[i].size());
    for (size_t j = i + 1; j < n; ++j)
      for (size_t r = 0; r < rays; ++r)
        acc += (renders[i][r] - renders[j][r]).squaredNorm();
  }
  return acc * 2.0 /
         (static_cast<double>(n) * static_cast<double>(n - 1) *
          static_cast<double>(rays));
}

void loss_ac_backward(std::span<const std::vector<Vec3>> renders,
                      std::vector<std::vector<Vec3>>& grad) {
  const size_t n = renders.size();
  if (n < 2) throw TooFewViews();
  const size_t rays = renders[0].size();
  const double scale = 4.0 / (static_cast<double>(n) * static_cast<double>(n - 1) *
                              static_cast<double>(rays));
  grad.assign(n, std::vector<Vec3>(rays, Vec3::Zero()));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      for (size_t r = 0; r < rays; ++r) {
        const Vec3 diff = scale * (renders[i][r] - renders[j][r]);
        grad[i][r] += diff;
        grad[j][r] -= diff;
      }
}

double loss_dc(std::span<const std::vector<double>> depths,
               std::span<const std::vector<double>> transmittances,
               double skip_transmittance) {
  const size_t n = depths.size();
  if (n < 2) throw TooFewViews();
  const size_t rays = depths[0].size();
  const bool mask = !transmittances.empty();
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    check_batch_shapes(n, rays, n, depths[i].size());
    for (size_t j = i + 1; j < n; ++j)
      for (size_t r = 0; r < rays; ++r) {
        if (mask && (transmittances[i][r] > skip_transmittance ||
                     transmittances[j][r] > skip_transmittance))
          continue;
        const double diff = depths[i][r] - depths[j][r];
        acc += diff * diff;
      }
  }
  return acc * 2.0 /
         (static_cast<double>(n) * static_cast<double>(n - 1) *
          static_cast<double>(rays));
}

void loss_dc_backward(std::span<const std::vector<double>> depths,
                      std::vector<std::vector<double>>& grad,
                      std::span<const std::vector<double>> transmittances,
                      double skip_transmittance) {
  const size_t n = depths.size();
  if (n < 2) throw TooFewViews();
  const size_t rays = depths[0].size();
  const bool mask = !transmittances.empty();
  const double scale = 4.0 / (static_cast<double>(n) * static_cast<double>(n - 1) *
                              static_cast<double>(rays));
  grad.assign(n, std::vector<double>(rays, 0.0));
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      for (size_t r = 0; r < rays; ++r) {
        if (mask && (transmittances[i][r] > skip_transmittance ||
                     transmittances[j][r] > skip_transmittance))
          continue;
        const double diff = scale * (depths[i][r] - depths[j][r]);
        grad[i][r] += diff;
        grad[j][r] -= diff;
      }
}

double total_loss(double mse, double ac, double dc, const LossWeights& weights,
                  int epoch, double dc_input) {
  if (epoch < weights.schedule_epoch) return mse;
  return mse + weights.lambda_ac * ac + weights.lambda_dc * dc +
         weights.lambda_dc_input * dc_input;
}

}  // namespace mpview
