#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "mpview/geometry.hpp"

namespace mpview {

struct LossWeights {
  double lambda_ac = 1.0;
  double lambda_dc = 1.0;
  double lambda_dc_input = 1.0;  // depth consistency on input-view rays
  int schedule_epoch = 15;       // consistency terms activate at this epoch
  // Depth pairs where either stack is near-transparent carry no geometry;
  // pairs with transmittance above this are skipped.
  double dc_skip_transmittance = 0.99;
};

struct TooFewViews : std::runtime_error {
  TooFewViews() : std::runtime_error("consistency losses need at least 2 views") {}
};

// Batches are indexed [view][ray]. Each function has a companion *_backward
// producing cotangents with the same layout.

double loss_mse(std::span<const std::vector<Vec3>> renders,
                std::span<const Vec3> gt);
void loss_mse_backward(std::span<const std::vector<Vec3>> renders,
                       std::span<const Vec3> gt,
                       std::vector<std::vector<Vec3>>& grad);

double loss_ac(std::span<const std::vector<Vec3>> renders);
void loss_ac_backward(std::span<const std::vector<Vec3>> renders,
                      std::vector<std::vector<Vec3>>& grad);

// `transmittances` may be empty (no skipping); otherwise aligned with depths.
double loss_dc(std::span<const std::vector<double>> depths,
               std::span<const std::vector<double>> transmittances = {},
               double skip_transmittance = 1.0);
void loss_dc_backward(std::span<const std::vector<double>> depths,
                      std::vector<std::vector<double>>& grad,
                      std::span<const std::vector<double>> transmittances = {},
                      double skip_transmittance = 1.0);

// Two-phase total: reconstruction only before the schedule epoch, full
// weighted sum from it onwards. dc_input follows the same gate.
double total_loss(double mse, double ac, double dc, const LossWeights& weights,
                  int epoch, double dc_input = 0.0);

}  // namespace mpview
