#pragma once

#include <cstdint>

#include "mpview/mlp.hpp"

namespace mpview {

struct AdamState {
  MlpGrads m;  // first moment
  MlpGrads v;  // second moment
  int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MlpParams& p, double beta1 = 0.9,
                              double beta2 = 0.999, double epsilon = 1e-8);
};

// Standard bias-corrected Adam update, applied in place.
void adam_step(MlpParams& params, AdamState& state, const MlpGrads& grads, double lr);

// Exponential decay from lr_initial at epoch 0 to lr_final at total_epochs.
double lr_schedule(int64_t epoch, int64_t total_epochs, double lr_initial = 5e-3,
                   double lr_final = 1e-4);

}  // namespace mpview
