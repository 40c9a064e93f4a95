#include "mpview/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace mpview {

AdamState AdamState::for_params(const MlpParams& p, double beta1, double beta2,
                                double epsilon) {
  AdamState s;
  s.m = MlpGrads::zeros_like(p);
  s.v = MlpGrads::zeros_like(p);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void adam_step(MlpParams& params, AdamState& state, const MlpGrads& grads, double lr) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    theta -= lr * (m / bc1).cwiseQuotient(
                      ((v / bc2).cwiseSqrt().array() + state.epsilon).matrix());
  };
  for (size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], state.m.weights[l], state.v.weights[l], grads.weights[l]);
    update(params.biases[l], state.m.biases[l], state.v.biases[l], grads.biases[l]);
  }
}

double lr_schedule(int64_t epoch, int64_t total_epochs, double lr_initial,
                   double lr_final) {
  if (epoch < 0 || total_epochs < 1 || epoch > total_epochs)
    throw std::invalid_argument("lr_schedule: epoch out of range");
  if (epoch == 0) return lr_initial;
  if (epoch == total_epochs) return lr_final;
  const double a = static_cast<double>(epoch) / static_cast<double>(total_epochs);
  return lr_initial * std::pow(lr_final / lr_initial, a);
}

}  // namespace mpview
