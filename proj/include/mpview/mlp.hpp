#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "mpview/rng.hpp"

namespace mpview {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Fully-connected leaky-rectifier network mapping an encoded sample to
// (rgb, alpha). weights[l] is out x in; the last layer is the 4-wide head,
// squashed by a sigmoid so compositing always sees alpha in (0, 1).
struct MlpParams {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  int layer_count() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return weights.empty() ? 0 : static_cast<int>(weights.front().cols()); }
  int64_t parameter_count() const;
};

constexpr double kLeakySlope = 0.01;
constexpr int kHeadOutputs = 4;

// Uniform fan-in-scaled weights, zero biases; bit-reproducible per seed.
MlpParams init_params(int hidden_layers, int width, int input_dim, uint64_t seed);

// Gradient (or Adam moment) buffers shaped like a parameter set.
struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  static MlpGrads zeros_like(const MlpParams& p);
  void set_zero();
  void add(const MlpGrads& other);
  void scale(double s);
};

// Activations of one forward pass over a batch of points (columns).
// activations[0] is the input block, activations[l] the post-activation of
// layer l-1; `output` holds the sigmoid head values (4 x batch).
struct BatchTape {
  std::vector<Matrix> activations;
  Matrix output;
};

// Batched forward over inputs (input_dim x batch). Tape may be null when no
// backward pass will follow.
Matrix forward_batch(const MlpParams& params, const Matrix& inputs, BatchTape* tape);

// Accumulates d(sum over batch of <grad_output, output>)/d theta into
// `accum`. grad_output is 4 x batch, aligned with the tape.
void backward_batch(const MlpParams& params, const BatchTape& tape,
                    const Matrix& grad_output, MlpGrads& accum);

// Per-point convenience used by unit-level callers and as the plain serial
// reference for the batched kernel.
struct FieldOutput {
  Eigen::Vector3d color;
  double alpha;
};
struct Tape {
  std::vector<Vector> activations;
  Vector output;
};

FieldOutput field_forward(const MlpParams& params, const Vector& input, Tape* tape);
void field_backward(const MlpParams& params, const Tape& tape,
                    const Eigen::Vector3d& grad_color, double grad_alpha,
                    MlpGrads& accum);

}  // namespace mpview
