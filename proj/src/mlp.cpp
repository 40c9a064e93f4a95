#include "mpview/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace mpview {

int64_t MlpParams::parameter_count() const {
  int64_t n = 0;
  for (size_t l = 0; l < weights.size(); ++l)
    n += weights[l].size() + biases[l].size();
  return n;
}

MlpParams init_params(int hidden_layers, int width, int input_dim, uint64_t seed) {
  if (hidden_layers < 1 || width < 1 || input_dim < 1)
    throw std::invalid_argument("init_params: layer sizes must be positive");

  Rng rng(seed);
  MlpParams p;
  int in = input_dim;
  for (int l = 0; l <= hidden_layers; ++l) {
    const int out = l == hidden_layers ? kHeadOutputs : width;
    Matrix w(out, in);
    // Row-major fill so the draw order is independent of Eigen's storage.
    const double bound = std::sqrt(6.0 / in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) w(r, c) = rng.uniform(-bound, bound);
    p.weights.push_back(std::move(w));
    p.biases.push_back(Vector::Zero(out));
    in = out;
  }
  return p;
}

MlpGrads MlpGrads::zeros_like(const MlpParams& p) {
  MlpGrads g;
  for (size_t l = 0; l < p.weights.size(); ++l) {
    g.weights.push_back(Matrix::Zero(p.weights[l].rows(), p.weights[l].cols()));
    g.biases.push_back(Vector::Zero(p.biases[l].size()));
  }
  return g;
}

void MlpGrads::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

void MlpGrads::add(const MlpGrads& other) {
  for (size_t l = 0; l < weights.size(); ++l) {
    weights[l] += other.weights[l];
    biases[l] += other.biases[l];
  }
}

void MlpGrads::scale(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
}

namespace {

inline double leaky(double x) { return x > 0 ? x : kLeakySlope * x; }
inline double leaky_grad_from_value(double a) { return a > 0 ? 1.0 : kLeakySlope; }
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Matrix forward_batch(const MlpParams& params, const Matrix& inputs, BatchTape* tape) {
  const int layers = params.layer_count();
  if (tape) {
    tape->activations.assign(1, inputs);
    tape->activations.reserve(static_cast<size_t>(layers) + 1);
  }
  Matrix a = inputs;
  for (int l = 0; l < layers; ++l) {
    Matrix z = params.weights[static_cast<size_t>(l)] * a;
    z.colwise() += params.biases[static_cast<size_t>(l)];
    if (l + 1 < layers) {
      a = z.unaryExpr([](double x) { return leaky(x); });
      if (tape) tape->activations.push_back(a);
    } else {
      a = z.unaryExpr([](double x) { return sigmoid(x); });
    }
  }
  if (tape) tape->output = a;
  return a;
}

void backward_batch(const MlpParams& params, const BatchTape& tape,
                    const Matrix& grad_output, MlpGrads& accum) {
  const int layers = params.layer_count();
  // Head: d/dz of sigmoid from the stored outputs.
  Matrix dz = grad_output.cwiseProduct(
      tape.output.unaryExpr([](double s) { return s * (1.0 - s); }));
  for (int l = layers - 1; l >= 0; --l) {
    const Matrix& a_in = tape.activations[static_cast<size_t>(l)];
    accum.weights[static_cast<size_t>(l)].noalias() += dz * a_in.transpose();
    accum.biases[static_cast<size_t>(l)] += dz.rowwise().sum();
    if (l == 0) break;
    Matrix da = params.weights[static_cast<size_t>(l)].transpose() * dz;
    // Leaky slope recovered from the post-activation sign.
    dz = da.cwiseProduct(a_in.unaryExpr(
        [](double a) { return leaky_grad_from_value(a); }));
  }
}

FieldOutput field_forward(const MlpParams& params, const Vector& input, Tape* tape) {
  const int layers = params.layer_count();
  if (tape) tape->activations.assign(1, input);
  Vector a = input;
  for (int l = 0; l < layers; ++l) {
    Vector z = params.weights[static_cast<size_t>(l)] * a + params.biases[static_cast<size_t>(l)];
    if (l + 1 < layers) {
      a = z.unaryExpr([](double x) { return leaky(x); });
      if (tape) tape->activations.push_back(a);
    } else {
      a = z.unaryExpr([](double x) { return sigmoid(x); });
    }
  }
  if (tape) tape->output = a;
  return {Eigen::Vector3d(a[0], a[1], a[2]), a[3]};
}

void field_backward(const MlpParams& params, const Tape& tape,
                    const Eigen::Vector3d& grad_color, double grad_alpha,
                    MlpGrads& accum) {
  const int layers = params.layer_count();
  Vector dout(kHeadOutputs);
  dout << grad_color.x(), grad_color.y(), grad_color.z(), grad_alpha;
  Vector dz = dout.cwiseProduct(
      tape.output.unaryExpr([](double s) { return s * (1.0 - s); }));
  for (int l = layers - 1; l >= 0; --l) {
    const Vector& a_in = tape.activations[static_cast<size_t>(l)];
    accum.weights[static_cast<size_t>(l)].noalias() += dz * a_in.transpose();
    accum.biases[static_cast<size_t>(l)] += dz;
    if (l == 0) break;
    Vector da = params.weights[static_cast<size_t>(l)].transpose() * dz;
    dz = da.cwiseProduct(a_in.unaryExpr(
        [](double a) { return leaky_grad_from_value(a); }));
  }
}

}  // namespace mpview
