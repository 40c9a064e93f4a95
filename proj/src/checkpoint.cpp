#include "mpview/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace mpview {

namespace {

constexpr char kMagic[8] = {'M', 'P', 'V', 'C', 'K', 'P', 'T', '\0'};
constexpr uint32_t kVersion = 1;

// Native little-endian plain-data I/O; the container is not meant to move
// between byte orders.

template <typename T>
void put(std::ostream& out, const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw CheckpointError("truncated checkpoint");
  return value;
}

void put_matrix(std::ostream& out, const Matrix& m) {
  put<int32_t>(out, static_cast<int32_t>(m.rows()));
  put<int32_t>(out, static_cast<int32_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(out, m(r, c));
}

Matrix take_matrix(std::istream& in) {
  const auto rows = take<int32_t>(in);
  const auto cols = take<int32_t>(in);
  Matrix m(rows, cols);
  for (int32_t r = 0; r < rows; ++r)
    for (int32_t c = 0; c < cols; ++c) m(r, c) = take<double>(in);
  return m;
}

void put_vector(std::ostream& out, const Vector& v) {
  put<int32_t>(out, static_cast<int32_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(out, v[i]);
}

Vector take_vector(std::istream& in) {
  const auto size = take<int32_t>(in);
  Vector v(size);
  for (int32_t i = 0; i < size; ++i) v[i] = take<double>(in);
  return v;
}

void put_grads(std::ostream& out, const MlpGrads& g) {
  put<uint32_t>(out, static_cast<uint32_t>(g.weights.size()));
  for (size_t l = 0; l < g.weights.size(); ++l) {
    put_matrix(out, g.weights[l]);
    put_vector(out, g.biases[l]);
  }
}

MlpGrads take_grads(std::istream& in) {
  MlpGrads g;
  const auto layers = take<uint32_t>(in);
  for (uint32_t l = 0; l < layers; ++l) {
    g.weights.push_back(take_matrix(in));
    g.biases.push_back(take_vector(in));
  }
  return g;
}

void put_encoding(std::ostream& out, const EncodingConfig& enc) {
  put<int32_t>(out, enc.freq_pos);
  put<int32_t>(out, enc.freq_dir);
  put<uint8_t>(out, enc.use_direction ? 1 : 0);
  put<uint8_t>(out, enc.include_identity ? 1 : 0);
}

EncodingConfig take_encoding(std::istream& in) {
  EncodingConfig enc;
  enc.freq_pos = take<int32_t>(in);
  enc.freq_dir = take<int32_t>(in);
  enc.use_direction = take<uint8_t>(in) != 0;
  enc.include_identity = take<uint8_t>(in) != 0;
  return enc;
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainState& state) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);

  out.write(kMagic, sizeof(kMagic));
  put<uint32_t>(out, kVersion);

  const TrainConfig& c = state.config;
  put<int32_t>(out, c.epochs);
  put<int32_t>(out, c.rays_per_batch);
  put<int32_t>(out, c.unseen_rays_per_batch);
  put<int32_t>(out, c.planes);
  put<uint8_t>(out, c.spacing == PlaneSpacing::LinearDisparity ? 1 : 0);
  put<int32_t>(out, c.hidden_layers);
  put<int32_t>(out, c.width);
  put_encoding(out, c.enc);
  put<double>(out, c.loss.lambda_ac);
  put<double>(out, c.loss.lambda_dc);
  put<double>(out, c.loss.lambda_dc_input);
  put<int32_t>(out, c.loss.schedule_epoch);
  put<double>(out, c.loss.dc_skip_transmittance);
  put<double>(out, c.lr_initial);
  put<double>(out, c.lr_final);
  put<double>(out, c.adam_beta1);
  put<double>(out, c.adam_beta2);
  put<double>(out, c.adam_epsilon);
  put<uint64_t>(out, c.seed);
  put<int32_t>(out, c.checkpoint_every);
  put<uint8_t>(out, c.single_mpi ? 1 : 0);
  put<int32_t>(out, c.block_rays);

  put<int64_t>(out, state.epoch);
  put<int64_t>(out, state.step);
  for (uint64_t w : state.rng.state()) put<uint64_t>(out, w);

  put<uint32_t>(out, static_cast<uint32_t>(state.fields.size()));
  for (size_t i = 0; i < state.fields.size(); ++i) {
    const MpiField& f = state.fields[i];
    put<double>(out, f.intr.fx);
    put<double>(out, f.intr.fy);
    put<double>(out, f.intr.cx);
    put<double>(out, f.intr.cy);
    put<int32_t>(out, f.intr.width);
    put<int32_t>(out, f.intr.height);
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) put<double>(out, f.pose.R(r, col));
    for (int r = 0; r < 3; ++r) put<double>(out, f.pose.t[r]);
    put<double>(out, f.planes.near);
    put<double>(out, f.planes.far);
    put<uint8_t>(out, f.planes.spacing == PlaneSpacing::LinearDisparity ? 1 : 0);
    put<uint32_t>(out, static_cast<uint32_t>(f.planes.depths.size()));
    for (double z : f.planes.depths) put<double>(out, z);
    put_encoding(out, f.enc);
    put<uint32_t>(out, static_cast<uint32_t>(f.params.weights.size()));
    for (size_t l = 0; l < f.params.weights.size(); ++l) {
      put_matrix(out, f.params.weights[l]);
      put_vector(out, f.params.biases[l]);
    }
    const AdamState& a = state.optimizers[i];
    put<double>(out, a.beta1);
    put<double>(out, a.beta2);
    put<double>(out, a.epsilon);
    put<int64_t>(out, a.step);
    put_grads(out, a.m);
    put_grads(out, a.v);
  }
  if (!out) throw CheckpointError("checkpoint write failed: " + path);
}

TrainState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  const auto version = take<uint32_t>(in);
  if (version != kVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

  TrainState state;
  TrainConfig& c = state.config;
  c.epochs = take<int32_t>(in);
  c.rays_per_batch = take<int32_t>(in);
  c.unseen_rays_per_batch = take<int32_t>(in);
  c.planes = take<int32_t>(in);
  c.spacing = take<uint8_t>(in) ? PlaneSpacing::LinearDisparity : PlaneSpacing::LinearDepth;
  c.hidden_layers = take<int32_t>(in);
  c.width = take<int32_t>(in);
  c.enc = take_encoding(in);
  c.loss.lambda_ac = take<double>(in);
  c.loss.lambda_dc = take<double>(in);
  c.loss.lambda_dc_input = take<double>(in);
  c.loss.schedule_epoch = take<int32_t>(in);
  c.loss.dc_skip_transmittance = take<double>(in);
  c.lr_initial = take<double>(in);
  c.lr_final = take<double>(in);
  c.adam_beta1 = take<double>(in);
  c.adam_beta2 = take<double>(in);
  c.adam_epsilon = take<double>(in);
  c.seed = take<uint64_t>(in);
  c.checkpoint_every = take<int32_t>(in);
  c.single_mpi = take<uint8_t>(in) != 0;
  c.block_rays = take<int32_t>(in);
  // Runtime concerns deliberately absent from the container: worker count
  // and output directory are supplied by the caller on resume.

  state.epoch = take<int64_t>(in);
  state.step = take<int64_t>(in);
  std::array<uint64_t, 4> rng_state;
  for (auto& w : rng_state) w = take<uint64_t>(in);
  state.rng.set_state(rng_state);

  const auto n_fields = take<uint32_t>(in);
  for (uint32_t i = 0; i < n_fields; ++i) {
    MpiField f;
    f.intr.fx = take<double>(in);
    f.intr.fy = take<double>(in);
    f.intr.cx = take<double>(in);
    f.intr.cy = take<double>(in);
    f.intr.width = take<int32_t>(in);
    f.intr.height = take<int32_t>(in);
    for (int r = 0; r < 3; ++r)
      for (int col = 0; col < 3; ++col) f.pose.R(r, col) = take<double>(in);
    for (int r = 0; r < 3; ++r) f.pose.t[r] = take<double>(in);
    f.planes.near = take<double>(in);
    f.planes.far = take<double>(in);
    f.planes.spacing =
        take<uint8_t>(in) ? PlaneSpacing::LinearDisparity : PlaneSpacing::LinearDepth;
    const auto n_planes = take<uint32_t>(in);
    f.planes.depths.resize(n_planes);
    for (auto& z : f.planes.depths) z = take<double>(in);
    f.enc = take_encoding(in);
    const auto n_layers = take<uint32_t>(in);
    for (uint32_t l = 0; l < n_layers; ++l) {
      f.params.weights.push_back(take_matrix(in));
      f.params.biases.push_back(take_vector(in));
    }
    AdamState a;
    a.beta1 = take<double>(in);
    a.beta2 = take<double>(in);
    a.epsilon = take<double>(in);
    a.step = take<int64_t>(in);
    a.m = take_grads(in);
    a.v = take_grads(in);
    state.fields.push_back(std::move(f));
    state.optimizers.push_back(std::move(a));
  }
  return state;
}

}  // namespace mpview
