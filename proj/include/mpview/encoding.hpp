#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace mpview {

// Frequency lifting sin(2^l v), cos(2^l v) for l = 0..L-1, grouped per
// frequency (sin block then cos block, components within a block). The raw
// input is not part of the output unless include_identity is set.
struct EncodingConfig {
  int freq_pos = 10;            // frequencies for the spatial coordinate
  int freq_dir = 0;             // frequencies for the direction; 0 = raw passthrough
  bool use_direction = true;    // feed the view direction at all
  bool include_identity = false;

  int encoded_dim(int n, int freq) const {
    return 2 * n * freq + (include_identity ? n : 0);
  }

  int input_dim() const {
    int dim = encoded_dim(3, freq_pos);
    if (use_direction) dim += freq_dir > 0 ? encoded_dim(3, freq_dir) : 3;
    return dim;
  }
};

inline Eigen::VectorXd positional_encode(const Eigen::VectorXd& v, int freq) {
  const Eigen::Index n = v.size();
  Eigen::VectorXd out(2 * n * freq);
  double scale = 1.0;
  for (int l = 0; l < freq; ++l) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out[2 * n * l + i] = std::sin(scale * v[i]);
      out[2 * n * l + n + i] = std::cos(scale * v[i]);
    }
    scale *= 2.0;
  }
  return out;
}

// Writes the encoded field input for one sample into a column of `dst`.
// Positions are expected pre-normalized by the caller (the field has no
// notion of image size or depth range).
inline void encode_field_input(const Eigen::Vector3d& pos,
                               const Eigen::Vector3d& dir,
                               const EncodingConfig& enc,
                               Eigen::Ref<Eigen::VectorXd> dst) {
  Eigen::Index at = 0;
  auto put = [&](const Eigen::Vector3d& v, int freq) {
    double scale = 1.0;
    for (int l = 0; l < freq; ++l) {
      for (int i = 0; i < 3; ++i) dst[at + 6 * l + i] = std::sin(scale * v[i]);
      for (int i = 0; i < 3; ++i) dst[at + 6 * l + 3 + i] = std::cos(scale * v[i]);
      scale *= 2.0;
    }
    at += 6 * freq;
    if (enc.include_identity) {
      for (int i = 0; i < 3; ++i) dst[at + i] = v[i];
      at += 3;
    }
  };
  put(pos, enc.freq_pos);
  if (enc.use_direction) {
    if (enc.freq_dir > 0) {
      put(dir, enc.freq_dir);
    } else {
      for (int i = 0; i < 3; ++i) dst[at + i] = dir[i];
      at += 3;
    }
  }
}

}  // namespace mpview
