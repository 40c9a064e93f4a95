#include "mpview/renderer.hpp"

#include <cmath>
#include <numbers>

#include "mpview/parallel.hpp"

namespace mpview {

namespace {

// Field inputs are encoded over coordinates normalized to [-pi, pi]; raw
// pixel coordinates would push the upper encoding frequencies into noise.
Vec3 normalized_field_point(const MpiField& mpi, double u, double v, double z) {
  const double sx = (2.0 * u / mpi.intr.width - 1.0) * std::numbers::pi;
  const double sy = (2.0 * v / mpi.intr.height - 1.0) * std::numbers::pi;
  const double sz =
      (2.0 * (z - mpi.planes.near) / (mpi.planes.far - mpi.planes.near) - 1.0) *
      std::numbers::pi;
  return Vec3(sx, sy, sz);
}

void fill_ray_inputs(const MpiField& mpi, const RayContext& ray,
                     const RenderOptions& opts, Eigen::Ref<Matrix> columns,
                     double* depth_values) {
  const auto hits = ray_plane_intersections(ray.pixel, ray.intr, ray.pose,
                                            mpi.intr, mpi.pose, mpi.planes);
  const Vec3 dir = pixel_ray(ray.intr, ray.pose, ray.pixel).dir;
  for (size_t k = 0; k < hits.size(); ++k) {
    const Vec3 p = normalized_field_point(mpi, hits[k].ref_pixel.x(),
                                          hits[k].ref_pixel.y(), hits[k].plane_depth);
    encode_field_input(p, dir, mpi.enc, columns.col(static_cast<Eigen::Index>(k)));
    depth_values[k] = opts.depth_frame == DepthFrame::TargetRay
                          ? hits[k].ray_depth
                          : hits[k].plane_depth;
  }
}

RenderOutput composite_from_outputs(const Matrix& outputs, Eigen::Index first_col,
                                    const double* depth_values, int plane_count) {
  RenderOutput out;
  out.weights.resize(static_cast<size_t>(plane_count));
  double t = 1.0;
  Vec3 color = Vec3::Zero();
  double depth = 0.0;
  for (int k = 0; k < plane_count; ++k) {
    const auto col = outputs.col(first_col + k);
    const double alpha = col[3];
    const double w = alpha * t;
    out.weights[static_cast<size_t>(k)] = w;
    color += w * Vec3(col[0], col[1], col[2]);
    depth += w * depth_values[k];
    t *= 1.0 - alpha;
  }
  out.color = color;
  out.depth = depth;
  out.transmittance = t;
  return out;
}

}  // namespace

Vec3 composite_color(std::span<const Vec3> colors, std::span<const double> alphas) {
  Vec3 acc = Vec3::Zero();
  double t = 1.0;
  for (size_t k = 0; k < colors.size(); ++k) {
    acc += colors[k] * (alphas[k] * t);
    t *= 1.0 - alphas[k];
  }
  return acc;
}

double composite_depth(std::span<const double> depths, std::span<const double> alphas) {
  double acc = 0.0;
  double t = 1.0;
  for (size_t k = 0; k < depths.size(); ++k) {
    acc += depths[k] * (alphas[k] * t);
    t *= 1.0 - alphas[k];
  }
  return acc;
}

void compositing_weights(std::span<const double> alphas, std::vector<double>& weights,
                         double& transmittance) {
  weights.resize(alphas.size());
  double t = 1.0;
  for (size_t k = 0; k < alphas.size(); ++k) {
    weights[k] = alphas[k] * t;
    t *= 1.0 - alphas[k];
  }
  transmittance = t;
}

void composite_backward(std::span<const Vec3> colors, std::span<const double> alphas,
                        std::span<const double> depths, const Vec3& grad_color,
                        double grad_depth, std::span<Vec3> grad_colors,
                        std::span<double> grad_alphas) {
  const int n = static_cast<int>(colors.size());
  // Suffix renders with unit incoming transmittance:
  //   B_k = c_k a_k + (1 - a_k) B_{k+1}
  // give dC/da_k = T_k (c_k - B_{k+1}) without dividing by (1 - a_k).
  std::vector<Vec3> suffix_color(static_cast<size_t>(n) + 1, Vec3::Zero());
  std::vector<double> suffix_depth(static_cast<size_t>(n) + 1, 0.0);
  for (int k = n - 1; k >= 0; --k) {
    suffix_color[static_cast<size_t>(k)] =
        colors[static_cast<size_t>(k)] * alphas[static_cast<size_t>(k)] +
        (1.0 - alphas[static_cast<size_t>(k)]) * suffix_color[static_cast<size_t>(k) + 1];
    suffix_depth[static_cast<size_t>(k)] =
        depths[static_cast<size_t>(k)] * alphas[static_cast<size_t>(k)] +
        (1.0 - alphas[static_cast<size_t>(k)]) * suffix_depth[static_cast<size_t>(k) + 1];
  }
  double t = 1.0;
  for (int k = 0; k < n; ++k) {
    const size_t i = static_cast<size_t>(k);
    grad_colors[i] = grad_color * (alphas[i] * t);
    grad_alphas[i] =
        t * (grad_color.dot(colors[i] - suffix_color[i + 1]) +
             grad_depth * (depths[i] - suffix_depth[i + 1]));
    t *= 1.0 - alphas[i];
  }
}

RenderOutput render_ray(const MpiField& mpi, const Intrinsics& target_intr,
                        const Pose& target_pose, const Vec2& pixel,
                        const RenderOptions& opts) {
  const int d = mpi.planes.count();
  Matrix inputs(mpi.enc.input_dim(), d);
  std::vector<double> depth_values(static_cast<size_t>(d));
  fill_ray_inputs(mpi, {target_intr, target_pose, pixel}, opts, inputs,
                  depth_values.data());
  const Matrix outputs = forward_batch(mpi.params, inputs, nullptr);
  return composite_from_outputs(outputs, 0, depth_values.data(), d);
}

ViewRender render_view(const MpiField& mpi, const Intrinsics& target_intr,
                       const Pose& target_pose, int workers,
                       const RenderOptions& opts) {
  const int w = target_intr.width;
  const int h = target_intr.height;
  ViewRender result;
  result.color = Image::zeros(w, h);
  result.depth.assign(static_cast<size_t>(w) * h, 0.0);
  result.transmittance.assign(static_cast<size_t>(w) * h, 1.0);

  parallel_for(h, workers, [&](long y) {
    for (int x = 0; x < w; ++x) {
      RenderOutput out;
      try {
        out = render_ray(mpi, target_intr, target_pose,
                         Vec2(x + 0.5, y + 0.5), opts);
      } catch (const DegenerateWarp& e) {
        throw RenderError(std::string(e.what()) + " at pixel (" +
                              std::to_string(x) + ", " + std::to_string(y) + ")",
                          x, static_cast<int>(y));
      }
      for (int c = 0; c < 3; ++c)
        result.color.at(x, static_cast<int>(y), c) = out.color[c];
      result.depth[static_cast<size_t>(y) * w + x] = out.depth;
      result.transmittance[static_cast<size_t>(y) * w + x] = out.transmittance;
    }
  });
  return result;
}

std::vector<double> blend_weights(const Vec3& target_origin,
                                  std::span<const Vec3> mpi_origins,
                                  BlendMode mode) {
  const size_t n = mpi_origins.size();
  std::vector<double> mu(n);
  for (size_t i = 0; i < n; ++i)
    mu[i] = (target_origin - mpi_origins[i]).squaredNorm();

  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  bool all_coincident = true;
  for (double m : mu)
    if (m >= 1e-15) all_coincident = false;
  if (all_coincident) return w;  // AllCoincident fallback

  if (mode == BlendMode::AsPrinted) {
    double sum = 0.0;
    for (double m : mu) sum += m;
    for (size_t i = 0; i < n; ++i) w[i] = mu[i] / sum;
  } else {
    // Coincident origins dominate; otherwise normalized inverse distances.
    std::vector<size_t> zero;
    for (size_t i = 0; i < n; ++i)
      if (mu[i] < 1e-15) zero.push_back(i);
    if (!zero.empty()) {
      std::fill(w.begin(), w.end(), 0.0);
      for (size_t i : zero) w[i] = 1.0 / static_cast<double>(zero.size());
    } else {
      double sum = 0.0;
      for (double m : mu) sum += 1.0 / m;
      for (size_t i = 0; i < n; ++i) w[i] = (1.0 / mu[i]) / sum;
    }
  }
  return w;
}

RenderOutput weighted_render(std::span<const MpiField> mpis,
                             const Intrinsics& target_intr, const Pose& target_pose,
                             const Vec2& pixel, BlendMode mode,
                             const RenderOptions& opts) {
  std::vector<Vec3> origins;
  origins.reserve(mpis.size());
  for (const auto& m : mpis) origins.push_back(m.pose.t);
  const auto weights = blend_weights(target_pose.t, origins, mode);

  RenderOutput blended;
  blended.weights.clear();
  double transmittance = 0.0;
  for (size_t i = 0; i < mpis.size(); ++i) {
    const RenderOutput out = render_ray(mpis[i], target_intr, target_pose, pixel, opts);
    blended.color += weights[i] * out.color;
    blended.depth += weights[i] * out.depth;
    transmittance += weights[i] * out.transmittance;
  }
  blended.transmittance = transmittance;
  return blended;
}

ViewRender render_view_blended(std::span<const MpiField> mpis,
                               const Intrinsics& target_intr,
                               const Pose& target_pose, int workers,
                               BlendMode mode, const RenderOptions& opts) {
  const int w = target_intr.width;
  const int h = target_intr.height;
  ViewRender result;
  result.color = Image::zeros(w, h);
  result.depth.assign(static_cast<size_t>(w) * h, 0.0);
  result.transmittance.assign(static_cast<size_t>(w) * h, 1.0);

  parallel_for(h, workers, [&](long y) {
    for (int x = 0; x < w; ++x) {
      const RenderOutput out = weighted_render(mpis, target_intr, target_pose,
                                               Vec2(x + 0.5, y + 0.5), mode, opts);
      for (int c = 0; c < 3; ++c)
        result.color.at(x, static_cast<int>(y), c) = out.color[c];
      result.depth[static_cast<size_t>(y) * w + x] = out.depth;
      result.transmittance[static_cast<size_t>(y) * w + x] = out.transmittance;
    }
  });
  return result;
}

BlockForward render_block_forward(const MpiField& mpi,
                                  std::span<const RayContext> rays,
                                  const RenderOptions& opts) {
  const int d = mpi.planes.count();
  const long n_rays = static_cast<long>(rays.size());
  BlockForward fwd;
  fwd.inputs.resize(mpi.enc.input_dim(), n_rays * d);
  fwd.plane_depths.resize(static_cast<size_t>(n_rays) * d);

  for (long r = 0; r < n_rays; ++r)
    fill_ray_inputs(mpi, rays[static_cast<size_t>(r)], opts,
                    fwd.inputs.middleCols(r * d, d),
                    fwd.plane_depths.data() + r * d);

  const Matrix outputs = forward_batch(mpi.params, fwd.inputs, &fwd.tape);
  fwd.outs.reserve(static_cast<size_t>(n_rays));
  for (long r = 0; r < n_rays; ++r)
    fwd.outs.push_back(composite_from_outputs(outputs, r * d,
                                              fwd.plane_depths.data() + r * d, d));
  return fwd;
}

void render_block_backward(const MpiField& mpi, const BlockForward& fwd,
                           std::span<const Vec3> grad_color,
                           std::span<const double> grad_depth, MlpGrads& accum) {
  const int d = mpi.planes.count();
  const long n_rays = static_cast<long>(fwd.outs.size());
  Matrix grad_out = Matrix::Zero(kHeadOutputs, n_rays * d);

  std::vector<Vec3> colors(static_cast<size_t>(d));
  std::vector<double> alphas(static_cast<size_t>(d));
  std::vector<Vec3> d_colors(static_cast<size_t>(d));
  std::vector<double> d_alphas(static_cast<size_t>(d));
  for (long r = 0; r < n_rays; ++r) {
    for (int k = 0; k < d; ++k) {
      const auto col = fwd.tape.output.col(r * d + k);
      colors[static_cast<size_t>(k)] = Vec3(col[0], col[1], col[2]);
      alphas[static_cast<size_t>(k)] = col[3];
    }
    composite_backward(colors, alphas,
                       std::span<const double>(fwd.plane_depths.data() + r * d,
                                               static_cast<size_t>(d)),
                       grad_color[static_cast<size_t>(r)],
                       grad_depth[static_cast<size_t>(r)], d_colors, d_alphas);
    for (int k = 0; k < d; ++k) {
      grad_out.col(r * d + k) << d_colors[static_cast<size_t>(k)],
          d_alphas[static_cast<size_t>(k)];
    }
  }
  backward_batch(mpi.params, fwd.tape, grad_out, accum);
}

}  // namespace mpview
