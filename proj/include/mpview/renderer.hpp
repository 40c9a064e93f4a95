#pragma once

#include <span>
#include <vector>

#include "mpview/encoding.hpp"
#include "mpview/geometry.hpp"
#include "mpview/image.hpp"
#include "mpview/mlp.hpp"

namespace mpview {

// One neural plane stack anchored at its reference camera.
struct MpiField {
  Intrinsics intr;
  Pose pose;
  PlaneStack planes;
  MlpParams params;
  EncodingConfig enc;
};

// Which depth value gets composited: distance along the target ray (shared
// across MPIs, required by the cross-view depth loss) or the plane depth in
// the reference frame (the plain stack-local formulation).
enum class DepthFrame { TargetRay, ReferenceZ };

struct RenderOptions {
  DepthFrame depth_frame = DepthFrame::TargetRay;
};

struct RenderOutput {
  Vec3 color = Vec3::Zero();
  double depth = 0.0;
  std::vector<double> weights;       // alpha_k * prod_{j<k} (1 - alpha_j)
  double transmittance = 1.0;        // prod_j (1 - alpha_j)
};

// Front-to-back alpha compositing. Lists are nearest plane first.
Vec3 composite_color(std::span<const Vec3> colors, std::span<const double> alphas);
double composite_depth(std::span<const double> depths, std::span<const double> alphas);

// Weights and residual transmittance for a stack of alphas.
void compositing_weights(std::span<const double> alphas, std::vector<double>& weights,
                         double& transmittance);

// Reverse-mode compositing: cotangents of (color, depth) back to per-plane
// (color, alpha) cotangents. Division-free, exact for alpha == 1.
void composite_backward(std::span<const Vec3> colors, std::span<const double> alphas,
                        std::span<const double> depths, const Vec3& grad_color,
                        double grad_depth, std::span<Vec3> grad_colors,
                        std::span<double> grad_alphas);

// A target camera plus one pixel; the unit of work for batched rendering.
struct RayContext {
  Intrinsics intr;
  Pose pose;
  Vec2 pixel;
};

RenderOutput render_ray(const MpiField& mpi, const Intrinsics& target_intr,
                        const Pose& target_pose, const Vec2& pixel,
                        const RenderOptions& opts = {});

struct RenderError : std::runtime_error {
  RenderError(const std::string& msg, int px, int py)
      : std::runtime_error(msg), x(px), y(py) {}
  int x, y;
};

struct ViewRender {
  Image color;
  std::vector<double> depth;          // row-major, target-ray distance
  std::vector<double> transmittance;  // row-major
};

// Full-frame render at the target camera's resolution. Output is identical
// at every worker count (pixels are independent).
ViewRender render_view(const MpiField& mpi, const Intrinsics& target_intr,
                       const Pose& target_pose, int workers = 0,
                       const RenderOptions& opts = {});

enum class BlendMode { AsPrinted, InverseDistance };

// Squared-distance blend weights, normalized. AsPrinted keeps w_i = mu_i /
// sum(mu) exactly as published (farther stacks weigh more); InverseDistance
// uses w_i proportional to 1/mu_i. All-coincident origins fall back to
// uniform weights.
std::vector<double> blend_weights(const Vec3& target_origin,
                                  std::span<const Vec3> mpi_origins,
                                  BlendMode mode = BlendMode::AsPrinted);

RenderOutput weighted_render(std::span<const MpiField> mpis,
                             const Intrinsics& target_intr, const Pose& target_pose,
                             const Vec2& pixel, BlendMode mode = BlendMode::AsPrinted,
                             const RenderOptions& opts = {});

ViewRender render_view_blended(std::span<const MpiField> mpis,
                               const Intrinsics& target_intr,
                               const Pose& target_pose, int workers = 0,
                               BlendMode mode = BlendMode::AsPrinted,
                               const RenderOptions& opts = {});

// --- Training path -------------------------------------------------------
//
// Forward pass over a block of rays through one MPI, keeping the tape so the
// loss cotangents can be pulled back to parameter gradients. Blocks are the
// fixed reduction unit of the trainer; everything here is pure over the
// field snapshot.

struct BlockForward {
  Matrix inputs;                   // input_dim x (rays * D)
  BatchTape tape;
  std::vector<RenderOutput> outs;  // per ray
  std::vector<double> plane_depths;  // rays * D composited depth samples
};

BlockForward render_block_forward(const MpiField& mpi,
                                  std::span<const RayContext> rays,
                                  const RenderOptions& opts = {});

void render_block_backward(const MpiField& mpi, const BlockForward& fwd,
                           std::span<const Vec3> grad_color,
                           std::span<const double> grad_depth, MlpGrads& accum);

}  // namespace mpview
