#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mpview/geometry.hpp"
#include "mpview/image.hpp"

namespace mpview {

struct View {
  std::string name;
  Image image;
  Intrinsics intr;
  Pose pose;
  // Ground-truth camera-frame z per pixel; synthetic scenes only.
  std::vector<float> depth;
};

struct Scene {
  std::vector<View> inputs;
  std::vector<View> heldout;
  double near = 0.0;
  double far = 0.0;
};

enum class SceneErrorKind { MissingManifest, ShapeMismatch, BadPose };

struct SceneIoError : std::runtime_error {
  SceneIoError(SceneErrorKind k, const std::string& msg)
      : std::runtime_error(msg), kind(k) {}
  SceneErrorKind kind;
};

// Directory layout: manifest.json, images/view_###.png, depth/view_###.f32.
// The manifest stores poses camera-to-world, row-major, and is the single
// authority on the input/held-out split and the depth bounds.
Scene load_scene(const std::string& directory);
void write_scene(const std::string& directory, const Scene& scene);

// Textured fronto-parallel rectangle in world space (normal along +z).
struct RectSpec {
  double depth = 1.0;
  double center_x = 0.0, center_y = 0.0;
  double half_x = 1.0, half_y = 1.0;
  int texels = 4;
  uint64_t texture_seed = 0;
};

struct SyntheticSpec {
  std::vector<RectSpec> rects;  // ascending depth
  int input_views = 3;
  int heldout_views = 1;
  int width = 64, height = 64;
  double focal_px = 72.0;
  double near = 1.0, far = 2.5;
  double arc_radius = 1.8;       // cameras on an arc at this distance
  double arc_angle_deg = 8.0;    // inputs spread over [-angle, +angle]
  Vec3 look_at = Vec3(0, 0, 1.8);
};

// Analytic renders (exact rectangle projection, nearest-texel texturing,
// front-most surface wins) written to out_dir and returned. The returned
// images hold the de-quantized 8-bit values, identical to what load_scene
// reads back.
Scene gen_synthetic(const SyntheticSpec& spec, uint64_t seed,
                    const std::string& out_dir);

// Named configurations used by the test suites: "one-plane", "two-plane",
// "three-view-arc".
SyntheticSpec preset_spec(const std::string& name);

}  // namespace mpview
