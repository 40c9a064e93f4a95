#include "mpview/scene.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "mpview/rng.hpp"

namespace mpview {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json view_to_json(const View& view, const std::string& role, bool has_depth) {
  json j;
  j["name"] = view.name;
  j["role"] = role;
  j["image"] = "images/" + view.name + ".png";
  if (has_depth) j["depth"] = "depth/" + view.name + ".f32";
  j["intrinsics"] = {{"fx", view.intr.fx}, {"fy", view.intr.fy},
                     {"cx", view.intr.cx}, {"cy", view.intr.cy},
                     {"width", view.intr.width}, {"height", view.intr.height}};
  std::vector<double> r(9);
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) r[static_cast<size_t>(row * 3 + col)] = view.pose.R(row, col);
  j["rotation"] = r;
  j["translation"] = {view.pose.t.x(), view.pose.t.y(), view.pose.t.z()};
  return j;
}

View view_from_json(const fs::path& dir, const json& j) {
  View view;
  view.name = j.at("name").get<std::string>();

  const auto& intr = j.at("intrinsics");
  view.intr.fx = intr.at("fx").get<double>();
  view.intr.fy = intr.at("fy").get<double>();
  view.intr.cx = intr.at("cx").get<double>();
  view.intr.cy = intr.at("cy").get<double>();
  view.intr.width = intr.at("width").get<int>();
  view.intr.height = intr.at("height").get<int>();
  if (!view.intr.valid())
    throw SceneIoError(SceneErrorKind::ShapeMismatch,
                       "invalid intrinsics in view " + view.name);

  const auto r = j.at("rotation").get<std::vector<double>>();
  const auto t = j.at("translation").get<std::vector<double>>();
  if (r.size() != 9 || t.size() != 3)
    throw SceneIoError(SceneErrorKind::BadPose,
                       "pose arrays have wrong length in view " + view.name);
  for (int row = 0; row < 3; ++row)
    for (int col = 0; col < 3; ++col) view.pose.R(row, col) = r[static_cast<size_t>(row * 3 + col)];
  view.pose.t = Vec3(t[0], t[1], t[2]);
  if (!view.pose.orthonormal())
    throw SceneIoError(SceneErrorKind::BadPose,
                       "rotation not orthonormal in view " + view.name);

  const fs::path image_path = dir / j.at("image").get<std::string>();
  if (!fs::exists(image_path))
    throw SceneIoError(SceneErrorKind::MissingManifest,
                       "missing image file: " + image_path.string());
  view.image = read_png_rgb8(image_path.string());
  if (view.image.width != view.intr.width || view.image.height != view.intr.height)
    throw SceneIoError(SceneErrorKind::ShapeMismatch,
                       "image size disagrees with intrinsics in view " + view.name);

  if (j.contains("depth")) {
    const fs::path depth_path = dir / j.at("depth").get<std::string>();
    if (!fs::exists(depth_path))
      throw SceneIoError(SceneErrorKind::MissingManifest,
                         "missing depth file: " + depth_path.string());
    view.depth = read_f32(depth_path.string(),
                          static_cast<size_t>(view.intr.width) * view.intr.height);
  }
  return view;
}

}  // namespace

Scene load_scene(const std::string& directory) {
  const fs::path dir(directory);
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path))
    throw SceneIoError(SceneErrorKind::MissingManifest,
                       "missing manifest: " + manifest_path.string());

  json manifest;
  {
    std::ifstream in(manifest_path);
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw SceneIoError(SceneErrorKind::MissingManifest,
                         "unreadable manifest: " + std::string(e.what()));
    }
  }

  Scene scene;
  scene.near = manifest.at("near").get<double>();
  scene.far = manifest.at("far").get<double>();
  if (!(scene.near > 0) || !(scene.near < scene.far))
    throw SceneIoError(SceneErrorKind::ShapeMismatch, "bad near/far bounds");

  for (const auto& vj : manifest.at("views")) {
    View view = view_from_json(dir, vj);
    const std::string role = vj.at("role").get<std::string>();
    (role == "heldout" ? scene.heldout : scene.inputs).push_back(std::move(view));
  }
  if (scene.inputs.empty())
    throw SceneIoError(SceneErrorKind::ShapeMismatch, "scene has no input views");
  const int w = scene.inputs[0].intr.width;
  const int h = scene.inputs[0].intr.height;
  for (const auto& v : scene.inputs)
    if (v.intr.width != w || v.intr.height != h)
      throw SceneIoError(SceneErrorKind::ShapeMismatch,
                         "views disagree on resolution: " + v.name);
  return scene;
}

void write_scene(const std::string& directory, const Scene& scene) {
  const fs::path dir(directory);
  fs::create_directories(dir / "images");
  bool any_depth = false;
  for (const auto& v : scene.inputs) any_depth |= !v.depth.empty();
  for (const auto& v : scene.heldout) any_depth |= !v.depth.empty();
  if (any_depth) fs::create_directories(dir / "depth");

  json manifest;
  manifest["format"] = "mpview-scene";
  manifest["version"] = 1;
  manifest["convention"] = "camera_to_world_row_major";
  manifest["near"] = scene.near;
  manifest["far"] = scene.far;
  manifest["views"] = json::array();

  auto emit = [&](const View& view, const std::string& role) {
    manifest["views"].push_back(view_to_json(view, role, !view.depth.empty()));
    write_png_rgb8((dir / "images" / (view.name + ".png")).string(), view.image);
    if (!view.depth.empty())
      write_f32((dir / "depth" / (view.name + ".f32")).string(), view.depth);
  };
  for (const auto& v : scene.inputs) emit(v, "input");
  for (const auto& v : scene.heldout) emit(v, "heldout");

  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << "\n";
}

namespace {

Pose arc_pose(const Vec3& look_at, double radius, double angle_rad) {
  const Vec3 position =
      look_at + radius * Vec3(std::sin(angle_rad), 0.0, -std::cos(angle_rad));
  const Vec3 forward = (look_at - position).normalized();
  // Camera axes: x right, y down, z forward.
  const Vec3 right = Vec3(0, 1, 0).cross(forward).normalized();
  const Vec3 down = forward.cross(right);
  Pose pose;
  pose.R.col(0) = right;
  pose.R.col(1) = down;
  pose.R.col(2) = forward;
  pose.t = position;
  return pose;
}

struct RectTexture {
  std::vector<Vec3> texels;
  int size;
};

RectTexture make_texture(const RectSpec& rect, uint64_t scene_seed) {
  Rng rng(scene_seed * 0x9e3779b97f4a7c15ULL + rect.texture_seed);
  RectTexture tex;
  tex.size = rect.texels;
  tex.texels.reserve(static_cast<size_t>(rect.texels) * rect.texels);
  const Vec3 base(rng.uniform(0.25, 0.75), rng.uniform(0.25, 0.75),
                  rng.uniform(0.25, 0.75));
  for (int i = 0; i < rect.texels * rect.texels; ++i) {
    Vec3 c = base + Vec3(rng.uniform(-0.18, 0.18), rng.uniform(-0.18, 0.18),
                         rng.uniform(-0.18, 0.18));
    for (int k = 0; k < 3; ++k) c[k] = std::clamp(c[k], 0.02, 0.98);
    tex.texels.push_back(c);
  }
  return tex;
}

}  // namespace

Scene gen_synthetic(const SyntheticSpec& spec, uint64_t seed,
                    const std::string& out_dir) {
  std::vector<RectSpec> rects = spec.rects;
  std::sort(rects.begin(), rects.end(),
            [](const RectSpec& a, const RectSpec& b) { return a.depth < b.depth; });
  std::vector<RectTexture> textures;
  textures.reserve(rects.size());
  for (const auto& r : rects) textures.push_back(make_texture(r, seed));

  Intrinsics intr;
  intr.fx = intr.fy = spec.focal_px;
  intr.cx = spec.width / 2.0;
  intr.cy = spec.height / 2.0;
  intr.width = spec.width;
  intr.height = spec.height;

  const double max_angle = spec.arc_angle_deg * std::numbers::pi / 180.0;
  std::vector<double> input_angles;
  for (int i = 0; i < spec.input_views; ++i) {
    const double a = spec.input_views == 1
                         ? 0.0
                         : -max_angle + 2.0 * max_angle * i / (spec.input_views - 1);
    input_angles.push_back(a);
  }
  std::vector<double> heldout_angles;
  for (int i = 0; i < spec.heldout_views; ++i) {
    // Midpoints between consecutive input poses, cycled.
    const size_t gap = static_cast<size_t>(i) % (input_angles.size() - 1);
    heldout_angles.push_back(0.5 * (input_angles[gap] + input_angles[gap + 1]));
  }

  auto render_view_analytic = [&](const Pose& pose, View& view) {
    view.image = Image::zeros(spec.width, spec.height);
    view.depth.assign(static_cast<size_t>(spec.width) * spec.height, 0.0f);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        const Ray ray = pixel_ray(intr, pose, Vec2(x + 0.5, y + 0.5));
        for (size_t ri = 0; ri < rects.size(); ++ri) {
          const RectSpec& rect = rects[ri];
          if (ray.dir.z() <= 1e-12) continue;
          const double t = (rect.depth - ray.origin.z()) / ray.dir.z();
          if (t <= 0) continue;
          const Vec3 p = ray.origin + t * ray.dir;
          if (std::abs(p.x() - rect.center_x) > rect.half_x ||
              std::abs(p.y() - rect.center_y) > rect.half_y)
            continue;
          const RectTexture& tex = textures[ri];
          const double u = (p.x() - (rect.center_x - rect.half_x)) / (2.0 * rect.half_x);
          const double v = (p.y() - (rect.center_y - rect.half_y)) / (2.0 * rect.half_y);
          const int ti = std::min(tex.size - 1, static_cast<int>(u * tex.size));
          const int tj = std::min(tex.size - 1, static_cast<int>(v * tex.size));
          const Vec3 c = tex.texels[static_cast<size_t>(tj) * tex.size + ti];
          for (int ch = 0; ch < 3; ++ch) view.image.at(x, y, ch) = c[ch];
          const Vec3 cam_point = pose.R.transpose() * (p - pose.t);
          view.depth[static_cast<size_t>(y) * spec.width + x] =
              static_cast<float>(cam_point.z());
          break;  // front-most surface wins
        }
      }
    }
    // Store what an 8-bit reader will see.
    for (auto& v : view.image.data)
      v = std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
  };

  Scene scene;
  scene.near = spec.near;
  scene.far = spec.far;
  int index = 0;
  auto add_view = [&](double angle, bool heldout) {
    View view;
    char name[32];
    std::snprintf(name, sizeof(name), "view_%03d", index++);
    view.name = name;
    view.intr = intr;
    view.pose = arc_pose(spec.look_at, spec.arc_radius, angle);
    render_view_analytic(view.pose, view);
    (heldout ? scene.heldout : scene.inputs).push_back(std::move(view));
  };
  for (double a : input_angles) add_view(a, false);
  for (double a : heldout_angles) add_view(a, true);

  if (!out_dir.empty()) write_scene(out_dir, scene);
  return scene;
}

SyntheticSpec preset_spec(const std::string& name) {
  SyntheticSpec spec;
  if (name == "one-plane") {
    spec.rects = {{1.75, 0.0, 0.0, 2.0, 2.0, 4, 7}};
    spec.input_views = 2;
    spec.heldout_views = 1;
    spec.width = spec.height = 32;
    spec.focal_px = 36.0;
    spec.near = 1.0;
    spec.far = 2.5;
    spec.arc_radius = 1.75;
    spec.arc_angle_deg = 6.0;
    spec.look_at = Vec3(0, 0, 1.75);
  } else if (name == "two-plane") {
    spec.rects = {{1.4, 0.12, 0.08, 0.40, 0.32, 3, 11},
                  {2.2, 0.0, 0.0, 2.2, 2.2, 4, 7}};
    spec.input_views = 3;
    spec.heldout_views = 1;
    spec.width = spec.height = 64;
    spec.focal_px = 72.0;
    spec.near = 1.0;
    spec.far = 2.5;
    spec.arc_radius = 1.8;
    spec.arc_angle_deg = 8.0;
    spec.look_at = Vec3(0, 0, 1.8);
  } else if (name == "three-view-arc") {
    spec.rects = {{1.4, 0.12, 0.08, 0.40, 0.32, 3, 11},
                  {2.2, 0.0, 0.0, 2.2, 2.2, 4, 7}};
    spec.input_views = 3;
    spec.heldout_views = 1;
    spec.width = spec.height = 64;
    spec.focal_px = 72.0;
    spec.near = 1.0;
    spec.far = 2.5;
    spec.arc_radius = 1.8;
    spec.arc_angle_deg = 10.0;
    spec.look_at = Vec3(0, 0, 1.8);
  } else {
    throw std::invalid_argument("unknown preset: " + name);
  }
  return spec;
}

}  // namespace mpview
