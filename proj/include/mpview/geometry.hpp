#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace mpview {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

// Pinhole intrinsics, pixel units. Pixel (u, v) has u growing rightwards and
// v downwards; the camera looks along +z of its own frame.
struct Intrinsics {
  double fx = 0, fy = 0;
  double cx = 0, cy = 0;
  int width = 0, height = 0;

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0, cx, 0, fy, cy, 0, 0, 1;
    return k;
  }

  bool valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 &&
           cx < width && cy >= 0 && cy < height;
  }
};

// Camera-to-world rigid transform: X_world = R * X_cam + t.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    m.topLeftCorner<3, 3>() = R;
    m.topRightCorner<3, 1>() = t;
    return m;
  }

  bool orthonormal(double tol = 1e-9) const {
    return (R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(R.determinant() - 1.0) <= tol;
  }
};

// Target-to-input relative extrinsics (the left factor inverted).
struct RelativePose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 dir = Vec3::UnitZ();  // unit length
};

enum class PlaneSpacing { LinearDepth, LinearDisparity };

// Depths of the D fronto-parallel planes in the reference camera frame,
// strictly increasing, all positive.
struct PlaneStack {
  std::vector<double> depths;
  double near = 0, far = 0;
  PlaneSpacing spacing = PlaneSpacing::LinearDepth;

  int count() const { return static_cast<int>(depths.size()); }
};

struct DegenerateWarp : std::runtime_error {
  explicit DegenerateWarp(int plane = -1)
      : std::runtime_error(plane >= 0
                               ? "degenerate homography at plane " + std::to_string(plane)
                               : "degenerate homography"),
        plane_index(plane) {}
  int plane_index;
};

struct InvalidBounds : std::runtime_error {
  explicit InvalidBounds(const std::string& msg) : std::runtime_error(msg) {}
};

// One ray-plane intersection: pixel coordinate in the reference view, the
// plane depth there, and the Euclidean distance from the target camera
// origin to the 3D point (the depth that gets composited, see render docs).
struct PlaneHit {
  Vec2 ref_pixel;
  double plane_depth;
  double ray_depth;
};

// (R', t') with [R'|t'; 0 1] = inverse(target) * input, both camera-to-world.
RelativePose relative_extrinsics(const Pose& target, const Pose& input);

// Plane-induced homography K_in (R' - t' n^T / z) K_t^{-1} with n = e_z,
// applied to the target pixel and dehomogenized. Throws DegenerateWarp when
// the homogeneous scale collapses below 1e-12.
Vec2 homography_warp(const Vec2& target_pixel, const Intrinsics& k_in,
                     const Intrinsics& k_t, const RelativePose& rel,
                     double plane_depth);

// World-space ray through a pixel center; direction normalized.
Ray pixel_ray(const Intrinsics& intr, const Pose& pose, const Vec2& pixel);

// D plane depths between near and far. Linear-depth spaces z directly,
// linear-disparity spaces 1/z. D == 1 yields the midpoint.
PlaneStack make_plane_depths(double near, double far, int count,
                             PlaneSpacing spacing);

// Intersections of the target ray through target_pixel with every plane of
// the reference camera's stack. Rethrows DegenerateWarp with the plane index.
std::vector<PlaneHit> ray_plane_intersections(const Vec2& target_pixel,
                                              const Intrinsics& target_intr,
                                              const Pose& target_pose,
                                              const Intrinsics& ref_intr,
                                              const Pose& ref_pose,
                                              const PlaneStack& planes);

// Parameter of the point on ray (o1, d1) closest to x0, clamped to bounds,
// plus the distance at that parameter.
struct ClosestPoint {
  double t;
  double distance;
};
ClosestPoint closest_point_parameter(const Vec3& x0, const Vec3& o1,
                                     const Vec3& d1, double t_near,
                                     double t_far);

}  // namespace mpview
