#include "mpview/geometry.hpp"

#include <cmath>

namespace mpview {

RelativePose relative_extrinsics(const Pose& target, const Pose& input) {
  // inverse([R_t|t_t]) * [R_i|t_i] expanded; avoids forming 4x4 matrices.
  RelativePose rel;
  rel.R = target.R.transpose() * input.R;
  rel.t = target.R.transpose() * (input.t - target.t);
  return rel;
}

Vec2 homography_warp(const Vec2& target_pixel, const Intrinsics& k_in,
                     const Intrinsics& k_t, const RelativePose& rel,
                     double plane_depth) {
  // Exact plane-induced map. With rel composed target-side-inverted, the
  // target ray in the reference frame is X(s) = s*a - b; the point at
  // reference depth z is, projectively, (z + b_z)*a - a_z*b with scale
  // z*a_z. a_z -> 0 means the ray runs parallel to the plane stack.
  const Vec3 dir((target_pixel.x() - k_t.cx) / k_t.fx,
                 (target_pixel.y() - k_t.cy) / k_t.fy, 1.0);
  const Vec3 a = rel.R.transpose() * dir;
  const Vec3 b = rel.R.transpose() * rel.t;
  const Vec3 point = (plane_depth + b.z()) * a - a.z() * b;
  const double scale = plane_depth * a.z();
  if (std::abs(scale) < 1e-12) throw DegenerateWarp();
  return Vec2(k_in.fx * point.x() / scale + k_in.cx,
              k_in.fy * point.y() / scale + k_in.cy);
}

Ray pixel_ray(const Intrinsics& intr, const Pose& pose, const Vec2& pixel) {
  const Vec3 dir_cam((pixel.x() - intr.cx) / intr.fx,
                     (pixel.y() - intr.cy) / intr.fy, 1.0);
  Ray ray;
  ray.origin = pose.t;
  ray.dir = (pose.R * dir_cam).normalized();
  return ray;
}

PlaneStack make_plane_depths(double near, double far, int count,
                             PlaneSpacing spacing) {
  if (near <= 0 || near >= far)
    throw InvalidBounds("plane bounds require 0 < near < far, got near=" +
                        std::to_string(near) + " far=" + std::to_string(far));
  if (count < 1) throw InvalidBounds("plane count must be >= 1");

  PlaneStack stack;
  stack.near = near;
  stack.far = far;
  stack.spacing = spacing;
  stack.depths.resize(static_cast<size_t>(count));
  if (count == 1) {
    stack.depths[0] = 0.5 * (near + far);
    return stack;
  }
  for (int k = 0; k < count; ++k) {
    const double a = static_cast<double>(k) / (count - 1);
    if (spacing == PlaneSpacing::LinearDepth) {
      stack.depths[static_cast<size_t>(k)] = near + a * (far - near);
    } else {
      const double inv = 1.0 / near + a * (1.0 / far - 1.0 / near);
      stack.depths[static_cast<size_t>(k)] = 1.0 / inv;
    }
  }
  // Pin the endpoints; the disparity formula above only hits them up to
  // rounding.
  stack.depths.front() = near;
  stack.depths.back() = far;
  return stack;
}

std::vector<PlaneHit> ray_plane_intersections(const Vec2& target_pixel,
                                              const Intrinsics& target_intr,
                                              const Pose& target_pose,
                                              const Intrinsics& ref_intr,
                                              const Pose& ref_pose,
                                              const PlaneStack& planes) {
  const RelativePose rel = relative_extrinsics(target_pose, ref_pose);
  const Mat3 ref_k_inv = ref_intr.matrix().inverse();

  std::vector<PlaneHit> hits;
  hits.reserve(planes.depths.size());
  for (int k = 0; k < planes.count(); ++k) {
    const double z = planes.depths[static_cast<size_t>(k)];
    Vec2 ref_px;
    try {
      ref_px = homography_warp(target_pixel, ref_intr, target_intr, rel, z);
    } catch (const DegenerateWarp&) {
      throw DegenerateWarp(k);
    }
    // Lift the reference pixel back to 3D to measure distance along the
    // target ray; plane depths live in the reference frame, distances are
    // needed in a frame shared by every MPI.
    const Vec3 point_ref = z * (ref_k_inv * Vec3(ref_px.x(), ref_px.y(), 1.0));
    const Vec3 point_world = ref_pose.R * point_ref + ref_pose.t;
    hits.push_back({ref_px, z, (point_world - target_pose.t).norm()});
  }
  return hits;
}

ClosestPoint closest_point_parameter(const Vec3& x0, const Vec3& o1,
                                     const Vec3& d1, double t_near,
                                     double t_far) {
  double t = (x0 - o1).dot(d1);
  t = std::min(std::max(t, t_near), t_far);
  return {t, (o1 + t * d1 - x0).norm()};
}

}  // namespace mpview
