#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mpview/geometry.hpp"
#include "oracles.hpp"

using namespace mpview;

namespace {

Intrinsics square_intrinsics(double f, int size) {
  Intrinsics k;
  k.fx = k.fy = f;
  k.cx = k.cy = size / 2.0;
  k.width = k.height = size;
  return k;
}

}  // namespace

TEST_CASE("relative_extrinsics identity and self") {
  Rng rng(1);
  const Pose p = oracles::random_pose(rng);

  const RelativePose from_identity = relative_extrinsics(Pose{}, p);
  CHECK((from_identity.R - p.R).cwiseAbs().maxCoeff() == 0.0);
  CHECK((from_identity.t - p.t).cwiseAbs().maxCoeff() == 0.0);

  const RelativePose self = relative_extrinsics(p, p);
  CHECK((self.R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(self.t.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("relative_extrinsics matches dense 4x4 oracle") {
  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Pose target = oracles::random_pose(rng);
    const Pose input = oracles::random_pose(rng);
    const RelativePose got = relative_extrinsics(target, input);
    const RelativePose want = oracles::relative_extrinsics_dense(target, input);
    CHECK((got.R - want.R).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((got.t - want.t).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("homography_warp identity map") {
  const Intrinsics k = square_intrinsics(100, 64);
  for (double z : {0.5, 2.0, 77.0})
    for (double u : {0.0, 10.0, 63.0})
      for (double v : {3.0, 20.0}) {
        const Vec2 out = homography_warp(Vec2(u, v), k, k, RelativePose{}, z);
        CHECK(out.x() == doctest::Approx(u).epsilon(1e-12));
        CHECK(out.y() == doctest::Approx(v).epsilon(1e-12));
      }
}

TEST_CASE("homography_warp principal ray under axial translation") {
  Intrinsics k = square_intrinsics(100, 64);
  k.cx = k.cy = 32;
  RelativePose rel;
  rel.t = Vec3(0, 0, -1);
  const Vec2 out = homography_warp(Vec2(32, 32), k, k, rel, 2.0);
  CHECK(out.x() == doctest::Approx(32.0));
  CHECK(out.y() == doctest::Approx(32.0));
}

TEST_CASE("homography_warp matches projection oracle") {
  Rng rng(3);
  int done = 0;
  while (done < 2000) {
    const Pose target = oracles::random_pose(rng, 0.6, 0.8);
    const Pose ref = oracles::random_pose(rng, 0.6, 0.8);
    const Intrinsics k_t = square_intrinsics(rng.uniform(50, 200), 64);
    const Intrinsics k_in = square_intrinsics(rng.uniform(50, 200), 48);
    const double z = rng.uniform(0.5, 6.0);
    const Vec2 pixel(rng.uniform(0, 64), rng.uniform(0, 64));

    const RelativePose rel = relative_extrinsics(target, ref);
    // Skip near-degenerate instances, same guard the library applies.
    const Vec3 dir((pixel.x() - k_t.cx) / k_t.fx, (pixel.y() - k_t.cy) / k_t.fy, 1);
    if (std::abs((rel.R.transpose() * dir).z()) < 1e-3) continue;

    const Vec2 got = homography_warp(pixel, k_in, k_t, rel, z);
    const Vec2 want = oracles::warp_via_projection(pixel, k_in, k_t, target, ref, z);
    CHECK((got - want).norm() < 1e-6);
    ++done;
  }
}

TEST_CASE("homography_warp throws on rays parallel to the stack") {
  const Intrinsics k = square_intrinsics(100, 64);
  RelativePose rel;
  rel.R = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitY()).toRotationMatrix();
  CHECK_THROWS_AS(homography_warp(Vec2(32, 32), k, k, rel, 1.0), DegenerateWarp);
}

TEST_CASE("warp round trip over translation-only pairs") {
  Rng rng(4);
  const Intrinsics k_a = square_intrinsics(90, 64);
  const Intrinsics k_b = square_intrinsics(120, 64);
  for (int i = 0; i < 200; ++i) {
    const Mat3 shared = oracles::random_rotation(rng, 0.8);
    Pose target, ref;
    target.R = ref.R = shared;
    target.t = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    ref.t = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));

    const double z = rng.uniform(2.0, 6.0);
    const Vec2 pixel(rng.uniform(8, 56), rng.uniform(8, 56));
    const RelativePose rel = relative_extrinsics(target, ref);
    const RelativePose rel_back = relative_extrinsics(ref, target);

    const Vec2 warped = homography_warp(pixel, k_b, k_a, rel, z);
    // The same physical plane sits at z + t'_z in the target frame.
    const Vec2 back = homography_warp(warped, k_a, k_b, rel_back, z + rel.t.z());
    CHECK((back - pixel).norm() < 1e-6);
  }
}

TEST_CASE("pixel_ray directions") {
  const Intrinsics k = square_intrinsics(100, 64);
  const Ray axis = pixel_ray(k, Pose{}, Vec2(k.cx, k.cy));
  CHECK((axis.dir - Vec3(0, 0, 1)).norm() < 1e-15);

  const Ray offset = pixel_ray(k, Pose{}, Vec2(k.cx + k.fx, k.cy));
  CHECK((offset.dir - Vec3(1, 0, 1).normalized()).norm() < 1e-15);
}

TEST_CASE("pixel_ray re-projection round trip") {
  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    const Intrinsics k = square_intrinsics(rng.uniform(40, 150), 64);
    const Pose pose = oracles::random_pose(rng);
    const Vec2 pixel(rng.uniform(0, 64), rng.uniform(0, 64));
    const Ray ray = pixel_ray(k, pose, pixel);
    CHECK(std::abs(ray.dir.norm() - 1.0) < 1e-12);

    const Vec3 point = ray.origin + rng.uniform(0.5, 10.0) * ray.dir;
    const Vec3 cam = pose.R.transpose() * (point - pose.t);
    const Vec2 reproj(k.fx * cam.x() / cam.z() + k.cx, k.fy * cam.y() / cam.z() + k.cy);
    CHECK((reproj - pixel).norm() < 1e-9);
  }
}

TEST_CASE("make_plane_depths linear") {
  const PlaneStack s = make_plane_depths(1, 5, 5, PlaneSpacing::LinearDepth);
  REQUIRE(s.count() == 5);
  for (int k = 0; k < 5; ++k) CHECK(s.depths[k] == doctest::Approx(1.0 + k));
}

TEST_CASE("make_plane_depths disparity") {
  const PlaneStack s = make_plane_depths(1, 2, 3, PlaneSpacing::LinearDisparity);
  CHECK(s.depths[0] == 1.0);
  CHECK(s.depths[1] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(s.depths[2] == 2.0);
}

TEST_CASE("make_plane_depths 80 planes, strict monotonicity, exact endpoints") {
  for (auto mode : {PlaneSpacing::LinearDepth, PlaneSpacing::LinearDisparity}) {
    const PlaneStack s = make_plane_depths(2, 10, 80, mode);
    CHECK(s.depths.front() == 2.0);
    CHECK(s.depths.back() == 10.0);
    for (int k = 1; k < 80; ++k) CHECK(s.depths[k] > s.depths[k - 1]);
  }
  const PlaneStack single = make_plane_depths(1, 3, 1, PlaneSpacing::LinearDepth);
  CHECK(single.depths == std::vector<double>{2.0});
}

TEST_CASE("make_plane_depths rejects bad bounds") {
  CHECK_THROWS_AS(make_plane_depths(0, 5, 4, PlaneSpacing::LinearDepth), InvalidBounds);
  CHECK_THROWS_AS(make_plane_depths(-1, 5, 4, PlaneSpacing::LinearDepth), InvalidBounds);
  CHECK_THROWS_AS(make_plane_depths(5, 5, 4, PlaneSpacing::LinearDepth), InvalidBounds);
  CHECK_THROWS_AS(make_plane_depths(1, 5, 0, PlaneSpacing::LinearDepth), InvalidBounds);
}

TEST_CASE("ray_plane_intersections self view") {
  const Intrinsics k = square_intrinsics(80, 64);
  const Pose pose;  // identity
  const PlaneStack planes = make_plane_depths(1, 4, 7, PlaneSpacing::LinearDepth);
  const Vec2 pixel(11.5, 40.25);
  const auto hits = ray_plane_intersections(pixel, k, pose, k, pose, planes);
  REQUIRE(hits.size() == 7);
  const Vec3 dir((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1);
  for (size_t i = 0; i < hits.size(); ++i) {
    CHECK((hits[i].ref_pixel - pixel).norm() < 1e-9);
    CHECK(hits[i].ray_depth ==
          doctest::Approx(planes.depths[i] * dir.norm()).epsilon(1e-12));
  }
}

TEST_CASE("ray_plane_intersections single plane") {
  const Intrinsics k = square_intrinsics(80, 64);
  const PlaneStack planes = make_plane_depths(1, 4, 1, PlaneSpacing::LinearDepth);
  const auto hits = ray_plane_intersections(Vec2(5, 6), k, Pose{}, k, Pose{}, planes);
  CHECK(hits.size() == 1);
}

TEST_CASE("ray_plane_intersections points lie on the target ray") {
  Rng rng(6);
  const PlaneStack planes = make_plane_depths(1, 5, 12, PlaneSpacing::LinearDepth);
  for (int i = 0; i < 100; ++i) {
    const Pose target = oracles::random_pose(rng, 0.3, 0.5);
    const Pose ref = oracles::random_pose(rng, 0.3, 0.5);
    const Intrinsics k = square_intrinsics(90, 64);
    const Vec2 pixel(rng.uniform(4, 60), rng.uniform(4, 60));

    std::vector<PlaneHit> hits;
    try {
      hits = ray_plane_intersections(pixel, k, target, k, ref, planes);
    } catch (const DegenerateWarp&) {
      continue;
    }
    const Ray ray = pixel_ray(k, target, pixel);
    const Mat3 k_inv = k.matrix().inverse();
    for (size_t j = 0; j < hits.size(); ++j) {
      const Vec3 point_ref =
          hits[j].plane_depth * (k_inv * Vec3(hits[j].ref_pixel.x(), hits[j].ref_pixel.y(), 1));
      CHECK(point_ref.z() == planes.depths[j]);  // exact by construction
      const Vec3 world = ref.R * point_ref + ref.t;
      const Vec3 rel = world - ray.origin;
      CHECK((rel - rel.dot(ray.dir) * ray.dir).norm() < 1e-9);
      CHECK(hits[j].ray_depth == doctest::Approx(rel.norm()).epsilon(1e-12));
    }
  }
}

TEST_CASE("ray_plane_intersections reports the offending plane") {
  const Intrinsics k = square_intrinsics(80, 64);
  Pose target;
  target.R = Eigen::AngleAxisd(M_PI / 2, Vec3::UnitY()).toRotationMatrix();
  const PlaneStack planes = make_plane_depths(1, 4, 3, PlaneSpacing::LinearDepth);
  try {
    // The principal ray of a 90-degree-rotated camera runs parallel to the
    // reference planes.
    ray_plane_intersections(Vec2(32, 32), k, target, k, Pose{}, planes);
    FAIL("expected DegenerateWarp");
  } catch (const DegenerateWarp& e) {
    CHECK(e.plane_index == 0);
  }
}

TEST_CASE("closest_point_parameter on-ray and perpendicular cases") {
  const Vec3 o(0, 0, 0);
  const Vec3 d(0, 0, 1);
  const auto on_ray = closest_point_parameter(o + 3.0 * d, o, d, 0, 10);
  CHECK(on_ray.t == doctest::Approx(3.0));
  CHECK(on_ray.distance < 1e-15);

  const auto perp = closest_point_parameter(Vec3(0, 0, 2), Vec3(1, 0, 0), d, 0, 10);
  CHECK(perp.t == doctest::Approx(2.0));
  CHECK(perp.distance == doctest::Approx(1.0));
}

TEST_CASE("closest_point_parameter matches grid search") {
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    const Vec3 x0(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    const Vec3 o1(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    const Vec3 d1 = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized();
    const double t_near = 0.0, t_far = 8.0;

    const auto got = closest_point_parameter(x0, o1, d1, t_near, t_far);

    const int grid = 1'000'000;
    double best_t = t_near, best_d = (o1 + t_near * d1 - x0).norm();
    for (int g = 1; g <= grid; ++g) {
      const double t = t_near + (t_far - t_near) * g / grid;
      const double dist = (o1 + t * d1 - x0).norm();
      if (dist < best_d) {
        best_d = dist;
        best_t = t;
      }
    }
    const double resolution = (t_far - t_near) / grid;
    CHECK(std::abs(got.t - best_t) <= resolution);
    CHECK(got.distance <= best_d + 1e-12);
  }
}

TEST_CASE("closest_point_parameter zeroes the distance derivative when unclamped") {
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x0(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(2, 6));
    const Vec3 o1(rng.uniform(-1, 1), rng.uniform(-1, 1), 0);
    const Vec3 d1 = Vec3(rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), 1).normalized();
    const auto cp = closest_point_parameter(x0, o1, d1, -100, 100);
    CHECK(std::abs((o1 + cp.t * d1 - x0).dot(d1)) < 1e-9);
    // Unclamped distance agrees with the closed form.
    const double closed = std::sqrt(std::max(0.0, (x0 - o1).squaredNorm() - cp.t * cp.t));
    CHECK(cp.distance == doctest::Approx(closed).epsilon(1e-9));
  }
}
