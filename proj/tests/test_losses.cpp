#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "mpview/losses.hpp"
#include "mpview/rng.hpp"
#include "oracles.hpp"

using namespace mpview;

namespace {

std::vector<std::vector<Vec3>> random_renders(size_t views, size_t rays, Rng& rng) {
  std::vector<std::vector<Vec3>> out(views, std::vector<Vec3>(rays));
  for (auto& view : out)
    for (auto& c : view) c = Vec3(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1));
  return out;
}

std::vector<std::vector<double>> random_depths(size_t views, size_t rays, Rng& rng) {
  std::vector<std::vector<double>> out(views, std::vector<double>(rays));
  for (auto& view : out)
    for (auto& z : view) z = rng.uniform(1, 5);
  return out;
}

}  // namespace

TEST_CASE("loss_mse examples and oracle") {
  Rng rng(1);
  const auto renders = random_renders(3, 16, rng);
  std::vector<Vec3> gt(16);
  for (auto& c : gt) c = Vec3(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1));

  std::vector<std::vector<Vec3>> exact(3, gt);
  CHECK(loss_mse(exact, gt) == 0.0);

  const std::vector<std::vector<Vec3>> one = {{Vec3(1, 0, 0)}};
  const std::vector<Vec3> zero = {Vec3(0, 0, 0)};
  CHECK(loss_mse(one, zero) == doctest::Approx(1.0));

  double naive = 0;
  for (size_t i = 0; i < 3; ++i)
    for (size_t r = 0; r < 16; ++r) naive += (renders[i][r] - gt[r]).squaredNorm();
  naive /= 3.0 * 16.0;
  CHECK(std::abs(loss_mse(renders, gt) - naive) < 1e-12);
}

TEST_CASE("loss_ac examples and oracle") {
  Rng rng(2);
  const auto same = random_renders(1, 8, rng);
  std::vector<std::vector<Vec3>> identical = {same[0], same[0], same[0]};
  CHECK(loss_ac(identical) == 0.0);

  const std::vector<std::vector<Vec3>> pair = {{Vec3(1, 0, 0)}, {Vec3(0, 0, 0)}};
  CHECK(loss_ac(pair) == doctest::Approx(1.0));

  const auto renders = random_renders(3, 9, rng);
  double naive = 0;
  for (size_t i = 0; i < 3; ++i)
    for (size_t j = i + 1; j < 3; ++j)
      for (size_t r = 0; r < 9; ++r)
        naive += (renders[i][r] - renders[j][r]).squaredNorm();
  naive *= 2.0 / (3.0 * 2.0 * 9.0);
  CHECK(std::abs(loss_ac(renders) - naive) < 1e-12);

  const std::vector<std::vector<Vec3>> lonely = {{Vec3(1, 0, 0)}};
  CHECK_THROWS_AS(loss_ac(lonely), TooFewViews);
}

TEST_CASE("loss_dc examples, oracle and transmittance mask") {
  Rng rng(3);
  const std::vector<std::vector<double>> pair = {{2.0}, {5.0}};
  CHECK(loss_dc(pair) == doctest::Approx(9.0));

  const auto depths = random_depths(4, 11, rng);
  double naive = 0;
  for (size_t i = 0; i < 4; ++i)
    for (size_t j = i + 1; j < 4; ++j)
      for (size_t r = 0; r < 11; ++r) {
        const double diff = depths[i][r] - depths[j][r];
        naive += diff * diff;
      }
  naive *= 2.0 / (4.0 * 3.0 * 11.0);
  CHECK(std::abs(loss_dc(depths) - naive) < 1e-12);

  std::vector<std::vector<double>> identical = {depths[0], depths[0]};
  CHECK(loss_dc(identical) == 0.0);

  // Rays transparent under one view contribute nothing for that pair.
  const std::vector<std::vector<double>> z = {{1.0, 1.0}, {3.0, 3.0}};
  const std::vector<std::vector<double>> trans = {{0.995, 0.1}, {0.1, 0.1}};
  const double masked = loss_dc(z, trans, 0.99);
  CHECK(masked == doctest::Approx(2.0));                  // one surviving ray of two
  CHECK(loss_dc(z, trans, 2.0) == doctest::Approx(4.0));  // mask disabled
}

TEST_CASE("total_loss schedule gate") {
  LossWeights w;
  w.lambda_ac = w.lambda_dc = 1.0;
  w.schedule_epoch = 15;
  CHECK(total_loss(0.5, 9.0, 9.0, w, 0) == 0.5);
  CHECK(total_loss(0.5, 0.2, 0.3, w, 15) == doctest::Approx(1.0));
  LossWeights off = w;
  off.lambda_ac = off.lambda_dc = off.lambda_dc_input = 0.0;
  for (int epoch : {0, 15, 40}) CHECK(total_loss(0.7, 5.0, 5.0, off, epoch) == 0.7);
}

TEST_CASE("losses are nonnegative, symmetric, permutation invariant") {
  Rng rng(4);
  auto renders = random_renders(3, 7, rng);
  auto depths = random_depths(3, 7, rng);
  std::vector<Vec3> gt(7);
  for (auto& c : gt) c = Vec3(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1));

  CHECK(loss_mse(renders, gt) > 0.0);
  CHECK(loss_ac(renders) > 0.0);
  CHECK(loss_dc(depths) > 0.0);

  // View permutation.
  auto renders_swapped = renders;
  std::swap(renders_swapped[0], renders_swapped[2]);
  CHECK(loss_ac(renders) == doctest::Approx(loss_ac(renders_swapped)).epsilon(1e-12));
  auto depths_swapped = depths;
  std::swap(depths_swapped[1], depths_swapped[2]);
  CHECK(loss_dc(depths) == doctest::Approx(loss_dc(depths_swapped)).epsilon(1e-12));

  // Ray permutation (apply the same shuffle everywhere).
  std::vector<size_t> perm = {3, 1, 6, 0, 5, 2, 4};
  auto renders_perm = renders;
  auto gt_perm = gt;
  for (size_t i = 0; i < 3; ++i)
    for (size_t r = 0; r < 7; ++r) renders_perm[i][r] = renders[i][perm[r]];
  for (size_t r = 0; r < 7; ++r) gt_perm[r] = gt[perm[r]];
  CHECK(loss_mse(renders, gt) == doctest::Approx(loss_mse(renders_perm, gt_perm)).epsilon(1e-12));
  CHECK(loss_ac(renders) == doctest::Approx(loss_ac(renders_perm)).epsilon(1e-12));
}

TEST_CASE("quadratic homogeneity") {
  Rng rng(5);
  const auto renders = random_renders(3, 5, rng);
  const auto depths = random_depths(3, 5, rng);
  std::vector<Vec3> gt(5, Vec3::Zero());

  const double s = 1.7;
  auto scaled_renders = renders;
  for (auto& view : scaled_renders)
    for (auto& c : view) c *= s;
  auto scaled_depths = depths;
  for (auto& view : scaled_depths)
    for (auto& z : view) z *= s;

  CHECK(std::abs(loss_mse(scaled_renders, gt) - s * s * loss_mse(renders, gt)) < 1e-9);
  CHECK(std::abs(loss_ac(scaled_renders) - s * s * loss_ac(renders)) < 1e-9);
  CHECK(std::abs(loss_dc(scaled_depths) - s * s * loss_dc(depths)) < 1e-9);
}

TEST_CASE("loss backward functions match finite differences") {
  Rng rng(6);
  auto renders = random_renders(3, 4, rng);
  auto depths = random_depths(3, 4, rng);
  std::vector<Vec3> gt(4);
  for (auto& c : gt) c = Vec3(rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1));

  std::vector<std::vector<Vec3>> grad_mse, grad_ac;
  loss_mse_backward(renders, gt, grad_mse);
  loss_ac_backward(renders, grad_ac);
  std::vector<std::vector<double>> grad_dc;
  loss_dc_backward(depths, grad_dc);

  const double step = 1e-6;
  for (size_t i = 0; i < 3; ++i)
    for (size_t r = 0; r < 4; ++r) {
      for (int ch = 0; ch < 3; ++ch) {
        auto bumped = renders;
        bumped[i][r][ch] += step;
        auto dipped = renders;
        dipped[i][r][ch] -= step;
        const double mse_fd = (loss_mse(bumped, gt) - loss_mse(dipped, gt)) / (2 * step);
        CHECK(oracles::gradient_error(grad_mse[i][r][ch], mse_fd) < 1e-6);
        const double ac_fd = (loss_ac(bumped) - loss_ac(dipped)) / (2 * step);
        CHECK(oracles::gradient_error(grad_ac[i][r][ch], ac_fd) < 1e-6);
      }
      auto bumped = depths;
      bumped[i][r] += step;
      auto dipped = depths;
      dipped[i][r] -= step;
      const double dc_fd = (loss_dc(bumped) - loss_dc(dipped)) / (2 * step);
      CHECK(oracles::gradient_error(grad_dc[i][r], dc_fd) < 1e-6);
    }
}
