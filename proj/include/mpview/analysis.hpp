#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mpview/geometry.hpp"
#include "mpview/rng.hpp"

namespace mpview {

// One uniform draw per bin of an M-way equal partition of [t_near, t_far];
// strictly increasing across bins.
std::vector<double> stratified_sample(double t_near, double t_far, int count,
                                      Rng& rng);

// ---------------------------------------------------------------------------
// Sparse-solution oracle: the degenerate minimizer a memorizing network
// converges to when one ray must explain one pixel on its own. Discretized
// on finite grids and solved by exhaustive enumeration.

struct SparseInstance {
  Vec3 c_gt = Vec3::Zero();
  int sample_count = 4;  // M
  std::vector<double> alpha_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<double> color_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
  double l0_weight = 1.0;
};

// EquationConstrained treats the render equation as the primary objective
// (data residual first, support size as the tie-breaker among exact fits);
// Scalarized minimizes residual + l0_weight * support directly.
enum class SparseMode { EquationConstrained, Scalarized };

struct SparseSolution {
  std::vector<Vec3> colors;
  std::vector<double> alphas;
  double residual_sq = 0.0;
  int l0_count = 0;
  double objective = 0.0;  // residual_sq + l0_weight * l0_count
};

struct BudgetExceeded : std::runtime_error {
  explicit BudgetExceeded(const std::string& msg) : std::runtime_error(msg) {}
};

SparseSolution sparse_solution_oracle(const SparseInstance& inst,
                                      SparseMode mode = SparseMode::EquationConstrained,
                                      int workers = 0);

// The all-mass-on-the-first-sample solution; what the oracle is expected to
// return whenever c_gt lies on the color grid.
SparseSolution sparse_closed_form(const SparseInstance& inst);

// ---------------------------------------------------------------------------
// Cross-view sampling overlap: how often do two views' samples coincide in
// 3D under per-ray stratified draws versus shared-plane sampling.

enum class SamplingMode { Stratified, PlaneConstrained };

struct CameraRig {
  Intrinsics intr;
  Pose pose;
};

struct PairOverlap {
  int view_a = 0;
  int view_b = 0;
  uint64_t tested = 0;   // sample pairs (stratified) or samples (plane mode)
  uint64_t matched = 0;  // within epsilon / exactly on a shared plane
  double fraction = 0.0;
  double min_distance = 0.0;  // closest-approach calibration (stratified)
  std::vector<uint64_t> histogram;  // nearest cross-view sample distance
};

struct OverlapReport {
  SamplingMode mode = SamplingMode::Stratified;
  double epsilon = 0.0;
  int samples_per_ray = 0;
  int trials = 0;
  std::vector<double> histogram_edges;
  std::vector<PairOverlap> pairs;
};

OverlapReport cross_view_overlap(const std::vector<CameraRig>& cameras,
                                 SamplingMode mode, const PlaneStack& planes,
                                 int samples_per_ray, double epsilon, int trials,
                                 uint64_t seed, int workers = 0);

std::string format_overlap_report(const OverlapReport& report);
std::string format_overlap_records(const OverlapReport& report);  // delimited

}  // namespace mpview
