#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mpview/adam.hpp"
#include "mpview/losses.hpp"
#include "mpview/renderer.hpp"
#include "mpview/rng.hpp"
#include "mpview/scene.hpp"

namespace mpview {

struct TrainConfig {
  int epochs = 50;
  int rays_per_batch = 1024;
  int unseen_rays_per_batch = 1024;
  int planes = 80;
  PlaneSpacing spacing = PlaneSpacing::LinearDepth;
  int hidden_layers = 4;
  int width = 256;
  EncodingConfig enc;
  LossWeights loss;
  double lr_initial = 5e-3;
  double lr_final = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  uint64_t seed = 0;
  int checkpoint_every = 0;  // epochs between checkpoints; 0 = final only
  int workers = 0;           // 0 = resolve from environment
  bool single_mpi = false;   // one stack anchored at input view 0
  int block_rays = 32;       // reduction granularity, fixed across workers
  std::string out_dir;       // checkpoints + training log; empty = in-memory
};

struct LossRecord {
  int64_t epoch = 0;
  int64_t step = 0;
  double mse = 0.0;
  double ac = 0.0;
  double dc = 0.0;
  double dc_input = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

std::string format_loss_record(const LossRecord& r);

struct TrainState {
  std::vector<MpiField> fields;
  std::vector<AdamState> optimizers;
  int64_t epoch = 0;
  int64_t step = 0;
  Rng rng;
  TrainConfig config;
};

struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(const std::string& msg) : std::runtime_error(msg) {}
};

// One sampled training ray: which input view, which pixel, its color.
struct RaySample {
  int view = 0;
  Vec2 pixel = Vec2::Zero();
  Vec3 gt = Vec3::Zero();
};

// Without-replacement pixel sampler: one epoch is one permutation of every
// (view, pixel) pair, consumed in batches.
class RayBatcher {
 public:
  explicit RayBatcher(const Scene& scene);
  void begin_epoch(Rng& rng);
  std::vector<RaySample> next_batch(int batch_size);
  bool epoch_done() const { return cursor_ >= order_.size(); }
  int64_t steps_per_epoch(int batch_size) const;
  int64_t total_rays() const { return static_cast<int64_t>(order_.size()); }

 private:
  const Scene* scene_;
  std::vector<uint32_t> order_;
  size_t cursor_ = 0;
};

// Translation lerp + rotation slerp between two poses.
Pose interpolate_pose(const Pose& a, const Pose& b, double u);

// Random in-hull pose: pick an ordered pair of input poses, lerp the
// translation and slerp the rotation at u ~ U[0.1, 0.9].
Pose sample_unseen_pose(std::span<const Pose> input_poses, Rng& rng);

TrainState init_train_state(const Scene& scene, const TrainConfig& config);

// Loss components and per-field parameter gradients for one batch pair.
// Pure given the state snapshot; this is the function the gradient checks
// drive. unseen_batch may be empty (reconstruction-only phase).
struct StepGradients {
  LossRecord record;
  std::vector<MlpGrads> grads;
};
StepGradients compute_step_gradients(const TrainState& state, const Scene& scene,
                                     std::span<const RaySample> input_batch,
                                     const std::optional<Pose>& unseen_pose,
                                     std::span<const Vec2> unseen_pixels);

// One optimizer step: sample batches, backpropagate, update every field.
LossRecord train_step(TrainState& state, const Scene& scene, RayBatcher& batcher);

using EpochCallback = std::function<void(const TrainState&, const LossRecord&)>;

struct TrainResult {
  TrainState state;
  std::vector<LossRecord> log;
};

// Full run: config.epochs passes over every input pixel, two-phase loss
// schedule, checkpoints at the configured cadence under out_dir.
TrainResult train(const Scene& scene, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

// Resume from a checkpoint file and continue to config.epochs. A non-empty
// out_dir_override redirects checkpoints and the log without touching the
// source checkpoint.
TrainResult train_resume(const Scene& scene, const std::string& checkpoint_path,
                         const std::string& out_dir_override = "",
                         const EpochCallback& on_epoch = {});

}  // namespace mpview
