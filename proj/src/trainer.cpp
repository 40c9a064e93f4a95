#include "mpview/trainer.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mpview/checkpoint.hpp"
#include "mpview/parallel.hpp"

namespace mpview {

namespace fs = std::filesystem;

std::string format_loss_record(const LossRecord& r) {
  char line[256];
  std::snprintf(line, sizeof(line), "%lld %lld %.17g %.17g %.17g %.17g %.17g %.17g",
                static_cast<long long>(r.epoch), static_cast<long long>(r.step),
                r.mse, r.ac, r.dc, r.dc_input, r.total, r.lr);
  return line;
}

RayBatcher::RayBatcher(const Scene& scene) : scene_(&scene) {
  const size_t pixels = static_cast<size_t>(scene.inputs[0].intr.width) *
                        static_cast<size_t>(scene.inputs[0].intr.height);
  order_.resize(scene.inputs.size() * pixels);
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<uint32_t>(i);
  cursor_ = order_.size();  // no batches until an epoch begins
}

void RayBatcher::begin_epoch(Rng& rng) {
  // Shuffle from the identity so the permutation is a pure function of the
  // generator state; resumed runs then replay epochs exactly.
  for (size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<uint32_t>(i);
  for (size_t i = order_.size() - 1; i > 0; --i) {
    const size_t j = rng.uniform_index(i + 1);
    std::swap(order_[i], order_[j]);
  }
  cursor_ = 0;
}

std::vector<RaySample> RayBatcher::next_batch(int batch_size) {
  const int w = scene_->inputs[0].intr.width;
  const int h = scene_->inputs[0].intr.height;
  const size_t pixels = static_cast<size_t>(w) * h;
  std::vector<RaySample> batch;
  batch.reserve(static_cast<size_t>(batch_size));
  while (static_cast<int>(batch.size()) < batch_size && cursor_ < order_.size()) {
    const uint32_t id = order_[cursor_++];
    RaySample sample;
    sample.view = static_cast<int>(id / pixels);
    const uint32_t p = id % pixels;
    const int x = static_cast<int>(p % static_cast<uint32_t>(w));
    const int y = static_cast<int>(p / static_cast<uint32_t>(w));
    sample.pixel = Vec2(x + 0.5, y + 0.5);
    const Image& im = scene_->inputs[static_cast<size_t>(sample.view)].image;
    sample.gt = Vec3(im.at(x, y, 0), im.at(x, y, 1), im.at(x, y, 2));
    batch.push_back(sample);
  }
  return batch;
}

int64_t RayBatcher::steps_per_epoch(int batch_size) const {
  return (static_cast<int64_t>(order_.size()) + batch_size - 1) / batch_size;
}

Pose interpolate_pose(const Pose& a, const Pose& b, double u) {
  Eigen::Quaterniond qa(a.R), qb(b.R);
  Pose out;
  out.R = qa.slerp(u, qb).toRotationMatrix();
  out.t = (1.0 - u) * a.t + u * b.t;
  return out;
}

Pose sample_unseen_pose(std::span<const Pose> input_poses, Rng& rng) {
  const size_t n = input_poses.size();
  const size_t a = rng.uniform_index(n);
  size_t b = rng.uniform_index(n - 1);
  if (b >= a) ++b;
  const double u = rng.uniform(0.1, 0.9);
  return interpolate_pose(input_poses[a], input_poses[b], u);
}

TrainState init_train_state(const Scene& scene, const TrainConfig& config) {
  TrainState state;
  state.config = config;
  state.rng = Rng(config.seed);

  const size_t n = config.single_mpi ? 1 : scene.inputs.size();
  for (size_t i = 0; i < n; ++i) {
    MpiField field;
    field.intr = scene.inputs[i].intr;
    field.pose = scene.inputs[i].pose;
    field.planes = make_plane_depths(scene.near, scene.far, config.planes,
                                     config.spacing);
    field.enc = config.enc;
    field.params = init_params(config.hidden_layers, config.width,
                               config.enc.input_dim(),
                               config.seed * 0x100 + i);
    state.fields.push_back(std::move(field));
    state.optimizers.push_back(AdamState::for_params(
        state.fields.back().params, config.adam_beta1, config.adam_beta2,
        config.adam_epsilon));
  }
  return state;
}

namespace {

struct BlockResult {
  std::vector<MlpGrads> grads;  // per field
  double mse_raw = 0.0;
  double ac_raw = 0.0;
  double dc_raw = 0.0;
  double dci_raw = 0.0;
};

// Forward + cotangent + backward for one block of rays through every field.
// Raw loss sums are returned unnormalized; the caller owns the constants.
// n_in / n_un are the realized batch sizes the losses normalize by.
BlockResult process_block(const TrainState& state, const Scene& scene,
                          std::span<const RaySample> input_rays,
                          std::span<const RayContext> unseen_rays,
                          double n_in, double n_un, bool consistency_active,
                          bool with_gradients) {
  const auto& fields = state.fields;
  const size_t n = fields.size();
  const LossWeights& lw = state.config.loss;
  const double pair_norm =
      n >= 2 ? 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1)) : 0.0;

  BlockResult result;
  if (with_gradients)
    for (const auto& f : fields) result.grads.push_back(MlpGrads::zeros_like(f.params));

  // Input rays: reconstruction for every field, plus input-view depth
  // consistency when the schedule has the consistency phase active.
  if (!input_rays.empty()) {
    const size_t rays = input_rays.size();
    std::vector<RayContext> ctx(rays);
    for (size_t r = 0; r < rays; ++r) {
      const View& view = scene.inputs[static_cast<size_t>(input_rays[r].view)];
      ctx[r] = {view.intr, view.pose, input_rays[r].pixel};
    }
    std::vector<BlockForward> fwd(n);
    for (size_t i = 0; i < n; ++i)
      fwd[i] = render_block_forward(fields[i], ctx);

    std::vector<std::vector<Vec3>> d_color(n, std::vector<Vec3>(rays, Vec3::Zero()));
    std::vector<std::vector<double>> d_depth(n, std::vector<double>(rays, 0.0));

    for (size_t r = 0; r < rays; ++r) {
      for (size_t i = 0; i < n; ++i) {
        const Vec3 diff = fwd[i].outs[r].color - input_rays[r].gt;
        result.mse_raw += diff.squaredNorm();
        d_color[i][r] += (2.0 / (static_cast<double>(n) * n_in)) * diff;
      }
      if (consistency_active && n >= 2 && lw.lambda_dc_input != 0.0) {
        for (size_t i = 0; i < n; ++i)
          for (size_t j = i + 1; j < n; ++j) {
            if (fwd[i].outs[r].transmittance > lw.dc_skip_transmittance ||
                fwd[j].outs[r].transmittance > lw.dc_skip_transmittance)
              continue;
            const double diff = fwd[i].outs[r].depth - fwd[j].outs[r].depth;
            result.dci_raw += diff * diff;
            const double g =
                lw.lambda_dc_input * pair_norm * (2.0 / n_in) * diff;
            d_depth[i][r] += g;
            d_depth[j][r] -= g;
          }
      }
    }
    if (with_gradients)
      for (size_t i = 0; i < n; ++i)
        render_block_backward(fields[i], fwd[i], d_color[i], d_depth[i],
                              result.grads[i]);
  }

  // Unseen rays: appearance and depth consistency across fields.
  if (!unseen_rays.empty() && n >= 2) {
    const size_t rays = unseen_rays.size();
    std::vector<BlockForward> fwd(n);
    for (size_t i = 0; i < n; ++i)
      fwd[i] = render_block_forward(fields[i], unseen_rays);

    std::vector<std::vector<Vec3>> d_color(n, std::vector<Vec3>(rays, Vec3::Zero()));
    std::vector<std::vector<double>> d_depth(n, std::vector<double>(rays, 0.0));

    for (size_t r = 0; r < rays; ++r) {
      for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
          const Vec3 cdiff = fwd[i].outs[r].color - fwd[j].outs[r].color;
          result.ac_raw += cdiff.squaredNorm();
          const Vec3 gc = lw.lambda_ac * pair_norm * (2.0 / n_un) * cdiff;
          d_color[i][r] += gc;
          d_color[j][r] -= gc;

          if (fwd[i].outs[r].transmittance > lw.dc_skip_transmittance ||
              fwd[j].outs[r].transmittance > lw.dc_skip_transmittance)
            continue;
          const double zdiff = fwd[i].outs[r].depth - fwd[j].outs[r].depth;
          result.dc_raw += zdiff * zdiff;
          const double gz = lw.lambda_dc * pair_norm * (2.0 / n_un) * zdiff;
          d_depth[i][r] += gz;
          d_depth[j][r] -= gz;
        }
    }
    if (with_gradients)
      for (size_t i = 0; i < n; ++i)
        render_block_backward(fields[i], fwd[i], d_color[i], d_depth[i],
                              result.grads[i]);
  }
  return result;
}

}  // namespace

StepGradients compute_step_gradients(const TrainState& state, const Scene& scene,
                                     std::span<const RaySample> input_batch,
                                     const std::optional<Pose>& unseen_pose,
                                     std::span<const Vec2> unseen_pixels) {
  const auto& config = state.config;
  const size_t n = state.fields.size();
  const bool consistency_active = unseen_pose.has_value();

  std::vector<RayContext> unseen_ctx;
  if (consistency_active) {
    const Intrinsics& intr = scene.inputs[0].intr;
    unseen_ctx.reserve(unseen_pixels.size());
    for (const Vec2& px : unseen_pixels)
      unseen_ctx.push_back({intr, *unseen_pose, px});
  }

  // Fixed-size ray blocks; block b covers input rays [b*B, ...) and the same
  // slice of unseen rays, so the reduction order never depends on workers.
  const long block = config.block_rays;
  const long n_in = static_cast<long>(input_batch.size());
  const long n_un = static_cast<long>(unseen_ctx.size());
  const long n_blocks = (std::max(n_in, n_un) + block - 1) / block;

  std::vector<BlockResult> partials(static_cast<size_t>(n_blocks));
  parallel_for(n_blocks, config.workers, [&](long b) {
    const long in_lo = std::min(b * block, n_in);
    const long in_hi = std::min((b + 1) * block, n_in);
    const long un_lo = std::min(b * block, n_un);
    const long un_hi = std::min((b + 1) * block, n_un);
    partials[static_cast<size_t>(b)] = process_block(
        state, scene, input_batch.subspan(static_cast<size_t>(in_lo), static_cast<size_t>(in_hi - in_lo)),
        std::span<const RayContext>(unseen_ctx.data() + un_lo, static_cast<size_t>(un_hi - un_lo)),
        static_cast<double>(n_in), static_cast<double>(n_un),
        consistency_active, true);
  });

  StepGradients out;
  for (const auto& f : state.fields) out.grads.push_back(MlpGrads::zeros_like(f.params));
  double mse_raw = 0, ac_raw = 0, dc_raw = 0, dci_raw = 0;
  for (auto& p : partials) {
    for (size_t i = 0; i < n; ++i) out.grads[i].add(p.grads[i]);
    mse_raw += p.mse_raw;
    ac_raw += p.ac_raw;
    dc_raw += p.dc_raw;
    dci_raw += p.dci_raw;
  }

  const double pair_norm =
      n >= 2 ? 2.0 / (static_cast<double>(n) * static_cast<double>(n - 1)) : 0.0;
  LossRecord& rec = out.record;
  rec.epoch = state.epoch;
  rec.step = state.step;
  rec.mse = mse_raw / (static_cast<double>(n) * static_cast<double>(n_in));
  rec.ac = n_un > 0 ? ac_raw * pair_norm / static_cast<double>(n_un) : 0.0;
  rec.dc = n_un > 0 ? dc_raw * pair_norm / static_cast<double>(n_un) : 0.0;
  rec.dc_input = consistency_active
                     ? dci_raw * pair_norm / static_cast<double>(n_in)
                     : 0.0;
  rec.total = total_loss(rec.mse, rec.ac, rec.dc, config.loss,
                         static_cast<int>(state.epoch), rec.dc_input);
  return out;
}

namespace {

void dump_nonfinite(const TrainState& state, const LossRecord& rec,
                    std::span<const RaySample> batch) {
  std::string path = state.config.out_dir.empty()
                         ? std::string("nonfinite_batch_dump.txt")
                         : state.config.out_dir + "/nonfinite_batch_dump.txt";
  std::ofstream out(path);
  out << "non-finite loss at " << format_loss_record(rec) << "\n";
  for (const auto& s : batch)
    out << "view " << s.view << " pixel " << s.pixel.x() << " " << s.pixel.y()
        << " gt " << s.gt.transpose() << "\n";
}

}  // namespace

LossRecord train_step(TrainState& state, const Scene& scene, RayBatcher& batcher) {
  const TrainConfig& config = state.config;
  const auto input_batch = batcher.next_batch(config.rays_per_batch);

  const bool consistency_phase =
      state.epoch >= config.loss.schedule_epoch && state.fields.size() >= 2 &&
      (config.loss.lambda_ac != 0.0 || config.loss.lambda_dc != 0.0 ||
       config.loss.lambda_dc_input != 0.0);

  std::optional<Pose> unseen_pose;
  std::vector<Vec2> unseen_pixels;
  if (consistency_phase) {
    std::vector<Pose> poses;
    poses.reserve(scene.inputs.size());
    for (const auto& v : scene.inputs) poses.push_back(v.pose);
    unseen_pose = sample_unseen_pose(poses, state.rng);
    const Intrinsics& intr = scene.inputs[0].intr;
    unseen_pixels.reserve(static_cast<size_t>(config.unseen_rays_per_batch));
    for (int i = 0; i < config.unseen_rays_per_batch; ++i)
      unseen_pixels.emplace_back(state.rng.uniform(0.0, intr.width),
                                 state.rng.uniform(0.0, intr.height));
  }

  StepGradients sg =
      compute_step_gradients(state, scene, input_batch, unseen_pose, unseen_pixels);
  if (!std::isfinite(sg.record.total)) {
    dump_nonfinite(state, sg.record, input_batch);
    throw NonFiniteLoss("non-finite loss at epoch " + std::to_string(state.epoch) +
                        " step " + std::to_string(state.step) +
                        "; batch dumped next to the training log");
  }

  const double lr = lr_schedule(state.epoch, config.epochs, config.lr_initial,
                                config.lr_final);
  sg.record.lr = lr;
  for (size_t i = 0; i < state.fields.size(); ++i)
    adam_step(state.fields[i].params, state.optimizers[i], sg.grads[i], lr);
  state.step += 1;
  return sg.record;
}

namespace {

TrainResult run_epochs(TrainState state, const Scene& scene,
                       const EpochCallback& on_epoch) {
  const TrainConfig& config = state.config;
  TrainResult result;

  std::ofstream log_stream;
  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    const auto mode = state.epoch > 0 ? std::ios::app : std::ios::out;
    log_stream.open(config.out_dir + "/train_log.txt", mode);
    if (state.epoch == 0) log_stream << "# epoch step mse ac dc dci total lr\n";
  }

  RayBatcher batcher(scene);
  LossRecord last;
  while (state.epoch < config.epochs) {
    batcher.begin_epoch(state.rng);
    while (!batcher.epoch_done()) {
      last = train_step(state, scene, batcher);
      result.log.push_back(last);
      if (log_stream.is_open()) log_stream << format_loss_record(last) << "\n";
    }
    state.epoch += 1;
    if (!config.out_dir.empty()) {
      const bool cadence_hit =
          config.checkpoint_every > 0 && state.epoch % config.checkpoint_every == 0;
      if (cadence_hit && state.epoch < config.epochs)
        save_checkpoint(config.out_dir + "/ckpt_epoch_" +
                            std::to_string(state.epoch) + ".bin",
                        state);
    }
    if (on_epoch) on_epoch(state, last);
  }
  if (!config.out_dir.empty())
    save_checkpoint(config.out_dir + "/ckpt_final.bin", state);
  result.state = std::move(state);
  return result;
}

}  // namespace

TrainResult train(const Scene& scene, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  return run_epochs(init_train_state(scene, config), scene, on_epoch);
}

TrainResult train_resume(const Scene& scene, const std::string& checkpoint_path,
                         const std::string& out_dir_override,
                         const EpochCallback& on_epoch) {
  TrainState state = load_checkpoint(checkpoint_path);
  if (!out_dir_override.empty()) state.config.out_dir = out_dir_override;
  return run_epochs(std::move(state), scene, on_epoch);
}

}  // namespace mpview
