// Wall-clock comparison of the serial (workers=1) and OpenMP paths for the
// data-parallel kernels: full-frame rendering, one training step, the raw
// batched MLP kernel, and the Monte-Carlo overlap trials. The two paths must
// agree bit-for-bit; this target only reports time.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "mpview/analysis.hpp"
#include "mpview/renderer.hpp"
#include "mpview/scene.hpp"
#include "mpview/trainer.hpp"

using namespace mpview;

namespace {

double time_ms(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void report(const char* name, double serial_ms, double parallel_ms) {
  std::printf("%-28s %10.1f ms %10.1f ms   x%.2f\n", name, serial_ms, parallel_ms,
              parallel_ms > 0 ? serial_ms / parallel_ms : 0.0);
}

}  // namespace

int main() {
  const int threads = omp_get_max_threads();
  std::printf("kernel                            serial     omp(%d)   speedup\n", threads);

  const Scene scene = gen_synthetic(preset_spec("two-plane"), 0, "");

  TrainConfig config;
  config.epochs = 1;
  config.planes = 16;
  config.width = 64;
  config.hidden_layers = 4;
  config.rays_per_batch = 1024;
  config.unseen_rays_per_batch = 1024;
  config.loss.schedule_epoch = 0;  // exercise the consistency path too
  config.seed = 0;

  TrainState state = init_train_state(scene, config);

  {
    const auto& f = state.fields[0];
    const auto run = [&](int workers) {
      render_view(f, scene.heldout[0].intr, scene.heldout[0].pose, workers);
    };
    report("render_view 64x64 D=16", time_ms([&] { run(1); }),
           time_ms([&] { run(threads); }));
  }

  {
    const auto run = [&](int workers) {
      TrainState s = state;  // step consumes RNG; keep runs identical
      s.config.workers = workers;
      RayBatcher batcher(scene);
      batcher.begin_epoch(s.rng);
      train_step(s, scene, batcher);
    };
    report("train_step 1024 rays N=3", time_ms([&] { run(1); }),
           time_ms([&] { run(threads); }));
  }

  {
    const int points = 16384;
    Matrix inputs(config.enc.input_dim(), points);
    Rng rng(7);
    for (Eigen::Index c = 0; c < inputs.cols(); ++c)
      for (Eigen::Index r = 0; r < inputs.rows(); ++r)
        inputs(r, c) = rng.uniform(-1.0, 1.0);
    const auto& params = state.fields[0].params;
    // The GEMM kernel itself is single-threaded by design (blocks are the
    // parallel unit); time one full-batch pass for scale.
    BatchTape tape;
    const double fwd = time_ms([&] { forward_batch(params, inputs, &tape); });
    MlpGrads grads = MlpGrads::zeros_like(params);
    Matrix cotangent = Matrix::Ones(kHeadOutputs, points);
    const double bwd =
        time_ms([&] { backward_batch(params, tape, cotangent, grads); });
    std::printf("%-28s %10.1f ms %10.1f ms   (fwd/bwd, single block)\n",
                "mlp batch 16k points", fwd, bwd);
  }

  {
    std::vector<CameraRig> rigs;
    for (const auto& v : scene.inputs) rigs.push_back({v.intr, v.pose});
    const PlaneStack planes =
        make_plane_depths(scene.near, scene.far, 16, PlaneSpacing::LinearDepth);
    const auto run = [&](int workers) {
      cross_view_overlap(rigs, SamplingMode::Stratified, planes, 64,
                         1e-3 * (scene.far - scene.near), 2000, 0, workers);
    };
    report("overlap 2k trials M=64", time_ms([&] { run(1); }),
           time_ms([&] { run(threads); }));
  }
  return 0;
}
