#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mpview/analysis.hpp"
#include "mpview/checkpoint.hpp"
#include "mpview/metrics.hpp"
#include "mpview/parallel.hpp"
#include "mpview/renderer.hpp"
#include "mpview/scene.hpp"
#include "mpview/trainer.hpp"

namespace fs = std::filesystem;
using namespace mpview;

namespace {

std::string apply_out_dir_env(const std::string& value) {
  if (!value.empty()) return value;
  if (const char* env = std::getenv("MPVIEW_OUT_DIR")) return env;
  return value;
}

// --ckpt accepts either the container file or a training output directory.
std::string resolve_checkpoint(const std::string& path) {
  if (fs::is_directory(path)) return (fs::path(path) / "ckpt_final.bin").string();
  return path;
}

PlaneSpacing parse_spacing(const std::string& s) {
  if (s == "linear" || s == "linear-depth") return PlaneSpacing::LinearDepth;
  if (s == "disparity" || s == "linear-disparity") return PlaneSpacing::LinearDisparity;
  throw CLI::ValidationError("--spacing", "expected linear|disparity");
}

BlendMode parse_blend(const std::string& s) {
  if (s == "as-printed") return BlendMode::AsPrinted;
  if (s == "inverse-distance") return BlendMode::InverseDistance;
  throw CLI::ValidationError("--blend", "expected as-printed|inverse-distance");
}

void write_depth_products(const std::string& image_path,
                          const std::vector<double>& depth, int width, int height) {
  const fs::path base = fs::path(image_path).replace_extension();
  std::vector<float> f32(depth.size());
  double lo = depth.empty() ? 0.0 : depth[0];
  double hi = lo;
  for (size_t i = 0; i < depth.size(); ++i) {
    f32[i] = static_cast<float>(depth[i]);
    lo = std::min(lo, depth[i]);
    hi = std::max(hi, depth[i]);
  }
  write_f32(base.string() + "_depth.f32", f32);

  std::vector<uint8_t> vis(depth.size(), 0);
  if (hi > lo)
    for (size_t i = 0; i < depth.size(); ++i)
      vis[i] = static_cast<uint8_t>(
          std::lround((depth[i] - lo) / (hi - lo) * 255.0));
  write_png_gray8(base.string() + "_depth.png", width, height, vis);

  nlohmann::json sidecar = {{"min", lo}, {"max", hi}, {"units", "target ray distance"}};
  std::ofstream meta(base.string() + "_depth.json");
  meta << sidecar.dump(2) << "\n";
}

std::vector<EvalRow> evaluate_heldout(const TrainState& state, const Scene& scene,
                                      BlendMode blend, int workers) {
  std::vector<EvalRow> rows;
  for (const auto& view : scene.heldout) {
    const ViewRender render = render_view_blended(state.fields, view.intr,
                                                  view.pose, workers, blend);
    rows.push_back({view.name, psnr(render.color, view.image),
                    ssim(render.color, view.image)});
  }
  return rows;
}

int cmd_gen_synthetic(const std::string& preset, const std::string& out,
                      uint64_t seed) {
  const Scene scene = gen_synthetic(preset_spec(preset), seed, out);
  std::cout << "wrote scene '" << preset << "' with " << scene.inputs.size()
            << " input and " << scene.heldout.size() << " held-out views to "
            << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-view multiplane-image trainer and analysis toolkit"};
  app.require_subcommand(1);

  // --- gen-synthetic -------------------------------------------------------
  auto* gen = app.add_subcommand("gen-synthetic", "Write a synthetic scene with exact geometry");
  std::string gen_preset = "two-plane";
  std::string gen_out;
  uint64_t gen_seed = 0;
  gen->add_option("--preset", gen_preset, "one-plane|two-plane|three-view-arc")
      ->capture_default_str();
  gen->add_option("--out", gen_out, "output scene directory");
  gen->add_option("--seed", gen_seed, "texture/rig seed")->capture_default_str();

  // --- train ---------------------------------------------------------------
  auto* tr = app.add_subcommand("train", "Fit one plane field per input view");
  tr->set_config("--config", "", "key=value config file (flags win)");
  std::string tr_scene, tr_out, tr_resume, tr_spacing = "linear";
  TrainConfig tc;
  tr->add_option("--scene", tr_scene, "scene directory");
  tr->add_option("--out", tr_out, "checkpoint/log directory");
  tr->add_option("--resume", tr_resume, "checkpoint to continue from");
  tr->add_option("--epochs", tc.epochs)->capture_default_str();
  tr->add_option("--batch", tc.rays_per_batch, "input rays per step")->capture_default_str();
  tr->add_option("--unseen-batch", tc.unseen_rays_per_batch, "unseen rays per step")
      ->capture_default_str();
  tr->add_option("--planes", tc.planes)->capture_default_str();
  tr->add_option("--spacing", tr_spacing, "linear|disparity")->capture_default_str();
  tr->add_option("--layers", tc.hidden_layers)->capture_default_str();
  tr->add_option("--width", tc.width)->capture_default_str();
  tr->add_option("--freq", tc.enc.freq_pos, "positional encoding frequencies")
      ->capture_default_str();
  tr->add_flag("--no-direction", [&tc](int64_t) { tc.enc.use_direction = false; },
               "drop the view direction input");
  tr->add_option("--lr", tc.lr_initial)->capture_default_str();
  tr->add_option("--lr-final", tc.lr_final)->capture_default_str();
  tr->add_option("--lambda-ac", tc.loss.lambda_ac)->capture_default_str();
  tr->add_option("--lambda-dc", tc.loss.lambda_dc)->capture_default_str();
  tr->add_option("--lambda-dci", tc.loss.lambda_dc_input,
                 "depth consistency on input rays")->capture_default_str();
  tr->add_option("--schedule-epoch", tc.loss.schedule_epoch,
                 "epoch that activates consistency losses")->capture_default_str();
  tr->add_option("--seed", tc.seed)->capture_default_str();
  tr->add_option("--checkpoint-every", tc.checkpoint_every, "epochs; 0 = final only")
      ->capture_default_str();
  tr->add_option("--workers", tc.workers, "0 = all cores")->capture_default_str();
  tr->add_flag("--single-mpi", tc.single_mpi, "one stack anchored at view 0");
  tr->add_option("--block-rays", tc.block_rays)->capture_default_str();

  // --- render --------------------------------------------------------------
  auto* rd = app.add_subcommand("render", "Render a novel view from a checkpoint");
  std::string rd_ckpt, rd_out, rd_interp = "0:1:0.5", rd_blend = "as-printed";
  int rd_workers = 0;
  rd->add_option("--ckpt", rd_ckpt, "checkpoint file")->required();
  rd->add_option("--out", rd_out, "output image (PNG)");
  rd->add_option("--pose-interp", rd_interp, "i:j:u between input poses")
      ->capture_default_str();
  rd->add_option("--blend", rd_blend, "as-printed|inverse-distance")->capture_default_str();
  rd->add_option("--workers", rd_workers)->capture_default_str();

  // --- eval ----------------------------------------------------------------
  auto* ev = app.add_subcommand("eval", "PSNR/SSIM on the held-out views");
  std::string ev_scene, ev_ckpt, ev_out, ev_blend = "as-printed";
  int ev_workers = 0;
  ev->add_option("--scene", ev_scene)->required();
  ev->add_option("--ckpt", ev_ckpt)->required();
  ev->add_option("--out", ev_out, "also write the report here");
  ev->add_option("--blend", ev_blend, "as-printed|inverse-distance")->capture_default_str();
  ev->add_option("--workers", ev_workers)->capture_default_str();

  // --- analyze-overlap -----------------------------------------------------
  auto* ov = app.add_subcommand("analyze-overlap",
                                "Cross-view sample coincidence, stratified vs plane-constrained");
  std::string ov_scene, ov_preset, ov_out, ov_mode = "both";
  int ov_m = 64, ov_trials = 10000, ov_planes = 80, ov_workers = 0;
  double ov_eps_scale = 1e-3;
  uint64_t ov_seed = 0;
  ov->add_option("--scene", ov_scene, "scene directory (cameras + bounds)");
  ov->add_option("--preset", ov_preset, "synthetic rig instead of a scene");
  ov->add_option("--mode", ov_mode, "stratified|plane|both")->capture_default_str();
  ov->add_option("--m", ov_m, "samples per ray")->capture_default_str();
  ov->add_option("--trials", ov_trials, "ray pairs per view pair")->capture_default_str();
  ov->add_option("--planes", ov_planes)->capture_default_str();
  ov->add_option("--eps-scale", ov_eps_scale, "epsilon = scale * (far - near)")
      ->capture_default_str();
  ov->add_option("--seed", ov_seed)->capture_default_str();
  ov->add_option("--out", ov_out, "directory for delimited records + histograms");
  ov->add_option("--workers", ov_workers)->capture_default_str();

  // --- sparse-oracle -------------------------------------------------------
  auto* sp = app.add_subcommand("sparse-oracle",
                                "Exhaustively solve the one-ray sparse fit");
  std::string sp_cgt = "0.5,0.5,0.5", sp_mode = "equation";
  int sp_m = 4;
  double sp_l0 = 1.0;
  std::vector<double> sp_alpha_grid = {0, 0.25, 0.5, 0.75, 1};
  std::vector<double> sp_color_grid = {0, 0.25, 0.5, 0.75, 1};
  sp->add_option("--cgt", sp_cgt, "target color r,g,b")->capture_default_str();
  sp->add_option("--m", sp_m, "samples per ray")->capture_default_str();
  sp->add_option("--alpha-grid", sp_alpha_grid)->delimiter(',')->capture_default_str();
  sp->add_option("--color-grid", sp_color_grid)->delimiter(',')->capture_default_str();
  sp->add_option("--l0-weight", sp_l0)->capture_default_str();
  sp->add_option("--mode", sp_mode, "equation|scalarized")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (gen->parsed()) {
      const std::string out = apply_out_dir_env(gen_out);
      if (out.empty()) throw std::runtime_error("gen-synthetic needs --out (or MPVIEW_OUT_DIR)");
      return cmd_gen_synthetic(gen_preset, out, gen_seed);
    }

    if (tr->parsed()) {
      const Scene scene = load_scene(tr_scene);
      tc.spacing = parse_spacing(tr_spacing);
      tc.out_dir = apply_out_dir_env(tr_out);
      TrainResult result;
      if (!tr_resume.empty()) {
        const std::string out = tc.out_dir.empty()
                                    ? fs::path(tr_resume).parent_path().string()
                                    : tc.out_dir;
        result = train_resume(scene, tr_resume, out);
      } else {
        if (tc.out_dir.empty())
          throw std::runtime_error("train needs --out (or MPVIEW_OUT_DIR)");
        result = train(scene, tc, [](const TrainState& s, const LossRecord& r) {
          std::cout << "epoch " << s.epoch << "/" << s.config.epochs
                    << " total " << r.total << " mse " << r.mse << "\n";
        });
      }
      std::cout << "final checkpoint: " << result.state.config.out_dir
                << "/ckpt_final.bin\n";
      return 0;
    }

    if (rd->parsed()) {
      if (rd_out.empty()) throw std::runtime_error("render needs --out");
      const TrainState state = load_checkpoint(resolve_checkpoint(rd_ckpt));
      int via = 0, vib = 0;
      double u = 0.5;
      if (std::sscanf(rd_interp.c_str(), "%d:%d:%lf", &via, &vib, &u) != 3)
        throw std::runtime_error("bad --pose-interp, expected i:j:u");
      const int n = static_cast<int>(state.fields.size());
      if (via < 0 || vib < 0 || via >= n || vib >= n)
        throw std::runtime_error("--pose-interp view index out of range");
      const Pose pose = interpolate_pose(state.fields[static_cast<size_t>(via)].pose,
                                         state.fields[static_cast<size_t>(vib)].pose, u);
      const Intrinsics& intr = state.fields[0].intr;
      const ViewRender render = render_view_blended(state.fields, intr, pose,
                                                    rd_workers, parse_blend(rd_blend));
      if (fs::path(rd_out).has_parent_path())
        fs::create_directories(fs::path(rd_out).parent_path());
      write_png_rgb8(rd_out, render.color);
      write_depth_products(rd_out, render.depth, intr.width, intr.height);
      std::cout << "wrote " << rd_out << " and depth products\n";
      return 0;
    }

    if (ev->parsed()) {
      const Scene scene = load_scene(ev_scene);
      const TrainState state = load_checkpoint(resolve_checkpoint(ev_ckpt));
      const auto rows = evaluate_heldout(state, scene, parse_blend(ev_blend), ev_workers);
      const std::string report = format_eval_report(rows);
      std::cout << report;
      if (!ev_out.empty()) {
        std::ofstream out(ev_out);
        out << report;
      }
      return 0;
    }

    if (ov->parsed()) {
      Scene scene;
      if (!ov_scene.empty()) {
        scene = load_scene(ov_scene);
      } else if (!ov_preset.empty()) {
        scene = gen_synthetic(preset_spec(ov_preset), ov_seed, "");
      } else {
        throw std::runtime_error("analyze-overlap needs --scene or --preset");
      }
      std::vector<CameraRig> rigs;
      for (const auto& v : scene.inputs) rigs.push_back({v.intr, v.pose});
      const PlaneStack planes =
          make_plane_depths(scene.near, scene.far, ov_planes, PlaneSpacing::LinearDepth);
      const double eps = ov_eps_scale * (scene.far - scene.near);

      std::vector<OverlapReport> reports;
      if (ov_mode == "stratified" || ov_mode == "both")
        reports.push_back(cross_view_overlap(rigs, SamplingMode::Stratified, planes,
                                             ov_m, eps, ov_trials, ov_seed, ov_workers));
      if (ov_mode == "plane" || ov_mode == "both")
        reports.push_back(cross_view_overlap(rigs, SamplingMode::PlaneConstrained,
                                             planes, ov_m, eps, ov_trials, ov_seed,
                                             ov_workers));
      if (reports.empty())
        throw std::runtime_error("bad --mode, expected stratified|plane|both");

      for (const auto& rep : reports) std::cout << format_overlap_report(rep) << "\n";

      const std::string out = apply_out_dir_env(ov_out);
      if (!out.empty()) {
        fs::create_directories(out);
        std::ofstream records(fs::path(out) / "overlap_records.tsv");
        for (const auto& rep : reports) records << format_overlap_records(rep);
        for (const auto& rep : reports) {
          if (rep.mode != SamplingMode::Stratified) continue;
          for (const auto& pair : rep.pairs) {
            std::ofstream hist(fs::path(out) /
                               ("hist_pair_" + std::to_string(pair.view_a) + "_" +
                                std::to_string(pair.view_b) + ".tsv"));
            hist << "bin_upper_edge\tcount\n";
            for (size_t i = 0; i < pair.histogram.size(); ++i) {
              const double edge = i < rep.histogram_edges.size()
                                      ? rep.histogram_edges[i]
                                      : std::numeric_limits<double>::infinity();
              hist << edge << "\t" << pair.histogram[i] << "\n";
            }
          }
        }
      }
      return 0;
    }

    if (sp->parsed()) {
      SparseInstance inst;
      if (std::sscanf(sp_cgt.c_str(), "%lf,%lf,%lf", &inst.c_gt[0], &inst.c_gt[1],
                      &inst.c_gt[2]) != 3)
        throw std::runtime_error("bad --cgt, expected r,g,b");
      inst.sample_count = sp_m;
      inst.alpha_grid = sp_alpha_grid;
      inst.color_grid = sp_color_grid;
      inst.l0_weight = sp_l0;

      const SparseMode mode = sp_mode == "scalarized" ? SparseMode::Scalarized
                                                      : SparseMode::EquationConstrained;
      const SparseSolution sol = sparse_solution_oracle(inst, mode);
      std::cout << "minimizer (residual " << sol.residual_sq << ", support "
                << sol.l0_count << ", objective " << sol.objective << "):\n";
      for (int i = 0; i < inst.sample_count; ++i)
        std::cout << "  sample " << i << ": alpha " << sol.alphas[static_cast<size_t>(i)]
                  << " color (" << sol.colors[static_cast<size_t>(i)].transpose() << ")\n";

      // Sensitivity note: does the plain weighted sum pick something else?
      const SparseSolution other = sparse_solution_oracle(
          inst, mode == SparseMode::Scalarized ? SparseMode::EquationConstrained
                                               : SparseMode::Scalarized);
      bool same = other.alphas == sol.alphas;
      for (size_t i = 0; same && i < sol.colors.size(); ++i)
        same = (other.colors[i].array() == sol.colors[i].array()).all();
      if (!same)
        std::cout << "note: " << (mode == SparseMode::Scalarized ? "equation" : "scalarized")
                  << " mode selects a different minimizer (objective " << other.objective
                  << ")\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
