// End-to-end exercise of the command-line surface: scene generation,
// training, rendering, evaluation, the analysis commands, exit codes, and
// byte-identical reruns. Drives the installed binary through std::system;
// the path arrives via the MPVIEW_BIN environment variable set by ctest.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* env = std::getenv("MPVIEW_BIN");
  REQUIRE(env != nullptr);
  return env;
}

int run(const std::string& args, const std::string& out_file = "/dev/null") {
  const std::string cmd = binary() + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string file_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "mpview_cli_test";
  return dir;
}

const std::string kTrainFlags =
    " --epochs 2 --planes 6 --width 16 --layers 2 --batch 128"
    " --schedule-epoch 1 --seed 0";

}  // namespace

TEST_CASE("help exits zero and documents the paper-scale defaults") {
  const auto dir = work_dir();
  fs::create_directories(dir);
  CHECK(run("--help", (dir / "help.txt").string()) == 0);
  CHECK(run("train --help", (dir / "train_help.txt").string()) == 0);
  const std::string help = file_bytes(dir / "train_help.txt");
  for (const char* flag :
       {"--scene", "--out", "--epochs", "--batch", "--planes", "--spacing",
        "--layers", "--width", "--lr", "--lambda-ac", "--lambda-dc",
        "--schedule-epoch", "--seed", "--workers", "--single-mpi"})
    CHECK(help.find(flag) != std::string::npos);
  CHECK(help.find("80") != std::string::npos);    // planes
  CHECK(help.find("1024") != std::string::npos);  // rays per batch
  CHECK(help.find("50") != std::string::npos);    // epochs
  CHECK(help.find("15") != std::string::npos);    // schedule epoch
}

TEST_CASE("usage errors exit 2, runtime errors exit 1") {
  CHECK(run("no-such-command") == 2);
  CHECK(run("train --bogus-flag 7") == 2);
  CHECK(run("eval --scene /nonexistent --ckpt /nonexistent") == 1);
  const auto dir = work_dir();
  fs::create_directories(dir);
  CHECK(run("eval --scene /nonexistent --ckpt /nonexistent",
            (dir / "err.txt").string()) == 1);
  CHECK(file_bytes(dir / "err.txt").rfind("error:", 0) == 0);
}

TEST_CASE("smoke pipeline: gen, train, eval, render, analyses") {
  const auto dir = work_dir();
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string scene = (dir / "scene").string();
  const std::string ckpt = (dir / "ckpt").string();

  REQUIRE(run("gen-synthetic --preset one-plane --out " + scene + " --seed 0") == 0);
  REQUIRE(run("train --scene " + scene + " --out " + ckpt + kTrainFlags) == 0);

  const std::string eval_out = (dir / "eval.tsv").string();
  REQUIRE(run("eval --scene " + scene + " --ckpt " + ckpt + "/ckpt_final.bin --out " +
              eval_out, (dir / "eval_stdout.txt").string()) == 0);
  const std::string table = file_bytes(eval_out);
  CHECK(table.find("psnr_db\tssim") != std::string::npos);
  CHECK(table.find("view_002") != std::string::npos);
  CHECK(file_bytes(dir / "eval_stdout.txt").find("psnr_db") != std::string::npos);

  const std::string img = (dir / "render" / "novel.png").string();
  // A directory works as --ckpt; the final container is found inside.
  REQUIRE(run("render --ckpt " + ckpt + " --pose-interp 0:1:0.5 --out " + img) == 0);
  CHECK(fs::exists(img));
  CHECK(fs::exists(dir / "render" / "novel_depth.png"));
  CHECK(fs::exists(dir / "render" / "novel_depth.f32"));
  CHECK(file_bytes(dir / "render" / "novel_depth.json").find("\"min\"") != std::string::npos);

  REQUIRE(run("analyze-overlap --preset three-view-arc --m 8 --trials 64 --planes 8"
              " --seed 0 --out " + (dir / "overlap").string(),
              (dir / "overlap.txt").string()) == 0);
  const std::string overlap = file_bytes(dir / "overlap.txt");
  CHECK(overlap.find("stratified") != std::string::npos);
  CHECK(overlap.find("plane-constrained") != std::string::npos);
  CHECK(fs::exists(dir / "overlap" / "overlap_records.tsv"));
  CHECK(fs::exists(dir / "overlap" / "hist_pair_0_1.tsv"));

  REQUIRE(run("sparse-oracle --cgt 0.25,0.5,0.75 --m 4", (dir / "sparse.txt").string()) == 0);
  const std::string sparse = file_bytes(dir / "sparse.txt");
  CHECK(sparse.find("alpha 1") != std::string::npos);
  CHECK(sparse.find("0.25  0.5 0.75") != std::string::npos);
}

TEST_CASE("identical flags and seed give byte-identical artifacts") {
  const auto dir = work_dir() / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string scene_a = (dir / "scene_a").string();
  const std::string scene_b = (dir / "scene_b").string();
  REQUIRE(run("gen-synthetic --preset one-plane --out " + scene_a + " --seed 3") == 0);
  REQUIRE(run("gen-synthetic --preset one-plane --out " + scene_b + " --seed 3") == 0);
  CHECK(file_bytes(fs::path(scene_a) / "images/view_000.png") ==
        file_bytes(fs::path(scene_b) / "images/view_000.png"));

  const std::string ck_a = (dir / "ck_a").string();
  const std::string ck_b = (dir / "ck_b").string();
  REQUIRE(run("train --scene " + scene_a + " --out " + ck_a + kTrainFlags) == 0);
  REQUIRE(run("train --scene " + scene_a + " --out " + ck_b + kTrainFlags +
              " --workers 3") == 0);
  // Neither the output path nor the worker count may leak into the bytes.
  CHECK(file_bytes(fs::path(ck_a) / "ckpt_final.bin") ==
        file_bytes(fs::path(ck_b) / "ckpt_final.bin"));

  const std::string log_a = file_bytes(fs::path(ck_a) / "train_log.txt");
  const std::string log_b = file_bytes(fs::path(ck_b) / "train_log.txt");
  CHECK(log_a == log_b);
}

TEST_CASE("config file values apply and flags win") {
  const auto dir = work_dir() / "config";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string scene = (dir / "scene").string();
  REQUIRE(run("gen-synthetic --preset one-plane --out " + scene + " --seed 1") == 0);
  {
    std::ofstream cfg(dir / "train.cfg");
    cfg << "epochs=1\nplanes=5\nwidth=16\nlayers=2\nbatch=128\nseed=9\n";
  }
  const std::string out = (dir / "ck").string();
  REQUIRE(run("train --scene " + scene + " --out " + out + " --config " +
              (dir / "train.cfg").string() + " --planes 7") == 0);
  // planes came from the flag, epochs from the file; the checkpoint loads
  // back a 7-plane single-epoch run.
  const std::string log = file_bytes(fs::path(out) / "train_log.txt");
  CHECK(!log.empty());
}
