// Copyright 2026 The spwz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "spwz/codec/bundle.hpp"
#include "spwz/commands.hpp"
#include "spwz/metrics.hpp"
#include "spwz/rasterizer.hpp"
#include "spwz/scene_io.hpp"

using namespace spwz;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("spwz_commands_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

Config with(std::initializer_list<std::pair<const std::string, std::string>> kv) {
  return merge_config(default_config(), Config(kv));
}

std::pair<GaussianScene, CameraSet> small_world(std::size_t n, std::uint64_t seed = 1) {
  SyntheticSceneSpec spec;
  spec.seed = seed;
  spec.n_gaussians = n;
  spec.n_cameras = 3;
  spec.width = spec.height = 24;
  return generate_synthetic(spec);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliRun {
  int code;
  std::string output;
};

CliRun cli(const std::string& args, const TempDir& dir) {
  const auto log = dir / "cli.log";
  const std::string cmd = std::string("\"") + SPWZ_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

std::string drop_last_column(const std::string& csv) {
  std::istringstream in(csv);
  std::string out, line;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

}  // namespace

TEST_CASE("config merging") {
  const auto base = default_config();
  CHECK(base.at("prune_fraction") == "0.5");
  CHECK(base.at("adam_eps") == "1e-8");
  CHECK(merge_config(base, {{"k12", "16"}}).at("k12") == "16");
  try {
    merge_config(base, {{"k_12", "16"}});
    FAIL("unknown key accepted");
  } catch (const StageError& e) {
    CHECK(e.stage() == "config");
    CHECK(std::string(e.what()).find("k_12") != std::string::npos);
  }
  const auto ft = finetune_config_from(with({{"iterations", "7"}, {"seed", "9"}}));
  CHECK(ft.iterations == 7);
  CHECK(ft.seed == 9);
  CHECK(synthetic_spec_from(with({{"gen_n", "11"}})).n_gaussians == 11);
}

TEST_CASE("compress reports the pruned size") {
  const auto [scene, cams] = small_world(1000);
  std::vector<std::uint8_t> bytes;
  const auto sum = compress_scene(scene, cams, with({{"iterations", "0"}, {"k12", "16"}, {"k3", "16"}}), bytes);
  CHECK(sum.n_before == 1000);
  CHECK(sum.n_after == 500);
  CHECK(sum.bytes == bytes.size());
  CHECK(sum.bits_per_gaussian == doctest::Approx(8.0 * double(bytes.size()) / 500.0));
  CHECK(decode_bundle(bytes).count == 500);
  CHECK(sum.describe().find("500") != std::string::npos);
}

TEST_CASE("near-lossless settings") {
  const auto [scene, cams] = small_world(300, 2);
  std::vector<std::uint8_t> bytes;
  compress_scene(scene, cams,
                 with({{"prune_fraction", "0"}, {"iterations", "0"}, {"k12", "300"}, {"k3", "300"},
                       {"position_bits", "16"}, {"attribute_bits", "16"}}),
                 bytes);
  const auto dec = decode_bundle(bytes);
  for (const auto& nc : cams)
    CHECK(psnr(clamp01(render(scene, nc.camera).color), clamp01(render(dec, nc.camera).color)) >= 45);
}

TEST_CASE("file commands") {
  TempDir dir;
  const auto gen = cmd_gen(with({{"gen_n", "60"}, {"gen_cameras", "2"}, {"gen_width", "16"}, {"gen_height", "16"},
                                 {"seed", "4"}}),
                           dir.path);
  CHECK(fs::exists(gen.scene));
  CHECK(gen.renders.size() == 2);

  TempDir again;
  const auto gen2 = cmd_gen(with({{"gen_n", "60"}, {"gen_cameras", "2"}, {"gen_width", "16"}, {"gen_height", "16"},
                                  {"seed", "4"}}),
                            again.path);
  CHECK(read_file_bytes(gen.scene) == read_file_bytes(gen2.scene));
  CHECK(read_file_bytes(gen.renders[0]) == read_file_bytes(gen2.renders[0]));

  const auto missing = dir / "nope.txt";
  try {
    cmd_compress(gen.scene, missing, dir / "x.spwz", default_config());
    FAIL("missing cameras accepted");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find(missing.string()) != std::string::npos);
  }

  const auto cfg = with({{"iterations", "2"}, {"k12", "8"}, {"k3", "8"}});
  const auto sum = cmd_compress(gen.scene, gen.cameras, dir / "a.spwz", cfg);
  CHECK(sum.n_after == 30);
  const auto dsum = cmd_decompress(dir / "a.spwz", dir / "a.ply");
  CHECK(dsum.n == 30);
  CHECK(dsum.crc_ok);

  const auto self = cmd_eval(gen.scene, gen.scene, gen.cameras);
  CHECK(self.chamfer == 0);
  for (const auto& v : self.views) CHECK(std::isinf(v.psnr));
  CHECK(self.to_csv().find("inf") != std::string::npos);
  const auto vs = cmd_eval(gen.scene, dir / "a.ply", gen.cameras);
  CHECK(std::isfinite(vs.mean_psnr()));
  CHECK(vs.n_b == 30);

  write_file_bytes(dir / "bad_cams.txt", {'x'});
  CHECK_THROWS_AS(cmd_eval(gen.scene, gen.scene, dir / "bad_cams.txt"), StageError);

  auto corrupt = read_file_bytes(dir / "a.spwz");
  corrupt[corrupt.size() / 2] ^= 0x40;
  write_file_bytes(dir / "bad.spwz", corrupt);
  CHECK_THROWS_AS(cmd_decompress(dir / "bad.spwz", dir / "bad.ply"), StageError);

  write_file_bytes(dir / "empty.spwz", encode_bundle(GaussianScene::with_count(0), {}));
  CHECK(cmd_decompress(dir / "empty.spwz", dir / "empty.ply").n == 0);
  CHECK(read_ply(dir / "empty.ply").count == 0);

  CHECK(cmd_prune(gen.scene, gen.cameras, dir / "p.ply", with({{"prune_fraction", "0.25"}})) == 45);
  const auto scores = cmd_score(gen.scene, gen.cameras, default_config());
  CHECK(std::count(scores.begin(), scores.end(), '\n') == 61);
}

TEST_CASE("bench sweep") {
  const auto [scene, cams] = small_world(300, 3);
  const auto cfg = with({{"bench_k", "16,64,256"}, {"fps_repeats", "1"}});
  const auto csv = bench_csv(scene, cams, cfg);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == kBenchHeader);
  long last = -1;
  int rows = 0;
  while (std::getline(in, line)) {
    const long bytes = std::stol(line.substr(line.find(',') + 1));
    CHECK(bytes > last);
    last = bytes;
    ++rows;
  }
  CHECK(rows == 3);
  CHECK(drop_last_column(bench_csv(scene, cams, cfg)) == drop_last_column(csv));
  CHECK(bench_csv(scene, cams, with({{"bench_k", ""}})) == std::string(kBenchHeader) + "\n");
}

TEST_CASE("command line") {
  TempDir dir;
  auto r = cli("gen --out \"" + dir.path.string() + "\" --set gen_n=20 --set gen_width=16 --set gen_height=16", dir);
  CHECK(r.code == 0);
  const auto scene = (dir / "scene.ply").string();
  const auto cams = (dir / "cameras.txt").string();

  r = cli("compress \"" + scene + "\" \"" + (dir / "missing.txt").string() + "\" --out \"" +
              (dir / "o.spwz").string() + "\"",
          dir);
  CHECK(r.code != 0);
  CHECK(r.output.find("missing.txt") != std::string::npos);

  r = cli("compress \"" + scene + "\" \"" + cams + "\" --out \"" + (dir / "o.spwz").string() +
              "\" --set iterations=1 --set k12=4 --set k3=4",
          dir);
  CHECK(r.code == 0);

  auto bytes = read_file_bytes(dir / "o.spwz");
  bytes[bytes.size() - 9] ^= 1;
  write_file_bytes(dir / "t.spwz", bytes);
  r = cli("decompress \"" + (dir / "t.spwz").string() + "\" --out \"" + (dir / "t.ply").string() + "\"", dir);
  CHECK(r.code != 0);
  CHECK(r.output.find("CRC") != std::string::npos);

  r = cli("compress \"" + scene + "\" \"" + cams + "\" --out x --set no_such_key=1", dir);
  CHECK(r.code != 0);
  CHECK(r.output.find("no_such_key") != std::string::npos);

  r = cli("--dump-config", dir);
  CHECK(r.code == 0);
  CHECK(r.output.find("prune_fraction = 0.5") != std::string::npos);

  r = cli("eval \"" + scene + "\" \"" + scene + "\" \"" + cams + "\"", dir);
  CHECK(r.code == 0);
  CHECK(r.output.find("inf") != std::string::npos);
}

TEST_CASE("fixture verification catches tampering") {
  TempDir dir;
  fs::copy(SPWZ_FIXTURES_DIR, dir.path, fs::copy_options::recursive);
  for (const auto& res : verify_fixtures(dir.path)) CHECK_MESSAGE(res.passed, res.id << ": " << res.detail);

  const auto bundle = dir / "golden/golden.spwz";
  auto bytes = read_file_bytes(bundle);
  bytes[bytes.size() / 3] ^= 0x10;
  write_file_bytes(bundle, bytes);
  int failed = 0;
  for (const auto& res : verify_fixtures(dir.path)) failed += !res.passed;
  CHECK(failed >= 1);
  CHECK(cli("verify \"" + dir.path.string() + "\"", dir).code != 0);
}
