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
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "spwz/codec/bundle.hpp"
#include "spwz/config.hpp"
#include "spwz/finetune.hpp"
#include "spwz/scene.hpp"
#include "spwz/scene_io.hpp"

namespace spwz {

// Error raised by a command; the message starts with the failing stage.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what)
      : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Every key a command reads, with its default value.
Config default_config();
// Defaults overlaid with `overrides`; unknown keys are rejected.
Config merge_config(const Config& base, const Config& overrides);

FinetuneConfig finetune_config_from(const Config& cfg);
SyntheticSceneSpec synthetic_spec_from(const Config& cfg);

struct GenSummary {
  std::filesystem::path scene;
  std::filesystem::path cameras;
  std::vector<std::filesystem::path> renders;
};
// Writes scene.ply, cameras.txt and renders/<camera>.ppm under `out_dir`.
GenSummary cmd_gen(const Config& cfg, const std::filesystem::path& out_dir);

struct CompressSummary {
  std::size_t n_before = 0;
  std::size_t n_after = 0;
  double masked_fraction = 0;
  std::size_t bytes = 0;
  double bits_per_gaussian = 0;
  std::vector<FinetuneLogRow> finetune_log;

  std::string describe() const;
};
// score -> rank_bottom -> prune -> distill fine-tune -> encode.
CompressSummary compress_scene(const GaussianScene& scene, const CameraSet& cameras, const Config& cfg,
                               std::vector<std::uint8_t>& bundle_out);
CompressSummary cmd_compress(const std::filesystem::path& in_ply, const std::filesystem::path& cameras,
                             const std::filesystem::path& out_bundle, const Config& cfg);

struct DecompressSummary {
  std::size_t n = 0;
  bool crc_ok = false;
  std::string describe() const;
};
DecompressSummary cmd_decompress(const std::filesystem::path& in_bundle, const std::filesystem::path& out_ply);

// Renders are clamped to [0, 1] before scoring.
struct ViewScore {
  std::string view;
  double psnr = 0;
  double ssim = 0;
};
struct EvalReport {
  std::vector<ViewScore> views;
  double chamfer = 0;
  std::size_t n_a = 0, n_b = 0;
  double ms_per_frame = 0;
  long peak_rss_kb = -1;  // -1 when the platform does not report it

  double mean_psnr() const;
  double mean_ssim() const;
  std::string to_csv() const;
};
EvalReport evaluate_scenes(const GaussianScene& a, const GaussianScene& b, const CameraSet& cameras);
EvalReport cmd_eval(const std::filesystem::path& a, const std::filesystem::path& b,
                    const std::filesystem::path& cameras);

inline constexpr const char* kBenchHeader = "config,bytes,bpp_per_gaussian,N,psnr,ssim,chamfer,fps";
// One row per (K, bits, prune_fraction) in the cross product of the
// bench_k / bench_bits / bench_prune lists; K is used for both codebooks.
std::string bench_csv(const GaussianScene& scene, const CameraSet& cameras, const Config& cfg);
std::string cmd_bench(const std::filesystem::path& in_ply, const std::filesystem::path& cameras, const Config& cfg);

std::string cmd_score(const std::filesystem::path& in_ply, const std::filesystem::path& cameras, const Config& cfg);
std::size_t cmd_prune(const std::filesystem::path& in_ply, const std::filesystem::path& cameras,
                      const std::filesystem::path& out_ply, const Config& cfg);
std::string cmd_finetune(const std::filesystem::path& student_ply, const std::filesystem::path& teacher_ply,
                         const std::filesystem::path& cameras, const std::filesystem::path& out_ply,
                         const Config& cfg);

// Frames per second over `repeats` warm renders cycling through the cameras.
double measure_fps(const GaussianScene& scene, const CameraSet& cameras, int repeats);
long peak_rss_kb();

struct FixtureResult {
  std::string id;
  bool passed = false;
  std::string detail;
};
// Runs every line of <dir>/MANIFEST. Paths in the manifest are relative to dir.
std::vector<FixtureResult> verify_fixtures(const std::filesystem::path& dir);

}  // namespace spwz
