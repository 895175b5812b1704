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
// spwz: Gaussian-splat compression toolkit command line.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

#include "spwz/commands.hpp"

namespace {

using spwz::Config;

std::string slurp(const std::string& path) {
  const auto bytes = spwz::read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  spwz::write_file_bytes(out_path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian-splat compression codec and benchmark toolkit"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path, out_path;
  std::vector<std::string> sets;
  std::int64_t seed = -1;
  bool dump = false;
  app.add_option("--config", config_path, "flat key = value config file");
  app.add_option("--seed", seed, "seed for every stochastic step");
  app.add_option("--set", sets, "override a config key (key=value), repeatable");
  app.add_flag("--dump-config", dump, "print the effective config and exit");

  std::string a, b, c, d;
  auto* gen = app.add_subcommand("gen", "write a synthetic scene, cameras and renders");
  gen->add_option("--out", out_path, "output directory")->required();

  auto* compress = app.add_subcommand("compress", "score, prune, fine-tune and encode a scene");
  compress->add_option("scene", a, "input PLY")->required();
  compress->add_option("cameras", b, "camera file")->required();
  compress->add_option("--out", out_path, "output bundle")->required();
  std::string log_path;
  compress->add_option("--log", log_path, "fine-tune log CSV");

  auto* decompress = app.add_subcommand("decompress", "decode a bundle to PLY");
  decompress->add_option("bundle", a, "input bundle")->required();
  decompress->add_option("--out", out_path, "output PLY")->required();

  auto* eval = app.add_subcommand("eval", "compare two scenes over a camera set");
  eval->add_option("scene_a", a, "reference PLY")->required();
  eval->add_option("scene_b", b, "test PLY")->required();
  eval->add_option("cameras", c, "camera file")->required();
  eval->add_option("--out", out_path, "CSV output (default stdout)");

  auto* bench = app.add_subcommand("bench", "rate-distortion sweep");
  bench->add_option("scene", a, "input PLY")->required();
  bench->add_option("cameras", b, "camera file")->required();
  bench->add_option("--out", out_path, "CSV output (default stdout)");

  auto* score = app.add_subcommand("score", "per-Gaussian importance scores");
  score->add_option("scene", a, "input PLY")->required();
  score->add_option("cameras", b, "camera file")->required();
  score->add_option("--out", out_path, "CSV output (default stdout)");

  auto* prune = app.add_subcommand("prune", "drop the least important Gaussians");
  prune->add_option("scene", a, "input PLY")->required();
  prune->add_option("cameras", b, "camera file")->required();
  prune->add_option("--out", out_path, "output PLY")->required();

  auto* finetune = app.add_subcommand("finetune", "distillation-guided SH mask fine-tuning");
  finetune->add_option("student", a, "student PLY")->required();
  finetune->add_option("teacher", b, "teacher PLY")->required();
  finetune->add_option("cameras", c, "camera file")->required();
  finetune->add_option("--out", out_path, "output PLY")->required();
  finetune->add_option("--log", log_path, "progress CSV (default stdout)");

  auto* verify = app.add_subcommand("verify", "check the golden fixtures");
  verify->add_option("dir", a, "fixtures directory")->required();

  CLI11_PARSE(app, argc, argv);

  std::string verb = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
  try {
    Config overrides;
    if (!config_path.empty()) overrides = spwz::parse_config(slurp(config_path));
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw spwz::StageError("config", "--set expects key=value, got '" + kv + "'");
      overrides[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (seed >= 0) overrides["seed"] = std::to_string(seed);
    const Config cfg = spwz::merge_config(spwz::default_config(), overrides);

    if (dump) {
      std::cout << spwz::serialize_config(cfg);
      return 0;
    }
    if (verb.empty()) {
      std::cout << app.help();
      return 0;
    }

    if (verb == "gen") {
      const auto g = spwz::cmd_gen(cfg, out_path);
      std::cout << "scene: " << g.scene.string() << "\ncameras: " << g.cameras.string()
                << "\nrenders: " << g.renders.size() << "\n";
    } else if (verb == "compress") {
      const auto s = spwz::cmd_compress(a, b, out_path, cfg);
      if (!log_path.empty()) emit(spwz::finetune_log_csv(s.finetune_log), log_path);
      std::cout << s.describe();
    } else if (verb == "decompress") {
      std::cout << spwz::cmd_decompress(a, out_path).describe();
    } else if (verb == "eval") {
      emit(spwz::cmd_eval(a, b, c).to_csv(), out_path);
    } else if (verb == "bench") {
      emit(spwz::cmd_bench(a, b, cfg), out_path);
    } else if (verb == "score") {
      emit(spwz::cmd_score(a, b, cfg), out_path);
    } else if (verb == "prune") {
      std::cout << "N after: " << spwz::cmd_prune(a, b, out_path, cfg) << "\n";
    } else if (verb == "finetune") {
      const std::string log = spwz::cmd_finetune(a, b, c, out_path, cfg);
      emit(log, log_path);
    } else if (verb == "verify") {
      int failed = 0;
      for (const auto& r : spwz::verify_fixtures(a)) {
        std::cout << (r.passed ? "PASS " : "FAIL ") << r.id << (r.detail.empty() ? "" : ": " + r.detail) << "\n";
        failed += !r.passed;
      }
      if (failed) {
        std::cerr << "spwz verify: " << failed << " fixture(s) failed\n";
        return 1;
      }
    }
  } catch (const spwz::StageError& e) {
    std::cerr << "spwz " << verb << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "spwz " << verb << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
