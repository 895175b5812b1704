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
#include "spwz/commands.hpp"

#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spwz/hash.hpp"
#include "spwz/importance.hpp"
#include "spwz/metrics.hpp"
#include "spwz/pruning.hpp"
#include "spwz/rasterizer.hpp"

namespace spwz {

namespace {

template <typename F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string tok; std::getline(in, tok, ',');) {
    const auto b = tok.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    out.push_back(tok.substr(b, tok.find_last_not_of(" \t") - b + 1));
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  return config_double(Config{{key, v}}, key, 0);
}

ImportanceScores score_with(const GaussianScene& scene, const std::vector<Camera>& cams, const Config& cfg) {
  const std::string kind = config_string(cfg, "score", "hessian");
  if (kind == "hessian") return score_hessian(scene, cams);
  if (kind == "opacity") return score_opacity(scene, cams);
  throw Error("unknown score kind '" + kind + "' (expected hessian or opacity)");
}

}  // namespace

Config default_config() {
  Config c;
  c["seed"] = "0";
  c["score"] = "hessian";
  c["prune_fraction"] = "0.5";
  c["iterations"] = "3000";
  c["lambda_mask"] = "5e-4";
  c["noise_sigma"] = "-1";
  c["pseudo_prob"] = "0.5";
  c["mask_threshold"] = "0.01";
  c["lr_sh_dc"] = "2.5e-3";
  c["lr_sh_rest"] = "1.25e-4";
  c["lr_opacity"] = "5e-2";
  c["lr_mask"] = "1e-2";
  c["adam_eps"] = "1e-8";
  c["position_bits"] = "16";
  c["attribute_bits"] = "8";
  c["k12"] = "256";
  c["k3"] = "256";
  c["coder"] = "rans";
  c["gen_n"] = "500";
  c["gen_cameras"] = "8";
  c["gen_width"] = "64";
  c["gen_height"] = "64";
  c["gen_sh_degree"] = "3";
  c["bench_k"] = "16,64,256";
  c["bench_bits"] = "8";
  c["bench_prune"] = "0";
  c["bench_iterations"] = "0";
  c["fps_repeats"] = "5";
  return c;
}

Config merge_config(const Config& base, const Config& overrides) {
  Config out = base;
  for (const auto& [k, v] : overrides) {
    if (!base.count(k)) throw StageError("config", "unknown key '" + k + "'");
    out[k] = v;
  }
  return out;
}

FinetuneConfig finetune_config_from(const Config& cfg) {
  FinetuneConfig f;
  f.lambda_mask = config_double(cfg, "lambda_mask", f.lambda_mask);
  f.noise_sigma = config_double(cfg, "noise_sigma", f.noise_sigma);
  f.pseudo_prob = config_double(cfg, "pseudo_prob", f.pseudo_prob);
  f.iterations = int(config_int(cfg, "iterations", f.iterations));
  f.mask_threshold = config_double(cfg, "mask_threshold", f.mask_threshold);
  f.lr.sh_dc = config_double(cfg, "lr_sh_dc", f.lr.sh_dc);
  f.lr.sh_rest = config_double(cfg, "lr_sh_rest", f.lr.sh_rest);
  f.lr.opacity = config_double(cfg, "lr_opacity", f.lr.opacity);
  f.lr.mask = config_double(cfg, "lr_mask", f.lr.mask);
  f.adam.eps = config_double(cfg, "adam_eps", f.adam.eps);
  f.seed = std::uint64_t(config_int(cfg, "seed", 0));
  if (f.lambda_mask < 0 || f.pseudo_prob < 0 || f.pseudo_prob > 1 || f.lr.sh_dc < 0 || f.lr.sh_rest < 0 ||
      f.lr.opacity < 0 || f.lr.mask < 0)
    throw Error("finetune config: rates and lambda must be >= 0, pseudo_prob in [0, 1]");
  return f;
}

SyntheticSceneSpec synthetic_spec_from(const Config& cfg) {
  SyntheticSceneSpec s;
  s.seed = std::uint64_t(config_int(cfg, "seed", 0));
  s.n_gaussians = std::size_t(config_int(cfg, "gen_n", std::int64_t(s.n_gaussians)));
  s.n_cameras = int(config_int(cfg, "gen_cameras", s.n_cameras));
  s.width = int(config_int(cfg, "gen_width", s.width));
  s.height = int(config_int(cfg, "gen_height", s.height));
  s.sh_degree = int(config_int(cfg, "gen_sh_degree", s.sh_degree));
  return s;
}

GenSummary cmd_gen(const Config& cfg, const std::filesystem::path& out_dir) {
  const auto spec = stage("config", [&] { return synthetic_spec_from(cfg); });
  auto [scene, cameras] = stage("generate", [&] { return generate_synthetic(spec); });
  GenSummary g;
  stage("write", [&] {
    std::filesystem::create_directories(out_dir / "renders");
    g.scene = out_dir / "scene.ply";
    g.cameras = out_dir / "cameras.txt";
    write_ply(scene, g.scene);
    write_cameras(cameras, g.cameras);
  });
  stage("render", [&] {
    for (const auto& nc : cameras) {
      const auto path = out_dir / "renders" / (nc.name + ".ppm");
      write_file_bytes(path, encode_ppm(clamp01(render(scene, nc.camera).color)));
      g.renders.push_back(path);
    }
  });
  return g;
}

std::string CompressSummary::describe() const {
  std::ostringstream os;
  os << "N before: " << n_before << "\nN after: " << n_after << "\nmasked fraction: " << fmt("%.6f", masked_fraction)
     << "\nbundle bytes: " << bytes << "\nbits per Gaussian: " << fmt("%.3f", bits_per_gaussian) << "\n";
  return os.str();
}

CompressSummary compress_scene(const GaussianScene& scene, const CameraSet& cameras, const Config& cfg,
                               std::vector<std::uint8_t>& bundle_out) {
  CompressSummary sum;
  sum.n_before = scene.count;
  const auto cams = cameras_of(cameras);
  const double fraction = stage("config", [&] { return config_double(cfg, "prune_fraction", 0.0); });
  const FinetuneConfig ft = stage("config", [&] { return finetune_config_from(cfg); });
  const CodecConfig codec = stage("config", [&] { return codec_config_from(cfg); });

  GaussianScene student = scene;
  if (fraction > 0) {
    if (cams.empty()) throw StageError("score", "no cameras to score against");
    const auto scores = stage("score", [&] { return score_with(scene, cams, cfg); });
    const auto drop = stage("prune", [&] { return rank_bottom(scores, fraction); });
    student = stage("prune", [&] { return prune(scene, drop); });
  }
  if (ft.iterations > 0 && student.count > 0) {
    auto res = stage("finetune", [&] { return run_distill_finetune(student, scene, cams, ft); });
    student = std::move(res.scene);
    sum.finetune_log = std::move(res.log);
  }
  sum.n_after = student.count;
  sum.masked_fraction = student.count ? masked_fraction(student, ft.mask_threshold) : 0.0;
  bundle_out = stage("encode", [&] { return encode_bundle(student, codec); });
  sum.bytes = bundle_out.size();
  sum.bits_per_gaussian = student.count ? 8.0 * double(sum.bytes) / double(student.count) : 0.0;
  return sum;
}

CompressSummary cmd_compress(const std::filesystem::path& in_ply, const std::filesystem::path& cameras,
                             const std::filesystem::path& out_bundle, const Config& cfg) {
  const auto scene = stage("load scene", [&] { return read_ply(in_ply); });
  const auto cams = stage("load cameras", [&] { return read_cameras(cameras); });
  std::vector<std::uint8_t> bytes;
  auto sum = compress_scene(scene, cams, cfg, bytes);
  stage("write", [&] { write_file_bytes(out_bundle, bytes); });
  return sum;
}

std::string DecompressSummary::describe() const {
  std::ostringstream os;
  os << "N: " << n << "\nCRC: " << (crc_ok ? "ok" : "mismatch") << "\n";
  return os.str();
}

DecompressSummary cmd_decompress(const std::filesystem::path& in_bundle, const std::filesystem::path& out_ply) {
  const auto bytes = stage("load bundle", [&] { return read_file_bytes(in_bundle); });
  DecompressSummary s;
  const auto scene = stage("decode", [&] { return decode_bundle(bytes); });
  s.crc_ok = true;
  s.n = scene.count;
  stage("write", [&] { write_ply(scene, out_ply); });
  return s;
}

double EvalReport::mean_psnr() const {
  double s = 0;
  for (const auto& v : views) s += v.psnr;
  return views.empty() ? 0.0 : s / double(views.size());
}

double EvalReport::mean_ssim() const {
  double s = 0;
  for (const auto& v : views) s += v.ssim;
  return views.empty() ? 0.0 : s / double(views.size());
}

std::string EvalReport::to_csv() const {
  std::string out = "view,psnr,ssim\n";
  for (const auto& v : views) out += v.view + "," + format_psnr(v.psnr) + "," + fmt("%.6f", v.ssim) + "\n";
  out += "chamfer,n_a,n_b,ms_per_frame,peak_rss_kb\n";
  out += fmt("%.9f", chamfer) + "," + std::to_string(n_a) + "," + std::to_string(n_b) + "," +
         fmt("%.3f", ms_per_frame) + "," + (peak_rss_kb >= 0 ? std::to_string(peak_rss_kb) : std::string()) + "\n";
  return out;
}

EvalReport evaluate_scenes(const GaussianScene& a, const GaussianScene& b, const CameraSet& cameras) {
  if (cameras.empty()) throw StageError("eval", "camera file lists no cameras");
  EvalReport r;
  r.n_a = a.count;
  r.n_b = b.count;
  double render_seconds = 0;
  stage("render", [&] {
    for (const auto& nc : cameras) {
      const ImageRGB ia = clamp01(render(a, nc.camera).color);
      const auto t0 = std::chrono::steady_clock::now();
      const ImageRGB ib = clamp01(render(b, nc.camera).color);
      render_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      r.views.push_back({nc.name, psnr(ia, ib), ssim(ia, ib)});
    }
  });
  r.ms_per_frame = 1000.0 * render_seconds / double(cameras.size());
  r.chamfer = stage("chamfer", [&] {
    if (a.count == 0 && b.count == 0) return 0.0;
    return chamfer(scene_points(a), scene_points(b));
  });
  r.peak_rss_kb = peak_rss_kb();
  return r;
}

EvalReport cmd_eval(const std::filesystem::path& a, const std::filesystem::path& b,
                    const std::filesystem::path& cameras) {
  const auto sa = stage("load scene", [&] { return read_ply(a); });
  const auto sb = stage("load scene", [&] { return read_ply(b); });
  const auto cams = stage("load cameras", [&] { return read_cameras(cameras); });
  return evaluate_scenes(sa, sb, cams);
}

double measure_fps(const GaussianScene& scene, const CameraSet& cameras, int repeats) {
  if (cameras.empty()) throw Error("measure_fps: no cameras");
  repeats = std::max(repeats, 5);
  render(scene, cameras.front().camera);
  const auto t0 = std::chrono::steady_clock::now();
  for (int k = 0; k < repeats; ++k) render(scene, cameras[std::size_t(k) % cameras.size()].camera);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return secs > 0 ? double(repeats) / secs : 0.0;
}

long peak_rss_kb() {
  rusage ru{};
  if (getrusage(RUSAGE_SELF, &ru) != 0) return -1;
  return ru.ru_maxrss;
}

std::string bench_csv(const GaussianScene& scene, const CameraSet& cameras, const Config& cfg) {
  std::string out = std::string(kBenchHeader) + "\n";
  const auto ks = split_list(config_string(cfg, "bench_k", ""));
  const auto bits = split_list(config_string(cfg, "bench_bits", ""));
  const auto prunes = split_list(config_string(cfg, "bench_prune", ""));
  const std::string iterations = config_string(cfg, "bench_iterations", "0");
  const int repeats = int(config_int(cfg, "fps_repeats", 5));
  for (const auto& p : prunes)
    for (const auto& b : bits)
      for (const auto& k : ks) {
        Config run = cfg;
        run["k12"] = run["k3"] = k;
        run["attribute_bits"] = b;
        run["prune_fraction"] = p;
        run["iterations"] = iterations;
        const std::string label = "k" + k + "_b" + b + "_p" + p;
        std::vector<std::uint8_t> bytes;
        const auto sum = compress_scene(scene, cameras, run, bytes);
        const auto decoded = stage("decode", [&] { return decode_bundle(bytes); });
        const auto rep = evaluate_scenes(scene, decoded, cameras);
        const double fps = stage("fps", [&] { return measure_fps(decoded, cameras, repeats); });
        out += label + "," + std::to_string(sum.bytes) + "," + fmt("%.4f", sum.bits_per_gaussian) + "," +
               std::to_string(decoded.count) + "," + format_psnr(rep.mean_psnr()) + "," +
               fmt("%.6f", rep.mean_ssim()) + "," + fmt("%.9f", rep.chamfer) + "," + fmt("%.2f", fps) + "\n";
      }
  return out;
}

std::string cmd_bench(const std::filesystem::path& in_ply, const std::filesystem::path& cameras, const Config& cfg) {
  const auto scene = stage("load scene", [&] { return read_ply(in_ply); });
  const auto cams = stage("load cameras", [&] { return read_cameras(cameras); });
  return bench_csv(scene, cams, cfg);
}

std::string cmd_score(const std::filesystem::path& in_ply, const std::filesystem::path& cameras, const Config& cfg) {
  const auto scene = stage("load scene", [&] { return read_ply(in_ply); });
  const auto cams = stage("load cameras", [&] { return read_cameras(cameras); });
  const auto scores = stage("score", [&] { return score_with(scene, cameras_of(cams), cfg); });
  return scores_to_csv(scores);
}

std::size_t cmd_prune(const std::filesystem::path& in_ply, const std::filesystem::path& cameras,
                      const std::filesystem::path& out_ply, const Config& cfg) {
  const auto scene = stage("load scene", [&] { return read_ply(in_ply); });
  const auto cams = stage("load cameras", [&] { return read_cameras(cameras); });
  const auto scores = stage("score", [&] { return score_with(scene, cameras_of(cams), cfg); });
  const auto pruned = stage("prune", [&] {
    return prune(scene, rank_bottom(scores, config_double(cfg, "prune_fraction", 0.0)));
  });
  stage("write", [&] { write_ply(pruned, out_ply); });
  return pruned.count;
}

std::string cmd_finetune(const std::filesystem::path& student_ply, const std::filesystem::path& teacher_ply,
                         const std::filesystem::path& cameras, const std::filesystem::path& out_ply,
                         const Config& cfg) {
  const auto student = stage("load scene", [&] { return read_ply(student_ply); });
  const auto teacher = stage("load scene", [&] { return read_ply(teacher_ply); });
  const auto cams = stage("load cameras", [&] { return read_cameras(cameras); });
  const auto ft = stage("config", [&] { return finetune_config_from(cfg); });
  const auto res = stage("finetune", [&] { return run_distill_finetune(student, teacher, cameras_of(cams), ft); });
  stage("write", [&] { write_ply(res.scene, out_ply); });
  return finetune_log_csv(res.log);
}

namespace {

std::string file_sha(const std::filesystem::path& p) { return sha256_hex(read_file_bytes(p)); }

FixtureResult run_fixture(const std::filesystem::path& dir, const std::vector<std::string>& f) {
  FixtureResult r;
  r.id = f[0];
  const std::string& kind = f[1];
  auto need = [&](std::size_t n) {
    if (f.size() != n) throw Error("fixture " + r.id + ": " + kind + " expects " + std::to_string(n - 2) + " fields");
  };
  auto check = [&](bool ok, const std::string& what) {
    if (!ok && r.detail.empty()) r.detail = what;
  };
  if (kind == "ply-roundtrip") {
    need(4);
    const auto bytes = read_file_bytes(dir / f[2]);
    const std::string got = sha256_hex(bytes);
    check(got == f[3], "input hash " + got + " != " + f[3]);
    check(serialize_ply(parse_ply(bytes)) == bytes, "PLY re-serialization differs from the file");
  } else if (kind == "bundle-crc") {
    need(4);
    const auto bytes = read_file_bytes(dir / f[2]);
    const auto info = inspect_bundle(bytes);
    check(info.crc_ok(), "CRC mismatch");
    const std::string got = sha256_hex(bytes);
    check(got == f[3], "bundle hash " + got + " != " + f[3]);
  } else if (kind == "render-hash") {
    need(6);
    const auto scene = decode_bundle(read_file_bytes(dir / f[2]));
    const auto cams = read_cameras(dir / f[3]);
    const Camera* cam = nullptr;
    for (const auto& nc : cams)
      if (nc.name == f[4]) cam = &nc.camera;
    if (!cam) throw Error("fixture " + r.id + ": no camera named " + f[4]);
    const std::string got = sha256_hex(encode_ppm(clamp01(render(scene, *cam).color)));
    check(got == f[5], "render hash " + got + " != " + f[5]);
  } else if (kind == "regen-bundle") {
    need(6);
    const Config cfg = merge_config(default_config(), parse_config([&] {
                                      const auto b = read_file_bytes(dir / f[4]);
                                      return std::string(b.begin(), b.end());
                                    }()));
    std::vector<std::uint8_t> bytes;
    compress_scene(read_ply(dir / f[2]), read_cameras(dir / f[3]), cfg, bytes);
    const std::string got = sha256_hex(bytes);
    check(got == f[5], "regenerated bundle hash " + got + " != " + f[5]);
  } else if (kind == "psnr-min") {
    need(6);
    const auto decoded = decode_bundle(read_file_bytes(dir / f[2]));
    const auto reference = read_ply(dir / f[3]);
    const auto rep = evaluate_scenes(reference, decoded, read_cameras(dir / f[4]));
    const double floor = to_double("psnr-min", f[5]);
    check(rep.mean_psnr() >= floor, "mean PSNR " + format_psnr(rep.mean_psnr()) + " below " + f[5]);
  } else if (kind == "file-hash") {
    need(4);
    const std::string got = file_sha(dir / f[2]);
    check(got == f[3], "hash " + got + " != " + f[3]);
  } else {
    throw Error("fixture " + r.id + ": unknown kind '" + kind + "'");
  }
  r.passed = r.detail.empty();
  return r;
}

}  // namespace

std::vector<FixtureResult> verify_fixtures(const std::filesystem::path& dir) {
  const auto manifest = read_file_bytes(dir / "MANIFEST");
  std::istringstream in(std::string(manifest.begin(), manifest.end()));
  std::vector<FixtureResult> out;
  for (std::string line; std::getline(in, line);) {
    std::istringstream ls(line);
    std::vector<std::string> f;
    for (std::string tok; ls >> tok;) f.push_back(tok);
    if (f.empty() || f[0][0] == '#') continue;
    if (f.size() < 2) throw Error("MANIFEST: malformed line '" + line + "'");
    try {
      out.push_back(run_fixture(dir, f));
    } catch (const std::exception& e) {
      out.push_back({f[0], false, e.what()});
    }
  }
  return out;
}

}  // namespace spwz
