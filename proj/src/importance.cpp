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
#include "spwz/importance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace spwz {

std::vector<Camera> cameras_of(const CameraSet& set) {
  std::vector<Camera> out;
  out.reserve(set.size());
  for (const auto& nc : set) out.push_back(nc.camera);
  return out;
}

ImportanceScores score_opacity(const GaussianScene& scene, std::span<const Camera> cameras,
                               const OpacityScoreConfig& cfg) {
  if (cameras.empty()) throw Error("score_opacity: at least one camera is required");
  ImportanceScores out;
  out.kind = ScoreKind::opacity;
  out.scores.assign(scene.count, 0.0);
  RenderOptions opt = cfg.render;
  opt.want_blend_weights = true;
  opt.want_depth = false;
  for (const Camera& cam : cameras) {
    const RenderOutput r = render(scene, cam, opt);
    for (std::size_t i = 0; i < scene.count; ++i) out.scores[i] += r.blend_weight[i];
    ++out.views_accumulated;
  }
  if (cfg.volume_beta > 0 && scene.count > 0) {
    std::vector<double> volume(scene.count);
    for (std::size_t i = 0; i < scene.count; ++i) {
      const auto ls = scene.log_scale(i);
      volume[i] = std::exp(ls[0] + ls[1] + ls[2]);
    }
    std::vector<double> sorted = volume;
    std::sort(sorted.begin(), sorted.end());
    const double ref = sorted[std::min(scene.count - 1, std::size_t(0.9 * double(scene.count)))];
    for (std::size_t i = 0; i < scene.count; ++i) {
      const double v = ref > 0 ? std::min(1.0, volume[i] / ref) : 1.0;
      out.scores[i] *= std::pow(v, cfg.volume_beta);
    }
  }
  return out;
}

ImportanceScores score_hessian(const GaussianScene& scene, std::span<const Camera> cameras,
                               const RenderOptions& options) {
  if (cameras.empty()) throw Error("score_hessian: at least one camera is required");
  ImportanceScores out;
  out.kind = ScoreKind::hessian;
  out.scores.assign(scene.count, 0.0);
  RenderOptions opt = options;
  opt.want_depth = false;
  for (const Camera& cam : cameras) {
    const std::vector<double> zero(std::size_t(cam.width) * cam.height * 3, 0.0);
    const RenderOutput r = render_backward(scene, cam, zero, opt);
    for (std::size_t i = 0; i < scene.count; ++i) out.scores[i] += r.grads->g_grad_sq[i];
    ++out.views_accumulated;
  }
  return out;
}

std::vector<std::size_t> rank_bottom(const ImportanceScores& scores, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw Error("rank_bottom: fraction must lie in [0, 1]");
  const std::size_t n = scores.scores.size();
  const auto k = std::size_t(std::floor(fraction * double(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores.scores[a] < scores.scores[b]; });
  idx.resize(std::min(k, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::string scores_to_csv(const ImportanceScores& scores) {
  std::string out = "index,score\n";
  char buf[64];
  for (std::size_t i = 0; i < scores.scores.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, scores.scores[i]);
    out += buf;
  }
  return out;
}

}  // namespace spwz
