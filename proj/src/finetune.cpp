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
#include "spwz/finetune.hpp"

#include <cmath>
#include <cstdio>

#include "spwz/pruning.hpp"
#include "spwz/scene_io.hpp"

namespace spwz {

void optimizer_step(std::span<const ParamGroup> groups, OptimizerState& state, const AdamConfig& adam) {
  for (const auto& g : groups) {
    if (g.params.size() != g.grads.size()) throw DimensionError("optimizer_step: parameter/gradient shape mismatch");
  }
  if (state.first_moment.empty() && state.step == 0) {
    for (const auto& g : groups) {
      state.first_moment.emplace_back(g.params.size(), 0.0);
      state.second_moment.emplace_back(g.params.size(), 0.0);
    }
  }
  if (state.first_moment.size() != groups.size()) throw DimensionError("optimizer_step: group count changed");
  for (std::size_t k = 0; k < groups.size(); ++k) {
    if (state.first_moment[k].size() != groups[k].params.size())
      throw DimensionError("optimizer_step: state shape mismatch");
  }

  ++state.step;
  const double bc1 = 1.0 - std::pow(adam.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(adam.beta2, double(state.step));
  for (std::size_t k = 0; k < groups.size(); ++k) {
    const ParamGroup& g = groups[k];
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    for (std::size_t i = 0; i < g.params.size(); ++i) {
      const double grad = g.grads[i];
      m[i] = adam.beta1 * m[i] + (1.0 - adam.beta1) * grad;
      v[i] = adam.beta2 * v[i] + (1.0 - adam.beta2) * grad * grad;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      g.params[i] -= g.lr * mhat / (std::sqrt(vhat) + adam.eps);
    }
  }
}

Camera sample_pseudo_pose(const Camera& camera, double sigma, SplitMix64& rng) {
  if (sigma < 0) throw Error("sample_pseudo_pose: sigma must be >= 0");
  Camera out = camera;
  if (sigma == 0) return out;
  for (double& t : out.translation) t += sigma * rng.normal();
  return out;
}

double distill_loss(const ImageRGB& teacher, const ImageRGB& student) {
  if (teacher.width != student.width || teacher.height != student.height ||
      teacher.data.size() != student.data.size()) {
    throw DimensionError("distill_loss: image dimensions differ");
  }
  double sum = 0;
  for (std::size_t i = 0; i < teacher.data.size(); ++i) {
    const double d = teacher.data[i] - student.data[i];
    sum += d * d;
  }
  return sum / (double(teacher.width) * double(teacher.height));
}

double mask_loss(const GaussianScene& scene) {
  if (scene.count == 0) throw Error("mask_loss: undefined for an empty scene");
  double sum = 0;
  for (double m : scene.mask_logits) sum += sigmoid(m);
  return sum / double(scene.count);
}

LossEval total_loss(const GaussianScene& student, const Camera& camera, const ImageRGB& teacher,
                    const FinetuneConfig& cfg) {
  if (teacher.width != camera.width || teacher.height != camera.height)
    throw DimensionError("total_loss: teacher image does not match camera");
  RenderOptions opt;
  opt.want_depth = false;
  opt.mask_threshold = cfg.mask_threshold;

  // The image gradient depends on the student image, so render once for the
  // residual and again with the backward pass.
  const RenderOutput fwd = render(student, camera, opt);
  const double hw = double(camera.width) * double(camera.height);
  std::vector<double> loss_grad(fwd.color.data.size());
  for (std::size_t i = 0; i < loss_grad.size(); ++i) loss_grad[i] = 2.0 * (fwd.color.data[i] - teacher.data[i]) / hw;
  RenderOutput bwd = render_backward(student, camera, loss_grad, opt);

  LossEval ev;
  ev.distill = distill_loss(teacher, fwd.color);
  ev.mask = student.count > 0 ? mask_loss(student) : 0.0;
  ev.total = ev.distill + cfg.lambda_mask * ev.mask;
  ev.grads.d_sh_dc = std::move(bwd.grads->d_sh_dc);
  ev.grads.d_sh_rest = std::move(bwd.grads->d_sh_rest);
  ev.grads.d_opacity_logit = std::move(bwd.grads->d_opacity_logit);
  ev.grads.d_mask_logit = std::move(bwd.grads->d_mask_logit);
  const double n = double(student.count);
  for (std::size_t i = 0; i < student.count; ++i) {
    const double s = sigmoid(student.mask_logits[i]);
    ev.grads.d_mask_logit[i] += cfg.lambda_mask * s * (1.0 - s) / n;
  }
  ev.student = std::move(fwd.color);
  return ev;
}

FinetuneResult run_distill_finetune(const GaussianScene& student, const GaussianScene& teacher,
                                    std::span<const Camera> cameras, const FinetuneConfig& cfg) {
  FinetuneResult res{student, {}};
  if (cfg.iterations <= 0) return res;
  if (cameras.empty()) throw Error("finetune: at least one camera is required");
  if (student.count == 0) throw Error("finetune: student scene is empty");

  const double sigma = cfg.noise_sigma >= 0 ? cfg.noise_sigma : 0.02 * scene_aabb(teacher).diagonal();
  SplitMix64 rng(cfg.seed);
  OptimizerState state;
  RenderOptions teacher_opt;
  teacher_opt.want_depth = false;
  teacher_opt.mask_threshold = cfg.mask_threshold;

  GaussianScene& s = res.scene;
  for (int it = 0; it < cfg.iterations; ++it) {
    Camera cam = cameras[rng.below(cameras.size())];
    if (rng.uniform() < cfg.pseudo_prob) cam = sample_pseudo_pose(cam, sigma, rng);
    const ImageRGB target = render(teacher, cam, teacher_opt).color;
    const LossEval ev = total_loss(s, cam, target, cfg);
    res.log.push_back({it, ev.total, ev.distill, ev.mask, masked_fraction(s, cfg.mask_threshold)});

    const ParamGroup groups[] = {
        {s.sh_dc, ev.grads.d_sh_dc, cfg.lr.sh_dc},
        {s.sh_rest, ev.grads.d_sh_rest, cfg.lr.sh_rest},
        {s.opacity_logits, ev.grads.d_opacity_logit, cfg.lr.opacity},
        {s.mask_logits, ev.grads.d_mask_logit, cfg.lr.mask},
    };
    optimizer_step(groups, state, cfg.adam);
  }
  return res;
}

std::string finetune_log_csv(std::span<const FinetuneLogRow> rows) {
  std::string out = "iter,loss,distill,mask_loss,masked_fraction\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.9g,%.6f\n", r.iter, r.loss, r.distill, r.mask_loss,
                  r.masked_fraction);
    out += buf;
  }
  return out;
}

}  // namespace spwz
