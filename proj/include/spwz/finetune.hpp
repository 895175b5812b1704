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
#include <span>
#include <string>
#include <vector>

#include "spwz/rasterizer.hpp"
#include "spwz/rng.hpp"
#include "spwz/scene.hpp"

namespace spwz {

struct LearningRates {
  double sh_dc = 2.5e-3;
  double sh_rest = 1.25e-4;
  double opacity = 5e-2;
  double mask = 1e-2;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct FinetuneConfig {
  double lambda_mask = 5e-4;
  // Standard deviation of the pseudo-view translation noise; negative means
  // 2% of the teacher's bounding-box diagonal.
  double noise_sigma = -1.0;
  double pseudo_prob = 0.5;
  int iterations = 3000;
  LearningRates lr;
  AdamConfig adam;
  double mask_threshold = kDefaultMaskThreshold;
  std::uint64_t seed = 0;
};

// One named parameter block and its gradient.
struct ParamGroup {
  std::span<double> params;
  std::span<const double> grads;
  double lr = 0;
};

struct OptimizerState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  long step = 0;
};

// Adam update with bias correction. The state is sized on first use and must
// keep the same group shapes afterwards (DimensionError otherwise).
void optimizer_step(std::span<const ParamGroup> groups, OptimizerState& state, const AdamConfig& adam = {});

// Perturbs the camera translation by i.i.d. N(0, sigma^2) noise per component.
Camera sample_pseudo_pose(const Camera& camera, double sigma, SplitMix64& rng);

// (1 / HW) * sum over all H*W*3 entries of (teacher - student)^2.
double distill_loss(const ImageRGB& teacher, const ImageRGB& student);

// Mean of sigmoid(mask_logit); throws Error for an empty scene.
double mask_loss(const GaussianScene& scene);

struct AppearanceGrads {
  std::vector<double> d_sh_dc;
  std::vector<double> d_sh_rest;
  std::vector<double> d_opacity_logit;
  std::vector<double> d_mask_logit;
};

struct LossEval {
  double total = 0;
  double distill = 0;
  double mask = 0;
  AppearanceGrads grads;
  ImageRGB student;
};

// Renders the student at `camera` and evaluates L_distill + lambda * L_mask
// with analytic gradients.
LossEval total_loss(const GaussianScene& student, const Camera& camera, const ImageRGB& teacher,
                    const FinetuneConfig& cfg);

struct FinetuneLogRow {
  int iter = 0;
  double loss = 0;
  double distill = 0;
  double mask_loss = 0;
  double masked_fraction = 0;
};

struct FinetuneResult {
  GaussianScene scene;
  std::vector<FinetuneLogRow> log;
};

// Appearance-only distillation fine-tuning; positions, scales and rotations
// are never modified.
FinetuneResult run_distill_finetune(const GaussianScene& student, const GaussianScene& teacher,
                                    std::span<const Camera> cameras, const FinetuneConfig& cfg);

std::string finetune_log_csv(std::span<const FinetuneLogRow> rows);

}  // namespace spwz
