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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "spwz/scene.hpp"

namespace spwz {

inline constexpr double kNearPlane = 0.01;
inline constexpr double kCovDilation = 0.3;
inline constexpr double kAlphaMax = 0.99;
inline constexpr double kAlphaMin = 1.0 / 255.0;
inline constexpr double kTransmittanceStop = 1e-4;
inline constexpr int kTileSize = 16;
inline constexpr double kDefaultMaskThreshold = 0.01;

struct SplatProjection {
  std::array<double, 2> mu2d{0, 0};
  std::array<double, 3> cov2d{0, 0, 0};  // (xx, xy, yy)
  double depth = 0;
  std::array<double, 3> color{0, 0, 0};  // SH + 0.5, before the >= 0 clamp
  double opacity = 0;
  bool visible = false;
};

// Degree-3 mask of row i under the strict rule sigmoid(m) > threshold.
inline bool mask_active(double mask_logit, double threshold) { return sigmoid(mask_logit) > threshold; }

struct RenderOptions {
  bool want_depth = true;
  // Per-Gaussian sum over pixels of alpha_i * T_i.
  bool want_blend_weights = false;
  // When false degree-3 SH is always used regardless of mask logits.
  bool use_mask = true;
  double mask_threshold = kDefaultMaskThreshold;
};

struct GradBuffers {
  std::vector<double> d_sh_dc;            // N x 3
  std::vector<double> d_sh_rest;          // N x 45
  std::vector<double> d_opacity_logit;    // N
  std::vector<double> d_mask_logit;       // N
  std::vector<double> g_grad_sq;          // N, sum over pixels/channels of (dC/dg_i)^2
};

struct RenderOutput {
  ImageRGB color;
  std::vector<double> depth;          // H x W, empty unless requested
  std::vector<double> transmittance;  // H x W
  std::vector<double> blend_weight;   // N, empty unless requested
  std::optional<GradBuffers> grads;
};

SplatProjection project(const GaussianScene& scene, const Camera& camera, std::size_t index,
                        const RenderOptions& options = {});

// g = exp(-1/2 (p - mu)^T cov^-1 (p - mu)). Throws DegenerateError when the
// 2D covariance is not invertible.
double splat_value(const SplatProjection& proj, double px, double py);

RenderOutput render(const GaussianScene& scene, const Camera& camera, const RenderOptions& options = {});

// Forward pass plus analytic gradients of sum(loss_grad * color) with respect
// to the appearance parameters. loss_grad is H x W x 3.
RenderOutput render_backward(const GaussianScene& scene, const Camera& camera, std::span<const double> loss_grad,
                             const RenderOptions& options = {});

}  // namespace spwz
