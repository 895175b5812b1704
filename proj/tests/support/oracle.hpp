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

// Test-side reference implementations. Nothing here calls into the renderer;
// projection, SH evaluation and compositing are re-derived from scratch.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "spwz/rng.hpp"
#include "spwz/scene.hpp"

namespace oracle {

using spwz::Camera;
using spwz::GaussianScene;

// Real SH basis evaluated from closed-form normalization constants.
std::array<double, 16> sh_basis(double x, double y, double z);

struct Splat {
  bool visible = false;
  double mx = 0, my = 0, depth = 0;
  double cxx = 0, cxy = 0, cyy = 0;  // 2D covariance
  double opacity = 0;
  std::array<double, 3> raw{};  // SH color + 0.5 before clamping
};

// deg3_scale[i] multiplies the degree-3 coefficients of row i; by default the
// binary mask sigma(m) > threshold is used.
std::vector<Splat> project_all(const GaussianScene& scene, const Camera& cam, double threshold = 0.01,
                               const std::vector<double>* deg3_scale = nullptr);

struct Hit {
  std::size_t row;
  bool clamped;
};

// Which splats contribute to each pixel and which colors are clamped at zero,
// recorded at the unperturbed parameters.
struct Trace {
  int width = 0, height = 0;
  std::vector<std::vector<Hit>> pixels;
  std::vector<std::array<bool, 3>> positive;
};

Trace trace(const std::vector<Splat>& splats, int width, int height);

// Composites one pixel along a fixed trace. `g_offset` adds delta to the
// Gaussian falloff of one row at this pixel.
struct GOffset {
  std::size_t row;
  double delta;
};
std::array<double, 3> replay_pixel(const std::vector<Splat>& splats, const Trace& t, int x, int y,
                                   std::optional<GOffset> g_offset = std::nullopt);
std::vector<double> replay_image(const std::vector<Splat>& splats, const Trace& t);

// Brute-force render (trace at the given parameters, then composite).
std::vector<double> render(const GaussianScene& scene, const Camera& cam, double threshold = 0.01);

struct Gradients {
  std::vector<double> d_sh_dc, d_sh_rest, d_opacity_logit, d_mask_logit, g_grad_sq;
};

// Central differences of sum(loss_grad * color) with the trace frozen at the
// base point, so kinks of the alpha threshold, the alpha cap, early stop and
// the color clamp do not pollute the quotient.
Gradients finite_difference(const GaussianScene& scene, const Camera& cam, std::span<const double> loss_grad,
                            double h = 1e-6, double threshold = 0.01);

// |analytic - reference| <= max(rel * |reference|, floor)
inline bool close(double analytic, double reference, double rel = 1e-4, double floor = 1e-8) {
  const double err = analytic > reference ? analytic - reference : reference - analytic;
  const double mag = reference < 0 ? -reference : reference;
  return err <= (rel * mag > floor ? rel * mag : floor);
}

// Scenes for gradient and invariance tests.
Camera test_camera(int width, int height);
GaussianScene random_scene(spwz::SplitMix64& rng, std::size_t n, int sh_degree = 3);

// O(MK) chamfer.
double brute_chamfer(std::span<const std::array<double, 3>> a, std::span<const std::array<double, 3>> b);

// SSIM by direct 11x11 window sums at every pixel, mirrored borders.
double direct_ssim(const spwz::ImageRGB& a, const spwz::ImageRGB& b);

// Members of Python range(start, stop, step) for step > 0.
std::vector<long> python_range(long start, long stop, long step = 1);

}  // namespace oracle
