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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spwz/rasterizer.hpp"
#include "spwz/scene.hpp"
#include "spwz/scene_io.hpp"

namespace spwz {

enum class ScoreKind { opacity, hessian };

struct ImportanceScores {
  std::vector<double> scores;
  ScoreKind kind = ScoreKind::opacity;
  int views_accumulated = 0;
};

struct OpacityScoreConfig {
  // Exponent on the clamped normalized volume; 0 gives the plain blend-weight sum.
  double volume_beta = 0.0;
  RenderOptions render;
};

// Sum over views and pixels of alpha_i * T_i, optionally weighted by
// normalized-volume^beta.
ImportanceScores score_opacity(const GaussianScene& scene, std::span<const Camera> cameras,
                               const OpacityScoreConfig& cfg = {});

// Sum over views of sum_{pixels, channels} (dC/dg_i)^2.
ImportanceScores score_hessian(const GaussianScene& scene, std::span<const Camera> cameras,
                               const RenderOptions& options = {});

// floor(fraction * N) indices with the smallest scores, ties to the lower
// index. Returned ascending.
std::vector<std::size_t> rank_bottom(const ImportanceScores& scores, double fraction);

std::string scores_to_csv(const ImportanceScores& scores);

std::vector<Camera> cameras_of(const CameraSet& set);

}  // namespace spwz
