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
#include "spwz/pruning.hpp"

#include <string>

namespace spwz {

GaussianScene prune(const GaussianScene& scene, std::span<const std::size_t> drop) {
  std::vector<char> dropped(scene.count, 0);
  for (std::size_t i : drop) {
    if (i >= scene.count) throw DimensionError("prune: index " + std::to_string(i) + " out of range");
    dropped[i] = 1;
  }
  std::vector<std::size_t> keep;
  keep.reserve(scene.count);
  for (std::size_t i = 0; i < scene.count; ++i)
    if (!dropped[i]) keep.push_back(i);
  return select_rows(scene, keep);
}

std::vector<bool> degree3_mask(const GaussianScene& scene, double threshold) {
  std::vector<bool> m(scene.count);
  for (std::size_t i = 0; i < scene.count; ++i) m[i] = mask_active(scene.mask_logits[i], threshold);
  return m;
}

std::vector<double> masked_sh(const GaussianScene& scene, double threshold) {
  std::vector<double> out(scene.count * 3 * kDeg3Count, 0.0);
  for (std::size_t i = 0; i < scene.count; ++i) {
    if (!mask_active(scene.mask_logits[i], threshold)) continue;
    const auto rest = scene.rest(i);
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < kDeg3Count; ++k)
        out[i * 3 * kDeg3Count + c * kDeg3Count + k] = rest[c * kShRestPerChannel + kDeg3Begin + k];
  }
  return out;
}

GaussianScene bake_mask(const GaussianScene& scene, double threshold) {
  GaussianScene out = scene;
  for (std::size_t i = 0; i < out.count; ++i) {
    const bool on = mask_active(out.mask_logits[i], threshold);
    out.mask_logits[i] = on ? kMaskLogitOn : kMaskLogitOff;
    if (on) continue;
    auto rest = out.rest(i);
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < kDeg3Count; ++k) rest[c * kShRestPerChannel + kDeg3Begin + k] = 0.0;
  }
  return out;
}

double masked_fraction(const GaussianScene& scene, double threshold) {
  if (scene.count == 0) return 0.0;
  std::size_t off = 0;
  for (std::size_t i = 0; i < scene.count; ++i) off += !mask_active(scene.mask_logits[i], threshold);
  return double(off) / double(scene.count);
}

}  // namespace spwz
