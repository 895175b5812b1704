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
#include "spwz/codec/morton.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace spwz {

namespace {

// Spreads the low 21 bits of v so bit k lands on bit 3k.
std::uint64_t spread3(std::uint32_t v) {
  std::uint64_t x = v & 0x1FFFFF;
  x = (x | (x << 32)) & 0x1F00000000FFFFULL;
  x = (x | (x << 16)) & 0x1F0000FF0000FFULL;
  x = (x | (x << 8)) & 0x100F00F00F00F00FULL;
  x = (x | (x << 4)) & 0x10C30C30C30C30C3ULL;
  x = (x | (x << 2)) & 0x1249249249249249ULL;
  return x;
}

std::uint32_t axis_cell(double v, double lo, double hi) {
  constexpr double top = double((1u << kMortonBits) - 1);
  if (!(hi > lo) || !std::isfinite(v)) return 0;
  const double t = std::round((v - lo) / (hi - lo) * top);
  return std::uint32_t(std::clamp(t, 0.0, top));
}

}  // namespace

std::uint64_t morton_interleave(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
  return spread3(x) | (spread3(y) << 1) | (spread3(z) << 2);
}

std::uint64_t morton_key(std::span<const double, 3> p, const Aabb& box) {
  return morton_interleave(axis_cell(p[0], box.min[0], box.max[0]), axis_cell(p[1], box.min[1], box.max[1]),
                           axis_cell(p[2], box.min[2], box.max[2]));
}

MortonOrder morton_sort(const GaussianScene& scene) {
  MortonOrder out;
  out.permutation.resize(scene.count);
  std::iota(out.permutation.begin(), out.permutation.end(), std::size_t{0});
  if (scene.count > 0) {
    const Aabb box = scene_aabb(scene);
    std::vector<std::uint64_t> keys(scene.count);
    for (std::size_t i = 0; i < scene.count; ++i) keys[i] = morton_key(scene.position(i), box);
    std::stable_sort(out.permutation.begin(), out.permutation.end(),
                     [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  }
  out.scene = select_rows(scene, out.permutation);
  return out;
}

}  // namespace spwz
