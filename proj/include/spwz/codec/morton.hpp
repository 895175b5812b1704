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
#include <cstdint>
#include <vector>

#include "spwz/scene.hpp"
#include "spwz/scene_io.hpp"

namespace spwz {

inline constexpr int kMortonBits = 21;

// Interleaves three 21-bit coordinates: x at bit 3k, y at 3k+1, z at 3k+2.
std::uint64_t morton_interleave(std::uint32_t x, std::uint32_t y, std::uint32_t z);

// Quantizes each axis to 21 bits over `box` (positions outside are clamped)
// and interleaves.
std::uint64_t morton_key(std::span<const double, 3> position, const Aabb& box);

struct MortonOrder {
  GaussianScene scene;
  // permutation[k] is the source row of output row k.
  std::vector<std::size_t> permutation;
};

// Stable sort of the rows by Morton key over the scene's own bounding box.
MortonOrder morton_sort(const GaussianScene& scene);

}  // namespace spwz
