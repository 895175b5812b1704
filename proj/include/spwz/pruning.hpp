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
#include <vector>

#include "spwz/rasterizer.hpp"
#include "spwz/scene.hpp"

namespace spwz {

// Removes the rows listed in `drop`; survivors keep their relative order.
// Throws DimensionError on an out-of-range index.
GaussianScene prune(const GaussianScene& scene, std::span<const std::size_t> drop);

// Binary degree-3 mask M_n = [sigmoid(m_n) > threshold].
std::vector<bool> degree3_mask(const GaussianScene& scene, double threshold = kDefaultMaskThreshold);

// Effective degree-3 coefficients M_n * c_n, N x 21 (channel-major, 7 per channel).
std::vector<double> masked_sh(const GaussianScene& scene, double threshold = kDefaultMaskThreshold);

// Hard-zeroes degree-3 SH of masked rows and resets mask logits to +/-8.
GaussianScene bake_mask(const GaussianScene& scene, double threshold = kDefaultMaskThreshold);

double masked_fraction(const GaussianScene& scene, double threshold = kDefaultMaskThreshold);

}  // namespace spwz
