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
#include <cstdint>
#include <span>
#include <vector>

namespace spwz {

struct Codebook {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;             // k x dim
  std::vector<std::uint32_t> assignments;    // one per input row
  double distortion = 0;                     // mean squared error per row
  int iterations = 0;
};

inline constexpr int kKMeansMaxIterations = 30;
inline constexpr double kKMeansTolerance = 1e-6;

// k-means with k-means++ seeding. `vectors` is rows x dim, row-major. K may
// exceed the row count; the surplus centroids duplicate data points.
Codebook fit_codebook(std::span<const double> vectors, std::size_t dim, std::size_t k, std::uint64_t seed);

// Index of the nearest centroid, lowest index on ties.
std::uint32_t nearest_centroid(std::span<const double> centroids, std::size_t dim, std::span<const double> v);

}  // namespace spwz
