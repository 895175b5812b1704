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
#include "spwz/codec/vq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spwz/parallel.hpp"
#include "spwz/rng.hpp"
#include "spwz/scene.hpp"

namespace spwz {

namespace {

double sq_dist(const double* a, const double* b, std::size_t dim) {
  double s = 0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double t = a[d] - b[d];
    s += t * t;
  }
  return s;
}

constexpr std::size_t kChunk = 256;

// Assigns every row and returns the mean squared distortion.
double assign(std::span<const double> vectors, std::size_t rows, std::size_t dim, const Codebook& cb,
              std::vector<std::uint32_t>& out) {
  std::vector<double> err(rows);
  const std::size_t chunks = (rows + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t c) {
    const std::size_t end = std::min(rows, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      const auto v = vectors.subspan(i * dim, dim);
      out[i] = nearest_centroid(cb.centroids, dim, v);
      err[i] = sq_dist(v.data(), &cb.centroids[out[i] * dim], dim);
    }
  });
  double total = 0;
  for (double e : err) total += e;
  return total / double(rows);
}

}  // namespace

std::uint32_t nearest_centroid(std::span<const double> centroids, std::size_t dim, std::span<const double> v) {
  const std::size_t k = centroids.size() / dim;
  std::uint32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    const double d = sq_dist(v.data(), &centroids[j * dim], dim);
    if (d < best_d) {
      best_d = d;
      best = std::uint32_t(j);
    }
  }
  return best;
}

Codebook fit_codebook(std::span<const double> vectors, std::size_t dim, std::size_t k, std::uint64_t seed) {
  if (dim == 0) throw DimensionError("fit_codebook: dimension must be >= 1");
  if (vectors.size() % dim != 0) throw DimensionError("fit_codebook: data size is not a multiple of dim");
  const std::size_t rows = vectors.size() / dim;
  if (rows == 0) throw DimensionError("fit_codebook: at least one vector is required");
  if (k == 0) throw DimensionError("fit_codebook: K must be >= 1");

  Codebook cb;
  cb.k = k;
  cb.dim = dim;
  cb.centroids.resize(k * dim);
  SplitMix64 rng(seed);

  // k-means++ seeding.
  auto place = [&](std::size_t c, std::size_t row) {
    std::copy_n(&vectors[row * dim], dim, &cb.centroids[c * dim]);
  };
  place(0, rng.below(rows));
  std::vector<double> d2(rows);
  for (std::size_t i = 0; i < rows; ++i) d2[i] = sq_dist(&vectors[i * dim], &cb.centroids[0], dim);
  for (std::size_t c = 1; c < k; ++c) {
    double sum = 0;
    for (double d : d2) sum += d;
    std::size_t pick;
    if (sum > 0) {
      const double r = rng.uniform() * sum;
      double acc = 0;
      pick = rows;
      std::size_t last_positive = 0;
      for (std::size_t i = 0; i < rows; ++i) {
        if (d2[i] > 0) last_positive = i;
        acc += d2[i];
        if (acc > r && d2[i] > 0) {
          pick = i;
          break;
        }
      }
      if (pick == rows) pick = last_positive;
    } else {
      pick = rng.below(rows);
    }
    place(c, pick);
    const double* cen = &cb.centroids[c * dim];
    for (std::size_t i = 0; i < rows; ++i) d2[i] = std::min(d2[i], sq_dist(&vectors[i * dim], cen, dim));
  }

  // Lloyd iterations.
  cb.assignments.resize(rows);
  double distortion = assign(vectors, rows, dim, cb, cb.assignments);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  while (distortion > 0 && cb.iterations < kKMeansMaxIterations) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t a = cb.assignments[i];
      ++counts[a];
      for (std::size_t d = 0; d < dim; ++d) sums[a * dim + d] += vectors[i * dim + d];
    }
    for (std::size_t j = 0; j < k; ++j) {
      if (counts[j] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) cb.centroids[j * dim + d] = sums[j * dim + d] / double(counts[j]);
    }
    ++cb.iterations;
    const double next = assign(vectors, rows, dim, cb, cb.assignments);
    const bool converged = std::abs(distortion - next) <= kKMeansTolerance * distortion;
    distortion = next;
    if (converged) break;
  }
  cb.distortion = distortion;
  return cb;
}

}  // namespace spwz
