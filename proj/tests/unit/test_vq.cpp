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
#include <doctest.h>

#include <cmath>

#include "spwz/codec/vq.hpp"
#include "spwz/rng.hpp"

using namespace spwz;

namespace {

double mean_sq_error(const std::vector<double>& v, std::size_t dim, const Codebook& cb) {
  const std::size_t n = v.size() / dim;
  double total = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < dim; ++d) {
      const double e = v[i * dim + d] - cb.centroids[cb.assignments[i] * dim + d];
      total += e * e;
    }
  return total / double(n);
}

std::vector<double> random_vectors(std::uint64_t seed, std::size_t n, std::size_t dim) {
  SplitMix64 rng(seed);
  std::vector<double> v(n * dim);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("separable data") {
  const std::vector<double> v = {0, 0, 10, 10};
  const auto cb = fit_codebook(v, 1, 2, 0);
  REQUIRE(cb.centroids.size() == 2);
  CHECK(std::min(cb.centroids[0], cb.centroids[1]) == 0);
  CHECK(std::max(cb.centroids[0], cb.centroids[1]) == 10);
  CHECK(cb.distortion == 0);
  CHECK(cb.assignments[0] == cb.assignments[1]);
  CHECK(cb.assignments[2] == cb.assignments[3]);
  CHECK(cb.assignments[0] != cb.assignments[2]);
}

TEST_CASE("enough centroids give zero distortion") {
  for (std::size_t k : {12u, 20u, 50u}) {
    auto v = random_vectors(1, 12, 5);
    v.insert(v.end(), v.begin(), v.begin() + 15);  // three duplicate rows
    const auto cb = fit_codebook(v, 5, k, 9);
    CHECK(cb.k == k);
    CHECK(cb.centroids.size() == k * 5);
    CHECK(cb.distortion == 0);
    CHECK(mean_sq_error(v, 5, cb) == 0);
  }
}

TEST_CASE("distortion bookkeeping and monotonicity in K") {
  const auto v = random_vectors(2, 600, 24);
  const auto small = fit_codebook(v, 24, 16, 5);
  const auto large = fit_codebook(v, 24, 64, 5);
  CHECK(large.distortion <= small.distortion);
  CHECK(small.distortion == doctest::Approx(mean_sq_error(v, 24, small)).epsilon(1e-12));
  CHECK(small.iterations >= 1);
  CHECK(small.iterations <= kKMeansMaxIterations);
  // Assignments are nearest centroids of the final codebook.
  for (std::size_t i = 0; i < 600; ++i)
    CHECK(small.assignments[i] ==
          nearest_centroid(small.centroids, 24, std::span<const double>(v.data() + i * 24, 24)));
}

TEST_CASE("deterministic for a fixed seed") {
  const auto v = random_vectors(3, 300, 21);
  const auto a = fit_codebook(v, 21, 32, 77);
  const auto b = fit_codebook(v, 21, 32, 77);
  CHECK(a.centroids == b.centroids);
  CHECK(a.assignments == b.assignments);
  CHECK(a.distortion == b.distortion);
}

TEST_CASE("nearest centroid picks the lowest index on ties") {
  const std::vector<double> c = {1, 0, -1, 0, 1, 0};
  const std::vector<double> q = {0, 0};
  CHECK(nearest_centroid(c, 2, q) == 0);
  const std::vector<double> r = {-0.9, 0};
  CHECK(nearest_centroid(c, 2, r) == 1);
}
