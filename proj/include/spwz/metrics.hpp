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
#include <cstdint>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spwz/scene.hpp"

namespace spwz {

// 10 log10(1 / MSE) over all H*W*3 entries; identical images give +infinity.
// Throws DimensionError on a size mismatch.
double psnr(const ImageRGB& a, const ImageRGB& b);
// "inf" for the identical-image sentinel, otherwise fixed 6 decimals.
std::string format_psnr(double db);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Normalized 1-D Gaussian taps of the SSIM window.
std::array<double, kSsimWindow> ssim_window();
// Mirror index into [0, n) with the edge sample repeated (... 1 0 | 0 1 ...).
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n);

// Mean SSIM per channel, averaged over channels. Images must be at least
// 11 x 11.
double ssim(const ImageRGB& a, const ImageRGB& b);

using Point3 = std::array<double, 3>;

// Exact nearest-neighbour queries over a fixed point set.
class KdTree {
 public:
  explicit KdTree(std::span<const Point3> points);
  // Index and squared distance of the closest point; lowest index on ties.
  std::pair<std::size_t, double> nearest(const Point3& q) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::size_t point;
    int axis;
    std::int64_t left = -1, right = -1;
  };
  std::int64_t build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi);
  void search(std::int64_t node, const Point3& q, std::size_t& best, double& best_d2) const;

  std::vector<Point3> points_;
  std::vector<Node> nodes_;
  std::int64_t root_ = -1;
};

// 0.5 * (mean_a min_b |a-b| + mean_b min_a |a-b|), unsquared Euclidean.
double chamfer(std::span<const Point3> a, std::span<const Point3> b);

std::vector<Point3> scene_points(const GaussianScene& scene);

}  // namespace spwz
