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
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spwz {

// Base class for every error raised by the library. Derived types name the
// failure family so callers (and the CLI) can report the failing stage.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kShRestPerChannel = 15;
inline constexpr int kShRestWidth = 3 * kShRestPerChannel;
// Offsets into one channel's 15 rest coefficients.
inline constexpr int kDeg3Begin = 8;
inline constexpr int kDeg3Count = 7;
inline constexpr double kMaskLogitOn = 8.0;
inline constexpr double kMaskLogitOff = -8.0;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

// Parameter set of a splat scene. Per-primitive arrays are stored flat and
// row-major; accessors return spans over one row.
struct GaussianScene {
  std::size_t count = 0;
  std::vector<double> positions;        // N x 3
  std::vector<double> rotation_params;  // N x 4, (w, x, y, z), unnormalized
  std::vector<double> log_scales;       // N x 3
  std::vector<double> opacity_logits;   // N
  std::vector<double> sh_dc;            // N x 3
  std::vector<double> sh_rest;          // N x 45, channel-major
  std::vector<double> mask_logits;      // N
  int max_sh_degree = 3;

  // Allocates zeroed arrays for n primitives (identity rotations, default
  // mask logits).
  static GaussianScene with_count(std::size_t n, int sh_degree = 3);

  std::span<double, 3> position(std::size_t i) { return std::span<double, 3>(&positions[3 * i], 3); }
  std::span<const double, 3> position(std::size_t i) const {
    return std::span<const double, 3>(&positions[3 * i], 3);
  }
  std::span<double, 4> rotation(std::size_t i) { return std::span<double, 4>(&rotation_params[4 * i], 4); }
  std::span<const double, 4> rotation(std::size_t i) const {
    return std::span<const double, 4>(&rotation_params[4 * i], 4);
  }
  std::span<double, 3> log_scale(std::size_t i) { return std::span<double, 3>(&log_scales[3 * i], 3); }
  std::span<const double, 3> log_scale(std::size_t i) const {
    return std::span<const double, 3>(&log_scales[3 * i], 3);
  }
  std::span<double, 3> dc(std::size_t i) { return std::span<double, 3>(&sh_dc[3 * i], 3); }
  std::span<const double, 3> dc(std::size_t i) const { return std::span<const double, 3>(&sh_dc[3 * i], 3); }
  std::span<double, kShRestWidth> rest(std::size_t i) {
    return std::span<double, kShRestWidth>(&sh_rest[kShRestWidth * i], kShRestWidth);
  }
  std::span<const double, kShRestWidth> rest(std::size_t i) const {
    return std::span<const double, kShRestWidth>(&sh_rest[kShRestWidth * i], kShRestWidth);
  }

  double opacity(std::size_t i) const { return sigmoid(opacity_logits[i]); }

  bool operator==(const GaussianScene&) const = default;
};

// Pinhole camera with a world-to-camera pose: x_cam = rotation * x_world + translation.
struct Camera {
  int width = 0;
  int height = 0;
  double fx = 0, fy = 0, cx = 0, cy = 0;
  std::array<double, 9> rotation{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  std::array<double, 3> translation{0, 0, 0};

  // Camera centre in world coordinates, -R^T t.
  std::array<double, 3> center() const;

  bool operator==(const Camera&) const = default;
};

// Checks the camera invariants; returns an empty string when valid.
std::string camera_violation(const Camera& cam);

struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // height x width x 3

  ImageRGB() = default;
  ImageRGB(int w, int h, double fill = 0.0) : width(w), height(h), data(std::size_t(w) * h * 3, fill) {}

  double& at(int x, int y, int c) { return data[(std::size_t(y) * width + x) * 3 + c]; }
  double at(int x, int y, int c) const { return data[(std::size_t(y) * width + x) * 3 + c]; }

  bool operator==(const ImageRGB&) const = default;
};

// Copy of the image with every value clamped to [0, 1].
ImageRGB clamp01(const ImageRGB& img);

struct Violation {
  std::string field;
  std::size_t index = 0;
  std::string detail;

  bool operator==(const Violation&) const = default;
};

// Returns every broken scene invariant (first offending index per field).
std::vector<Violation> validate_scene(const GaussianScene& scene);

// Unit quaternion (w, x, y, z) of row `index`. Throws DegenerateError on a
// zero-norm row.
std::array<double, 4> normalized_rotation(const GaussianScene& scene, std::size_t index);

// Filters every per-primitive array by `keep` (ascending row indices).
GaussianScene select_rows(const GaussianScene& scene, std::span<const std::size_t> keep);

}  // namespace spwz
