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
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "spwz/scene.hpp"

namespace spwz {

class FormatError : public Error {
 public:
  using Error::Error;
};

class PoseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

struct NamedCamera {
  std::string name;
  Camera camera;

  bool operator==(const NamedCamera&) const = default;
};

using CameraSet = std::vector<NamedCamera>;

struct Aabb {
  std::array<double, 3> min{0, 0, 0};
  std::array<double, 3> max{1, 1, 1};

  double diagonal() const;
  std::array<double, 3> center() const;
};

struct SyntheticSceneSpec {
  std::uint64_t seed = 0;
  std::size_t n_gaussians = 500;
  Aabb aabb{{-1, -1, -1}, {1, 1, 1}};
  int sh_degree = 3;
  int n_cameras = 8;
  int width = 64;
  int height = 64;
};

// Names of the 62 vertex properties, in file order.
const std::vector<std::string>& ply_property_names();

GaussianScene parse_ply(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> serialize_ply(const GaussianScene& scene);

GaussianScene read_ply(const std::filesystem::path& path);
void write_ply(const GaussianScene& scene, const std::filesystem::path& path);

CameraSet parse_cameras(const std::string& text);
std::string serialize_cameras(const CameraSet& cameras);

CameraSet read_cameras(const std::filesystem::path& path);
void write_cameras(const CameraSet& cameras, const std::filesystem::path& path);

// Camera at `eye` looking at `target`; image y axis points along -up.
Camera look_at(const std::array<double, 3>& eye, const std::array<double, 3>& target,
               const std::array<double, 3>& up, int width, int height, double focal);

// Deterministic scene + ring of cameras. All generated values are float32
// representable so the PLY carrier is lossless.
std::pair<GaussianScene, CameraSet> generate_synthetic(const SyntheticSceneSpec& spec);

Aabb scene_aabb(const GaussianScene& scene);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);

// 8-bit binary PPM (P6) of round(255 * clamp(v, 0, 1)).
std::vector<std::uint8_t> encode_ppm(const ImageRGB& img);

}  // namespace spwz
