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
#include "spwz/scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace spwz {

GaussianScene GaussianScene::with_count(std::size_t n, int sh_degree) {
  GaussianScene s;
  s.count = n;
  s.positions.assign(3 * n, 0.0);
  s.rotation_params.assign(4 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) s.rotation_params[4 * i] = 1.0;
  s.log_scales.assign(3 * n, 0.0);
  s.opacity_logits.assign(n, 0.0);
  s.sh_dc.assign(3 * n, 0.0);
  s.sh_rest.assign(kShRestWidth * n, 0.0);
  s.mask_logits.assign(n, kMaskLogitOn);
  s.max_sh_degree = sh_degree;
  return s;
}

std::array<double, 3> Camera::center() const {
  const auto& r = rotation;
  const auto& t = translation;
  return {-(r[0] * t[0] + r[3] * t[1] + r[6] * t[2]), -(r[1] * t[0] + r[4] * t[1] + r[7] * t[2]),
          -(r[2] * t[0] + r[5] * t[1] + r[8] * t[2])};
}

std::string camera_violation(const Camera& cam) {
  if (cam.width <= 0 || cam.height <= 0) return "image size must be positive";
  if (!(cam.fx > 0) || !(cam.fy > 0)) return "focal lengths must be positive";
  const auto& r = cam.rotation;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = r[i] * r[j] + r[3 + i] * r[3 + j] + r[6 + i] * r[6 + j];
      if (std::abs(dot - (i == j ? 1.0 : 0.0)) > 1e-6) return "rotation is not orthonormal";
    }
  }
  double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
               r[2] * (r[3] * r[7] - r[4] * r[6]);
  if (std::abs(det - 1.0) > 1e-6) return "rotation determinant is not +1";
  return {};
}

ImageRGB clamp01(const ImageRGB& img) {
  ImageRGB out = img;
  for (double& v : out.data) v = std::clamp(v, 0.0, 1.0);
  return out;
}

namespace {

struct FieldCheck {
  const char* name;
  const std::vector<double>* values;
  std::size_t width;
};

}  // namespace

std::vector<Violation> validate_scene(const GaussianScene& scene) {
  std::vector<Violation> out;
  const std::size_t n = scene.count;
  const FieldCheck fields[] = {
      {"positions", &scene.positions, 3},      {"rotation_params", &scene.rotation_params, 4},
      {"log_scales", &scene.log_scales, 3},    {"opacity_logits", &scene.opacity_logits, 1},
      {"sh_dc", &scene.sh_dc, 3},              {"sh_rest", &scene.sh_rest, kShRestWidth},
      {"mask_logits", &scene.mask_logits, 1},
  };
  bool shapes_ok = true;
  for (const auto& f : fields) {
    if (f.values->size() != n * f.width) {
      std::ostringstream os;
      os << "expected " << n * f.width << " values, found " << f.values->size();
      out.push_back({f.name, 0, os.str()});
      shapes_ok = false;
    }
  }
  if (scene.max_sh_degree < 0 || scene.max_sh_degree > 3) {
    out.push_back({"max_sh_degree", 0, "must be in 0..3"});
  }
  if (!shapes_ok) return out;

  for (const auto& f : fields) {
    for (std::size_t i = 0; i < n; ++i) {
      bool bad = false;
      for (std::size_t k = 0; k < f.width; ++k) bad |= !std::isfinite((*f.values)[i * f.width + k]);
      if (bad) {
        out.push_back({f.name, i, "non-finite value"});
        break;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    bool bad = false;
    for (int k = 0; k < 3; ++k) {
      double s = std::exp(scene.log_scales[3 * i + k]);
      bad |= !(std::isfinite(s) && s > 0.0);
    }
    if (bad) {
      if (std::none_of(out.begin(), out.end(), [](const Violation& v) { return v.field == "log_scales"; }))
        out.push_back({"log_scales", i, "exp(log_scale) must be finite and positive"});
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double norm2 = 0;
    for (int k = 0; k < 4; ++k) norm2 += scene.rotation_params[4 * i + k] * scene.rotation_params[4 * i + k];
    if (!(norm2 > 0.0) || !std::isfinite(norm2)) {
      if (std::none_of(out.begin(), out.end(),
                       [](const Violation& v) { return v.field == "rotation_params"; }))
        out.push_back({"rotation_params", i, "quaternion has zero norm"});
      break;
    }
  }
  return out;
}

std::array<double, 4> normalized_rotation(const GaussianScene& scene, std::size_t index) {
  if (index >= scene.count) throw DimensionError("rotation index out of range");
  auto q = scene.rotation(index);
  double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateError("degenerate rotation at index " + std::to_string(index));
  }
  return {q[0] / norm, q[1] / norm, q[2] / norm, q[3] / norm};
}

GaussianScene select_rows(const GaussianScene& scene, std::span<const std::size_t> keep) {
  GaussianScene out;
  out.count = keep.size();
  out.max_sh_degree = scene.max_sh_degree;
  auto gather = [&](const std::vector<double>& src, std::vector<double>& dst, std::size_t width) {
    dst.resize(keep.size() * width);
    for (std::size_t r = 0; r < keep.size(); ++r)
      std::copy_n(src.begin() + keep[r] * width, width, dst.begin() + r * width);
  };
  gather(scene.positions, out.positions, 3);
  gather(scene.rotation_params, out.rotation_params, 4);
  gather(scene.log_scales, out.log_scales, 3);
  gather(scene.opacity_logits, out.opacity_logits, 1);
  gather(scene.sh_dc, out.sh_dc, 3);
  gather(scene.sh_rest, out.sh_rest, kShRestWidth);
  gather(scene.mask_logits, out.mask_logits, 1);
  return out;
}

}  // namespace spwz
