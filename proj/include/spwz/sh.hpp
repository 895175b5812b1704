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

namespace spwz::sh {

inline constexpr double kC0 = 0.28209479177387814;
inline constexpr double kC1 = 0.4886025119029199;
inline constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                                  -1.0925484305920792, 0.5462742152960396};
inline constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                                  0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                                  -0.5900435899266435};

// Real SH basis (3DGS sign convention) at unit direction d. Entry 0 is the DC
// term; entry k+1 multiplies rest coefficient k of a channel.
inline std::array<double, 16> basis(double x, double y, double z) {
  const double xx = x * x, yy = y * y, zz = z * z;
  const double xy = x * y, yz = y * z, xz = x * z;
  return {kC0,
          -kC1 * y,
          kC1 * z,
          -kC1 * x,
          kC2[0] * xy,
          kC2[1] * yz,
          kC2[2] * (2.0 * zz - xx - yy),
          kC2[3] * xz,
          kC2[4] * (xx - yy),
          kC3[0] * y * (3.0 * xx - yy),
          kC3[1] * xy * z,
          kC3[2] * y * (4.0 * zz - xx - yy),
          kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy),
          kC3[4] * x * (4.0 * zz - xx - yy),
          kC3[5] * z * (xx - yy),
          kC3[6] * x * (xx - 3.0 * yy)};
}

// Rest coefficients per channel used at a given degree: 0, 3, 8 or 15.
constexpr int rest_count(int degree) { return degree <= 0 ? 0 : (degree + 1) * (degree + 1) - 1; }

}  // namespace spwz::sh
