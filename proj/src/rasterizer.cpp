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
#include "spwz/rasterizer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>

#include "spwz/parallel.hpp"
#include "spwz/sh.hpp"

namespace spwz {

namespace {

struct ProjectionDetail {
  SplatProjection proj;
  std::array<double, 16> basis{};
  bool deg3_on = false;
};

ProjectionDetail project_detail(const GaussianScene& scene, const Camera& cam, std::size_t i,
                                const RenderOptions& opt) {
  ProjectionDetail out;
  SplatProjection& p = out.proj;
  const auto pos = scene.position(i);
  const auto& W = cam.rotation;
  const double tx = W[0] * pos[0] + W[1] * pos[1] + W[2] * pos[2] + cam.translation[0];
  const double ty = W[3] * pos[0] + W[4] * pos[1] + W[5] * pos[2] + cam.translation[1];
  const double tz = W[6] * pos[0] + W[7] * pos[1] + W[8] * pos[2] + cam.translation[2];
  p.depth = tz;
  p.opacity = scene.opacity(i);
  p.visible = tz > kNearPlane;
  if (!p.visible) return out;

  p.mu2d = {cam.fx * tx / tz + cam.cx, cam.fy * ty / tz + cam.cy};

  const auto q = normalized_rotation(scene, i);
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Eigen::Matrix3d R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),  //
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),   //
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  const auto ls = scene.log_scale(i);
  Eigen::Vector3d var(std::exp(2 * ls[0]), std::exp(2 * ls[1]), std::exp(2 * ls[2]));
  const Eigen::Matrix3d sigma = R * var.asDiagonal() * R.transpose();

  Eigen::Matrix3d Wm;
  Wm << W[0], W[1], W[2], W[3], W[4], W[5], W[6], W[7], W[8];
  Eigen::Matrix<double, 2, 3> J;
  J << cam.fx / tz, 0, -cam.fx * tx / (tz * tz), 0, cam.fy / tz, -cam.fy * ty / (tz * tz);
  const Eigen::Matrix<double, 2, 3> T = J * Wm;
  const Eigen::Matrix2d cov = T * sigma * T.transpose();
  p.cov2d = {cov(0, 0) + kCovDilation, 0.5 * (cov(0, 1) + cov(1, 0)), cov(1, 1) + kCovDilation};

  const auto cc = cam.center();
  double dx = pos[0] - cc[0], dy = pos[1] - cc[1], dz = pos[2] - cc[2];
  const double dn = std::sqrt(dx * dx + dy * dy + dz * dz);
  if (dn > 0) {
    dx /= dn;
    dy /= dn;
    dz /= dn;
  }
  out.basis = sh::basis(dx, dy, dz);
  const int degree = scene.max_sh_degree;
  const int used = sh::rest_count(degree);
  out.deg3_on = degree >= 3 && (!opt.use_mask || mask_active(scene.mask_logits[i], opt.mask_threshold));
  const auto dc = scene.dc(i);
  const auto rest = scene.rest(i);
  for (int c = 0; c < 3; ++c) {
    double v = out.basis[0] * dc[c];
    const int limit = out.deg3_on ? used : std::min(used, kDeg3Begin);
    for (int k = 0; k < limit; ++k) v += out.basis[k + 1] * rest[kShRestPerChannel * c + k];
    p.color[c] = v + 0.5;
  }
  return out;
}

struct Prepared {
  std::size_t row = 0;
  ProjectionDetail det;
  std::array<double, 3> conic{};  // inverse covariance (xx, xy, yy)
  std::array<double, 3> color{};  // clamped at zero
  int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

struct Frame {
  std::vector<Prepared> splats;               // depth-sorted
  std::vector<std::vector<std::uint32_t>> tiles;  // indices into splats, ascending
  int tiles_x = 0, tiles_y = 0;
};

std::uint64_t position_key(const GaussianScene& s, std::size_t i) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  unsigned char bytes[24];
  std::memcpy(bytes, &s.positions[3 * i], 24);
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Lexicographic order over the bit patterns of every parameter of a row; only
// consulted when depth and position key tie.
bool row_bits_less(const GaussianScene& s, std::size_t a, std::size_t b) {
  auto cmp = [](const std::vector<double>& v, std::size_t w, std::size_t a, std::size_t b) {
    for (std::size_t k = 0; k < w; ++k) {
      auto x = std::bit_cast<std::uint64_t>(v[a * w + k]);
      auto y = std::bit_cast<std::uint64_t>(v[b * w + k]);
      if (x != y) return x < y ? -1 : 1;
    }
    return 0;
  };
  const std::pair<const std::vector<double>*, std::size_t> fields[] = {
      {&s.positions, 3}, {&s.rotation_params, 4}, {&s.log_scales, 3},  {&s.opacity_logits, 1},
      {&s.sh_dc, 3},     {&s.sh_rest, kShRestWidth}, {&s.mask_logits, 1}};
  for (auto [v, w] : fields) {
    int c = cmp(*v, w, a, b);
    if (c != 0) return c < 0;
  }
  return false;
}

Frame prepare(const GaussianScene& scene, const Camera& cam, const RenderOptions& opt) {
  Frame f;
  f.tiles_x = (cam.width + kTileSize - 1) / kTileSize;
  f.tiles_y = (cam.height + kTileSize - 1) / kTileSize;
  f.tiles.resize(std::size_t(f.tiles_x) * f.tiles_y);

  std::vector<Prepared> all(scene.count);
  std::vector<char> keep(scene.count, 0);
  parallel_for(scene.count, [&](std::size_t i) {
    Prepared& p = all[i];
    p.row = i;
    p.det = project_detail(scene, cam, i, opt);
    const SplatProjection& sp = p.det.proj;
    if (!sp.visible) return;
    const double a = sp.cov2d[0], b = sp.cov2d[1], c = sp.cov2d[2];
    const double det = a * c - b * b;
    if (!(det > 0)) return;
    p.conic = {c / det, -b / det, a / det};
    for (int k = 0; k < 3; ++k) p.color[k] = std::max(0.0, sp.color[k]);
    // Outside Mahalanobis radius D, alpha < 1/255 and the splat is skipped
    // anyway, so this culling never changes the image.
    const double level = 2.0 * std::log(255.0 * sp.opacity);
    if (level <= 0) return;
    if (!(std::isfinite(sp.mu2d[0]) && std::isfinite(sp.mu2d[1]))) return;
    if (std::abs(sp.mu2d[0]) > 1e9 || std::abs(sp.mu2d[1]) > 1e9) return;
    const double d = std::sqrt(std::max(9.0, level)) * (1.0 + 1e-9) + 1e-9;
    const double hx = d * std::sqrt(a), hy = d * std::sqrt(c);
    p.x0 = std::max(0, int(std::ceil(sp.mu2d[0] - hx)));
    p.x1 = std::min(cam.width - 1, int(std::floor(sp.mu2d[0] + hx)));
    p.y0 = std::max(0, int(std::ceil(sp.mu2d[1] - hy)));
    p.y1 = std::min(cam.height - 1, int(std::floor(sp.mu2d[1] + hy)));
    keep[i] = p.x0 <= p.x1 && p.y0 <= p.y1;
  });

  std::vector<std::size_t> order;
  std::vector<std::uint64_t> keys(scene.count, 0);
  for (std::size_t i = 0; i < scene.count; ++i) {
    if (keep[i]) {
      order.push_back(i);
      keys[i] = position_key(scene, i);
    }
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double da = all[a].det.proj.depth, db = all[b].det.proj.depth;
    if (da != db) return da < db;
    if (keys[a] != keys[b]) return keys[a] < keys[b];
    return row_bits_less(scene, a, b);
  });

  f.splats.reserve(order.size());
  for (std::size_t i : order) f.splats.push_back(std::move(all[i]));
  for (std::uint32_t s = 0; s < f.splats.size(); ++s) {
    const Prepared& p = f.splats[s];
    for (int ty = p.y0 / kTileSize; ty <= p.y1 / kTileSize; ++ty)
      for (int tx = p.x0 / kTileSize; tx <= p.x1 / kTileSize; ++tx) f.tiles[std::size_t(ty) * f.tiles_x + tx].push_back(s);
  }
  return f;
}

struct Contributor {
  std::uint32_t local;  // position within the tile list
  double alpha, T, g;
  bool clamped;
};

// Front-to-back compositing of one pixel. Invokes on_hit for every splat that
// contributes; returns final transmittance.
template <typename OnHit>
double composite_pixel(const Frame& f, const std::vector<std::uint32_t>& list, int x, int y, OnHit&& on_hit) {
  double T = 1.0;
  for (std::uint32_t local = 0; local < list.size(); ++local) {
    const Prepared& p = f.splats[list[local]];
    if (x < p.x0 || x > p.x1 || y < p.y0 || y > p.y1) continue;
    const double dx = x - p.det.proj.mu2d[0], dy = y - p.det.proj.mu2d[1];
    const double power = -0.5 * (p.conic[0] * dx * dx + 2.0 * p.conic[1] * dx * dy + p.conic[2] * dy * dy);
    const double g = std::exp(power);
    const double raw = p.det.proj.opacity * g;
    const double alpha = std::min(kAlphaMax, raw);
    if (alpha < kAlphaMin) continue;
    const double next_T = T * (1.0 - alpha);
    if (next_T < kTransmittanceStop) break;
    on_hit(Contributor{local, alpha, T, g, raw >= kAlphaMax});
    T = next_T;
  }
  return T;
}

RenderOutput run(const GaussianScene& scene, const Camera& cam, const RenderOptions& opt,
                 std::span<const double> loss_grad, bool backward) {
  const Frame f = prepare(scene, cam, opt);
  const int W = cam.width, H = cam.height;
  RenderOutput out;
  out.color = ImageRGB(W, H, 0.0);
  out.transmittance.assign(std::size_t(W) * H, 1.0);
  if (opt.want_depth) out.depth.assign(std::size_t(W) * H, 0.0);

  // Per-tile partials, merged in tile order for determinism.
  constexpr int kFwdWidth = 1;                // blend weight
  constexpr int kBwdWidth = 5;                // d_color[3], d_opacity, g_sq
  const bool want_blend = opt.want_blend_weights;
  std::vector<std::vector<double>> partial(f.tiles.size());

  parallel_for(f.tiles.size(), [&](std::size_t t) {
    const auto& list = f.tiles[t];
    const int tx = int(t % f.tiles_x), ty = int(t / f.tiles_x);
    const int width = (backward ? kBwdWidth : 0) + (want_blend ? kFwdWidth : 0);
    std::vector<double>& acc = partial[t];
    acc.assign(list.size() * std::size_t(width), 0.0);
    std::vector<Contributor> hits;
    for (int y = ty * kTileSize; y < std::min(H, (ty + 1) * kTileSize); ++y) {
      for (int x = tx * kTileSize; x < std::min(W, (tx + 1) * kTileSize); ++x) {
        hits.clear();
        double C[3] = {0, 0, 0}, D = 0;
        const double T_final = composite_pixel(f, list, x, y, [&](const Contributor& h) {
          const Prepared& p = f.splats[list[h.local]];
          const double w = h.alpha * h.T;
          for (int c = 0; c < 3; ++c) C[c] += p.color[c] * w;
          D += p.det.proj.depth * w;
          if (want_blend) acc[h.local * width + (backward ? kBwdWidth : 0)] += w;
          if (backward) hits.push_back(h);
        });
        const std::size_t pix = std::size_t(y) * W + x;
        for (int c = 0; c < 3; ++c) out.color.data[pix * 3 + c] = C[c];
        out.transmittance[pix] = T_final;
        if (opt.want_depth) out.depth[pix] = D;
        if (!backward) continue;

        const double* lg = loss_grad.data() + pix * 3;
        double behind[3] = {0, 0, 0};
        for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
          const Prepared& p = f.splats[list[it->local]];
          double* a = &acc[it->local * width];
          double dL_dalpha = 0, gsq = 0;
          for (int c = 0; c < 3; ++c) {
            const double dC_dalpha = p.color[c] * it->T - behind[c] / (1.0 - it->alpha);
            dL_dalpha += lg[c] * dC_dalpha;
            const double dC_dg = p.det.proj.opacity * dC_dalpha;
            gsq += dC_dg * dC_dg;
            a[c] += lg[c] * it->alpha * it->T;
            behind[c] += p.color[c] * it->alpha * it->T;
          }
          if (!it->clamped) {
            a[3] += dL_dalpha * it->g;
            a[4] += gsq;
          }
        }
      }
    }
  });

  if (want_blend) out.blend_weight.assign(scene.count, 0.0);
  std::vector<double> d_color, d_opacity, g_sq;
  if (backward) {
    d_color.assign(3 * scene.count, 0.0);
    d_opacity.assign(scene.count, 0.0);
    g_sq.assign(scene.count, 0.0);
  }
  for (std::size_t t = 0; t < f.tiles.size(); ++t) {
    const auto& list = f.tiles[t];
    const int width = (backward ? kBwdWidth : 0) + (want_blend ? kFwdWidth : 0);
    for (std::size_t local = 0; local < list.size(); ++local) {
      const std::size_t row = f.splats[list[local]].row;
      const double* a = &partial[t][local * width];
      if (backward) {
        for (int c = 0; c < 3; ++c) d_color[3 * row + c] += a[c];
        d_opacity[row] += a[3];
        g_sq[row] += a[4];
      }
      if (want_blend) out.blend_weight[row] += a[backward ? kBwdWidth : 0];
    }
  }
  if (!backward) return out;

  GradBuffers g;
  g.d_sh_dc.assign(3 * scene.count, 0.0);
  g.d_sh_rest.assign(kShRestWidth * scene.count, 0.0);
  g.d_opacity_logit.assign(scene.count, 0.0);
  g.d_mask_logit.assign(scene.count, 0.0);
  g.g_grad_sq = std::move(g_sq);
  const int used = sh::rest_count(scene.max_sh_degree);
  for (const Prepared& p : f.splats) {
    const std::size_t i = p.row;
    const double o = p.det.proj.opacity;
    g.d_opacity_logit[i] = d_opacity[i] * o * (1.0 - o);
    const auto rest = scene.rest(i);
    double d_mask_value = 0;
    for (int c = 0; c < 3; ++c) {
      const double dcol = p.det.proj.color[c] > 0 ? d_color[3 * i + c] : 0.0;
      g.d_sh_dc[3 * i + c] = dcol * p.det.basis[0];
      for (int k = 0; k < used; ++k) {
        const bool deg3 = k >= kDeg3Begin;
        if (deg3) d_mask_value += dcol * p.det.basis[k + 1] * rest[kShRestPerChannel * c + k];
        if (deg3 && !p.det.deg3_on) continue;
        g.d_sh_rest[kShRestWidth * i + kShRestPerChannel * c + k] = dcol * p.det.basis[k + 1];
      }
    }
    // Straight-through estimator: dM/dm = sigmoid'(m).
    if (opt.use_mask && scene.max_sh_degree >= 3) {
      const double s = sigmoid(scene.mask_logits[i]);
      g.d_mask_logit[i] = d_mask_value * s * (1.0 - s);
    }
  }
  out.grads = std::move(g);
  return out;
}

}  // namespace

SplatProjection project(const GaussianScene& scene, const Camera& camera, std::size_t index,
                        const RenderOptions& options) {
  if (index >= scene.count) throw DimensionError("projection index out of range");
  return project_detail(scene, camera, index, options).proj;
}

double splat_value(const SplatProjection& proj, double px, double py) {
  const double a = proj.cov2d[0], b = proj.cov2d[1], c = proj.cov2d[2];
  const double det = a * c - b * b;
  if (!(det > 0) || !std::isfinite(det)) throw DegenerateError("degenerate splat: 2D covariance is singular");
  const double dx = px - proj.mu2d[0], dy = py - proj.mu2d[1];
  const double q = -0.5 * ((c / det) * dx * dx + 2.0 * (-b / det) * dx * dy + (a / det) * dy * dy);
  return std::exp(q);
}

RenderOutput render(const GaussianScene& scene, const Camera& camera, const RenderOptions& options) {
  return run(scene, camera, options, {}, false);
}

RenderOutput render_backward(const GaussianScene& scene, const Camera& camera, std::span<const double> loss_grad,
                             const RenderOptions& options) {
  if (loss_grad.size() != std::size_t(camera.width) * camera.height * 3) {
    throw DimensionError("loss gradient must be H x W x 3");
  }
  return run(scene, camera, options, loss_grad, true);
}

}  // namespace spwz
