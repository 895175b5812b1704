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
#include "spwz/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace spwz {

namespace {

void require_same(const ImageRGB& a, const ImageRGB& b, const char* who) {
  if (a.width != b.width || a.height != b.height || a.data.size() != b.data.size())
    throw DimensionError(std::string(who) + ": image dimensions differ");
}

}  // namespace

double psnr(const ImageRGB& a, const ImageRGB& b) {
  require_same(a, b, "psnr");
  if (a.data.empty()) throw DimensionError("psnr: empty image");
  double sum = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  const double mse = sum / double(a.data.size());
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

std::string format_psnr(double db) {
  if (std::isinf(db) && db > 0) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", db);
  return buf;
}

std::array<double, kSsimWindow> ssim_window() {
  std::array<double, kSsimWindow> w{};
  double sum = 0;
  for (int k = 0; k < kSsimWindow; ++k) {
    const double x = k - kSsimWindow / 2;
    w[k] = std::exp(-x * x / (2 * kSsimSigma * kSsimSigma));
    sum += w[k];
  }
  for (double& v : w) v /= sum;
  return w;
}

std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

namespace {

// Separable window filter with mirrored borders; output has the input size.
std::vector<double> blur(const std::vector<double>& img, int w, int h) {
  const auto taps = ssim_window();
  constexpr int r = kSsimWindow / 2;
  std::vector<double> tmp(img.size()), out(img.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * img[std::size_t(y) * w + reflect_index(x + k - r, w)];
      tmp[std::size_t(y) * w + x] = s;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0;
      for (int k = 0; k < kSsimWindow; ++k) s += taps[k] * tmp[std::size_t(reflect_index(y + k - r, h)) * w + x];
      out[std::size_t(y) * w + x] = s;
    }
  return out;
}

}  // namespace

double ssim(const ImageRGB& a, const ImageRGB& b) {
  require_same(a, b, "ssim");
  if (a.width < kSsimWindow || a.height < kSsimWindow) throw DimensionError("ssim: images must be at least 11x11");
  const int w = a.width, h = a.height;
  const std::size_t px = std::size_t(w) * h;
  double total = 0;
  for (int c = 0; c < 3; ++c) {
    std::vector<double> x(px), y(px), xx(px), yy(px), xy(px);
    for (std::size_t i = 0; i < px; ++i) {
      x[i] = a.data[3 * i + c];
      y[i] = b.data[3 * i + c];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = blur(x, w, h), my = blur(y, w, h);
    const auto sxx = blur(xx, w, h), syy = blur(yy, w, h), sxy = blur(xy, w, h);
    double sum = 0;
    for (std::size_t i = 0; i < px; ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cxy = sxy[i] - mx[i] * my[i];
      sum += ((2 * mx[i] * my[i] + kSsimC1) * (2 * cxy + kSsimC2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + kSsimC1) * (vx + vy + kSsimC2));
    }
    total += sum / double(px);
  }
  return total / 3.0;
}

KdTree::KdTree(std::span<const Point3> points) : points_(points.begin(), points.end()) {
  std::vector<std::size_t> idx(points_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, idx.size());
}

std::int64_t KdTree::build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi) {
  if (lo >= hi) return -1;
  Point3 mn, mx;
  mn.fill(std::numeric_limits<double>::infinity());
  mx.fill(-std::numeric_limits<double>::infinity());
  for (std::size_t k = lo; k < hi; ++k)
    for (int d = 0; d < 3; ++d) {
      mn[d] = std::min(mn[d], points_[idx[k]][d]);
      mx[d] = std::max(mx[d], points_[idx[k]][d]);
    }
  int axis = 0;
  for (int d = 1; d < 3; ++d)
    if (mx[d] - mn[d] > mx[axis] - mn[axis]) axis = d;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(idx.begin() + std::ptrdiff_t(lo), idx.begin() + std::ptrdiff_t(mid),
                   idx.begin() + std::ptrdiff_t(hi), [&](std::size_t p, std::size_t q) {
                     return points_[p][axis] != points_[q][axis] ? points_[p][axis] < points_[q][axis] : p < q;
                   });
  const std::int64_t self = std::int64_t(nodes_.size());
  nodes_.push_back({idx[mid], axis});
  const std::int64_t left = build(idx, lo, mid);
  const std::int64_t right = build(idx, mid + 1, hi);
  nodes_[self].left = left;
  nodes_[self].right = right;
  return self;
}

void KdTree::search(std::int64_t node, const Point3& q, std::size_t& best, double& best_d2) const {
  if (node < 0) return;
  const Node& nd = nodes_[node];
  const Point3& p = points_[nd.point];
  const double dx = q[0] - p[0], dy = q[1] - p[1], dz = q[2] - p[2];
  const double d2 = dx * dx + dy * dy + dz * dz;
  if (d2 < best_d2 || (d2 == best_d2 && nd.point < best)) {
    best_d2 = d2;
    best = nd.point;
  }
  const double diff = q[nd.axis] - p[nd.axis];
  const std::int64_t near = diff <= 0 ? nd.left : nd.right;
  const std::int64_t far = diff <= 0 ? nd.right : nd.left;
  search(near, q, best, best_d2);
  if (diff * diff <= best_d2) search(far, q, best, best_d2);
}

std::pair<std::size_t, double> KdTree::nearest(const Point3& q) const {
  if (points_.empty()) throw DimensionError("KdTree::nearest: empty point set");
  std::size_t best = points_.size();
  double best_d2 = std::numeric_limits<double>::infinity();
  search(root_, q, best, best_d2);
  return {best, best_d2};
}

double chamfer(std::span<const Point3> a, std::span<const Point3> b) {
  if (a.empty() || b.empty()) throw DimensionError("chamfer: point clouds must be nonempty");
  auto directed = [](std::span<const Point3> from, std::span<const Point3> to) {
    const KdTree tree(to);
    double sum = 0;
    for (const auto& p : from) sum += std::sqrt(tree.nearest(p).second);
    return sum / double(from.size());
  };
  return 0.5 * (directed(a, b) + directed(b, a));
}

std::vector<Point3> scene_points(const GaussianScene& scene) {
  std::vector<Point3> pts(scene.count);
  for (std::size_t i = 0; i < scene.count; ++i) {
    const auto p = scene.position(i);
    pts[i] = {p[0], p[1], p[2]};
  }
  return pts;
}

}  // namespace spwz
