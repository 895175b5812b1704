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
#include <limits>

#include "oracle.hpp"
#include "spwz/metrics.hpp"

using namespace spwz;

namespace {

ImageRGB random_image(SplitMix64& rng, int w, int h) {
  ImageRGB img(w, h);
  for (auto& v : img.data) v = rng.uniform();
  return img;
}

std::vector<Point3> random_cloud(SplitMix64& rng, std::size_t n, double spread) {
  std::vector<Point3> pts(n);
  for (auto& p : pts)
    for (auto& c : p) c = rng.uniform(-spread, spread);
  return pts;
}

}  // namespace

TEST_CASE("psnr") {
  SplitMix64 rng(1);
  const auto a = random_image(rng, 16, 12);
  CHECK(psnr(a, a) == std::numeric_limits<double>::infinity());
  CHECK(format_psnr(psnr(a, a)) == "inf");
  CHECK(format_psnr(20.0) == "20.000000");

  const ImageRGB zero(8, 8, 0.0), tenth(8, 8, 0.1), one(8, 8, 1.0);
  CHECK(psnr(zero, tenth) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(std::abs(psnr(zero, one)) < 1e-12);

  const auto b = random_image(rng, 16, 12);
  CHECK(psnr(a, b) == psnr(b, a));
  CHECK_THROWS_AS(psnr(a, ImageRGB(12, 16)), DimensionError);

  double last = std::numeric_limits<double>::infinity();
  for (double amp : {0.001, 0.01, 0.05, 0.2, 0.5}) {
    ImageRGB noisy = a;
    SplitMix64 n(2);
    for (auto& v : noisy.data) v += amp * n.uniform(-1, 1);
    const double p = psnr(a, noisy);
    CHECK(p < last);
    last = p;
  }
}

TEST_CASE("ssim") {
  SplitMix64 rng(3);
  const auto a = random_image(rng, 20, 20);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  const ImageRGB gray(16, 16, 0.5);
  ImageRGB negative = gray;
  for (auto& v : negative.data) v = 1.0 - v;
  CHECK(ssim(gray, negative) == doctest::Approx(1.0).epsilon(1e-12));

  const auto w = ssim_window();
  double sum = 0;
  for (double t : w) sum += t;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(w[5] > w[4]);
  CHECK(w[0] == doctest::Approx(w[10]).epsilon(1e-15));
  CHECK(reflect_index(-1, 10) == 0);
  CHECK(reflect_index(-2, 10) == 1);
  CHECK(reflect_index(10, 10) == 9);
  CHECK(reflect_index(11, 10) == 8);
  CHECK(reflect_index(4, 10) == 4);

  for (auto [wd, ht] : {std::pair{11, 11}, std::pair{23, 17}, std::pair{40, 12}}) {
    const auto x = random_image(rng, wd, ht);
    auto y = x;
    for (auto& v : y.data) v = std::clamp(v + 0.2 * rng.normal(), 0.0, 1.0);
    CHECK(std::abs(ssim(x, y) - oracle::direct_ssim(x, y)) < 1e-9);
    CHECK(ssim(x, y) == doctest::Approx(ssim(y, x)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ssim(ImageRGB(10, 20), ImageRGB(10, 20)), DimensionError);
  CHECK_THROWS_AS(ssim(ImageRGB(20, 20), ImageRGB(20, 21)), DimensionError);
}

TEST_CASE("chamfer") {
  const std::vector<Point3> o = {{0, 0, 0}}, x = {{1, 0, 0}};
  CHECK(chamfer(o, x) == 1.0);
  CHECK(chamfer(o, o) == 0.0);
  CHECK_THROWS_AS(chamfer(o, std::vector<Point3>{}), Error);
  CHECK_THROWS_AS(chamfer(std::vector<Point3>{}, o), Error);

  SplitMix64 rng(4);
  for (std::size_t n : {1u, 2u, 7u, 50u, 200u, 1000u}) {
    const auto a = random_cloud(rng, n, 1.0);
    const auto b = random_cloud(rng, n / 2 + 1, 0.7);
    CHECK(chamfer(a, a) == 0.0);
    CHECK(std::abs(chamfer(a, b) - oracle::brute_chamfer(a, b)) <= 1e-12);
    CHECK(chamfer(a, b) == doctest::Approx(chamfer(b, a)).epsilon(1e-14));
  }

  // Duplicates and exact ties.
  const std::vector<Point3> grid = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 0, 0}, {0, 0, 0}};
  const KdTree tree(grid);
  CHECK(tree.size() == 5);
  const auto [idx, d2] = tree.nearest({0.5, 0, 0});
  CHECK(idx == 0);
  CHECK(d2 == 0.25);
  CHECK(tree.nearest({1, 0, 0}).first == 1);
}

TEST_CASE("scene points") {
  auto s = GaussianScene::with_count(2);
  s.position(1)[2] = 4;
  const auto pts = scene_points(s);
  REQUIRE(pts.size() == 2);
  CHECK(pts[1] == Point3{0, 0, 4});
}
