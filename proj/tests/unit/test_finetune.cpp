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

#include "oracle.hpp"
#include "spwz/finetune.hpp"
#include "spwz/pruning.hpp"

using namespace spwz;

TEST_CASE("pseudo poses perturb only the translation") {
  const Camera cam = oracle::test_camera(16, 16);
  SplitMix64 rng(1);
  CHECK(sample_pseudo_pose(cam, 0.0, rng) == cam);
  CHECK_THROWS_AS(sample_pseudo_pose(cam, -1.0, rng), Error);

  SplitMix64 a(5), b(5);
  CHECK(sample_pseudo_pose(cam, 0.3, a) == sample_pseudo_pose(cam, 0.3, b));

  const double sigma = 0.25;
  double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
  const int draws = 100000;
  bool fixed_rotation = true;
  for (int i = 0; i < draws; ++i) {
    const Camera p = sample_pseudo_pose(cam, sigma, rng);
    fixed_rotation = fixed_rotation && p.rotation == cam.rotation && p.fx == cam.fx;
    for (int k = 0; k < 3; ++k) {
      const double d = p.translation[k] - cam.translation[k];
      sum[k] += d;
      sq[k] += d * d;
    }
  }
  CHECK(fixed_rotation);
  for (int k = 0; k < 3; ++k) {
    const double mean = sum[k] / draws;
    const double var = sq[k] / draws - mean * mean;
    CHECK(std::abs(var / (sigma * sigma) - 1) < 0.05);
  }
}

TEST_CASE("distillation loss") {
  SplitMix64 rng(2);
  ImageRGB a(7, 5), b(7, 5);
  for (double& v : a.data) v = rng.uniform();
  for (double& v : b.data) v = rng.uniform();
  CHECK(distill_loss(a, a) == 0);
  ImageRGB up = a;
  for (double& v : up.data) v += 0.1;
  CHECK(distill_loss(up, a) == doctest::Approx(0.03).epsilon(1e-12));
  double naive = 0;
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 7; ++x)
      for (int c = 0; c < 3; ++c) naive += (a.at(x, y, c) - b.at(x, y, c)) * (a.at(x, y, c) - b.at(x, y, c));
  CHECK(std::abs(distill_loss(a, b) - naive / 35) < 1e-12);
  CHECK_THROWS_AS(distill_loss(a, ImageRGB(5, 7)), DimensionError);
}

TEST_CASE("mask loss") {
  auto s = GaussianScene::with_count(4);
  s.mask_logits.assign(4, 0.0);
  CHECK(mask_loss(s) == 0.5);
  s.mask_logits.assign(4, -50.0);
  CHECK(mask_loss(s) < 1e-20);
  s.mask_logits = {-1, 0.5, 2, 7};
  double direct = 0;
  for (double m : s.mask_logits) direct += 1 / (1 + std::exp(-m));
  CHECK(std::abs(mask_loss(s) - direct / 4) < 1e-15);
  CHECK_THROWS_AS(mask_loss(GaussianScene::with_count(0)), Error);
}

TEST_CASE("total loss reduces to its parts") {
  SplitMix64 rng(3);
  const Camera cam = oracle::test_camera(20, 20);
  const auto s = oracle::random_scene(rng, 5);
  const ImageRGB self = render(s, cam).color;
  ImageRGB other = self;
  for (double& v : other.data) v += rng.uniform(-0.1, 0.1);

  FinetuneConfig cfg;
  cfg.lambda_mask = 0;
  const auto plain = total_loss(s, cam, other, cfg);
  CHECK(plain.total == distill_loss(other, self));

  cfg.lambda_mask = 1;
  const auto same = total_loss(s, cam, self, cfg);
  CHECK(same.total == doctest::Approx(mask_loss(s)).epsilon(1e-15));
  CHECK(same.distill == 0);
}

TEST_CASE("total loss gradients match finite differences") {
  SplitMix64 rng(4);
  const Camera cam = oracle::test_camera(24, 24);
  for (int rep = 0; rep < 4; ++rep) {
    const auto s = oracle::random_scene(rng, 5);
    auto teacher_scene = s;
    for (double& v : teacher_scene.sh_dc) v += rng.uniform(-0.3, 0.3);
    const ImageRGB teacher = render(teacher_scene, cam).color;
    FinetuneConfig cfg;
    cfg.lambda_mask = 0.05;
    const auto ev = total_loss(s, cam, teacher, cfg);

    std::vector<double> lg(ev.student.data.size());
    for (std::size_t k = 0; k < lg.size(); ++k) lg[k] = 2 * (ev.student.data[k] - teacher.data[k]) / (24.0 * 24.0);
    const auto ref = oracle::finite_difference(s, cam, lg);
    for (std::size_t k = 0; k < ref.d_sh_dc.size(); ++k) CHECK(oracle::close(ev.grads.d_sh_dc[k], ref.d_sh_dc[k]));
    for (std::size_t k = 0; k < ref.d_sh_rest.size(); ++k) CHECK(oracle::close(ev.grads.d_sh_rest[k], ref.d_sh_rest[k]));
    for (std::size_t i = 0; i < s.count; ++i) {
      CHECK(oracle::close(ev.grads.d_opacity_logit[i], ref.d_opacity_logit[i]));
      const double sg = sigmoid(s.mask_logits[i]);
      CHECK(oracle::close(ev.grads.d_mask_logit[i], ref.d_mask_logit[i] + cfg.lambda_mask * sg * (1 - sg) / 5.0));
    }
  }
}

TEST_CASE("straight-through mask") {
  // Forward: the mask is exactly binary, so tiny logit changes that stay on
  // one side of the threshold do not change the image.
  SplitMix64 rng(5);
  const Camera cam = oracle::test_camera(20, 20);
  auto s = oracle::random_scene(rng, 4);
  s.mask_logits = {3, 3, -6, -6};
  auto nudged = s;
  nudged.mask_logits = {3.5, 2, -5, -7};
  CHECK(render(s, cam).color == render(nudged, cam).color);
  // Backward: the mask gradient carries the logistic slope.
  const std::vector<double> lg(20 * 20 * 3, 1.0);
  const auto g = *render_backward(s, cam, lg).grads;
  const auto ref = oracle::finite_difference(s, cam, lg);
  for (std::size_t i = 0; i < 4; ++i) CHECK(oracle::close(g.d_mask_logit[i], ref.d_mask_logit[i]));
}

TEST_CASE("adam") {
  std::vector<double> x = {1.0, -2.0};
  const std::vector<double> zero = {0.0, 0.0};
  OptimizerState st;
  const ParamGroup g0[] = {{x, zero, 0.1}};
  optimizer_step(g0, st);
  CHECK(x == std::vector<double>{1.0, -2.0});
  CHECK(st.step == 1);

  auto descend = [] {
    std::vector<double> v = {1.0};
    std::vector<double> grad(1);
    OptimizerState s;
    for (int i = 0; i < 200; ++i) {
      grad[0] = 2 * v[0];
      const ParamGroup g[] = {{v, grad, 0.1}};
      optimizer_step(g, s);
    }
    return v[0];
  };
  const double end = descend();
  CHECK(std::abs(end) < 1e-2);
  CHECK(end == descend());

  std::vector<double> wrong = {0.0};
  const ParamGroup bad[] = {{x, wrong, 0.1}};
  CHECK_THROWS_AS(optimizer_step(bad, st), DimensionError);
  std::vector<double> y = {0.0};
  const ParamGroup shape[] = {{y, wrong, 0.1}};
  CHECK_THROWS_AS(optimizer_step(shape, st), DimensionError);
}

TEST_CASE("fine-tuning touches appearance only") {
  SplitMix64 rng(6);
  std::vector<Camera> cams = {oracle::test_camera(24, 24)};
  Camera side = cams[0];
  side.translation = {0.2, 0, 3};
  cams.push_back(side);
  const auto teacher = oracle::random_scene(rng, 30);
  auto student = teacher;
  for (double& m : student.mask_logits) m = 8;

  FinetuneConfig cfg;
  cfg.iterations = 0;
  CHECK(run_distill_finetune(student, teacher, cams, cfg).scene == student);

  cfg.iterations = 101;
  cfg.lambda_mask = 0.05;
  const auto res = run_distill_finetune(student, teacher, cams, cfg);
  CHECK(res.scene.positions == student.positions);
  CHECK(res.scene.rotation_params == student.rotation_params);
  CHECK(res.scene.log_scales == student.log_scales);
  CHECK(res.scene.sh_dc != student.sh_dc);
  REQUIRE(res.log.size() == 101);
  CHECK(res.log[100].mask_loss < res.log[0].mask_loss);
  CHECK(finetune_log_csv(res.log).rfind("iter,loss,distill,mask_loss,masked_fraction\n", 0) == 0);

  const auto again = run_distill_finetune(student, teacher, cams, cfg);
  CHECK(again.scene == res.scene);
}
