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

#include <map>

#include "oracle.hpp"
#include "spwz/scheduler.hpp"

using namespace spwz;

namespace {

Task noop(std::string name, Stage stage, RoleSet r = roles()) {
  return {std::move(name), stage, r, [](TaskContext&) -> Mutation { return {}; }};
}

std::vector<long> fired(const std::vector<Event>& log, const std::string& task) {
  std::vector<long> out;
  for (const auto& e : log)
    if (e.task == task) out.push_back(long(e.iteration));
  return out;
}

}  // namespace

TEST_CASE("plan membership follows Python ranges") {
  const auto reset = SchedulePlan::range(0, 15000, 3000);
  CHECK(reset.members(1 << 30) == std::vector<std::int64_t>{0, 3000, 6000, 9000, 12000});
  CHECK_FALSE(reset.contains(15000));
  CHECK(plan_contains(SchedulePlan::range(30000), 29999));
  CHECK_FALSE(plan_contains(SchedulePlan::range(30000), 30000));
  const auto one = SchedulePlan::at(1);
  CHECK(one.contains(1));
  CHECK_FALSE(one.contains(0));
  CHECK_FALSE(one.contains(2));
  CHECK_THROWS_AS(SchedulePlan::range(0, 10, 0), ScheduleError);
  CHECK_THROWS_AS(SchedulePlan::range(-1, 10, 1), ScheduleError);
  CHECK_THROWS_AS(SchedulePlan::set({-3}), ScheduleError);

  SplitMix64 rng(1);
  for (int rep = 0; rep < 200; ++rep) {
    const long start = long(rng.below(50)), stop = long(rng.below(400)), step = 1 + long(rng.below(30));
    const auto plan = SchedulePlan::range(start, stop, step);
    const auto expect = oracle::python_range(start, stop, step);
    const auto got = plan.members(1000);
    CHECK(std::vector<long>(got.begin(), got.end()) == expect);
    for (long i = 0; i < 420; ++i)
      CHECK(plan.contains(i) == std::binary_search(expect.begin(), expect.end(), i));
  }
}

TEST_CASE("firing counts from the vanilla table") {
  Scheduler s;
  s.register_task(SchedulePlan::range(0, 30000, 1000), noop("increase SH degree", Stage::pre));
  s.register_task(SchedulePlan::range(500, 15000, 100), noop("prune and densify", Stage::post));
  s.register_task(SchedulePlan::at(1), noop("prune", Stage::post));
  const auto res = run_pipeline(GaussianScene::with_count(0), 30000, s, {});
  CHECK(fired(res.events, "increase SH degree").size() == 30);
  const auto pd = fired(res.events, "prune and densify");
  CHECK(pd.size() == 145);
  CHECK(pd.front() == 500);
  CHECK(pd.back() == 14900);
  CHECK(fired(res.events, "prune") == std::vector<long>{1});
}

TEST_CASE("stage order and registration order") {
  Scheduler s;
  s.register_task(SchedulePlan::range(3), noop("b", Stage::post));
  s.register_task(SchedulePlan::range(3), noop("a", Stage::pre));
  s.register_task(SchedulePlan::range(3), noop("c", Stage::post));
  s.register_task(SchedulePlan::at(1), noop("d", Stage::pre));
  const auto res = run_pipeline(GaussianScene::with_count(0), 3, s, {});
  std::vector<std::string> it1;
  for (const auto& e : res.events)
    if (e.iteration == 1) it1.push_back(e.stage + ":" + e.task);
  CHECK(it1 == std::vector<std::string>{"pre:a", "pre:d", "render:", "loss:", "post:b", "post:c", "optimizer:"});

  const auto bare = run_pipeline(GaussianScene::with_count(0), 10, Scheduler{}, {});
  CHECK(bare.events.size() == 30);
  for (std::size_t k = 0; k < bare.events.size(); ++k)
    CHECK(bare.events[k].stage == std::vector<std::string>{"render", "loss", "optimizer"}[k % 3]);

  const auto csv = events_to_csv(bare.events);
  CHECK(csv.rfind("iteration,stage,task\n0,render,\n", 0) == 0);
}

TEST_CASE("role-based dispatch") {
  Scheduler s;
  CHECK_THROWS_AS(s.register_task(SchedulePlan::at(0), noop("peek", Stage::pre, roles(Role::render_output))),
                  ScheduleError);
  CHECK_THROWS_AS(s.register_task(SchedulePlan::at(0), Task{"empty", Stage::pre, 0, nullptr}), ScheduleError);

  std::map<std::string, bool> seen;
  s.register_task(SchedulePlan::range(2), {"pre probe", Stage::pre, roles(Role::scene, Role::loss),
                                           [&](TaskContext& c) -> Mutation {
                                             seen["pre scene"] = c.scene != nullptr;
                                             seen["pre loss"] = c.loss != nullptr;
                                             seen["pre render"] = c.render_output != nullptr;
                                             seen["pre config"] = c.config != nullptr;
                                             return {};
                                           }});
  s.register_task(SchedulePlan::range(2), {"post probe", Stage::post, roles(Role::render_output, Role::iteration),
                                           [&](TaskContext& c) -> Mutation {
                                             seen["post render"] = c.render_output != nullptr;
                                             seen["post iteration"] = c.iteration != nullptr;
                                             seen["post scene"] = c.scene != nullptr;
                                             return {};
                                           }});
  PipelineHooks hooks;
  hooks.render = [](const GaussianScene&, std::int64_t, SplitMix64&) { return RenderOutput{}; };
  run_pipeline(GaussianScene::with_count(1), 2, s, hooks);
  CHECK(seen["pre scene"]);
  CHECK(seen["pre loss"]);
  CHECK_FALSE(seen["pre render"]);
  CHECK_FALSE(seen["pre config"]);
  CHECK(seen["post render"]);
  CHECK(seen["post iteration"]);
  CHECK_FALSE(seen["post scene"]);
}

TEST_CASE("mutations and failures") {
  Scheduler s;
  s.register_task(SchedulePlan::at(2), {"shrink", Stage::post, roles(Role::scene), [](TaskContext& c) -> Mutation {
                                          const std::vector<std::size_t> keep = {0};
                                          return ReplaceScene{select_rows(*c.scene, keep)};
                                        }});
  s.register_task(SchedulePlan::at(3), {"recolor", Stage::pre, roles(), [](TaskContext&) -> Mutation {
                                          return ReplaceParams{"sh_dc", {1, 2, 3}};
                                        }});
  std::vector<long> optimizer_steps;
  PipelineHooks hooks;
  hooks.optimize = [&](GaussianScene&, OptimizerState& st, const RenderOutput&, const Config&, std::int64_t) {
    optimizer_steps.push_back(++st.step);
  };
  const auto res = run_pipeline(GaussianScene::with_count(3), 5, s, hooks);
  CHECK(res.scene.count == 1);
  CHECK(res.scene.sh_dc == std::vector<double>{1, 2, 3});
  // The optimizer state restarts when the row count changes.
  CHECK(optimizer_steps == std::vector<long>{1, 2, 1, 2, 3});

  Scheduler bad;
  bad.register_task(SchedulePlan::at(4), {"explode", Stage::pre, roles(), [](TaskContext&) -> Mutation {
                                            throw std::runtime_error("boom");
                                          }});
  try {
    run_pipeline(GaussianScene::with_count(1), 10, bad, {});
    FAIL("expected TaskFailure");
  } catch (const TaskFailure& e) {
    CHECK(e.iteration() == 4);
    CHECK(e.task() == "explode");
  }
  Scheduler wrong;
  wrong.register_task(SchedulePlan::at(0), {"wrong size", Stage::pre, roles(), [](TaskContext&) -> Mutation {
                                              return ReplaceParams{"opacity_logits", {1, 2}};
                                            }});
  CHECK_THROWS_AS(run_pipeline(GaussianScene::with_count(1), 1, wrong, {}), TaskFailure);
}

TEST_CASE("plan files") {
  const auto lines = parse_plan_file(
      "# comment\n"
      "pre update_lr range(30000)\n"
      "pre increase_SH_degree range(0, 30000, 1000)\n"
      "post prune_and_densify 500 15000 100\n"
      "post prune @1\n"
      "post switch 10001  # trailing comment\n"
      "\n");
  REQUIRE(lines.size() == 5);
  CHECK(lines[0].task == "update lr");
  CHECK(lines[0].stage == Stage::pre);
  CHECK(lines[1].plan.members(30000).size() == 30);
  CHECK(lines[2].plan.members(30000).size() == 145);
  CHECK(lines[3].plan.members(30000) == std::vector<std::int64_t>{1});
  CHECK(lines[4].plan.members(30000) == std::vector<std::int64_t>{10001});

  for (const char* bad : {"mid task 1\n", "pre task\n", "pre task 1 2\n", "pre task range(1,2,3,4)\n",
                          "pre task range(1\n", "pre task @x\n", "pre task 0 10 0\n"}) {
    try {
      parse_plan_file(std::string("# header\n") + bad);
      FAIL("accepted: " << bad);
    } catch (const ScheduleError& e) {
      CHECK(std::string(e.what()).find("plan line 2") != std::string::npos);
    }
  }
}

TEST_CASE("built-in task bodies") {
  Scheduler s;
  s.register_task(SchedulePlan::range(100), make_lr_decay_task(0.01, 100));
  const auto res = run_pipeline(GaussianScene::with_count(0), 100, s, {});
  CHECK(config_double(res.config, "lr_scale", 0) == doctest::Approx(0.01).epsilon(1e-9));

  SplitMix64 rng(2);
  const auto scene = oracle::random_scene(rng, 10);
  const std::vector<Camera> cams = {oracle::test_camera(24, 24)};
  Scheduler p;
  p.register_task(SchedulePlan::at(0), make_importance_task(cams));
  p.register_task(SchedulePlan::at(1), make_prune_task(cams, 0.5));
  const auto pr = run_pipeline(scene, 2, p, {});
  CHECK(pr.scene.count == 5);
  CHECK(config_double(pr.config, "importance_views", 0) == 1);
  CHECK(config_double(pr.config, "importance_total", 0) > 0);

  FinetuneConfig ft;
  ft.iterations = 3;
  Scheduler m;
  m.register_task(SchedulePlan::at(0), make_mask_finetune_task(scene, cams, ft));
  const auto mr = run_pipeline(scene, 1, m, {});
  CHECK(mr.scene.positions == scene.positions);
  CHECK(mr.scene.mask_logits != scene.mask_logits);
}
