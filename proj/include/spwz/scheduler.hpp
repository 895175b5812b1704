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

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "spwz/config.hpp"
#include "spwz/finetune.hpp"
#include "spwz/rasterizer.hpp"
#include "spwz/rng.hpp"
#include "spwz/scene.hpp"

namespace spwz {

class ScheduleError : public Error {
 public:
  using Error::Error;
};

// Iteration set with Python range semantics (start inclusive, stop exclusive),
// an explicit sorted set, or a single iteration.
class SchedulePlan {
 public:
  static SchedulePlan range(std::int64_t stop) { return range(0, stop, 1); }
  static SchedulePlan range(std::int64_t start, std::int64_t stop, std::int64_t step = 1);
  static SchedulePlan at(std::int64_t iteration);
  static SchedulePlan set(std::vector<std::int64_t> iterations);

  bool contains(std::int64_t iteration) const;
  // Every member below `limit`, ascending.
  std::vector<std::int64_t> members(std::int64_t limit) const;
  std::string describe() const;

 private:
  struct Range {
    std::int64_t start, stop, step;
  };
  std::variant<Range, std::vector<std::int64_t>> form_;
};

inline bool plan_contains(const SchedulePlan& plan, std::int64_t iteration) { return plan.contains(iteration); }

enum class Stage { pre, post };

enum class Role : unsigned {
  iteration = 1u << 0,
  scene = 1u << 1,
  optimizer = 1u << 2,
  render_output = 1u << 3,
  loss = 1u << 4,
  config = 1u << 5,
  rng = 1u << 6,
};

using RoleSet = unsigned;
inline constexpr RoleSet roles() { return 0; }
template <typename... R>
constexpr RoleSet roles(Role first, R... rest) {
  return unsigned(first) | roles(rest...);
}

// View of the pipeline state handed to a task. Only the roles the task
// declared are populated; everything else is null.
struct TaskContext {
  const std::int64_t* iteration = nullptr;
  const GaussianScene* scene = nullptr;
  OptimizerState* optimizer = nullptr;
  const RenderOutput* render_output = nullptr;
  const double* loss = nullptr;
  Config* config = nullptr;
  SplitMix64* rng = nullptr;
};

// State transitions a task may request; applied by the driver.
struct ReplaceScene {
  GaussianScene scene;
};
struct ReplaceParams {
  std::string field;  // "sh_dc", "sh_rest", "opacity_logits", "mask_logits"
  std::vector<double> values;
};
using Mutation = std::variant<std::monostate, ReplaceScene, ReplaceParams>;

struct Task {
  std::string name;
  Stage stage = Stage::pre;
  RoleSet roles = 0;
  std::function<Mutation(TaskContext&)> fn;
};

struct Event {
  std::int64_t iteration;
  std::string stage;  // "pre", "render", "loss", "post", "optimizer"
  std::string task;

  bool operator==(const Event&) const = default;
};

class TaskFailure : public Error {
 public:
  TaskFailure(std::int64_t iteration, std::string task, const std::string& what)
      : Error("task '" + task + "' failed at iteration " + std::to_string(iteration) + ": " + what),
        iteration_(iteration),
        task_(std::move(task)) {}
  std::int64_t iteration() const { return iteration_; }
  const std::string& task() const { return task_; }

 private:
  std::int64_t iteration_;
  std::string task_;
};

class Scheduler {
 public:
  // Throws ScheduleError when a pre-stage task declares render_output.
  int register_task(SchedulePlan plan, Task task);

  struct Entry {
    int id;
    SchedulePlan plan;
    Task task;
  };
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

// Stage bodies supplied by the model being trained.
struct PipelineHooks {
  std::function<RenderOutput(const GaussianScene&, std::int64_t iteration, SplitMix64&)> render;
  std::function<double(const GaussianScene&, const RenderOutput&, std::int64_t iteration)> loss;
  std::function<void(GaussianScene&, OptimizerState&, const RenderOutput&, const Config&, std::int64_t iteration)>
      optimize;
};

struct PipelineResult {
  GaussianScene scene;
  std::vector<Event> events;
  Config config;
};

// Runs pre-tasks, render, loss, post-tasks, optimizer for every iteration in
// [0, total_iterations).
PipelineResult run_pipeline(GaussianScene scene, std::int64_t total_iterations, const Scheduler& scheduler,
                            const PipelineHooks& hooks, Config config = {}, std::uint64_t seed = 0);

// Plan file, one task per line: `stage task_name plan` where plan is
// range(stop), range(start, stop[, step]), `start stop step`, a single
// iteration, or @i,j,... Underscores in task names read as spaces.
struct PlanLine {
  Stage stage;
  std::string task;
  SchedulePlan plan;
};
std::vector<PlanLine> parse_plan_file(const std::string& text);

std::string events_to_csv(std::span<const Event> events);

// Built-in task bodies.
// Multiplies config["lr_scale"] by exp(log(final_ratio) / total) every call.
Task make_lr_decay_task(double final_ratio, std::int64_t total_iterations);
// Hessian-importance pruning of the bottom `fraction` against `cameras`.
Task make_prune_task(std::vector<Camera> cameras, double fraction);
// Writes the hessian scores sum into config["importance_total"].
Task make_importance_task(std::vector<Camera> cameras);
// Distillation-guided SH mask fine-tuning of the current scene against `teacher`.
Task make_mask_finetune_task(GaussianScene teacher, std::vector<Camera> cameras, FinetuneConfig cfg);

}  // namespace spwz
