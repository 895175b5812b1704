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
#include "spwz/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spwz/importance.hpp"
#include "spwz/pruning.hpp"

namespace spwz {

SchedulePlan SchedulePlan::range(std::int64_t start, std::int64_t stop, std::int64_t step) {
  if (step < 1) throw ScheduleError("schedule plan step must be >= 1");
  if (start < 0 || stop < 0) throw ScheduleError("schedule plan bounds must be >= 0");
  SchedulePlan p;
  p.form_ = Range{start, stop, step};
  return p;
}

SchedulePlan SchedulePlan::at(std::int64_t iteration) { return set({iteration}); }

SchedulePlan SchedulePlan::set(std::vector<std::int64_t> iterations) {
  std::sort(iterations.begin(), iterations.end());
  iterations.erase(std::unique(iterations.begin(), iterations.end()), iterations.end());
  if (!iterations.empty() && iterations.front() < 0) throw ScheduleError("schedule plan iterations must be >= 0");
  SchedulePlan p;
  p.form_ = std::move(iterations);
  return p;
}

bool SchedulePlan::contains(std::int64_t i) const {
  if (const auto* r = std::get_if<Range>(&form_)) {
    return r->start <= i && i < r->stop && (i - r->start) % r->step == 0;
  }
  const auto& v = std::get<std::vector<std::int64_t>>(form_);
  return std::binary_search(v.begin(), v.end(), i);
}

std::vector<std::int64_t> SchedulePlan::members(std::int64_t limit) const {
  std::vector<std::int64_t> out;
  if (const auto* r = std::get_if<Range>(&form_)) {
    for (std::int64_t i = r->start; i < std::min(r->stop, limit); i += r->step) out.push_back(i);
    return out;
  }
  for (std::int64_t i : std::get<std::vector<std::int64_t>>(form_))
    if (i < limit) out.push_back(i);
  return out;
}

std::string SchedulePlan::describe() const {
  std::ostringstream os;
  if (const auto* r = std::get_if<Range>(&form_)) {
    os << "range(" << r->start << ", " << r->stop << ", " << r->step << ")";
  } else {
    const auto& v = std::get<std::vector<std::int64_t>>(form_);
    os << "{";
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
    os << "}";
  }
  return os.str();
}

int Scheduler::register_task(SchedulePlan plan, Task task) {
  if (task.stage == Stage::pre && (task.roles & unsigned(Role::render_output))) {
    throw ScheduleError("task '" + task.name + "' needs render_output and must be registered in the post stage");
  }
  if (!task.fn) throw ScheduleError("task '" + task.name + "' has no body");
  const int id = int(entries_.size());
  entries_.push_back({id, std::move(plan), std::move(task)});
  return id;
}

namespace {

struct PipelineState {
  std::int64_t iteration = 0;
  GaussianScene scene;
  OptimizerState optimizer;
  std::optional<RenderOutput> render_output;
  double loss = 0;
  Config config;
  SplitMix64 rng;
};

void apply(PipelineState& st, Mutation&& m) {
  if (auto* rs = std::get_if<ReplaceScene>(&m)) {
    const bool resized = rs->scene.count != st.scene.count;
    st.scene = std::move(rs->scene);
    if (resized) st.optimizer = {};
  } else if (auto* rp = std::get_if<ReplaceParams>(&m)) {
    std::vector<double>* dst = nullptr;
    if (rp->field == "sh_dc") dst = &st.scene.sh_dc;
    if (rp->field == "sh_rest") dst = &st.scene.sh_rest;
    if (rp->field == "opacity_logits") dst = &st.scene.opacity_logits;
    if (rp->field == "mask_logits") dst = &st.scene.mask_logits;
    if (!dst) throw ScheduleError("unknown parameter field '" + rp->field + "'");
    if (dst->size() != rp->values.size()) throw ScheduleError("replacement for '" + rp->field + "' has wrong size");
    *dst = std::move(rp->values);
  }
}

void dispatch(PipelineState& st, const Scheduler::Entry& e, Stage stage, std::vector<Event>& log) {
  TaskContext ctx;
  const RoleSet r = e.task.roles;
  if (r & unsigned(Role::iteration)) ctx.iteration = &st.iteration;
  if (r & unsigned(Role::scene)) ctx.scene = &st.scene;
  if (r & unsigned(Role::optimizer)) ctx.optimizer = &st.optimizer;
  if ((r & unsigned(Role::render_output)) && stage == Stage::post && st.render_output)
    ctx.render_output = &*st.render_output;
  if (r & unsigned(Role::loss)) ctx.loss = &st.loss;
  if (r & unsigned(Role::config)) ctx.config = &st.config;
  if (r & unsigned(Role::rng)) ctx.rng = &st.rng;
  log.push_back({st.iteration, stage == Stage::pre ? "pre" : "post", e.task.name});
  try {
    apply(st, e.task.fn(ctx));
  } catch (const TaskFailure&) {
    throw;
  } catch (const std::exception& ex) {
    throw TaskFailure(st.iteration, e.task.name, ex.what());
  }
}

}  // namespace

PipelineResult run_pipeline(GaussianScene scene, std::int64_t total_iterations, const Scheduler& scheduler,
                            const PipelineHooks& hooks, Config config, std::uint64_t seed) {
  if (total_iterations < 0) throw ScheduleError("total_iterations must be >= 0");
  PipelineState st;
  st.scene = std::move(scene);
  st.config = std::move(config);
  st.rng = SplitMix64(seed);
  std::vector<Event> log;

  for (std::int64_t it = 0; it < total_iterations; ++it) {
    st.iteration = it;
    st.render_output.reset();
    for (const auto& e : scheduler.entries())
      if (e.task.stage == Stage::pre && e.plan.contains(it)) dispatch(st, e, Stage::pre, log);

    st.render_output = hooks.render ? hooks.render(st.scene, it, st.rng) : RenderOutput{};
    log.push_back({it, "render", ""});
    st.loss = hooks.loss ? hooks.loss(st.scene, *st.render_output, it) : 0.0;
    log.push_back({it, "loss", ""});

    for (const auto& e : scheduler.entries())
      if (e.task.stage == Stage::post && e.plan.contains(it)) dispatch(st, e, Stage::post, log);

    if (hooks.optimize) hooks.optimize(st.scene, st.optimizer, *st.render_output, st.config, it);
    log.push_back({it, "optimizer", ""});
  }
  return {std::move(st.scene), std::move(log), std::move(st.config)};
}

namespace {

std::vector<std::int64_t> parse_ints(const std::string& text, char sep, const std::string& where) {
  std::vector<std::int64_t> out;
  std::istringstream items(text);
  for (std::string tok; std::getline(items, tok, sep);) {
    std::size_t used = 0;
    try {
      out.push_back(std::stoll(tok, &used));
    } catch (const std::exception&) {
      throw ScheduleError(where + ": malformed number '" + tok + "'");
    }
    if (used != tok.size()) throw ScheduleError(where + ": malformed number '" + tok + "'");
  }
  return out;
}

}  // namespace

std::vector<PlanLine> parse_plan_file(const std::string& text) {
  std::vector<PlanLine> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string stage, name;
    if (!(ls >> stage)) continue;
    ls >> name;
    std::string plan_text, tok;
    while (ls >> tok) plan_text += (plan_text.empty() ? "" : " ") + tok;
    const std::string where = "plan line " + std::to_string(line_no);
    if (stage != "pre" && stage != "post") throw ScheduleError(where + ": stage must be 'pre' or 'post'");
    if (name.empty() || plan_text.empty()) throw ScheduleError(where + ": expected 'stage task plan'");
    std::replace(name.begin(), name.end(), '_', ' ');
    PlanLine pl{stage == "pre" ? Stage::pre : Stage::post, name, SchedulePlan::at(0)};

    try {
      if (plan_text.rfind("range(", 0) == 0) {
        if (plan_text.back() != ')') throw ScheduleError(where + ": unterminated range(");
        std::string args = plan_text.substr(6, plan_text.size() - 7);
        args.erase(std::remove(args.begin(), args.end(), ' '), args.end());
        const auto v = parse_ints(args, ',', where);
        if (v.size() == 1) pl.plan = SchedulePlan::range(v[0]);
        else if (v.size() == 2) pl.plan = SchedulePlan::range(v[0], v[1]);
        else if (v.size() == 3) pl.plan = SchedulePlan::range(v[0], v[1], v[2]);
        else throw ScheduleError(where + ": range takes 1 to 3 arguments");
      } else if (plan_text[0] == '@') {
        pl.plan = SchedulePlan::set(parse_ints(plan_text.substr(1), ',', where));
      } else {
        const auto v = parse_ints(plan_text, ' ', where);
        if (v.size() == 1) pl.plan = SchedulePlan::at(v[0]);
        else if (v.size() == 3) pl.plan = SchedulePlan::range(v[0], v[1], v[2]);
        else throw ScheduleError(where + ": expected an iteration, 'start stop step', @set or range(...)");
      }
    } catch (const ScheduleError& e) {
      if (std::string(e.what()).rfind(where, 0) == 0) throw;
      throw ScheduleError(where + ": " + e.what());
    }
    out.push_back(std::move(pl));
  }
  return out;
}

std::string events_to_csv(std::span<const Event> events) {
  std::string out = "iteration,stage,task\n";
  for (const auto& e : events) out += std::to_string(e.iteration) + "," + e.stage + "," + e.task + "\n";
  return out;
}

Task make_lr_decay_task(double final_ratio, std::int64_t total_iterations) {
  if (!(final_ratio > 0) || total_iterations <= 0) throw ScheduleError("lr decay: invalid parameters");
  const double factor = std::exp(std::log(final_ratio) / double(total_iterations));
  return {"update lr", Stage::pre, roles(Role::config), [factor](TaskContext& ctx) -> Mutation {
            config_set(*ctx.config, "lr_scale", config_double(*ctx.config, "lr_scale", 1.0) * factor);
            return {};
          }};
}

Task make_prune_task(std::vector<Camera> cameras, double fraction) {
  return {"prune", Stage::post, roles(Role::scene),
          [cameras = std::move(cameras), fraction](TaskContext& ctx) -> Mutation {
            const auto scores = score_hessian(*ctx.scene, cameras);
            const auto drop = rank_bottom(scores, fraction);
            return ReplaceScene{prune(*ctx.scene, drop)};
          }};
}

Task make_importance_task(std::vector<Camera> cameras) {
  return {"calculate importance score", Stage::post, roles(Role::scene, Role::config),
          [cameras = std::move(cameras)](TaskContext& ctx) -> Mutation {
            const auto scores = score_hessian(*ctx.scene, cameras);
            double total = 0;
            for (double s : scores.scores) total += s;
            config_set(*ctx.config, "importance_total", total);
            config_set(*ctx.config, "importance_views", double(scores.views_accumulated));
            return {};
          }};
}

Task make_mask_finetune_task(GaussianScene teacher, std::vector<Camera> cameras, FinetuneConfig cfg) {
  return {"mask finetune", Stage::post, roles(Role::scene),
          [teacher = std::move(teacher), cameras = std::move(cameras), cfg](TaskContext& ctx) -> Mutation {
            return ReplaceScene{run_distill_finetune(*ctx.scene, teacher, cameras, cfg).scene};
          }};
}

}  // namespace spwz
