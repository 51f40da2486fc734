// Copyright 2026 The crowdpipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <functional>
#include <map>
#include <random>

#include "doctest.h"
#include "crowdpipe/graph/task_graph.hpp"
#include "support.hpp"

using namespace crowdpipe;
using testing::chain_spec;

namespace {

TaskGraph graph(std::uint32_t n, std::uint32_t s, ExecutionMode mode) {
  return TaskGraph::materialize(validate_pipeline_spec(chain_spec(s, n, mode)).spec);
}

Shape out_shape(std::uint32_t k, std::uint32_t s) {
  return k + 1 == s ? Shape{1, 2} : Shape{1, 8, 16};
}

// Stand-in executor: the output records the input it consumed, so a wrong
// routing shows up in the final payload.
PayloadRouting fake_output(const TaskGraph& g, TaskId id) {
  const TaskRecord& t = g.task(id);
  PayloadEnvelope e;
  e.compression = "none";
  e.dtype = "float32";
  e.shape = out_shape(t.stage_index, g.stage_count());
  e.data = (t.input_payload ? t.input_payload->envelope().data : std::string("?")) + ">" +
           std::to_string(t.stage_index);
  return PayloadRouting{e};
}

void seed_inputs(TaskGraph& g) {
  for (std::uint32_t i = 0; i < g.input_count(); ++i) {
    PayloadEnvelope e{"none", "in" + std::to_string(i), "int64", {1, 8}};
    g.set_input(g.id_of(0, i), PayloadRouting{e});
  }
}

std::vector<TaskId> ids(const std::vector<TaskRecord>& ts) {
  std::vector<TaskId> out;
  for (const auto& t : ts) out.push_back(t.task_id);
  return out;
}

void check_counters(const TaskGraph& g) {
  std::size_t complete = 0;
  for (const auto& t : g.tasks()) {
    std::uint32_t open = 0;
    for (TaskId d : t.dependency_ids) open += g.task(d).state != TaskState::kComplete;
    CHECK(t.deps_remaining == open);
    CHECK(t.deps_remaining <= t.dependency_ids.size());
    CHECK((t.state == TaskState::kBlocked) == (t.deps_remaining > 0));
    complete += t.state == TaskState::kComplete;
  }
  std::size_t per_stage = 0;
  for (std::uint32_t k = 0; k < g.stage_count(); ++k) per_stage += g.completed_in_stage(k);
  CHECK(per_stage == complete);
}

}  // namespace

TEST_CASE("streaming N=5 S=3 matches the reference table") {
  auto g = graph(5, 3, ExecutionMode::kStreaming);
  REQUIRE(g.tasks().size() == 15);
  for (TaskId id = 0; id < 15; ++id) {
    const auto& t = g.task(id);
    CHECK(t.task_id == id);
    CHECK(t.stage_index == id / 5);
    CHECK(t.input_index == id % 5);
    if (id < 5) {
      CHECK(t.state == TaskState::kPending);
      CHECK(t.dependency_ids.empty());
      CHECK(t.deps_remaining == 0);
    } else {
      CHECK(t.state == TaskState::kBlocked);
      CHECK(t.dependency_ids == std::vector<TaskId>{id - 5});
      CHECK(t.deps_remaining == 1);
    }
  }
  CHECK(ids(g.pending_tasks()) == std::vector<TaskId>{0, 1, 2, 3, 4});
}

TEST_CASE("single task graph") {
  for (auto mode : {ExecutionMode::kStreaming, ExecutionMode::kBarrier}) {
    auto g = graph(1, 1, mode);
    REQUIRE(g.tasks().size() == 1);
    CHECK(g.task(0).state == TaskState::kPending);
    CHECK(g.task(0).dependency_ids.empty());
  }
}

TEST_CASE("barrier N=3 S=2 wiring and counters") {
  auto g = graph(3, 2, ExecutionMode::kBarrier);
  REQUIRE(g.tasks().size() == 6);
  for (TaskId id : {3u, 4u, 5u}) {
    CHECK(g.task(id).dependency_ids == std::vector<TaskId>{0, 1, 2});
    CHECK(g.task(id).deps_remaining == 3);
  }
  seed_inputs(g);
  CHECK(g.complete_task(0, fake_output(g, 0)).empty());
  for (TaskId id : {3u, 4u, 5u}) CHECK(g.task(id).deps_remaining == 2);
  CHECK(g.complete_task(2, fake_output(g, 2)).empty());
  CHECK(g.complete_task(1, fake_output(g, 1)) == std::vector<TaskId>{3, 4, 5});
  // barrier gates timing; each task still reads its own input's output
  CHECK(g.task(4).input_payload->envelope().data == "in1>0");
}

TEST_CASE("streaming completion unlocks one successor") {
  auto g = graph(5, 3, ExecutionMode::kStreaming);
  seed_inputs(g);
  CHECK(g.complete_task(0, fake_output(g, 0)) == std::vector<TaskId>{5});
  for (TaskId id = 6; id < 10; ++id) CHECK(g.task(id).state == TaskState::kBlocked);
  CHECK(ids(g.pending_tasks()) == std::vector<TaskId>{1, 2, 3, 4, 5});
}

TEST_CASE("completing everything leaves no pending work") {
  auto g = graph(5, 3, ExecutionMode::kStreaming);
  seed_inputs(g);
  for (TaskId id = 0; id < 15; ++id) {
    auto unlocked = g.complete_task(id, fake_output(g, id));
    if (id >= 10) CHECK(unlocked.empty());
  }
  CHECK(g.job_complete());
  CHECK(g.pending_tasks().empty());
}

TEST_CASE("fail keeps the input and counts attempts") {
  auto g = graph(5, 3, ExecutionMode::kStreaming);
  seed_inputs(g);
  g.complete_task(0, fake_output(g, 0));
  g.mark_dispatched(5, "w1");
  const auto payload = g.task(5).input_payload;
  const auto& t = g.fail_task(5);
  CHECK(t.state == TaskState::kPending);
  CHECK(t.attempt_count == 1);
  CHECK(t.input_payload == payload);
  CHECK_FALSE(t.assigned_worker.has_value());
  g.mark_dispatched(5, "w2");
  CHECK(g.fail_task(5).attempt_count == 2);
  CHECK_THROWS_AS(g.fail_task(6), Error);  // blocked
}

TEST_CASE("error cases") {
  auto g = graph(2, 2, ExecutionMode::kStreaming);
  seed_inputs(g);
  CHECK_THROWS_AS(g.complete_task(99, fake_output(g, 0)), Error);
  CHECK_THROWS_AS(g.complete_task(2, fake_output(g, 2)), Error);  // blocked
  CHECK_THROWS_AS(g.mark_dispatched(3, "w"), Error);
  PayloadEnvelope wrong{"none", "x", "float32", {7}};
  try {
    g.complete_task(0, PayloadRouting{wrong});
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kShapeMismatch);
  }
  g.complete_task(0, fake_output(g, 0));
  CHECK_THROWS_AS(g.complete_task(0, fake_output(g, 0)), Error);  // twice
}

TEST_CASE("structure properties over random sizes") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::uint32_t>(1 + rng() % 7);
    const auto s = static_cast<std::uint32_t>(1 + rng() % 5);
    const auto mode = rng() % 2 ? ExecutionMode::kBarrier : ExecutionMode::kStreaming;
    auto g = graph(n, s, mode);
    REQUIRE(g.tasks().size() == n * s);
    for (const auto& t : g.tasks()) {
      if (t.stage_index == 0) {
        CHECK(t.dependency_ids.empty());
      } else if (mode == ExecutionMode::kStreaming) {
        CHECK(t.dependency_ids == std::vector<TaskId>{g.id_of(t.stage_index - 1, t.input_index)});
      } else {
        CHECK(t.dependency_ids.size() == n);
      }
      // reverse edges are the transpose
      for (TaskId d : t.dependency_ids) {
        const auto& rev = g.dependents(d);
        CHECK(std::count(rev.begin(), rev.end(), t.task_id) == 1);
      }
      for (TaskId r : g.dependents(t.task_id)) {
        const auto& deps = g.task(r).dependency_ids;
        CHECK(std::count(deps.begin(), deps.end(), t.task_id) == 1);
      }
    }
  }
}

TEST_CASE("random completion orders keep counters exact and never re-block") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const auto n = static_cast<std::uint32_t>(1 + rng() % 5);
    const auto s = static_cast<std::uint32_t>(1 + rng() % 4);
    const auto mode = trial % 2 ? ExecutionMode::kBarrier : ExecutionMode::kStreaming;
    auto g = graph(n, s, mode);
    seed_inputs(g);
    std::vector<TaskState> before(g.tasks().size());
    while (!g.job_complete()) {
      for (const auto& t : g.tasks()) before[t.task_id] = t.state;
      auto pending = g.pending_tasks();
      REQUIRE_FALSE(pending.empty());
      TaskId pick = pending[rng() % pending.size()].task_id;
      g.complete_task(pick, fake_output(g, pick));
      check_counters(g);
      for (const auto& t : g.tasks()) {
        if (before[t.task_id] == TaskState::kPending) CHECK(t.state != TaskState::kBlocked);
      }
    }
  }
}

// Exhaustive check over every topological completion order for small
// graphs: the sink outputs never depend on the order, and barrier agrees
// with streaming.
TEST_CASE("all completion orders give the same result") {
  for (std::uint32_t n = 1; n <= 3; ++n) {
    for (std::uint32_t s = 1; s <= 3; ++s) {
      std::map<std::string, int> results;
      for (auto mode : {ExecutionMode::kStreaming, ExecutionMode::kBarrier}) {
        auto root = graph(n, s, mode);
        seed_inputs(root);
        std::function<void(TaskGraph&)> explore = [&](TaskGraph& g) {
          auto pending = g.pending_tasks();
          if (pending.empty()) {
            REQUIRE(g.job_complete());
            std::string sink;
            for (std::uint32_t i = 0; i < n; ++i) {
              sink += g.output(g.id_of(s - 1, i))->envelope().data + ";";
            }
            ++results[sink];
            return;
          }
          for (const auto& t : pending) {
            TaskGraph next = g;
            next.complete_task(t.task_id, fake_output(next, t.task_id));
            explore(next);
          }
        };
        explore(root);
      }
      CHECK(results.size() == 1);
      std::string expect;
      for (std::uint32_t i = 0; i < n; ++i) {
        expect += "in" + std::to_string(i);
        for (std::uint32_t k = 0; k < s; ++k) expect += ">" + std::to_string(k);
        expect += ";";
      }
      CHECK(results.begin()->first == expect);
    }
  }
}
