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
#include "crowdpipe/graph/task_graph.hpp"

#include <numeric>

namespace crowdpipe {

TaskGraph TaskGraph::materialize(const PipelineSpec& spec) {
  TaskGraph g;
  g.mode_ = spec.execution_mode;
  g.n_ = spec.input_count;
  g.s_ = static_cast<std::uint32_t>(spec.stages.size());
  for (const auto& st : spec.stages) g.output_shapes_.push_back(st.output_shape);

  const std::size_t total = static_cast<std::size_t>(g.n_) * g.s_;
  g.tasks_.resize(total);
  g.reverse_deps_.resize(total);
  g.outputs_.resize(total);
  g.completed_per_stage_.assign(g.s_, 0);

  for (std::uint32_t k = 0; k < g.s_; ++k) {
    for (std::uint32_t i = 0; i < g.n_; ++i) {
      TaskRecord& t = g.tasks_[g.id_of(k, i)];
      t.task_id = g.id_of(k, i);
      t.stage_index = k;
      t.input_index = i;
      if (k > 0) {
        if (g.mode_ == ExecutionMode::kStreaming) {
          t.dependency_ids.push_back(g.id_of(k - 1, i));
        } else {
          for (std::uint32_t j = 0; j < g.n_; ++j) {
            t.dependency_ids.push_back(g.id_of(k - 1, j));
          }
        }
      }
      t.deps_remaining = static_cast<std::uint32_t>(t.dependency_ids.size());
      t.state = t.deps_remaining == 0 ? TaskState::kPending : TaskState::kBlocked;
      for (TaskId d : t.dependency_ids) g.reverse_deps_[d].push_back(t.task_id);
    }
  }
  return g;
}

TaskRecord& TaskGraph::at(TaskId id) {
  if (id >= tasks_.size()) {
    throw Error(Errc::kUnknownTask, "task " + std::to_string(id));
  }
  return tasks_[id];
}

const TaskRecord& TaskGraph::task(TaskId id) const {
  if (id >= tasks_.size()) {
    throw Error(Errc::kUnknownTask, "task " + std::to_string(id));
  }
  return tasks_[id];
}

const std::vector<TaskId>& TaskGraph::dependents(TaskId id) const {
  task(id);
  return reverse_deps_[id];
}

const std::optional<PayloadRouting>& TaskGraph::output(TaskId id) const {
  task(id);
  return outputs_[id];
}

void TaskGraph::set_input(TaskId id, PayloadRouting payload) {
  at(id).input_payload = std::move(payload);
}

std::vector<TaskId> TaskGraph::complete_task(TaskId id, PayloadRouting output) {
  TaskRecord& t = at(id);
  if (t.state != TaskState::kDispatched && t.state != TaskState::kRunning &&
      t.state != TaskState::kPending) {
    throw Error(Errc::kInvalidState, "task " + std::to_string(id) + " is " +
                                         task_state_name(t.state));
  }
  if (output.is_inline() &&
      output.envelope().shape != output_shapes_[t.stage_index]) {
    throw Error(Errc::kShapeMismatch,
                "task " + std::to_string(id) + " output shape differs from manifest");
  }
  t.state = TaskState::kComplete;
  outputs_[id] = std::move(output);
  ++completed_per_stage_[t.stage_index];

  std::vector<TaskId> unlocked;
  for (TaskId dep_id : reverse_deps_[id]) {
    TaskRecord& dep = tasks_[dep_id];
    --dep.deps_remaining;
    if (dep.deps_remaining == 0) {
      dep.state = TaskState::kPending;
      dep.input_payload = outputs_[id_of(dep.stage_index - 1, dep.input_index)];
      unlocked.push_back(dep_id);
    }
  }
  // reverse_deps_ is filled in ascending id order, so unlocked is sorted.
  return unlocked;
}

const TaskRecord& TaskGraph::fail_task(TaskId id) {
  TaskRecord& t = at(id);
  if (t.state != TaskState::kDispatched && t.state != TaskState::kRunning) {
    throw Error(Errc::kInvalidState, "cannot fail task " + std::to_string(id) +
                                         " in state " + task_state_name(t.state));
  }
  t.state = TaskState::kPending;
  t.assigned_worker.reset();
  ++t.attempt_count;
  return t;
}

void TaskGraph::mark_dispatched(TaskId id, const WorkerId& worker) {
  TaskRecord& t = at(id);
  if (t.state != TaskState::kPending) {
    throw Error(Errc::kInvalidState, "dispatching non-pending task " +
                                         std::to_string(id));
  }
  t.state = TaskState::kDispatched;
  t.assigned_worker = worker;
}

std::vector<TaskRecord> TaskGraph::pending_tasks() const {
  std::vector<TaskRecord> out;
  for (const auto& t : tasks_) {
    if (t.state == TaskState::kPending) out.push_back(t);
  }
  return out;
}

std::size_t TaskGraph::completed_count() const {
  return std::accumulate(completed_per_stage_.begin(), completed_per_stage_.end(),
                         std::size_t{0});
}

}  // namespace crowdpipe
