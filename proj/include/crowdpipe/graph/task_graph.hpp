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
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crowdpipe/core/model.hpp"

namespace crowdpipe {

/// N x S task records for one job. Task ids are stage_index * N +
/// input_index, so stage 0 occupies ids [0, N).
///
/// Streaming wires each stage-k task to the same input's stage-(k-1) task.
/// Barrier wires it to every stage-(k-1) task, but the payload it receives
/// is still its own input's predecessor output: the barrier gates timing,
/// not data flow, so both modes compute the same result.
class TaskGraph {
 public:
  /// The spec must already be validated.
  static TaskGraph materialize(const PipelineSpec& spec);

  /// Marks task complete and returns dependents that became pending, in
  /// ascending id order. Throws kUnknownTask, kInvalidState, kShapeMismatch.
  std::vector<TaskId> complete_task(TaskId id, PayloadRouting output);

  /// Resets a dispatched/running task to pending, keeping its input.
  const TaskRecord& fail_task(TaskId id);

  /// pending -> dispatched.
  void mark_dispatched(TaskId id, const WorkerId& worker);

  std::vector<TaskRecord> pending_tasks() const;
  const TaskRecord& task(TaskId id) const;
  const std::vector<TaskRecord>& tasks() const { return tasks_; }
  const std::vector<TaskId>& dependents(TaskId id) const;
  const std::optional<PayloadRouting>& output(TaskId id) const;

  /// Seeds the input payload of a stage-0 task.
  void set_input(TaskId id, PayloadRouting payload);

  ExecutionMode mode() const { return mode_; }
  std::uint32_t input_count() const { return n_; }
  std::uint32_t stage_count() const { return s_; }
  std::uint32_t completed_in_stage(std::uint32_t stage) const {
    return completed_per_stage_.at(stage);
  }
  std::size_t completed_count() const;
  bool job_complete() const { return completed_count() == tasks_.size(); }

  TaskId id_of(std::uint32_t stage, std::uint32_t input) const {
    return stage * n_ + input;
  }

 private:
  TaskRecord& at(TaskId id);

  ExecutionMode mode_ = ExecutionMode::kStreaming;
  std::uint32_t n_ = 0;
  std::uint32_t s_ = 0;
  std::vector<Shape> output_shapes_;
  std::vector<TaskRecord> tasks_;
  std::vector<std::vector<TaskId>> reverse_deps_;
  std::vector<std::optional<PayloadRouting>> outputs_;
  std::vector<std::uint32_t> completed_per_stage_;
};

}  // namespace crowdpipe
