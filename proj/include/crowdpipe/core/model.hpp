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
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "crowdpipe/core/errors.hpp"
#include "crowdpipe/transport/payload.hpp"

namespace crowdpipe {

using ArtefactId = std::string;
using WorkerId = std::string;
using JobId = std::string;
using TaskId = std::uint32_t;

enum class ExecutionMode { kStreaming, kBarrier };

const char* mode_name(ExecutionMode mode);
ExecutionMode parse_mode(const std::string& name);

/// One stage of a pipeline, packaged as an independently loadable artefact.
struct PartitionManifest {
  std::uint32_t stage_index = 0;
  ArtefactId artefact_id;
  std::string blob_checksum;  // lowercase hex sha256 of the raw blob
  std::uint64_t blob_size_bytes = 0;
  std::uint64_t memory_footprint_bytes = 0;
  Shape input_shape;
  Shape output_shape;
  bool eager_broadcast = false;

  friend bool operator==(const PartitionManifest&,
                         const PartitionManifest&) = default;
};

struct PipelineSpec {
  std::string pipeline_id;
  std::vector<PartitionManifest> stages;
  ExecutionMode execution_mode = ExecutionMode::kStreaming;
  std::uint32_t input_count = 1;
  // Optional developer-supplied edges (from, to). Auto-topology is used
  // when absent.
  std::optional<std::vector<std::pair<std::uint32_t, std::uint32_t>>> edges;

  std::size_t stage_count() const { return stages.size(); }

  friend bool operator==(const PipelineSpec&, const PipelineSpec&) = default;
};

enum class StageRole { kSource, kIntermediate, kSink, kSourceAndSink };

const char* role_name(StageRole role);

struct ValidatedPipeline {
  PipelineSpec spec;  // stages sorted by index
  std::vector<StageRole> roles;

  friend bool operator==(const ValidatedPipeline&,
                         const ValidatedPipeline&) = default;
};

struct Violation {
  Errc code;
  std::string detail;
};

/// Carries every violated invariant, not just the first.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }
  bool has(Errc code) const;

 private:
  std::vector<Violation> violations_;
};

/// Checks stage indexing, shape chaining, manifest fields and topology.
/// Idempotent: validating the returned spec yields an equal result.
ValidatedPipeline validate_pipeline_spec(const PipelineSpec& spec);

/// Path edges 0->1->...->S-1.
std::vector<std::pair<std::uint32_t, std::uint32_t>> linear_edges(
    std::size_t stage_count);

enum class TaskState { kBlocked, kPending, kDispatched, kRunning, kComplete,
                       kFailed };

const char* task_state_name(TaskState state);

struct TaskRecord {
  TaskId task_id = 0;
  std::uint32_t stage_index = 0;
  std::uint32_t input_index = 0;
  TaskState state = TaskState::kBlocked;
  std::uint32_t deps_remaining = 0;
  std::vector<TaskId> dependency_ids;
  std::optional<PayloadRouting> input_payload;
  std::optional<WorkerId> assigned_worker;
  std::uint32_t attempt_count = 0;
};

/// Live heartbeat telemetry. cpu_load, rtt_ms and temperature_c are cost
/// criteria; ram_free_bytes and battery_fraction are benefit criteria.
struct TelemetrySnapshot {
  double cpu_load = 0.0;
  std::uint64_t ram_free_bytes = 0;
  double battery_fraction = 1.0;
  double rtt_ms = 0.0;
  double temperature_c = 25.0;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const TelemetrySnapshot&,
                         const TelemetrySnapshot&) = default;
};

/// Throws kInvalidState on a non-finite or out-of-range field.
void check_telemetry(const TelemetrySnapshot& snapshot);

struct WorkerDescriptor {
  WorkerId worker_id;
  // The single active session. Holding an optional rather than a set keeps
  // double residency unrepresentable.
  std::optional<ArtefactId> resident_partition;
  std::set<ArtefactId> disk_cache;
  TelemetrySnapshot last_heartbeat;
  bool connected = true;
  std::uint64_t success_count = 0;
  std::uint64_t failure_count = 0;
  std::uint64_t registration_seq = 0;
  bool gpu_available = false;

  /// Sets the resident shard, adding it to the disk cache.
  void set_resident(const ArtefactId& artefact);
  void clear_resident() { resident_partition.reset(); }
};

}  // namespace crowdpipe
