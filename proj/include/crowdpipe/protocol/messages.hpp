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
// Wire messages. Every frame is one canonical JSON object with a "type"
// member; see encode_message / decode_message.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "crowdpipe/core/model.hpp"
#include "crowdpipe/transport/canonical.hpp"

namespace crowdpipe::proto {

struct WorkerRegister {
  WorkerId worker_id;
  bool gpu_available = false;
};

struct Heartbeat {
  WorkerId worker_id;
  TelemetrySnapshot telemetry;
  std::optional<ArtefactId> resident;
  std::vector<ArtefactId> cached;  // sorted
  std::uint64_t tracked_rss_bytes = 0;
};

struct SubmitPipelineJob {
  std::string pipeline_id;
  ExecutionMode mode = ExecutionMode::kStreaming;
  std::vector<PartitionManifest> stages;
  std::vector<std::string> blobs;  // base64, parallel to stages
  std::vector<PayloadEnvelope> inputs;
};

struct JobAccepted {
  JobId job_id;
  std::string pipeline_id;
  std::uint32_t task_count = 0;
};

struct JobRejected {
  std::string pipeline_id;
  std::string reason;
};

/// blob is present for network loads and absent when the worker should
/// load from its disk cache.
struct LoadModel {
  ArtefactId artefact_id;
  std::string checksum;
  std::uint64_t footprint_bytes = 0;
  std::optional<std::string> blob;
};

struct ModelLoaded {
  WorkerId worker_id;
  ArtefactId artefact_id;
  std::string source;  // "network" or "disk_cache"
  std::int64_t load_duration_ms = 0;
};

struct ModelLoadFailed {
  WorkerId worker_id;
  ArtefactId artefact_id;
  std::string reason;
};

struct UnloadModel {
  ArtefactId artefact_id;
};

struct ModelUnloaded {
  WorkerId worker_id;
  ArtefactId artefact_id;
};

struct TaskAssign {
  JobId job_id;
  TaskId task_id = 0;
  std::uint32_t stage_index = 0;
  ArtefactId artefact_id;
  PayloadRouting input;
};

struct TaskResult {
  WorkerId worker_id;
  JobId job_id;
  TaskId task_id = 0;
  PayloadRouting output;
};

struct TaskFailed {
  WorkerId worker_id;
  JobId job_id;
  TaskId task_id = 0;
  std::string reason;
};

struct JobResult {
  JobId job_id;
  std::string status;  // "complete" or "failed"
  std::vector<double> mean_logits;
  std::int64_t predicted_class = -1;
  Json metrics = Json::object();
  std::string error;
};

using Message =
    std::variant<WorkerRegister, Heartbeat, SubmitPipelineJob, JobAccepted,
                 JobRejected, LoadModel, ModelLoaded, ModelLoadFailed,
                 UnloadModel, ModelUnloaded, TaskAssign, TaskResult, TaskFailed,
                 JobResult>;

const char* message_type(const Message& m);

Json to_json(const Message& m);
/// Throws kProtocolError on unknown type or missing members.
Message from_json(const Json& j);

std::string encode_message(const Message& m);
Message decode_message(std::string_view frame);

Json manifest_to_json(const PartitionManifest& m);
PartitionManifest manifest_from_json(const Json& j);
Json telemetry_to_json(const TelemetrySnapshot& t);
TelemetrySnapshot telemetry_from_json(const Json& j);

}  // namespace crowdpipe::proto
