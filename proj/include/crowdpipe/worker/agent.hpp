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
#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "crowdpipe/protocol/messages.hpp"
#include "crowdpipe/transport/codec.hpp"
#include "crowdpipe/transport/routing.hpp"
#include "crowdpipe/worker/session_cache.hpp"

namespace crowdpipe {

struct WorkerAgentConfig {
  WorkerId worker_id;
  std::filesystem::path cache_dir;
  std::shared_ptr<StageExecutor> executor;
  std::shared_ptr<PayloadStore> store;
  std::size_t tau_ws = kDefaultTauWs;
  Codec codec = Codec::kZlib;
  std::uint64_t disk_budget_bytes = 0;
  bool gpu_available = false;
  // Reported load durations. When unset the measured wall time is used.
  std::optional<std::int64_t> simulated_cold_load_ms;
  std::optional<std::int64_t> simulated_warm_load_ms;
};

/// Worker-side protocol state machine. Not thread-safe: callers funnel
/// every message through one loop.
class WorkerAgent {
 public:
  explicit WorkerAgent(WorkerAgentConfig config);

  proto::WorkerRegister registration() const;

  /// Throws kResidencyViolation or kChecksumMismatch; state is unchanged on
  /// failure.
  proto::ModelLoaded handle_load_model(const proto::LoadModel& instruction);
  /// Throws kNotResident.
  proto::ModelUnloaded handle_unload_model(const ArtefactId& artefact);
  /// Throws kPartitionNotResident, or kExecutorFailure from the stage.
  proto::TaskResult execute_task(const proto::TaskAssign& assignment);

  proto::Heartbeat emit_heartbeat(const TelemetrySnapshot& telemetry) const;

  /// Releases the active session, if any. Used before re-registering, since
  /// the foreman treats a fresh registration as an empty worker.
  void drop_session();

  /// Message-level entry point: converts errors into MODEL_LOAD_FAILED and
  /// TASK_FAILED replies.
  std::vector<proto::Message> handle(const proto::Message& message);

  const SessionCache& cache() const { return cache_; }
  const WorkerId& id() const { return config_.worker_id; }

  /// Raw and encoded byte totals over every output this agent produced.
  std::uint64_t raw_output_bytes() const { return raw_bytes_; }
  std::uint64_t encoded_output_bytes() const { return encoded_bytes_; }
  std::uint64_t tasks_executed() const { return tasks_; }

 private:
  WorkerAgentConfig config_;
  SessionCache cache_;
  std::uint64_t raw_bytes_ = 0;
  std::uint64_t encoded_bytes_ = 0;
  std::uint64_t tasks_ = 0;
};

}  // namespace crowdpipe
