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
#include "crowdpipe/worker/agent.hpp"

#include <chrono>

#include "crowdpipe/transport/digest.hpp"

namespace crowdpipe {

WorkerAgent::WorkerAgent(WorkerAgentConfig config)
    : config_(std::move(config)),
      cache_(config_.cache_dir, config_.disk_budget_bytes) {
  if (!config_.executor) throw Error(Errc::kConfigError, "worker needs an executor");
  if (!config_.store) throw Error(Errc::kConfigError, "worker needs a payload store");
}

proto::WorkerRegister WorkerAgent::registration() const {
  return {config_.worker_id, config_.gpu_available};
}

proto::ModelLoaded WorkerAgent::handle_load_model(const proto::LoadModel& in) {
  const auto started = std::chrono::steady_clock::now();
  if (cache_.active_id() == in.artefact_id) {
    return {config_.worker_id, in.artefact_id, "session", 0};
  }
  if (cache_.active_id()) {
    throw Error(Errc::kResidencyViolation, "load of " + in.artefact_id + " while " +
                                               *cache_.active_id() + " is active");
  }

  std::vector<std::uint8_t> blob;
  std::string source;
  if (in.blob) {
    blob = base64_decode(*in.blob);
    if (sha256_hex(blob) != in.checksum) {
      throw Error(Errc::kChecksumMismatch, "received blob for " + in.artefact_id);
    }
    source = "network";
  } else {
    blob = cache_.read_blob(in.artefact_id);
    if (sha256_hex(blob) != in.checksum) {
      cache_.drop_blob(in.artefact_id);
      throw Error(Errc::kChecksumMismatch, "cached blob for " + in.artefact_id);
    }
    source = "disk_cache";
  }

  auto session = config_.executor->open(blob);
  if (in.blob) cache_.store_blob(in.artefact_id, blob);
  cache_.activate(in.artefact_id, std::move(session), in.footprint_bytes);

  std::int64_t elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
  const auto& simulated = source == "network" ? config_.simulated_cold_load_ms
                                              : config_.simulated_warm_load_ms;
  return {config_.worker_id, in.artefact_id, source, simulated.value_or(elapsed)};
}

proto::ModelUnloaded WorkerAgent::handle_unload_model(const ArtefactId& artefact) {
  cache_.release(artefact);
  return {config_.worker_id, artefact};
}

proto::TaskResult WorkerAgent::execute_task(const proto::TaskAssign& task) {
  if (cache_.active_id() != task.artefact_id) {
    throw Error(Errc::kPartitionNotResident,
                "task " + std::to_string(task.task_id) + " needs " + task.artefact_id);
  }
  Tensor input = decode_payload(resolve_payload(task.input, *config_.store));
  Tensor output = cache_.active_session().run(input);
  PayloadEnvelope env = encode_payload(output, config_.codec);
  raw_bytes_ += output.bytes().size();
  encoded_bytes_ += encoded_length(env);
  ++tasks_;
  return {config_.worker_id, task.job_id, task.task_id,
          route_payload(env, config_.tau_ws, *config_.store)};
}

proto::Heartbeat WorkerAgent::emit_heartbeat(const TelemetrySnapshot& telemetry) const {
  return {config_.worker_id, telemetry, cache_.active_id(), cache_.cached_ids(),
          cache_.tracked_rss_bytes()};
}

void WorkerAgent::drop_session() {
  if (cache_.active_id()) cache_.release(*cache_.active_id());
}

std::vector<proto::Message> WorkerAgent::handle(const proto::Message& message) {
  if (auto* load = std::get_if<proto::LoadModel>(&message)) {
    try {
      return {handle_load_model(*load)};
    } catch (const Error& e) {
      return {proto::ModelLoadFailed{config_.worker_id, load->artefact_id, e.what()}};
    }
  }
  if (auto* unload = std::get_if<proto::UnloadModel>(&message)) {
    // Unloading a shard that is not resident is already done as far as the
    // foreman is concerned.
    if (cache_.active_id() == unload->artefact_id) cache_.release(unload->artefact_id);
    return {proto::ModelUnloaded{config_.worker_id, unload->artefact_id}};
  }
  if (auto* task = std::get_if<proto::TaskAssign>(&message)) {
    try {
      return {execute_task(*task)};
    } catch (const Error& e) {
      return {proto::TaskFailed{config_.worker_id, task->job_id, task->task_id, e.what()}};
    }
  }
  return {};
}

}  // namespace crowdpipe
