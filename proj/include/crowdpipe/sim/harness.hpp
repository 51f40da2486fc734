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

// Virtual-time experiment driver. One foreman and one WorkerAgent per
// configured worker run in-process; every message goes through the wire
// codec. Events are ordered by (virtual time, insertion order).
//
// Delivery model:
//   - foreman -> worker messages land in the worker's inbox at once;
//   - a worker handles its inbox serially and replies when the simulated
//     delay for that message has elapsed (load: cold if the blob is
//     shipped, warm from disk; task: per-stage compute; unload: 0);
//   - worker state changes when the reply is produced, so heartbeats never
//     run ahead of acknowledgements;
//   - heartbeats and the foreman's staleness check fire every heartbeat_ms;
//   - a killed worker drops everything, in and out.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdpipe/foreman/foreman.hpp"
#include "crowdpipe/sim/config.hpp"

namespace crowdpipe::sim {

struct WorkerStats {
  WorkerId id;
  std::uint64_t peak_rss_bytes = 0;
  // Largest footprint among the shards this worker acknowledged loading.
  std::uint64_t max_loaded_footprint = 0;
  int max_concurrent_sessions = 0;
  std::vector<ArtefactId> loaded;  // in acknowledgement order, repeats kept
  std::uint64_t tasks = 0;
  bool killed = false;
};

struct LatencySummary {
  std::uint32_t stage = 0;
  std::uint32_t count = 0;
  std::int64_t min_ms = 0;
  double mean_ms = 0.0;
  std::int64_t p50_ms = 0;
  std::int64_t max_ms = 0;
};

struct TraceEntry {
  std::int64_t t_ms = 0;
  enum class Dir { kToWorker, kFromWorker, kToClient } dir = Dir::kToWorker;
  std::string peer;
  proto::Message message;
};

struct ModeReport {
  ExecutionMode mode = ExecutionMode::kStreaming;
  std::string status;  // "complete" or "failed"
  std::string error;
  std::int64_t makespan_ms = 0;
  std::vector<WorkerStats> workers;  // config order
  std::array<std::uint64_t, 4> tier_hits{};
  std::uint64_t load_messages = 0;  // LOAD_MODEL messages sent
  double mean_compression_pct = 0.0;  // mean over task outputs
  std::uint64_t raw_bytes = 0;
  std::uint64_t compressed_bytes = 0;
  std::vector<LatencySummary> stage_latency;
  std::vector<RecoveryEvent> recovery;
  std::optional<Prediction> prediction;
  std::vector<Tensor> sink_outputs;  // per input
  std::uint64_t rounds = 0;
  std::vector<TraceEntry> trace;  // only with record_trace
};

struct MetricsReport {
  std::uint64_t seed = 0;
  std::vector<ModeReport> modes;

  const ModeReport* find(ExecutionMode mode) const;
};

/// Runs one mode on a fresh fleet. Throws kConfigError.
ModeReport run_mode(const FleetConfig& config, ExecutionMode mode);

/// Runs every configured mode back to back, each on a fresh fleet.
MetricsReport run_experiment(const FleetConfig& config);

}  // namespace crowdpipe::sim
