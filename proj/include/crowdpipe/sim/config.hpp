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
#include <string>
#include <vector>

#include "crowdpipe/core/model.hpp"
#include "crowdpipe/transport/canonical.hpp"
#include "crowdpipe/transport/routing.hpp"

namespace crowdpipe::sim {

struct WorkerSpec {
  WorkerId id;
  // Per-stage compute delay. A single entry applies to every stage.
  std::vector<std::int64_t> compute_ms{100};
  std::int64_t cold_load_ms = 0;
  std::int64_t warm_load_ms = 0;
  // Heartbeat rows, cycled. Empty means default telemetry.
  std::vector<TelemetrySnapshot> telemetry;
  std::vector<std::uint32_t> precached;  // stage indices already on disk
  bool gpu = false;

  std::int64_t compute_for(std::uint32_t stage) const;
};

struct FailureInjection {
  WorkerId worker;
  std::int64_t at_ms = 0;
};

struct FleetConfig {
  std::uint32_t inputs = 5;
  std::uint32_t stages = 3;
  std::vector<ExecutionMode> modes{ExecutionMode::kStreaming, ExecutionMode::kBarrier};
  std::size_t tau_ws = kDefaultTauWs;
  std::string strategy = "entropy_weighted_sum";
  std::uint64_t seed = 1;
  std::int64_t heartbeat_ms = 30000;
  int staleness_multiplier = 3;
  // Token count L and hidden width H of the synthetic model.
  std::int64_t seq_len = 8;
  std::int64_t hidden = 16;
  std::int64_t classes = 2;
  // Per-stage memory footprint. Missing entries default to (k+1) * 10 MiB.
  std::vector<std::uint64_t> footprints;
  std::vector<WorkerSpec> workers;
  std::vector<FailureInjection> failures;
  // Keep every message in the report (tests only; not serialized).
  bool record_trace = false;

  std::uint64_t footprint(std::uint32_t stage) const;
};

/// Throws kConfigError on missing workers, negative delays, unknown worker
/// ids in failures, or out-of-range sizes.
void check_config(const FleetConfig& config);

/// Reads the JSON config object. Unknown keys are rejected.
FleetConfig config_from_json(const Json& j);
Json config_to_json(const FleetConfig& config);
FleetConfig load_config(const std::string& path);

/// One telemetry row; missing fields keep their defaults.
TelemetrySnapshot telemetry_row_from_json(const Json& j);
/// A JSON array of rows.
std::vector<TelemetrySnapshot> load_telemetry_profile(const std::string& path);

}  // namespace crowdpipe::sim
