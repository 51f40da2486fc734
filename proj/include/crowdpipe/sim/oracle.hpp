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

#include "crowdpipe/sim/config.hpp"

namespace crowdpipe::sim {

/// Exact makespan predicted for the harness, computed by a standalone
/// discrete-event model that shares no code with the foreman, the
/// scheduler or the worker agent. It replays the same placement rules:
/// eager stage-0 loads, one downstream load per stage on first upstream
/// completion, resident-first claiming (rarest shard first), one extra
/// replica load per stage with leftover pending work, lowest residency
/// tier for placement, and no eviction of the last copy of a shard that
/// still has work unless every worker is in that position.
///
/// Throws kUnsupportedConfig for failure injection, or for the entropy
/// strategy with telemetry that differs between workers (the ranking would
/// then depend on the weighting itself).
std::int64_t makespan_oracle(const FleetConfig& config, ExecutionMode mode);

}  // namespace crowdpipe::sim
