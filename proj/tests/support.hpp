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

// Shared fixtures for the unit tests.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "crowdpipe/core/model.hpp"
#include "crowdpipe/sim/config.hpp"
#include "crowdpipe/transport/digest.hpp"

namespace testing {

using namespace crowdpipe;

inline PartitionManifest manifest(std::uint32_t k, Shape in, Shape out,
                                  std::uint64_t footprint = 1 << 20) {
  PartitionManifest m;
  m.stage_index = k;
  m.artefact_id = "cell_" + std::string(1, static_cast<char>('a' + k));
  m.blob_checksum = sha256_hex(m.artefact_id);
  m.blob_size_bytes = 64;
  m.memory_footprint_bytes = footprint;
  m.input_shape = std::move(in);
  m.output_shape = std::move(out);
  m.eager_broadcast = k == 0;
  return m;
}

/// [1,8] -> [1,8,16] -> ... -> [1,2]
inline PipelineSpec chain_spec(std::uint32_t stages, std::uint32_t inputs,
                               ExecutionMode mode = ExecutionMode::kStreaming) {
  PipelineSpec spec;
  spec.pipeline_id = "p";
  spec.execution_mode = mode;
  spec.input_count = inputs;
  for (std::uint32_t k = 0; k < stages; ++k) {
    Shape in = k == 0 ? Shape{1, 8} : Shape{1, 8, 16};
    Shape out = k + 1 == stages ? Shape{1, 2} : Shape{1, 8, 16};
    spec.stages.push_back(manifest(k, in, out));
  }
  return spec;
}

inline WorkerDescriptor worker(const std::string& id, std::optional<std::string> resident = {},
                               std::set<std::string> disk = {}, std::uint64_t seq = 0) {
  WorkerDescriptor w;
  w.worker_id = id;
  w.disk_cache = std::move(disk);
  if (resident) w.set_resident(*resident);
  w.registration_seq = seq;
  return w;
}

/// Homogeneous fleet of n workers: same compute and load delays.
inline sim::FleetConfig uniform_fleet(int n, std::uint32_t inputs, std::uint32_t stages,
                                      std::int64_t compute_ms, std::int64_t cold_ms = 0,
                                      std::int64_t warm_ms = 0) {
  sim::FleetConfig c;
  c.inputs = inputs;
  c.stages = stages;
  c.strategy = "fifo";
  for (int i = 0; i < n; ++i) {
    sim::WorkerSpec w;
    w.id = "w" + std::to_string(i);
    w.compute_ms = {compute_ms};
    w.cold_load_ms = cold_ms;
    w.warm_load_ms = warm_ms;
    c.workers.push_back(w);
  }
  return c;
}

/// Random deterministic fleet. With homogeneous set, every worker shares
/// compute and load delays and nothing is precached.
inline sim::FleetConfig random_fleet(std::mt19937_64& rng, bool homogeneous) {
  auto pick = [&](int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  sim::FleetConfig c;
  c.inputs = static_cast<std::uint32_t>(pick(1, 6));
  c.stages = static_cast<std::uint32_t>(pick(1, 4));
  c.strategy = pick(0, 1) ? "fifo" : "entropy_weighted_sum";
  c.seed = rng();
  const int n = pick(1, 5);
  std::vector<std::int64_t> shared_compute;
  for (std::uint32_t k = 0; k < c.stages; ++k) shared_compute.push_back(pick(1, 20) * 10);
  const std::int64_t shared_cold = pick(0, 10) * 10;
  const std::int64_t shared_warm = shared_cold / 2;
  for (int i = 0; i < n; ++i) {
    sim::WorkerSpec w;
    w.id = "w" + std::to_string(i);
    if (homogeneous) {
      w.compute_ms = shared_compute;
      w.cold_load_ms = shared_cold;
      w.warm_load_ms = shared_warm;
    } else {
      w.compute_ms.clear();
      for (std::uint32_t k = 0; k < c.stages; ++k) w.compute_ms.push_back(pick(1, 30) * 10);
      w.cold_load_ms = pick(0, 10) * 10;
      w.warm_load_ms = w.cold_load_ms / 2;
      for (std::uint32_t k = 0; k < c.stages; ++k) {
        if (pick(0, 3) == 0) w.precached.push_back(k);
      }
    }
    c.workers.push_back(w);
  }
  return c;
}

}  // namespace testing
