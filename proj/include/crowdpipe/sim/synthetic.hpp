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

// Synthetic staged model for experiments and end-to-end tests: affine
// stages with shapes [1,L] -> [1,L,H] -> ... -> [1,C], all derived from a
// seed.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowdpipe/core/model.hpp"
#include "crowdpipe/worker/executor.hpp"

namespace crowdpipe::sim {

struct SyntheticPipeline {
  std::vector<AffineStageArtefact> artefacts;
  std::vector<std::string> blobs;  // serialized artefacts, raw bytes
  std::vector<PartitionManifest> manifests;
  std::vector<Tensor> inputs;
};

/// Stage k input/output shapes for a chain of the given length.
std::vector<std::pair<Shape, Shape>> synthetic_shapes(std::uint32_t stages, std::int64_t seq_len,
                                                      std::int64_t hidden, std::int64_t classes);

/// footprints[k] sets stage k's manifest footprint.
SyntheticPipeline make_synthetic_pipeline(std::uint64_t seed, std::uint32_t stages,
                                          std::uint32_t inputs, std::int64_t seq_len,
                                          std::int64_t hidden, std::int64_t classes,
                                          const std::vector<std::uint64_t>& footprints);

/// Token tensors [1,L] of int64 ids in [0, 32).
std::vector<Tensor> synthetic_inputs(std::uint64_t seed, std::uint32_t count,
                                     std::int64_t seq_len);

}  // namespace crowdpipe::sim
