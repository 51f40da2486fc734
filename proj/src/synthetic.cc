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

#include "crowdpipe/sim/synthetic.hpp"

#include "crowdpipe/kernels/affine.hpp"
#include "crowdpipe/transport/digest.hpp"

namespace crowdpipe::sim {

std::vector<std::pair<Shape, Shape>> synthetic_shapes(std::uint32_t stages, std::int64_t seq_len,
                                                      std::int64_t hidden, std::int64_t classes) {
  std::vector<std::pair<Shape, Shape>> out;
  Shape in{1, seq_len};
  for (std::uint32_t k = 0; k < stages; ++k) {
    Shape o = (k + 1 == stages) ? Shape{1, classes} : Shape{1, seq_len, hidden};
    out.emplace_back(in, o);
    in = o;
  }
  return out;
}

std::vector<Tensor> synthetic_inputs(std::uint64_t seed, std::uint32_t count,
                                     std::int64_t seq_len) {
  // Separate stream from the stage weights.
  const std::uint64_t stream = kernels::splitmix64_at(seed, 0xC0FFEE);
  std::vector<Tensor> out;
  std::uint64_t k = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::vector<std::int64_t> ids(static_cast<std::size_t>(seq_len));
    for (auto& id : ids) id = static_cast<std::int64_t>(kernels::splitmix64_at(stream, k++) % 32);
    out.push_back(Tensor::from_ints({1, seq_len}, ids));
  }
  return out;
}

SyntheticPipeline make_synthetic_pipeline(std::uint64_t seed, std::uint32_t stages,
                                          std::uint32_t inputs, std::int64_t seq_len,
                                          std::int64_t hidden, std::int64_t classes,
                                          const std::vector<std::uint64_t>& footprints) {
  SyntheticPipeline p;
  auto shapes = synthetic_shapes(stages, seq_len, hidden, classes);
  for (std::uint32_t k = 0; k < stages; ++k) {
    AffineStageArtefact a;
    a.seed = kernels::splitmix64_at(seed, 1000 + k);
    a.input_shape = shapes[k].first;
    a.output_shape = shapes[k].second;
    a.apply_tanh = k + 1 != stages;
    std::string blob = a.serialize();

    PartitionManifest m;
    m.stage_index = k;
    m.artefact_id = "affine-" + std::to_string(seed) + "-" + std::to_string(k);
    m.blob_checksum = sha256_hex(blob);
    m.blob_size_bytes = blob.size();
    m.memory_footprint_bytes = k < footprints.size() ? footprints[k] : (k + 1) * (10ull << 20);
    m.input_shape = a.input_shape;
    m.output_shape = a.output_shape;
    m.eager_broadcast = k == 0;

    p.artefacts.push_back(a);
    p.blobs.push_back(std::move(blob));
    p.manifests.push_back(std::move(m));
  }
  p.inputs = synthetic_inputs(seed, inputs, seq_len);
  return p;
}

}  // namespace crowdpipe::sim
