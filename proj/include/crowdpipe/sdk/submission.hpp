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

// Client-side packaging of a job.
//
// Stage file: a JSON object
//   {"artefact": <base64 blob>, "artefact_id": ..., "input_shape": [...],
//    "memory_footprint_bytes": N, "output_shape": [...], "sha256": <hex>}
// where "sha256" is optional; when present the blob must match it.
//
// Inputs file: a header line "dtype=<float32|int64> shape=<d0>x<d1>..."
// followed by one tensor per line as whitespace-separated numbers.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crowdpipe/protocol/messages.hpp"
#include "crowdpipe/transport/codec.hpp"

namespace crowdpipe::sdk {

struct StageFile {
  ArtefactId artefact_id;
  Shape input_shape;
  Shape output_shape;
  std::uint64_t memory_footprint_bytes = 0;
  std::string artefact;  // raw bytes
  std::optional<std::string> sha256;
};

/// Throws kFileMissing, kInvalidManifest or kChecksumMismatch.
StageFile read_stage_file(const std::filesystem::path& path);
void write_stage_file(const std::filesystem::path& path, const StageFile& stage);

/// Throws kFileMissing or kInvalidTensor.
std::vector<Tensor> read_inputs_file(const std::filesystem::path& path);
void write_inputs_file(const std::filesystem::path& path, const std::vector<Tensor>& inputs);

/// Stages are indexed in the order given and chained linearly; the
/// pipeline is validated locally before anything is sent. Throws
/// kEmptyStages, kFileMissing, kChecksumMismatch, kShapeMismatch or a
/// ValidationError.
proto::SubmitPipelineJob build_submission(const std::vector<std::filesystem::path>& stage_files,
                                          ExecutionMode mode,
                                          const std::filesystem::path& inputs_file,
                                          Codec codec = Codec::kZlib);

/// Same, from in-memory parts.
proto::SubmitPipelineJob build_submission(const std::vector<StageFile>& stages, ExecutionMode mode,
                                          const std::vector<Tensor>& inputs,
                                          Codec codec = Codec::kZlib);

/// Human-readable summary of a JOB_RESULT.
std::string render_result(const proto::JobResult& result);

}  // namespace crowdpipe::sdk
