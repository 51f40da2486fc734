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

#include <stdexcept>
#include <string>
#include <string_view>

namespace crowdpipe {

enum class Errc {
  // pipeline validation
  kEmptyPipeline,
  kShapeMismatch,
  kDuplicateStageIndex,
  kCyclicTopology,
  kNonLinearTopology,
  kInvalidManifest,
  kValidationFailure,
  // task graph
  kUnknownTask,
  kInvalidState,
  // transport
  kBase64Error,
  kDecompressError,
  kLengthMismatch,
  kStoreWriteError,
  kMissingKey,
  kHashMismatch,
  kInvalidTensor,
  // scheduling
  kDegenerateMatrix,
  kEmptyEligibleSet,
  kNoWorkersAvailable,
  // foreman
  kChecksumMismatch,
  kUnknownWorker,
  kWrongWorker,
  kUnknownJob,
  // worker
  kResidencyViolation,
  kNotResident,
  kPartitionNotResident,
  kExecutorFailure,
  // protocol / io
  kProtocolError,
  kFileMissing,
  kEmptyStages,
  kConnectionRefused,
  kJobRejected,
  kTimeout,
  // harness
  kConfigError,
  kUnsupportedConfig,
};

std::string_view errc_name(Errc code);

/// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace crowdpipe
