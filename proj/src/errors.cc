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

#include "crowdpipe/core/errors.hpp"

namespace crowdpipe {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kEmptyPipeline: return "EmptyPipeline";
    case Errc::kShapeMismatch: return "ShapeMismatch";
    case Errc::kDuplicateStageIndex: return "DuplicateStageIndex";
    case Errc::kCyclicTopology: return "CyclicTopology";
    case Errc::kNonLinearTopology: return "NonLinearTopology";
    case Errc::kInvalidManifest: return "InvalidManifest";
    case Errc::kValidationFailure: return "ValidationFailure";
    case Errc::kUnknownTask: return "UnknownTask";
    case Errc::kInvalidState: return "InvalidState";
    case Errc::kBase64Error: return "Base64Error";
    case Errc::kDecompressError: return "DecompressError";
    case Errc::kLengthMismatch: return "LengthMismatch";
    case Errc::kStoreWriteError: return "StoreWriteError";
    case Errc::kMissingKey: return "MissingKey";
    case Errc::kHashMismatch: return "HashMismatch";
    case Errc::kInvalidTensor: return "InvalidTensor";
    case Errc::kDegenerateMatrix: return "DegenerateMatrix";
    case Errc::kEmptyEligibleSet: return "EmptyEligibleSet";
    case Errc::kNoWorkersAvailable: return "NoWorkersAvailable";
    case Errc::kChecksumMismatch: return "ChecksumMismatch";
    case Errc::kUnknownWorker: return "UnknownWorker";
    case Errc::kWrongWorker: return "WrongWorker";
    case Errc::kUnknownJob: return "UnknownJob";
    case Errc::kResidencyViolation: return "ResidencyViolation";
    case Errc::kNotResident: return "NotResident";
    case Errc::kPartitionNotResident: return "PartitionNotResident";
    case Errc::kExecutorFailure: return "ExecutorFailure";
    case Errc::kProtocolError: return "ProtocolError";
    case Errc::kFileMissing: return "FileMissing";
    case Errc::kEmptyStages: return "EmptyStages";
    case Errc::kConnectionRefused: return "ConnectionRefused";
    case Errc::kJobRejected: return "JobRejected";
    case Errc::kTimeout: return "Timeout";
    case Errc::kConfigError: return "ConfigError";
    case Errc::kUnsupportedConfig: return "UnsupportedConfig";
  }
  return "Unknown";
}

}  // namespace crowdpipe
