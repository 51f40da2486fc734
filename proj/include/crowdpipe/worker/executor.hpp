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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "crowdpipe/kernels/affine.hpp"
#include "crowdpipe/transport/payload.hpp"

namespace crowdpipe {

/// A loaded stage, ready to run. One exists per active session.
class StageSession {
 public:
  virtual ~StageSession() = default;
  virtual Tensor run(const Tensor& input) = 0;
};

/// Turns artefact bytes into a session. Must be deterministic.
class StageExecutor {
 public:
  virtual ~StageExecutor() = default;
  virtual std::unique_ptr<StageSession> open(
      std::span<const std::uint8_t> artefact) = 0;
};

/// Serialized affine stage: canonical JSON
/// {"activation":"tanh"|"none","format":"crowdpipe.affine.v1",
///  "input_shape":[...],"output_shape":[...],"seed":N}.
/// The executor flattens the input, widens int64 to float and computes
/// y = A x + b, then tanh unless activation is "none".
struct AffineStageArtefact {
  std::uint64_t seed = 0;
  Shape input_shape;
  Shape output_shape;
  bool apply_tanh = true;

  std::string serialize() const;
  static AffineStageArtefact parse(std::span<const std::uint8_t> bytes);
};

enum class KernelPolicy { kSerial, kParallel };

class AffineExecutor final : public StageExecutor {
 public:
  explicit AffineExecutor(KernelPolicy policy = KernelPolicy::kParallel)
      : policy_(policy) {}
  std::unique_ptr<StageSession> open(std::span<const std::uint8_t> artefact) override;

 private:
  KernelPolicy policy_;
};

/// Output equals input.
class IdentityExecutor final : public StageExecutor {
 public:
  std::unique_ptr<StageSession> open(std::span<const std::uint8_t> artefact) override;
};

/// Runs stages back to back in-process with the serial kernel; the
/// reference that distributed runs are compared against.
Tensor run_chain_reference(const std::vector<AffineStageArtefact>& stages,
                           const Tensor& input);

}  // namespace crowdpipe
