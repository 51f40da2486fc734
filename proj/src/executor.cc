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
#include "crowdpipe/worker/executor.hpp"

#include "crowdpipe/core/errors.hpp"
#include "crowdpipe/transport/canonical.hpp"

namespace crowdpipe {

namespace {

constexpr const char* kAffineFormat = "crowdpipe.affine.v1";

class AffineSession final : public StageSession {
 public:
  AffineSession(AffineStageArtefact spec, KernelPolicy policy)
      : spec_(std::move(spec)), policy_(policy) {
    const std::size_t in = element_count(spec_.input_shape);
    const std::size_t out = element_count(spec_.output_shape);
    params_ = policy_ == KernelPolicy::kParallel
                  ? kernels::materialize_affine_omp(spec_.seed, in, out)
                  : kernels::materialize_affine_serial(spec_.seed, in, out);
  }

  Tensor run(const Tensor& input) override {
    if (input.size() != params_.in) {
      throw Error(Errc::kExecutorFailure, "input has " + std::to_string(input.size()) +
                                              " elements, stage expects " +
                                              std::to_string(params_.in));
    }
    std::vector<float> x = input.as_float_values();
    std::vector<float> y(params_.out);
    if (policy_ == KernelPolicy::kParallel) {
      kernels::affine_forward_omp(params_, x, y, spec_.apply_tanh);
    } else {
      kernels::affine_forward_serial(params_, x, y, spec_.apply_tanh);
    }
    return Tensor::from_floats(spec_.output_shape, y);
  }

 private:
  AffineStageArtefact spec_;
  KernelPolicy policy_;
  kernels::AffineParams params_;
};

class IdentitySession final : public StageSession {
 public:
  Tensor run(const Tensor& input) override { return input; }
};

}  // namespace

std::string AffineStageArtefact::serialize() const {
  return canonical_dump(Json{{"activation", apply_tanh ? "tanh" : "none"},
                             {"format", kAffineFormat},
                             {"input_shape", input_shape},
                             {"output_shape", output_shape},
                             {"seed", seed}});
}

AffineStageArtefact AffineStageArtefact::parse(std::span<const std::uint8_t> bytes) {
  Json j = parse_json(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                       bytes.size()));
  try {
    if (j.at("format").get<std::string>() != kAffineFormat) {
      throw Error(Errc::kExecutorFailure, "not an affine stage artefact");
    }
    AffineStageArtefact a;
    a.seed = j.at("seed").get<std::uint64_t>();
    a.input_shape = j.at("input_shape").get<Shape>();
    a.output_shape = j.at("output_shape").get<Shape>();
    a.apply_tanh = j.at("activation").get<std::string>() == "tanh";
    element_count(a.input_shape);
    element_count(a.output_shape);
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kExecutorFailure, std::string("bad affine artefact: ") + e.what());
  } catch (const Error& e) {
    throw Error(Errc::kExecutorFailure, e.what());
  }
}

std::unique_ptr<StageSession> AffineExecutor::open(
    std::span<const std::uint8_t> artefact) {
  return std::make_unique<AffineSession>(AffineStageArtefact::parse(artefact), policy_);
}

std::unique_ptr<StageSession> IdentityExecutor::open(std::span<const std::uint8_t>) {
  return std::make_unique<IdentitySession>();
}

Tensor run_chain_reference(const std::vector<AffineStageArtefact>& stages,
                           const Tensor& input) {
  Tensor x = input;
  for (const auto& st : stages) {
    AffineSession session(st, KernelPolicy::kSerial);
    x = session.run(x);
  }
  return x;
}

}  // namespace crowdpipe
