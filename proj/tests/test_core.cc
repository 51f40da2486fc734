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

#include <random>

#include "doctest.h"
#include "crowdpipe/foreman/foreman.hpp"
#include "support.hpp"

using namespace crowdpipe;
using testing::chain_spec;

namespace {

bool rejects_with(const PipelineSpec& spec, Errc code) {
  try {
    validate_pipeline_spec(spec);
  } catch (const ValidationError& e) {
    return e.has(code);
  }
  return false;
}

}  // namespace

TEST_CASE("three chained stages validate with source and sink roles") {
  auto spec = chain_spec(3, 5);
  auto v = validate_pipeline_spec(spec);
  REQUIRE(v.roles.size() == 3);
  CHECK(v.roles[0] == StageRole::kSource);
  CHECK(v.roles[1] == StageRole::kIntermediate);
  CHECK(v.roles[2] == StageRole::kSink);
  CHECK(v.spec.stages[2].output_shape == Shape{1, 2});
}

TEST_CASE("single stage is both source and sink") {
  auto v = validate_pipeline_spec(chain_spec(1, 1));
  REQUIRE(v.roles.size() == 1);
  CHECK(v.roles[0] == StageRole::kSourceAndSink);
}

TEST_CASE("explicit back edge is a cycle") {
  auto spec = chain_spec(3, 1);
  spec.edges = {{0, 1}, {1, 2}, {2, 0}};
  CHECK(rejects_with(spec, Errc::kCyclicTopology));
}

TEST_CASE("explicit linear edges are accepted, branches are not") {
  auto spec = chain_spec(3, 1);
  spec.edges = {{1, 2}, {0, 1}};
  CHECK_NOTHROW(validate_pipeline_spec(spec));
  spec.edges = {{0, 1}, {0, 2}};
  CHECK(rejects_with(spec, Errc::kNonLinearTopology));
}

TEST_CASE("manifest violations are all reported") {
  auto spec = chain_spec(3, 1);
  spec.stages[1].input_shape = {1, 9};   // chain break
  spec.stages[2].stage_index = 1;        // duplicate
  spec.stages[0].blob_checksum = "XYZ";  // not hex
  try {
    validate_pipeline_spec(spec);
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(e.has(Errc::kShapeMismatch));
    CHECK(e.has(Errc::kDuplicateStageIndex));
    CHECK(e.has(Errc::kInvalidManifest));
    CHECK(e.violations().size() >= 3);
  }
}

TEST_CASE("empty pipeline and zero inputs are rejected") {
  PipelineSpec empty;
  CHECK(rejects_with(empty, Errc::kEmptyPipeline));
  auto spec = chain_spec(2, 1);
  spec.input_count = 0;
  CHECK(rejects_with(spec, Errc::kValidationFailure));
}

TEST_CASE("eager flag must match stage 0") {
  auto spec = chain_spec(2, 1);
  spec.stages[1].eager_broadcast = true;
  CHECK(rejects_with(spec, Errc::kInvalidManifest));
  spec = chain_spec(2, 1);
  spec.stages[0].eager_broadcast = false;
  CHECK(rejects_with(spec, Errc::kInvalidManifest));
}

TEST_CASE("validation sorts stages and is idempotent") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = static_cast<std::uint32_t>(1 + rng() % 6);
    auto spec = chain_spec(s, 1 + rng() % 5);
    std::shuffle(spec.stages.begin(), spec.stages.end(), rng);
    auto once = validate_pipeline_spec(spec);
    for (std::uint32_t k = 0; k < s; ++k) CHECK(once.spec.stages[k].stage_index == k);
    auto twice = validate_pipeline_spec(once.spec);
    CHECK(twice == once);
  }
}

TEST_CASE("auto topology on k stages is a path of k-1 edges") {
  for (std::size_t k = 1; k <= 12; ++k) {
    auto e = linear_edges(k);
    REQUIRE(e.size() == k - 1);
    for (std::size_t i = 0; i < e.size(); ++i) {
      CHECK(e[i].first == i);
      CHECK(e[i].second == i + 1);
    }
  }
}

TEST_CASE("set_resident keeps the shard on disk") {
  WorkerDescriptor w;
  w.set_resident("cell_a");
  CHECK(w.resident_partition == "cell_a");
  CHECK(w.disk_cache.count("cell_a") == 1);
  w.set_resident("cell_b");
  CHECK(w.resident_partition == "cell_b");
  CHECK(w.disk_cache.size() == 2);
  w.clear_resident();
  CHECK_FALSE(w.resident_partition.has_value());
  CHECK(w.disk_cache.size() == 2);
}

TEST_CASE("telemetry range checks") {
  TelemetrySnapshot t;
  CHECK_NOTHROW(check_telemetry(t));
  t.battery_fraction = 1.5;
  CHECK_THROWS_AS(check_telemetry(t), Error);
  t = {};
  t.cpu_load = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(check_telemetry(t), Error);
}

TEST_CASE("mode names round trip") {
  CHECK(parse_mode(mode_name(ExecutionMode::kBarrier)) == ExecutionMode::kBarrier);
  CHECK(parse_mode("streaming") == ExecutionMode::kStreaming);
  CHECK_THROWS_AS(parse_mode("pipelined"), Error);
}

TEST_CASE("aggregate: elementwise mean and argmax") {
  auto p = aggregate_results({{2, 0}, {0, 1}, {2, 0}});
  REQUIRE(p.mean_logits.size() == 2);
  CHECK(p.mean_logits[0] == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
  CHECK(p.mean_logits[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(p.predicted_class == 0);
  CHECK(aggregate_results({{0.3f, 0.7f}}).predicted_class == 1);
  CHECK(aggregate_results({{0.5f, 0.5f}}).predicted_class == 0);
  CHECK_THROWS_AS(aggregate_results({{1, 2}, {1}}), Error);
}

TEST_CASE("error text carries the code name") {
  Error e(Errc::kChecksumMismatch, "stage 0");
  CHECK(std::string(e.what()) == "ChecksumMismatch: stage 0");
  CHECK(e.code() == Errc::kChecksumMismatch);
}
