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
#include "crowdpipe/core/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "crowdpipe/transport/digest.hpp"

namespace crowdpipe {

namespace {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

std::string join_violations(const std::vector<Violation>& vs) {
  std::string out;
  for (const auto& v : vs) {
    if (!out.empty()) out += "; ";
    out += std::string(errc_name(v.code)) + " (" + v.detail + ")";
  }
  return out;
}

bool has_cycle(std::size_t n,
               const std::vector<std::pair<std::uint32_t, std::uint32_t>>& e) {
  std::vector<std::vector<std::uint32_t>> adj(n);
  std::vector<int> indeg(n, 0);
  for (auto [a, b] : e) {
    adj[a].push_back(b);
    ++indeg[b];
  }
  std::vector<std::uint32_t> ready;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (indeg[i] == 0) ready.push_back(i);
  }
  std::size_t seen = 0;
  while (!ready.empty()) {
    auto v = ready.back();
    ready.pop_back();
    ++seen;
    for (auto w : adj[v]) {
      if (--indeg[w] == 0) ready.push_back(w);
    }
  }
  return seen != n;
}

}  // namespace

const char* mode_name(ExecutionMode mode) {
  return mode == ExecutionMode::kStreaming ? "streaming" : "barrier";
}

ExecutionMode parse_mode(const std::string& name) {
  if (name == "streaming") return ExecutionMode::kStreaming;
  if (name == "barrier") return ExecutionMode::kBarrier;
  throw Error(Errc::kValidationFailure, "unknown execution mode '" + name + "'");
}

const char* role_name(StageRole role) {
  switch (role) {
    case StageRole::kSource: return "source";
    case StageRole::kIntermediate: return "intermediate";
    case StageRole::kSink: return "sink";
    case StageRole::kSourceAndSink: return "source+sink";
  }
  return "?";
}

const char* task_state_name(TaskState state) {
  switch (state) {
    case TaskState::kBlocked: return "blocked";
    case TaskState::kPending: return "pending";
    case TaskState::kDispatched: return "dispatched";
    case TaskState::kRunning: return "running";
    case TaskState::kComplete: return "complete";
    case TaskState::kFailed: return "failed";
  }
  return "?";
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error(violations.size() == 1 ? violations.front().code
                                   : Errc::kValidationFailure,
            join_violations(violations)),
      violations_(std::move(violations)) {}

bool ValidationError::has(Errc code) const {
  return std::any_of(violations_.begin(), violations_.end(),
                     [code](const Violation& v) { return v.code == code; });
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> linear_edges(
    std::size_t stage_count) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  for (std::uint32_t i = 0; i + 1 < stage_count; ++i) out.emplace_back(i, i + 1);
  return out;
}

ValidatedPipeline validate_pipeline_spec(const PipelineSpec& spec) {
  std::vector<Violation> bad;
  const std::size_t n = spec.stages.size();
  if (n == 0) bad.push_back({Errc::kEmptyPipeline, "no stages"});
  if (spec.input_count < 1) {
    bad.push_back({Errc::kValidationFailure, "input_count must be >= 1"});
  }

  std::map<std::uint32_t, const PartitionManifest*> by_index;
  for (const auto& st : spec.stages) {
    if (!by_index.emplace(st.stage_index, &st).second) {
      bad.push_back({Errc::kDuplicateStageIndex,
                     "stage index " + std::to_string(st.stage_index)});
    }
  }
  std::uint32_t expect = 0;
  for (const auto& [idx, _] : by_index) {
    if (idx != expect) {
      bad.push_back({Errc::kInvalidManifest,
                     "stage indices have a gap at " + std::to_string(expect)});
      break;
    }
    ++expect;
  }

  std::set<ArtefactId> ids;
  for (const auto& st : spec.stages) {
    const std::string where = "stage " + std::to_string(st.stage_index);
    if (st.artefact_id.empty()) {
      bad.push_back({Errc::kInvalidManifest, where + ": empty artefact_id"});
    } else if (!ids.insert(st.artefact_id).second) {
      bad.push_back({Errc::kInvalidManifest,
                     where + ": artefact_id reused " + st.artefact_id});
    }
    if (!is_sha256_hex(st.blob_checksum)) {
      bad.push_back({Errc::kInvalidManifest, where + ": checksum not sha256 hex"});
    }
    if (st.blob_size_bytes == 0 || st.memory_footprint_bytes == 0) {
      bad.push_back({Errc::kInvalidManifest, where + ": zero size or footprint"});
    }
    for (const Shape* s : {&st.input_shape, &st.output_shape}) {
      if (s->empty() ||
          std::any_of(s->begin(), s->end(), [](auto d) { return d <= 0; })) {
        bad.push_back({Errc::kInvalidManifest, where + ": bad shape " + shape_str(*s)});
      }
    }
    if (st.eager_broadcast != (st.stage_index == 0)) {
      bad.push_back({Errc::kInvalidManifest,
                     where + ": eager_broadcast must be set only on stage 0"});
    }
  }

  // Shape chaining follows index order, independent of submission order.
  const PartitionManifest* prev = nullptr;
  for (const auto& [idx, st] : by_index) {
    if (prev && prev->output_shape != st->input_shape) {
      bad.push_back({Errc::kShapeMismatch,
                     "stage " + std::to_string(prev->stage_index) + " output " +
                         shape_str(prev->output_shape) + " != stage " +
                         std::to_string(idx) + " input " +
                         shape_str(st->input_shape)});
    }
    prev = st;
  }

  if (spec.edges && n > 0) {
    bool in_range = true;
    for (auto [a, b] : *spec.edges) {
      if (a >= n || b >= n) {
        bad.push_back({Errc::kInvalidManifest, "edge references unknown stage"});
        in_range = false;
        break;
      }
    }
    if (in_range) {
      if (has_cycle(n, *spec.edges)) {
        bad.push_back({Errc::kCyclicTopology, "explicit graph contains a cycle"});
      } else {
        auto sorted = *spec.edges;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != linear_edges(n)) {
          bad.push_back({Errc::kNonLinearTopology,
                         "only linear stage chains are supported"});
        }
      }
    }
  }

  if (!bad.empty()) throw ValidationError(std::move(bad));

  ValidatedPipeline out;
  out.spec = spec;
  std::sort(out.spec.stages.begin(), out.spec.stages.end(),
            [](const auto& a, const auto& b) { return a.stage_index < b.stage_index; });
  for (std::size_t i = 0; i < n; ++i) {
    if (n == 1) {
      out.roles.push_back(StageRole::kSourceAndSink);
    } else if (i == 0) {
      out.roles.push_back(StageRole::kSource);
    } else if (i + 1 == n) {
      out.roles.push_back(StageRole::kSink);
    } else {
      out.roles.push_back(StageRole::kIntermediate);
    }
  }
  return out;
}

void check_telemetry(const TelemetrySnapshot& s) {
  auto finite = [](double v) { return std::isfinite(v); };
  if (!finite(s.cpu_load) || !finite(s.battery_fraction) || !finite(s.rtt_ms) ||
      !finite(s.temperature_c)) {
    throw Error(Errc::kInvalidState, "telemetry field is not finite");
  }
  if (s.cpu_load < 0 || s.cpu_load > 1 || s.battery_fraction < 0 ||
      s.battery_fraction > 1) {
    throw Error(Errc::kInvalidState, "telemetry fraction outside [0,1]");
  }
  if (s.rtt_ms < 0) throw Error(Errc::kInvalidState, "negative rtt");
}

void WorkerDescriptor::set_resident(const ArtefactId& artefact) {
  resident_partition = artefact;
  disk_cache.insert(artefact);
}

}  // namespace crowdpipe
