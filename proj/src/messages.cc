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
#include "crowdpipe/protocol/messages.hpp"

#include "crowdpipe/transport/codec.hpp"
#include "crowdpipe/transport/routing.hpp"

namespace crowdpipe::proto {

namespace {

template <class... Fs>
struct Overload : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
Overload(Fs...) -> Overload<Fs...>;

Json opt_string(const std::optional<std::string>& s) {
  return s ? Json(*s) : Json(nullptr);
}

std::optional<std::string> read_opt_string(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

Json manifest_to_json(const PartitionManifest& m) {
  return Json{{"artefact_id", m.artefact_id},
              {"blob_checksum", m.blob_checksum},
              {"blob_size_bytes", m.blob_size_bytes},
              {"eager_broadcast", m.eager_broadcast},
              {"input_shape", m.input_shape},
              {"memory_footprint_bytes", m.memory_footprint_bytes},
              {"output_shape", m.output_shape},
              {"stage_index", m.stage_index}};
}

PartitionManifest manifest_from_json(const Json& j) {
  PartitionManifest m;
  m.artefact_id = j.at("artefact_id").get<std::string>();
  m.blob_checksum = j.at("blob_checksum").get<std::string>();
  m.blob_size_bytes = j.at("blob_size_bytes").get<std::uint64_t>();
  m.eager_broadcast = j.at("eager_broadcast").get<bool>();
  m.input_shape = j.at("input_shape").get<Shape>();
  m.memory_footprint_bytes = j.at("memory_footprint_bytes").get<std::uint64_t>();
  m.output_shape = j.at("output_shape").get<Shape>();
  m.stage_index = j.at("stage_index").get<std::uint32_t>();
  return m;
}

Json telemetry_to_json(const TelemetrySnapshot& t) {
  return Json{{"battery_fraction", t.battery_fraction},
              {"cpu_load", t.cpu_load},
              {"ram_free_bytes", t.ram_free_bytes},
              {"rtt_ms", t.rtt_ms},
              {"temperature_c", t.temperature_c},
              {"timestamp_ms", t.timestamp_ms}};
}

TelemetrySnapshot telemetry_from_json(const Json& j) {
  TelemetrySnapshot t;
  t.battery_fraction = j.at("battery_fraction").get<double>();
  t.cpu_load = j.at("cpu_load").get<double>();
  t.ram_free_bytes = j.at("ram_free_bytes").get<std::uint64_t>();
  t.rtt_ms = j.at("rtt_ms").get<double>();
  t.temperature_c = j.at("temperature_c").get<double>();
  t.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
  return t;
}

const char* message_type(const Message& m) {
  return std::visit(
      Overload{
          [](const WorkerRegister&) { return "WORKER_REGISTER"; },
          [](const Heartbeat&) { return "HEARTBEAT"; },
          [](const SubmitPipelineJob&) { return "SUBMIT_PIPELINE_JOB"; },
          [](const JobAccepted&) { return "JOB_ACCEPTED"; },
          [](const JobRejected&) { return "JOB_REJECTED"; },
          [](const LoadModel&) { return "LOAD_MODEL"; },
          [](const ModelLoaded&) { return "MODEL_LOADED"; },
          [](const ModelLoadFailed&) { return "MODEL_LOAD_FAILED"; },
          [](const UnloadModel&) { return "UNLOAD_MODEL"; },
          [](const ModelUnloaded&) { return "MODEL_UNLOADED"; },
          [](const TaskAssign&) { return "TASK_ASSIGN"; },
          [](const TaskResult&) { return "TASK_RESULT"; },
          [](const TaskFailed&) { return "TASK_FAILED"; },
          [](const JobResult&) { return "JOB_RESULT"; },
      },
      m);
}

Json to_json(const Message& m) {
  Json j = std::visit(
      Overload{
          [](const WorkerRegister& r) {
            return Json{{"capabilities", {{"gpu", r.gpu_available}}},
                        {"worker_id", r.worker_id}};
          },
          [](const Heartbeat& h) {
            return Json{{"cached", h.cached},
                        {"resident", opt_string(h.resident)},
                        {"telemetry", telemetry_to_json(h.telemetry)},
                        {"tracked_rss_bytes", h.tracked_rss_bytes},
                        {"worker_id", h.worker_id}};
          },
          [](const SubmitPipelineJob& s) {
            Json stages = Json::array();
            for (const auto& st : s.stages) stages.push_back(manifest_to_json(st));
            Json inputs = Json::array();
            for (const auto& e : s.inputs) inputs.push_back(envelope_to_json(e));
            return Json{{"blobs", s.blobs},
                        {"inputs", inputs},
                        {"mode", mode_name(s.mode)},
                        {"pipeline_id", s.pipeline_id},
                        {"stages", stages}};
          },
          [](const JobAccepted& a) {
            return Json{{"job_id", a.job_id},
                        {"pipeline_id", a.pipeline_id},
                        {"task_count", a.task_count}};
          },
          [](const JobRejected& r) {
            return Json{{"pipeline_id", r.pipeline_id}, {"reason", r.reason}};
          },
          [](const LoadModel& l) {
            return Json{{"artefact_id", l.artefact_id},
                        {"blob", opt_string(l.blob)},
                        {"checksum", l.checksum},
                        {"footprint_bytes", l.footprint_bytes},
                        {"source", l.blob ? "network" : "disk_cache"}};
          },
          [](const ModelLoaded& l) {
            return Json{{"artefact_id", l.artefact_id},
                        {"load_duration_ms", l.load_duration_ms},
                        {"source", l.source},
                        {"worker_id", l.worker_id}};
          },
          [](const ModelLoadFailed& f) {
            return Json{{"artefact_id", f.artefact_id},
                        {"reason", f.reason},
                        {"worker_id", f.worker_id}};
          },
          [](const UnloadModel& u) { return Json{{"artefact_id", u.artefact_id}}; },
          [](const ModelUnloaded& u) {
            return Json{{"artefact_id", u.artefact_id}, {"worker_id", u.worker_id}};
          },
          [](const TaskAssign& a) {
            return Json{{"artefact_id", a.artefact_id},
                        {"input", routing_to_json(a.input)},
                        {"job_id", a.job_id},
                        {"stage_index", a.stage_index},
                        {"task_id", a.task_id}};
          },
          [](const TaskResult& r) {
            return Json{{"job_id", r.job_id},
                        {"output", routing_to_json(r.output)},
                        {"task_id", r.task_id},
                        {"worker_id", r.worker_id}};
          },
          [](const TaskFailed& f) {
            return Json{{"job_id", f.job_id},
                        {"reason", f.reason},
                        {"task_id", f.task_id},
                        {"worker_id", f.worker_id}};
          },
          [](const JobResult& r) {
            return Json{{"error", r.error},
                        {"job_id", r.job_id},
                        {"mean_logits", r.mean_logits},
                        {"metrics", r.metrics},
                        {"predicted_class", r.predicted_class},
                        {"status", r.status}};
          },
      },
      m);
  j["type"] = message_type(m);
  return j;
}

Message from_json(const Json& j) {
  try {
    const std::string type = j.at("type").get<std::string>();
    if (type == "WORKER_REGISTER") {
      return WorkerRegister{j.at("worker_id").get<std::string>(),
                            j.at("capabilities").value("gpu", false)};
    }
    if (type == "HEARTBEAT") {
      Heartbeat h;
      h.worker_id = j.at("worker_id").get<std::string>();
      h.telemetry = telemetry_from_json(j.at("telemetry"));
      h.resident = read_opt_string(j, "resident");
      h.cached = j.at("cached").get<std::vector<std::string>>();
      h.tracked_rss_bytes = j.at("tracked_rss_bytes").get<std::uint64_t>();
      return h;
    }
    if (type == "SUBMIT_PIPELINE_JOB") {
      SubmitPipelineJob s;
      s.pipeline_id = j.at("pipeline_id").get<std::string>();
      s.mode = parse_mode(j.at("mode").get<std::string>());
      for (const auto& st : j.at("stages")) s.stages.push_back(manifest_from_json(st));
      s.blobs = j.at("blobs").get<std::vector<std::string>>();
      for (const auto& e : j.at("inputs")) s.inputs.push_back(envelope_from_json(e));
      return s;
    }
    if (type == "JOB_ACCEPTED") {
      return JobAccepted{j.at("job_id").get<std::string>(),
                         j.at("pipeline_id").get<std::string>(),
                         j.at("task_count").get<std::uint32_t>()};
    }
    if (type == "JOB_REJECTED") {
      return JobRejected{j.at("pipeline_id").get<std::string>(),
                         j.at("reason").get<std::string>()};
    }
    if (type == "LOAD_MODEL") {
      return LoadModel{j.at("artefact_id").get<std::string>(),
                       j.at("checksum").get<std::string>(),
                       j.at("footprint_bytes").get<std::uint64_t>(),
                       read_opt_string(j, "blob")};
    }
    if (type == "MODEL_LOADED") {
      return ModelLoaded{j.at("worker_id").get<std::string>(),
                         j.at("artefact_id").get<std::string>(),
                         j.at("source").get<std::string>(),
                         j.at("load_duration_ms").get<std::int64_t>()};
    }
    if (type == "MODEL_LOAD_FAILED") {
      return ModelLoadFailed{j.at("worker_id").get<std::string>(),
                             j.at("artefact_id").get<std::string>(),
                             j.at("reason").get<std::string>()};
    }
    if (type == "UNLOAD_MODEL") {
      return UnloadModel{j.at("artefact_id").get<std::string>()};
    }
    if (type == "MODEL_UNLOADED") {
      return ModelUnloaded{j.at("worker_id").get<std::string>(),
                           j.at("artefact_id").get<std::string>()};
    }
    if (type == "TASK_ASSIGN") {
      return TaskAssign{j.at("job_id").get<std::string>(),
                        j.at("task_id").get<TaskId>(),
                        j.at("stage_index").get<std::uint32_t>(),
                        j.at("artefact_id").get<std::string>(),
                        routing_from_json(j.at("input"))};
    }
    if (type == "TASK_RESULT") {
      return TaskResult{j.at("worker_id").get<std::string>(),
                        j.at("job_id").get<std::string>(),
                        j.at("task_id").get<TaskId>(),
                        routing_from_json(j.at("output"))};
    }
    if (type == "TASK_FAILED") {
      return TaskFailed{j.at("worker_id").get<std::string>(),
                        j.at("job_id").get<std::string>(),
                        j.at("task_id").get<TaskId>(),
                        j.at("reason").get<std::string>()};
    }
    if (type == "JOB_RESULT") {
      JobResult r;
      r.job_id = j.at("job_id").get<std::string>();
      r.status = j.at("status").get<std::string>();
      r.mean_logits = j.at("mean_logits").get<std::vector<double>>();
      r.predicted_class = j.at("predicted_class").get<std::int64_t>();
      r.metrics = j.at("metrics");
      r.error = j.value("error", "");
      return r;
    }
    throw Error(Errc::kProtocolError, "unknown message type '" + type + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kProtocolError, e.what());
  }
}

std::string encode_message(const Message& m) { return canonical_dump(to_json(m)); }

Message decode_message(std::string_view frame) { return from_json(parse_json(frame)); }

}  // namespace crowdpipe::proto
