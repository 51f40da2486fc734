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

#include "crowdpipe/sim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "crowdpipe/protocol/messages.hpp"

namespace crowdpipe::sim {

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(Errc::kConfigError, what); }

void only_keys(const Json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) bad(std::string(where) + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, _] : j.items()) {
    if (!allowed.count(k)) bad(std::string("unknown key '") + k + "' in " + where);
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    bad(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

TelemetrySnapshot telemetry_row_from_json(const Json& j) {
  only_keys(j, {"cpu_load", "ram_free_bytes", "battery_fraction", "rtt_ms", "temperature_c",
                "timestamp_ms"},
            "telemetry row");
  TelemetrySnapshot t;
  read(j, "cpu_load", t.cpu_load);
  read(j, "ram_free_bytes", t.ram_free_bytes);
  read(j, "battery_fraction", t.battery_fraction);
  read(j, "rtt_ms", t.rtt_ms);
  read(j, "temperature_c", t.temperature_c);
  read(j, "timestamp_ms", t.timestamp_ms);
  try {
    check_telemetry(t);
  } catch (const Error& e) {
    bad(e.what());
  }
  return t;
}

std::vector<TelemetrySnapshot> load_telemetry_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kFileMissing, path);
  std::stringstream ss;
  ss << in.rdbuf();
  Json j = parse_json(ss.str());
  if (!j.is_array()) bad(path + ": telemetry profile must be an array of rows");
  std::vector<TelemetrySnapshot> rows;
  for (const auto& row : j) rows.push_back(telemetry_row_from_json(row));
  return rows;
}

std::int64_t WorkerSpec::compute_for(std::uint32_t stage) const {
  if (compute_ms.empty()) return 0;
  if (compute_ms.size() == 1) return compute_ms.front();
  return compute_ms.at(stage);
}

std::uint64_t FleetConfig::footprint(std::uint32_t stage) const {
  if (stage < footprints.size()) return footprints[stage];
  return (stage + 1) * (10ull << 20);
}

void check_config(const FleetConfig& c) {
  if (c.inputs < 1) bad("inputs must be >= 1");
  if (c.stages < 1) bad("stages must be >= 1");
  if (c.modes.empty()) bad("no modes");
  if (c.tau_ws == 0) bad("tau_ws must be > 0");
  if (c.heartbeat_ms <= 0) bad("heartbeat_ms must be > 0");
  if (c.staleness_multiplier < 1) bad("staleness_multiplier must be >= 1");
  if (c.seq_len < 1 || c.hidden < 1 || c.classes < 1) bad("model dims must be >= 1");
  for (std::uint32_t k = 0; k < c.stages; ++k) {
    if (c.footprint(k) == 0) bad("footprints must be > 0");
  }
  if (c.workers.empty()) bad("fleet has no workers");
  std::set<WorkerId> ids;
  for (const auto& w : c.workers) {
    if (w.id.empty()) bad("worker id missing");
    if (!ids.insert(w.id).second) bad("duplicate worker id " + w.id);
    if (w.cold_load_ms < 0 || w.warm_load_ms < 0) bad("negative load delay on " + w.id);
    if (w.compute_ms.size() > 1 && w.compute_ms.size() != c.stages) {
      bad("compute_ms on " + w.id + " needs 1 or " + std::to_string(c.stages) + " entries");
    }
    for (auto d : w.compute_ms) {
      if (d < 0) bad("negative compute delay on " + w.id);
    }
    for (auto k : w.precached) {
      if (k >= c.stages) bad("precached stage out of range on " + w.id);
    }
    for (const auto& t : w.telemetry) {
      try {
        check_telemetry(t);
      } catch (const Error& e) {
        bad(std::string("telemetry on ") + w.id + ": " + e.what());
      }
    }
  }
  for (const auto& f : c.failures) {
    if (!ids.count(f.worker)) bad("failure names unknown worker " + f.worker);
    if (f.at_ms < 0) bad("negative failure time");
  }
  if (c.strategy != "fifo" && c.strategy != "entropy_weighted_sum") {
    bad("unknown strategy '" + c.strategy + "'");
  }
}

FleetConfig config_from_json(const Json& j) {
  only_keys(j, {"inputs", "stages", "modes", "tau_ws", "strategy", "seed", "heartbeat_ms",
                "staleness_multiplier", "seq_len", "hidden", "classes", "footprints",
                "workers", "failures"},
            "config");
  FleetConfig c;
  read(j, "inputs", c.inputs);
  read(j, "stages", c.stages);
  read(j, "tau_ws", c.tau_ws);
  read(j, "strategy", c.strategy);
  read(j, "seed", c.seed);
  read(j, "heartbeat_ms", c.heartbeat_ms);
  read(j, "staleness_multiplier", c.staleness_multiplier);
  read(j, "seq_len", c.seq_len);
  read(j, "hidden", c.hidden);
  read(j, "classes", c.classes);
  read(j, "footprints", c.footprints);
  if (j.contains("modes")) {
    std::vector<std::string> names;
    read(j, "modes", names);
    c.modes.clear();
    for (const auto& n : names) {
      try {
        c.modes.push_back(parse_mode(n));
      } catch (const Error& e) {
        bad(e.what());
      }
    }
  }
  if (j.contains("workers")) {
    if (!j.at("workers").is_array()) bad("workers must be an array");
    for (const auto& wj : j.at("workers")) {
      only_keys(wj, {"id", "compute_ms", "cold_load_ms", "warm_load_ms", "telemetry",
                     "precached", "gpu"},
                "worker");
      WorkerSpec w;
      read(wj, "id", w.id);
      if (wj.contains("compute_ms") && wj.at("compute_ms").is_number()) {
        w.compute_ms = {wj.at("compute_ms").get<std::int64_t>()};
      } else {
        read(wj, "compute_ms", w.compute_ms);
      }
      read(wj, "cold_load_ms", w.cold_load_ms);
      read(wj, "warm_load_ms", w.warm_load_ms);
      read(wj, "precached", w.precached);
      read(wj, "gpu", w.gpu);
      if (wj.contains("telemetry")) {
        if (!wj.at("telemetry").is_array()) bad("telemetry must be an array");
        for (const auto& row : wj.at("telemetry")) {
          w.telemetry.push_back(telemetry_row_from_json(row));
        }
      }
      c.workers.push_back(std::move(w));
    }
  }
  if (j.contains("failures")) {
    if (!j.at("failures").is_array()) bad("failures must be an array");
    for (const auto& fj : j.at("failures")) {
      only_keys(fj, {"worker", "at_ms"}, "failure");
      FailureInjection f;
      read(fj, "worker", f.worker);
      read(fj, "at_ms", f.at_ms);
      c.failures.push_back(std::move(f));
    }
  }
  check_config(c);
  return c;
}

Json config_to_json(const FleetConfig& c) {
  Json modes = Json::array();
  for (auto m : c.modes) modes.push_back(mode_name(m));
  Json workers = Json::array();
  for (const auto& w : c.workers) {
    Json tel = Json::array();
    for (const auto& t : w.telemetry) tel.push_back(proto::telemetry_to_json(t));
    workers.push_back({{"id", w.id},
                       {"compute_ms", w.compute_ms},
                       {"cold_load_ms", w.cold_load_ms},
                       {"warm_load_ms", w.warm_load_ms},
                       {"telemetry", tel},
                       {"precached", w.precached},
                       {"gpu", w.gpu}});
  }
  Json failures = Json::array();
  for (const auto& f : c.failures) failures.push_back({{"worker", f.worker}, {"at_ms", f.at_ms}});
  return Json{{"inputs", c.inputs},
              {"stages", c.stages},
              {"modes", modes},
              {"tau_ws", c.tau_ws},
              {"strategy", c.strategy},
              {"seed", c.seed},
              {"heartbeat_ms", c.heartbeat_ms},
              {"staleness_multiplier", c.staleness_multiplier},
              {"seq_len", c.seq_len},
              {"hidden", c.hidden},
              {"classes", c.classes},
              {"footprints", c.footprints},
              {"workers", workers},
              {"failures", failures}};
}

FleetConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kFileMissing, path);
  std::stringstream ss;
  ss << in.rdbuf();
  Json j;
  try {
    j = parse_json(ss.str());
  } catch (const Error& e) {
    bad(path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace crowdpipe::sim
