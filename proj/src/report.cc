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

#include "crowdpipe/sim/report.hpp"

#include <cstdio>
#include <sstream>

namespace crowdpipe::sim {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

Json mode_to_json(const ModeReport& m) {
  Json workers = Json::array();
  for (const auto& w : m.workers) {
    workers.push_back({{"id", w.id},
                       {"peak_rss_bytes", w.peak_rss_bytes},
                       {"max_loaded_footprint", w.max_loaded_footprint},
                       {"max_concurrent_sessions", w.max_concurrent_sessions},
                       {"loads", w.loaded.size()},
                       {"tasks", w.tasks},
                       {"killed", w.killed}});
  }
  Json latency = Json::array();
  for (const auto& s : m.stage_latency) {
    latency.push_back({{"stage", s.stage},
                       {"count", s.count},
                       {"min_ms", s.min_ms},
                       {"mean_ms", s.mean_ms},
                       {"p50_ms", s.p50_ms},
                       {"max_ms", s.max_ms}});
  }
  Json recovery = Json::array();
  for (const auto& ev : m.recovery) {
    Json tasks = Json::array();
    for (const auto& t : ev.tasks) {
      tasks.push_back({{"job_id", t.job_id},
                       {"task_id", t.task_id},
                       {"redispatch_round",
                        t.redispatch_round ? Json(*t.redispatch_round) : Json(nullptr)},
                       {"redispatch_ms", t.redispatch_ms ? Json(*t.redispatch_ms) : Json(nullptr)}});
    }
    recovery.push_back({{"worker_id", ev.worker_id},
                        {"detected_ms", ev.detected_ms},
                        {"detection_round", ev.detection_round},
                        {"tasks", tasks}});
  }
  Json prediction = nullptr;
  if (m.prediction) {
    prediction = {{"mean_logits", m.prediction->mean_logits},
                  {"predicted_class", m.prediction->predicted_class}};
  }
  return Json{{"mode", mode_name(m.mode)},
              {"status", m.status},
              {"error", m.error},
              {"makespan_ms", m.makespan_ms},
              {"workers", workers},
              {"tier_hits", m.tier_hits},
              {"load_messages", m.load_messages},
              {"compression",
               {{"mean_ratio_pct", m.mean_compression_pct},
                {"raw_bytes", m.raw_bytes},
                {"compressed_bytes", m.compressed_bytes}}},
              {"stage_latency", latency},
              {"recovery", recovery},
              {"prediction", prediction},
              {"rounds", m.rounds}};
}

}  // namespace

ReportFormat parse_report_format(const std::string& name) {
  if (name == "text") return ReportFormat::kText;
  if (name == "json") return ReportFormat::kJson;
  if (name == "csv") return ReportFormat::kCsv;
  throw Error(Errc::kConfigError, "unknown report format '" + name + "'");
}

double streaming_speedup_pct(std::int64_t streaming_ms, std::int64_t barrier_ms) {
  if (barrier_ms <= 0) return 0.0;
  return 100.0 * (1.0 - static_cast<double>(streaming_ms) / static_cast<double>(barrier_ms));
}

Json report_to_json(const MetricsReport& r) {
  Json modes = Json::array();
  for (const auto& m : r.modes) modes.push_back(mode_to_json(m));
  Json j{{"seed", r.seed}, {"modes", modes}};
  const auto* s = r.find(ExecutionMode::kStreaming);
  const auto* b = r.find(ExecutionMode::kBarrier);
  if (s && b) j["streaming_speedup_pct"] = streaming_speedup_pct(s->makespan_ms, b->makespan_ms);
  return j;
}

std::string render_report(const MetricsReport& r, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::kJson:
      out << report_to_json(r).dump(2) << "\n";
      break;
    case ReportFormat::kCsv:
      out << "mode,worker,makespan_ms,peak_rss_bytes,max_loaded_footprint,loads,tasks,killed\n";
      for (const auto& m : r.modes) {
        for (const auto& w : m.workers) {
          out << mode_name(m.mode) << ',' << w.id << ',' << m.makespan_ms << ','
              << w.peak_rss_bytes << ',' << w.max_loaded_footprint << ',' << w.loaded.size()
              << ',' << w.tasks << ',' << (w.killed ? 1 : 0) << "\n";
        }
      }
      break;
    case ReportFormat::kText:
      out << "seed: " << r.seed << "\n";
      for (const auto& m : r.modes) {
        out << "[" << mode_name(m.mode) << "] status=" << m.status;
        if (!m.error.empty()) out << " error=\"" << m.error << "\"";
        out << "\n  makespan: " << m.makespan_ms << " ms\n";
        out << "  tier hits (1..4): " << m.tier_hits[0] << " " << m.tier_hits[1] << " "
            << m.tier_hits[2] << " " << m.tier_hits[3] << "\n";
        out << "  compression: mean " << fixed(m.mean_compression_pct, 2) << "% ("
            << m.compressed_bytes << " of " << m.raw_bytes << " bytes)\n";
        for (const auto& s : m.stage_latency) {
          out << "  stage " << s.stage << " latency ms: min " << s.min_ms << " mean "
              << fixed(s.mean_ms, 1) << " p50 " << s.p50_ms << " max " << s.max_ms << "\n";
        }
        for (const auto& w : m.workers) {
          out << "  worker " << w.id << ": peak rss " << w.peak_rss_bytes << " B, loads "
              << w.loaded.size() << ", tasks " << w.tasks << (w.killed ? ", killed" : "")
              << "\n";
        }
        for (const auto& ev : m.recovery) {
          out << "  recovery: " << ev.worker_id << " detected at " << ev.detected_ms
              << " ms (round " << ev.detection_round << "), " << ev.tasks.size()
              << " task(s) affected\n";
        }
        if (m.prediction) {
          out << "  predicted class: " << m.prediction->predicted_class << "\n";
        }
      }
      if (const auto* s = r.find(ExecutionMode::kStreaming)) {
        if (const auto* b = r.find(ExecutionMode::kBarrier)) {
          out << "streaming/barrier speedup: "
              << fixed(streaming_speedup_pct(s->makespan_ms, b->makespan_ms), 1) << "%\n";
        }
      }
      break;
  }
  return out.str();
}

}  // namespace crowdpipe::sim
