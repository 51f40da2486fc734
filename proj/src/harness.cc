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

#include "crowdpipe/sim/harness.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <deque>
#include <filesystem>
#include <queue>

#include "crowdpipe/sim/synthetic.hpp"
#include "crowdpipe/transport/digest.hpp"
#include "crowdpipe/worker/agent.hpp"

namespace crowdpipe::sim {

namespace fs = std::filesystem;

namespace {

const std::string kClient = "sim-client";

proto::Message wire(const proto::Message& m) {
  return proto::decode_message(proto::encode_message(m));
}

class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<std::uint64_t> counter{0};
    path_ = fs::temp_directory_path() /
            ("crowdpipe-sim-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct Event {
  enum class Kind { kWorkerDone, kPeriodic, kKill };
  std::int64_t t = 0;
  std::uint64_t seq = 0;
  Kind kind = Kind::kPeriodic;
  std::size_t worker = 0;
  proto::Message message;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    return a.seq > b.seq;
  }
};

struct Lane {
  std::unique_ptr<WorkerAgent> agent;
  std::deque<proto::Message> inbox;
  bool busy = false;
  bool killed = false;
  std::uint64_t beats = 0;
  WorkerStats stats;
};

class Run {
 public:
  Run(const FleetConfig& config, ExecutionMode mode)
      : config_(config),
        mode_(mode),
        pipeline_(make_synthetic_pipeline(config.seed, config.stages, config.inputs,
                                          config.seq_len, config.hidden, config.classes,
                                          config.footprints)),
        store_(std::make_shared<FsPayloadStore>(scratch_.path() / "store")),
        foreman_(ForemanConfig{config.tau_ws, config.strategy, config.heartbeat_ms,
                               config.staleness_multiplier, 3},
                 store_) {
    for (const auto& m : pipeline_.manifests) footprint_[m.artefact_id] = m.memory_footprint_bytes;
    for (const auto& spec : config_.workers) {
      fs::path dir = scratch_.path() / "workers" / spec.id;
      if (!spec.precached.empty()) {
        SessionCache seed_cache(dir);
        for (auto k : spec.precached) {
          const auto& blob = pipeline_.blobs.at(k);
          seed_cache.store_blob(pipeline_.manifests.at(k).artefact_id,
                                {reinterpret_cast<const std::uint8_t*>(blob.data()), blob.size()});
        }
      }
      WorkerAgentConfig wc;
      wc.worker_id = spec.id;
      wc.cache_dir = dir;
      wc.executor = std::make_shared<AffineExecutor>();
      wc.store = store_;
      wc.tau_ws = config_.tau_ws;
      wc.gpu_available = spec.gpu;
      wc.simulated_cold_load_ms = spec.cold_load_ms;
      wc.simulated_warm_load_ms = spec.warm_load_ms;
      Lane lane;
      lane.agent = std::make_unique<WorkerAgent>(std::move(wc));
      lane.stats.id = spec.id;
      index_[spec.id] = lanes_.size();
      lanes_.push_back(std::move(lane));
    }
  }

  ModeReport execute() {
    for (std::size_t w = 0; w < lanes_.size(); ++w) {
      from_worker(w, lanes_[w].agent->registration());
    }
    for (std::size_t w = 0; w < lanes_.size(); ++w) heartbeat(w);

    proto::SubmitPipelineJob sub;
    sub.pipeline_id = "sim-" + std::to_string(config_.seed);
    sub.mode = mode_;
    sub.stages = pipeline_.manifests;
    for (const auto& b : pipeline_.blobs) sub.blobs.push_back(base64_encode(b));
    for (const auto& t : pipeline_.inputs) sub.inputs.push_back(encode_payload(t, Codec::kZlib));
    to_foreman(kClient, sub);

    push({config_.heartbeat_ms, 0, Event::Kind::kPeriodic, 0, {}});
    for (const auto& f : config_.failures) {
      push({f.at_ms, 0, Event::Kind::kKill, index_.at(f.worker), {}});
    }

    std::int64_t last_progress = 0;
    std::int64_t last_t = -1;
    std::uint64_t same_t = 0;
    const std::int64_t stall_limit =
        100 * config_.heartbeat_ms * static_cast<std::int64_t>(config_.staleness_multiplier);
    while (!done_ && !events_.empty()) {
      Event ev = events_.top();
      events_.pop();
      now_ = ev.t;
      same_t = now_ == last_t ? same_t + 1 : 0;
      last_t = now_;
      if (same_t > 1'000'000) {
        error_ = "livelock: virtual time stopped advancing";
        break;
      }
      switch (ev.kind) {
        case Event::Kind::kWorkerDone:
          if (!lanes_[ev.worker].killed) {
            last_progress = now_;
            finish(ev.worker, ev.message);
          }
          break;
        case Event::Kind::kPeriodic:
          for (std::size_t w = 0; w < lanes_.size(); ++w) {
            if (!lanes_[w].killed) heartbeat(w);
          }
          route(foreman_.check_staleness(now_));
          if (now_ - last_progress > stall_limit) {
            error_ = "run stalled";
            done_ = true;
          }
          push({now_ + config_.heartbeat_ms, 0, Event::Kind::kPeriodic, 0, {}});
          break;
        case Event::Kind::kKill: {
          Lane& l = lanes_[ev.worker];
          l.killed = true;
          l.stats.killed = true;
          l.inbox.clear();
          l.busy = false;
          break;
        }
      }
    }
    return report();
  }

 private:
  void push(Event ev) {
    ev.seq = next_seq_++;
    events_.push(std::move(ev));
  }

  void trace(TraceEntry::Dir dir, const std::string& peer, const proto::Message& m) {
    if (config_.record_trace) report_.trace.push_back({now_, dir, peer, m});
  }

  void heartbeat(std::size_t w) {
    Lane& l = lanes_[w];
    const auto& rows = config_.workers[w].telemetry;
    TelemetrySnapshot t = rows.empty() ? TelemetrySnapshot{} : rows[l.beats % rows.size()];
    ++l.beats;
    t.timestamp_ms = now_;
    from_worker(w, l.agent->emit_heartbeat(t));
  }

  void from_worker(std::size_t w, const proto::Message& m) {
    trace(TraceEntry::Dir::kFromWorker, lanes_[w].stats.id, m);
    to_foreman(lanes_[w].stats.id, m);
  }

  void to_foreman(const std::string& from, const proto::Message& m) {
    route(foreman_.handle(from, wire(m), now_));
  }

  void route(std::vector<Outbound> out) {
    for (auto& o : out) {
      proto::Message m = wire(o.message);
      if (o.to == Outbound::To::kClient) {
        trace(TraceEntry::Dir::kToClient, o.address, m);
        if (auto* acc = std::get_if<proto::JobAccepted>(&m)) job_id_ = acc->job_id;
        if (auto* rej = std::get_if<proto::JobRejected>(&m)) {
          error_ = rej->reason;
          done_ = true;
        }
        if (auto* res = std::get_if<proto::JobResult>(&m)) {
          result_ = *res;
          done_ = true;
        }
        continue;
      }
      std::size_t w = index_.at(o.address);
      Lane& l = lanes_[w];
      if (l.killed) continue;
      trace(TraceEntry::Dir::kToWorker, o.address, m);
      if (std::holds_alternative<proto::LoadModel>(m)) ++report_.load_messages;
      l.inbox.push_back(std::move(m));
      start_next(w);
    }
  }

  std::int64_t delay(std::size_t w, const proto::Message& m) const {
    const WorkerSpec& spec = config_.workers[w];
    if (auto* lm = std::get_if<proto::LoadModel>(&m)) {
      return lm->blob ? spec.cold_load_ms : spec.warm_load_ms;
    }
    if (auto* ta = std::get_if<proto::TaskAssign>(&m)) return spec.compute_for(ta->stage_index);
    return 0;
  }

  void start_next(std::size_t w) {
    Lane& l = lanes_[w];
    if (l.busy || l.inbox.empty()) return;
    proto::Message m = std::move(l.inbox.front());
    l.inbox.pop_front();
    l.busy = true;
    push({now_ + delay(w, m), 0, Event::Kind::kWorkerDone, w, std::move(m)});
  }

  void finish(std::size_t w, const proto::Message& m) {
    Lane& l = lanes_[w];
    l.busy = false;
    for (const auto& reply : l.agent->handle(m)) {
      if (auto* loaded = std::get_if<proto::ModelLoaded>(&reply)) {
        l.stats.loaded.push_back(loaded->artefact_id);
        auto it = footprint_.find(loaded->artefact_id);
        if (it != footprint_.end()) {
          l.stats.max_loaded_footprint = std::max(l.stats.max_loaded_footprint, it->second);
        }
      }
      if (auto* res = std::get_if<proto::TaskResult>(&reply)) {
        ++l.stats.tasks;
        PayloadEnvelope env = resolve_payload(res->output, *store_);
        const std::size_t raw =
            element_size(parse_dtype(env.dtype)) * element_count(env.shape);
        const std::size_t enc = encoded_length(env);
        report_.raw_bytes += raw;
        report_.compressed_bytes += enc;
        ratios_.push_back(compression_ratio(raw, enc));
      }
      from_worker(w, reply);
    }
    start_next(w);
  }

  ModeReport report() {
    ModeReport& r = report_;
    r.mode = mode_;
    r.rounds = foreman_.rounds();
    r.recovery = foreman_.recovery_log();
    if (!ratios_.empty()) {
      double sum = 0;
      for (double x : ratios_) sum += x;
      r.mean_compression_pct = sum / static_cast<double>(ratios_.size());
    }
    for (auto& l : lanes_) {
      l.stats.peak_rss_bytes = l.agent->cache().peak_rss_bytes();
      l.stats.max_concurrent_sessions = l.agent->cache().max_concurrent_sessions();
      r.workers.push_back(l.stats);
    }
    if (!job_id_.empty()) {
      const JobRecord& job = foreman_.job(job_id_);
      r.tier_hits = job.metrics.tier_hits;
      const auto& m = job.metrics;
      for (std::uint32_t k = 0; k < job.graph.stage_count(); ++k) {
        std::vector<std::int64_t> lat;
        for (std::uint32_t i = 0; i < job.graph.input_count(); ++i) {
          TaskId id = job.graph.id_of(k, i);
          if (m.completed_at[id] >= 0) lat.push_back(m.completed_at[id] - m.pending_since[id]);
        }
        LatencySummary s;
        s.stage = k;
        s.count = static_cast<std::uint32_t>(lat.size());
        if (!lat.empty()) {
          std::sort(lat.begin(), lat.end());
          s.min_ms = lat.front();
          s.max_ms = lat.back();
          s.p50_ms = lat[(lat.size() - 1) / 2];
          double sum = 0;
          for (auto x : lat) sum += static_cast<double>(x);
          s.mean_ms = sum / static_cast<double>(lat.size());
        }
        r.stage_latency.push_back(s);
      }
      if (job.status == JobStatus::kComplete) {
        const std::uint32_t sink = job.graph.stage_count() - 1;
        for (std::uint32_t i = 0; i < job.graph.input_count(); ++i) {
          const auto& out = job.graph.output(job.graph.id_of(sink, i));
          r.sink_outputs.push_back(decode_payload(resolve_payload(*out, *store_)));
        }
      }
      r.makespan_ms = (job.status == JobStatus::kRunning ? now_ : m.finished_ms) - m.submitted_ms;
    }
    if (result_) {
      r.status = result_->status;
      r.error = result_->error;
      if (result_->status == "complete") {
        r.prediction = Prediction{result_->mean_logits, result_->predicted_class};
      }
    } else {
      r.status = "failed";
      r.error = error_.empty() ? "no result" : error_;
    }
    return std::move(r);
  }

  const FleetConfig& config_;
  ExecutionMode mode_;
  ScratchDir scratch_;
  SyntheticPipeline pipeline_;
  std::shared_ptr<FsPayloadStore> store_;
  Foreman foreman_;
  std::vector<Lane> lanes_;
  std::map<WorkerId, std::size_t> index_;
  std::map<ArtefactId, std::uint64_t> footprint_;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::uint64_t next_seq_ = 0;
  std::int64_t now_ = 0;
  bool done_ = false;
  JobId job_id_;
  std::optional<proto::JobResult> result_;
  std::string error_;
  std::vector<double> ratios_;
  ModeReport report_;
};

}  // namespace

const ModeReport* MetricsReport::find(ExecutionMode mode) const {
  for (const auto& m : modes) {
    if (m.mode == mode) return &m;
  }
  return nullptr;
}

ModeReport run_mode(const FleetConfig& config, ExecutionMode mode) {
  check_config(config);
  Run run(config, mode);
  return run.execute();
}

MetricsReport run_experiment(const FleetConfig& config) {
  check_config(config);
  MetricsReport r;
  r.seed = config.seed;
  for (auto mode : config.modes) r.modes.push_back(run_mode(config, mode));
  return r;
}

}  // namespace crowdpipe::sim
