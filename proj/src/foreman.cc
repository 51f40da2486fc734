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

#include "crowdpipe/foreman/foreman.hpp"

#include <algorithm>

#include "crowdpipe/sched/entropy.hpp"
#include "crowdpipe/transport/digest.hpp"

namespace crowdpipe {

namespace {

Outbound to_worker(const WorkerId& w, proto::Message m) {
  return {Outbound::To::kWorker, w, std::move(m)};
}

Outbound to_client(const std::string& c, proto::Message m) {
  return {Outbound::To::kClient, c, std::move(m)};
}

}  // namespace

Prediction aggregate_results(const std::vector<std::vector<float>>& logits) {
  if (logits.empty() || logits.front().empty()) {
    throw Error(Errc::kShapeMismatch, "no logits to aggregate");
  }
  const std::size_t classes = logits.front().size();
  std::vector<double> sum(classes, 0.0);
  for (const auto& row : logits) {
    if (row.size() != classes) throw Error(Errc::kShapeMismatch, "ragged logits");
    for (std::size_t c = 0; c < classes; ++c) sum[c] += row[c];
  }
  Prediction p;
  p.mean_logits.resize(classes);
  std::size_t best = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    p.mean_logits[c] = sum[c] / static_cast<double>(logits.size());
    if (p.mean_logits[c] > p.mean_logits[best]) best = c;
  }
  p.predicted_class = static_cast<std::int64_t>(best);
  return p;
}

std::vector<double> recovery_scores(const ArtefactId& target,
                                    std::span<const WorkerDescriptor> workers) {
  std::vector<double> base(workers.size(), 0.5);
  if (workers.size() >= 2) {
    std::vector<std::vector<double>> rows;
    for (const auto& w : workers) {
      const double runs = static_cast<double>(w.success_count + w.failure_count);
      const double success_rate =
          runs > 0 ? static_cast<double>(w.success_count) / runs : 1.0;
      rows.push_back({success_rate, static_cast<double>(w.last_heartbeat.ram_free_bytes),
                      w.last_heartbeat.battery_fraction, w.gpu_available ? 1.0 : 0.0});
    }
    auto m = sched::CriteriaMatrix::from_rows(rows);
    base = sched::weighted_scores(m, sched::entropy_weights(m));
  }
  for (std::size_t i = 0; i < workers.size(); ++i) {
    base[i] += (5 - sched::tier_value(sched::compute_tier(target, workers[i]))) * 0.25;
  }
  return base;
}

const char* job_status_name(JobStatus status) {
  switch (status) {
    case JobStatus::kRunning: return "running";
    case JobStatus::kComplete: return "complete";
    case JobStatus::kFailed: return "failed";
  }
  return "?";
}

Foreman::Foreman(ForemanConfig config, std::shared_ptr<PayloadStore> store)
    : config_(std::move(config)),
      store_(std::move(store)),
      strategy_(sched::make_strategy(config_.strategy)) {
  if (!store_) throw Error(Errc::kConfigError, "foreman needs a payload store");
  if (config_.tau_ws == 0) throw Error(Errc::kConfigError, "tau_ws must be > 0");
}

Foreman::Slot& Foreman::slot(const WorkerId& id) {
  auto it = slots_.find(id);
  if (it == slots_.end()) throw Error(Errc::kUnknownWorker, id);
  return it->second;
}

JobRecord& Foreman::job_mut(const JobId& id) {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(Errc::kUnknownJob, id);
  return it->second;
}

const JobRecord& Foreman::job(const JobId& id) const {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw Error(Errc::kUnknownJob, id);
  return it->second;
}

std::vector<JobId> Foreman::job_ids() const {
  std::vector<const JobRecord*> js;
  for (const auto& [_, j] : jobs_) js.push_back(&j);
  std::sort(js.begin(), js.end(), [](auto* a, auto* b) { return a->seq < b->seq; });
  std::vector<JobId> out;
  for (auto* j : js) out.push_back(j->job_id);
  return out;
}

const WorkerDescriptor& Foreman::worker(const WorkerId& id) const {
  auto it = slots_.find(id);
  if (it == slots_.end()) throw Error(Errc::kUnknownWorker, id);
  return it->second.desc;
}

std::vector<WorkerDescriptor> Foreman::workers() const {
  std::vector<WorkerDescriptor> out;
  for (const auto& [_, s] : slots_) out.push_back(s.desc);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.registration_seq < b.registration_seq;
  });
  return out;
}

std::vector<Foreman::Slot*> Foreman::ordered_slots() {
  std::vector<Slot*> out;
  for (auto& [_, s] : slots_) out.push_back(&s);
  std::sort(out.begin(), out.end(), [](Slot* a, Slot* b) {
    return a->desc.registration_seq < b->desc.registration_seq;
  });
  return out;
}

std::vector<Outbound> Foreman::handle(const std::string& from, const proto::Message& m,
                                      std::int64_t now) {
  try {
    std::visit(
        [&](const auto& msg) {
          if constexpr (requires { msg.worker_id; }) {
            auto it = slots_.find(msg.worker_id);
            if (it != slots_.end() && it->second.desc.connected) it->second.last_seen_ms = now;
          }
        },
        m);
    return std::visit(
        [&](const auto& msg) -> std::vector<Outbound> {
          using T = std::decay_t<decltype(msg)>;
          if constexpr (std::is_same_v<T, proto::WorkerRegister>) {
            return register_worker(msg, now);
          } else if constexpr (std::is_same_v<T, proto::Heartbeat>) {
            return on_heartbeat(msg, now);
          } else if constexpr (std::is_same_v<T, proto::SubmitPipelineJob>) {
            return create_job(msg, from, now);
          } else if constexpr (std::is_same_v<T, proto::ModelLoaded>) {
            return on_model_loaded(msg, now);
          } else if constexpr (std::is_same_v<T, proto::ModelLoadFailed>) {
            return on_model_load_failed(msg, now);
          } else if constexpr (std::is_same_v<T, proto::ModelUnloaded>) {
            return on_model_unloaded(msg, now);
          } else if constexpr (std::is_same_v<T, proto::TaskResult>) {
            return on_task_complete(msg, now);
          } else if constexpr (std::is_same_v<T, proto::TaskFailed>) {
            return on_task_failed(msg, now);
          } else {
            throw Error(Errc::kProtocolError,
                        std::string("unexpected ") + proto::message_type(m));
          }
        },
        m);
  } catch (const Error& e) {
    errors_.push_back(e.what());
    return {};
  }
}

std::vector<Outbound> Foreman::register_worker(const proto::WorkerRegister& reg,
                                               std::int64_t now) {
  Out out;
  auto known = slots_.find(reg.worker_id);
  if (known != slots_.end() && known->second.desc.connected &&
      known->second.activity != Activity::kIdle) {
    // Reconnected before the old link went stale; whatever it held is lost.
    out = on_worker_disconnect(reg.worker_id, now);
  }
  auto [it, fresh] = slots_.try_emplace(reg.worker_id);
  Slot& s = it->second;
  if (fresh) {
    s.desc.worker_id = reg.worker_id;
    s.desc.registration_seq = next_registration_++;
  }
  // A (re)registering worker starts with no session.
  s.desc.connected = true;
  s.desc.gpu_available = reg.gpu_available;
  s.desc.clear_resident();
  s.activity = Activity::kIdle;
  s.loading.reset();
  s.running.reset();
  s.last_seen_ms = now;
  schedule(now, out);
  return out;
}

std::vector<Outbound> Foreman::on_heartbeat(const proto::Heartbeat& hb, std::int64_t now) {
  Slot& s = slot(hb.worker_id);
  check_telemetry(hb.telemetry);
  Out out;
  s.desc.last_heartbeat = hb.telemetry;
  s.desc.disk_cache = std::set<ArtefactId>(hb.cached.begin(), hb.cached.end());
  s.last_seen_ms = now;
  if (!s.desc.connected) {
    // Rejoin: trust the worker's own view of its session.
    s.desc.connected = true;
    s.activity = Activity::kIdle;
    s.loading.reset();
    s.running.reset();
    if (hb.resident) {
      s.desc.set_resident(*hb.resident);
    } else {
      s.desc.clear_resident();
    }
    schedule(now, out);
  } else if (s.desc.resident_partition) {
    s.desc.disk_cache.insert(*s.desc.resident_partition);
  }
  return out;
}

std::vector<Outbound> Foreman::create_job(const proto::SubmitPipelineJob& sub,
                                          const std::string& client, std::int64_t now) {
  Out out;
  auto reject = [&](const std::string& why) {
    out.push_back(to_client(client, proto::JobRejected{sub.pipeline_id, why}));
    return out;
  };

  PipelineSpec spec;
  spec.pipeline_id = sub.pipeline_id;
  spec.stages = sub.stages;
  spec.execution_mode = sub.mode;
  spec.input_count = static_cast<std::uint32_t>(sub.inputs.size());
  if (sub.inputs.empty()) return reject("ValidationFailure: no inputs");
  if (sub.blobs.size() != sub.stages.size()) {
    return reject("ValidationFailure: blob count does not match stage count");
  }

  ValidatedPipeline validated;
  try {
    validated = validate_pipeline_spec(spec);
  } catch (const Error& e) {
    return reject(e.what());
  }

  for (std::size_t i = 0; i < sub.stages.size(); ++i) {
    const auto& st = sub.stages[i];
    std::vector<std::uint8_t> blob;
    try {
      blob = base64_decode(sub.blobs[i]);
    } catch (const Error& e) {
      return reject(e.what());
    }
    if (sha256_hex(blob) != st.blob_checksum || blob.size() != st.blob_size_bytes) {
      return reject("ChecksumMismatch: blob for " + st.artefact_id);
    }
    auto known = artefacts_.find(st.artefact_id);
    if (known != artefacts_.end() && known->second.checksum != st.blob_checksum) {
      return reject("ChecksumMismatch: artefact id " + st.artefact_id +
                    " already registered with different content");
    }
  }

  const auto& stage0 = validated.spec.stages.front();
  std::vector<PayloadRouting> inputs;
  for (const auto& env : sub.inputs) {
    if (env.shape != stage0.input_shape) {
      return reject("ShapeMismatch: input shape differs from stage 0 input_shape");
    }
    try {
      decode_payload(env);
      inputs.push_back(route_payload(env, config_.tau_ws, *store_));
    } catch (const Error& e) {
      return reject(e.what());
    }
  }

  for (std::size_t i = 0; i < sub.stages.size(); ++i) {
    const auto& st = sub.stages[i];
    artefacts_[st.artefact_id] = {st.blob_checksum, sub.blobs[i], st.memory_footprint_bytes};
  }

  JobRecord job;
  job.job_id = "job-" + std::to_string(next_job_);
  job.seq = next_job_++;
  job.client = client;
  job.pipeline = validated;
  job.graph = TaskGraph::materialize(validated.spec);
  for (std::uint32_t i = 0; i < inputs.size(); ++i) job.graph.set_input(i, inputs[i]);
  const std::size_t total = job.graph.tasks().size();
  job.metrics.submitted_ms = now;
  job.metrics.pending_since.assign(total, -1);
  job.metrics.completed_at.assign(total, -1);
  for (const auto& t : job.graph.tasks()) {
    if (t.state == TaskState::kPending) job.metrics.pending_since[t.task_id] = now;
  }
  for (const auto& st : validated.spec.stages) {
    if (st.stage_index == 0) continue;
    job.pending_load_instructions[st.stage_index] =
        proto::LoadModel{st.artefact_id, st.blob_checksum, st.memory_footprint_bytes,
                         artefacts_[st.artefact_id].blob_b64};
  }
  const JobId id = job.job_id;
  auto [it, _] = jobs_.emplace(id, std::move(job));
  JobRecord& rec = it->second;

  out.push_back(to_client(client, proto::JobAccepted{id, sub.pipeline_id,
                                                     static_cast<std::uint32_t>(total)}));

  // Eager broadcast of stage 0.
  for (Slot* s : ordered_slots()) {
    if (!s->desc.connected) continue;
    auto tier = sched::compute_tier(stage0.artefact_id, s->desc);
    if (tier == sched::ResidencyTier::kResident) {
      note_tier(id, tier);
      rec.metrics.peak_footprint[s->desc.worker_id] = stage0.memory_footprint_bytes;
      continue;
    }
    if (s->activity != Activity::kIdle) continue;
    sched::LoadPlan plan;
    plan.worker_id = s->desc.worker_id;
    plan.tier = tier;
    plan.load = stage0.artefact_id;
    plan.unload_first = s->desc.resident_partition;
    issue_load(*s, plan, id, out);
  }
  schedule(now, out);
  return out;
}

void Foreman::note_tier(const JobId& job, sched::ResidencyTier tier) {
  auto it = jobs_.find(job);
  if (it != jobs_.end()) ++it->second.metrics.tier_hits[sched::tier_value(tier) - 1];
}

void Foreman::issue_load(Slot& s, const sched::LoadPlan& plan, const JobId& job, Out& out) {
  const Artefact& a = artefacts_.at(plan.load);
  note_tier(job, plan.tier);
  s.activity = Activity::kLoading;
  s.loading = plan.load;
  if (plan.unload_first) {
    out.push_back(to_worker(s.desc.worker_id, proto::UnloadModel{*plan.unload_first}));
  }
  proto::LoadModel lm{plan.load, a.checksum, a.footprint, std::nullopt};
  if (!s.desc.disk_cache.count(plan.load)) lm.blob = a.blob_b64;
  out.push_back(to_worker(s.desc.worker_id, std::move(lm)));
}

bool Foreman::resident_anywhere(const ArtefactId& a) const {
  for (const auto& [_, s] : slots_) {
    if (s.desc.connected && s.desc.resident_partition == a) return true;
  }
  return false;
}

bool Foreman::load_outstanding(const ArtefactId& a) const {
  for (const auto& r : load_queue_) {
    if (r.artefact == a) return true;
  }
  for (const auto& [_, s] : slots_) {
    if (s.desc.connected && s.activity == Activity::kLoading && s.loading == a) return true;
  }
  return false;
}

bool Foreman::is_protected(const Slot& s) const {
  if (!s.desc.connected || !s.desc.resident_partition) return false;
  const ArtefactId& held = *s.desc.resident_partition;
  for (const auto& [_, other] : slots_) {
    if (&other != &s && other.desc.connected && other.desc.resident_partition == held) {
      return false;
    }
  }
  return has_unstarted_work(held);
}

bool Foreman::has_unstarted_work(const ArtefactId& a) const {
  for (const auto& [_, job] : jobs_) {
    if (job.status != JobStatus::kRunning) continue;
    for (const auto& t : job.graph.tasks()) {
      if ((t.state == TaskState::kPending || t.state == TaskState::kBlocked) &&
          job.artefact(t.stage_index) == a) {
        return true;
      }
    }
  }
  return false;
}

bool Foreman::has_pending_work(const ArtefactId& a) const {
  for (const auto& [_, job] : jobs_) {
    if (job.status != JobStatus::kRunning) continue;
    for (const auto& t : job.graph.tasks()) {
      if (t.state == TaskState::kPending && job.artefact(t.stage_index) == a) return true;
    }
  }
  return false;
}

void Foreman::request_load(JobRecord& job, std::uint32_t stage, bool recovery) {
  const ArtefactId& a = job.artefact(stage);
  if (resident_anywhere(a)) {
    note_tier(job.job_id, sched::ResidencyTier::kResident);
    return;
  }
  // Recovery requests go ahead of everything else.
  auto it = std::find_if(load_queue_.begin(), load_queue_.end(),
                         [&](const LoadRequest& r) { return r.artefact == a; });
  if (it != load_queue_.end()) {
    if (!recovery || it->recovery) return;
    load_queue_.erase(it);
  } else if (load_outstanding(a)) {
    return;
  }
  LoadRequest req{a, job.job_id, recovery, false};
  if (recovery) {
    auto pos = std::find_if(load_queue_.begin(), load_queue_.end(),
                            [](const LoadRequest& r) { return !r.recovery; });
    load_queue_.insert(pos, std::move(req));
  } else {
    load_queue_.push_back(std::move(req));
  }
}

bool Foreman::place_load(const LoadRequest& req, std::int64_t now, Out& out) {
  (void)now;
  if (!req.replica && resident_anywhere(req.artefact)) {
    note_tier(req.job_id, sched::ResidencyTier::kResident);
    return true;
  }
  std::vector<Slot*> connected;
  for (Slot* s : ordered_slots()) {
    if (s->desc.connected) connected.push_back(s);
  }
  const bool all_protected = std::all_of(connected.begin(), connected.end(),
                                         [&](Slot* s) { return is_protected(*s); });
  if (all_protected && !has_pending_work(req.artefact)) return false;
  std::vector<Slot*> candidates;
  for (Slot* s : connected) {
    if (s->activity == Activity::kIdle && (all_protected || !is_protected(*s))) {
      candidates.push_back(s);
    }
  }
  if (candidates.empty()) return false;

  std::vector<WorkerDescriptor> fleet;
  for (Slot* s : candidates) fleet.push_back(s->desc);

  sched::LoadPlan plan;
  if (req.recovery) {
    auto scores = recovery_scores(req.artefact, fleet);
    std::size_t best = 0;
    for (std::size_t i = 1; i < fleet.size(); ++i) {
      if (scores[i] > scores[best] ||
          (scores[i] == scores[best] && fleet[i].worker_id < fleet[best].worker_id)) {
        best = i;
      }
    }
    plan.worker_id = fleet[best].worker_id;
    plan.tier = sched::compute_tier(req.artefact, fleet[best]);
    plan.load = req.artefact;
    if (fleet[best].resident_partition && *fleet[best].resident_partition != req.artefact) {
      plan.unload_first = fleet[best].resident_partition;
    }
  } else {
    plan = sched::select_load_target(req.artefact, fleet, *strategy_);
  }
  if (plan.is_noop()) {
    note_tier(req.job_id, plan.tier);
    return true;
  }
  issue_load(slot(plan.worker_id), plan, req.job_id, out);
  return true;
}

void Foreman::schedule(std::int64_t now, Out& out) {
  ++rounds_;
  assign_round(now, out);

  std::vector<LoadRequest> waiting;
  auto queue = std::move(load_queue_);
  load_queue_.clear();
  for (auto& req : queue) {
    if (!has_unstarted_work(req.artefact)) continue;
    if (!place_load(req, now, out)) waiting.push_back(std::move(req));
  }
  load_queue_ = std::move(waiting);

  queue_deferred_loads(now, out);
}

void Foreman::assign_round(std::int64_t now, Out& out) {
  std::vector<sched::TaskDemand> demands;
  for (const JobId& id : job_ids()) {
    const JobRecord& job = jobs_.at(id);
    if (job.status != JobStatus::kRunning) continue;
    for (const auto& t : job.graph.tasks()) {
      if (t.state == TaskState::kPending) {
        demands.push_back({id, t.task_id, job.artefact(t.stage_index)});
      }
    }
  }
  if (demands.empty()) return;

  std::vector<WorkerDescriptor> idle;
  for (Slot* s : ordered_slots()) {
    if (s->desc.connected && s->activity == Activity::kIdle) idle.push_back(s->desc);
  }
  if (idle.empty()) return;

  auto plan = sched::two_phase_assign(demands, idle, *strategy_);
  for (const auto& a : plan.assignments) {
    const auto& d = demands[a.demand];
    JobRecord& job = jobs_.at(d.job_id);
    Slot& s = slot(a.worker_id);
    job.graph.mark_dispatched(d.task_id, a.worker_id);
    s.activity = Activity::kRunning;
    s.running = std::make_pair(d.job_id, d.task_id);
    const TaskRecord& t = job.graph.task(d.task_id);
    if (t.attempt_count > 0) {
      ++job.metrics.redispatches;
      for (auto& ev : recovery_log_) {
        for (auto& aff : ev.tasks) {
          if (aff.job_id == d.job_id && aff.task_id == d.task_id && !aff.redispatch_round) {
            aff.redispatch_round = rounds_;
            aff.redispatch_ms = now;
          }
        }
      }
    }
    out.push_back(to_worker(a.worker_id,
                            proto::TaskAssign{d.job_id, d.task_id, t.stage_index,
                                              d.artefact, *t.input_payload}));
  }
}

void Foreman::queue_deferred_loads(std::int64_t now, Out& out) {
  for (const JobId& id : job_ids()) {
    JobRecord& job = jobs_.at(id);
    if (job.status != JobStatus::kRunning) continue;
    std::set<std::uint32_t> stages;
    for (const auto& t : job.graph.tasks()) {
      if (t.state == TaskState::kPending) stages.insert(t.stage_index);
    }
    for (std::uint32_t k : stages) {
      const ArtefactId& a = job.artefact(k);
      if (load_outstanding(a)) continue;
      // not queued when unplaceable; recomputed next round
      place_load(LoadRequest{a, id, false, true}, now, out);
    }
  }
}

std::vector<Outbound> Foreman::on_model_loaded(const proto::ModelLoaded& ack,
                                               std::int64_t now) {
  Slot& s = slot(ack.worker_id);
  Out out;
  if (!s.desc.connected) return out;
  s.activity = Activity::kIdle;
  s.loading.reset();
  s.desc.set_resident(ack.artefact_id);
  load_failures_.erase(ack.artefact_id);
  auto art = artefacts_.find(ack.artefact_id);
  if (art != artefacts_.end()) {
    for (auto& [_, job] : jobs_) {
      if (job.status != JobStatus::kRunning) continue;
      auto& peak = job.metrics.peak_footprint[ack.worker_id];
      peak = std::max(peak, art->second.footprint);
    }
  }
  schedule(now, out);
  return out;
}

std::vector<Outbound> Foreman::on_model_load_failed(const proto::ModelLoadFailed& nack,
                                                    std::int64_t now) {
  Slot& s = slot(nack.worker_id);
  Out out;
  s.activity = Activity::kIdle;
  s.loading.reset();
  // Whatever the worker had on disk is suspect; the next attempt ships the
  // blob.
  s.desc.disk_cache.erase(nack.artefact_id);
  errors_.push_back("load failed on " + nack.worker_id + ": " + nack.reason);
  if (++load_failures_[nack.artefact_id] >= static_cast<int>(config_.max_attempts)) {
    for (auto& [_, job] : jobs_) {
      if (job.status != JobStatus::kRunning) continue;
      for (const auto& st : job.pipeline.spec.stages) {
        if (st.artefact_id == nack.artefact_id) {
          fail_job(job, "artefact " + nack.artefact_id + " repeatedly failed to load: " +
                            nack.reason, now, out);
          break;
        }
      }
    }
  }
  schedule(now, out);
  return out;
}

std::vector<Outbound> Foreman::on_model_unloaded(const proto::ModelUnloaded& ack,
                                                 std::int64_t) {
  Slot& s = slot(ack.worker_id);
  if (s.desc.resident_partition == ack.artefact_id) s.desc.clear_resident();
  return {};
}

std::vector<Outbound> Foreman::on_task_complete(const proto::TaskResult& r,
                                                std::int64_t now) {
  JobRecord& job = job_mut(r.job_id);
  const TaskRecord& t = job.graph.task(r.task_id);
  if (t.assigned_worker != r.worker_id) {
    throw Error(Errc::kWrongWorker, "task " + std::to_string(r.task_id) +
                                        " result from " + r.worker_id);
  }
  Slot& s = slot(r.worker_id);
  Out out;
  s.activity = Activity::kIdle;
  s.running.reset();
  ++s.desc.success_count;
  if (job.status != JobStatus::kRunning) {
    schedule(now, out);
    return out;
  }

  const std::uint32_t stage = t.stage_index;
  try {
    PayloadEnvelope env = resolve_payload(r.output, *store_);
    job.metrics.raw_bytes += element_size(parse_dtype(env.dtype)) * element_count(env.shape);
    job.metrics.compressed_bytes += encoded_length(env);
  } catch (const Error& e) {
    errors_.push_back(std::string("metrics: ") + e.what());
  }
  auto unlocked = job.graph.complete_task(r.task_id, r.output);
  job.metrics.completed_at[r.task_id] = now;
  for (TaskId u : unlocked) job.metrics.pending_since[u] = now;

  const std::uint32_t next = stage + 1;
  if (next < job.graph.stage_count() && !job.jit_dispatched.count(next)) {
    job.jit_dispatched.insert(next);
    ++job.jit_triggers[next];
    request_load(job, next, false);
  }
  if (job.graph.job_complete()) finish_job(job, now, out);
  schedule(now, out);
  return out;
}

std::vector<Outbound> Foreman::on_task_failed(const proto::TaskFailed& f,
                                              std::int64_t now) {
  JobRecord& job = job_mut(f.job_id);
  const TaskRecord& t = job.graph.task(f.task_id);
  if (t.assigned_worker != f.worker_id) {
    throw Error(Errc::kWrongWorker, "task " + std::to_string(f.task_id) +
                                        " failure from " + f.worker_id);
  }
  Slot& s = slot(f.worker_id);
  Out out;
  s.activity = Activity::kIdle;
  s.running.reset();
  ++s.desc.failure_count;
  errors_.push_back("task " + std::to_string(f.task_id) + " failed on " + f.worker_id +
                    ": " + f.reason);
  if (job.status == JobStatus::kRunning) {
    const TaskRecord& reset = job.graph.fail_task(f.task_id);
    job.metrics.pending_since[f.task_id] = now;
    if (reset.attempt_count >= config_.max_attempts) {
      fail_job(job, "task " + std::to_string(f.task_id) + " exhausted retries: " + f.reason,
               now, out);
    }
  }
  schedule(now, out);
  return out;
}

std::vector<Outbound> Foreman::on_worker_disconnect(const WorkerId& id, std::int64_t now) {
  Slot& s = slot(id);
  Out out;
  if (!s.desc.connected) return out;
  s.desc.connected = false;

  RecoveryEvent ev;
  ev.worker_id = id;
  ev.detected_ms = now;
  ev.detection_round = rounds_ + 1;
  std::vector<std::pair<JobRecord*, std::uint32_t>> affected;
  if (s.running) {
    auto [job_id, task_id] = *s.running;
    JobRecord& job = job_mut(job_id);
    if (job.status == JobStatus::kRunning) {
      const TaskRecord& t = job.graph.fail_task(task_id);
      job.metrics.pending_since[task_id] = now;
      ++s.desc.failure_count;
      ev.tasks.push_back({job_id, task_id, std::nullopt, std::nullopt});
      affected.emplace_back(&job, t.stage_index);
    }
  }
  s.activity = Activity::kIdle;
  s.running.reset();
  s.loading.reset();
  recovery_log_.push_back(std::move(ev));

  const bool survivors = std::any_of(slots_.begin(), slots_.end(),
                                     [](const auto& kv) { return kv.second.desc.connected; });
  if (!survivors) {
    for (auto& [_, job] : jobs_) {
      if (job.status == JobStatus::kRunning) fail_job(job, "no workers left", now, out);
    }
    return out;
  }
  for (auto [job, stage] : affected) request_load(*job, stage, true);
  schedule(now, out);
  return out;
}

std::vector<Outbound> Foreman::check_staleness(std::int64_t now) {
  Out out;
  const std::int64_t limit = config_.heartbeat_interval_ms * config_.staleness_multiplier;
  std::vector<WorkerId> stale;
  for (Slot* s : ordered_slots()) {
    if (s->desc.connected && now - s->last_seen_ms >= limit) stale.push_back(s->desc.worker_id);
  }
  for (const auto& id : stale) {
    auto more = on_worker_disconnect(id, now);
    out.insert(out.end(), std::make_move_iterator(more.begin()),
               std::make_move_iterator(more.end()));
  }
  return out;
}

void Foreman::finish_job(JobRecord& job, std::int64_t now, Out& out) {
  const std::uint32_t sink = job.graph.stage_count() - 1;
  std::vector<std::vector<float>> logits;
  try {
    for (std::uint32_t i = 0; i < job.graph.input_count(); ++i) {
      const auto& routing = job.graph.output(job.graph.id_of(sink, i));
      logits.push_back(decode_payload(resolve_payload(*routing, *store_)).as_float_values());
    }
    job.result = aggregate_results(logits);
  } catch (const Error& e) {
    fail_job(job, e.what(), now, out);
    return;
  }
  job.status = JobStatus::kComplete;
  job.metrics.finished_ms = now;
  out.push_back(to_client(job.client, result_message(job)));
}

void Foreman::fail_job(JobRecord& job, const std::string& why, std::int64_t now, Out& out) {
  job.status = JobStatus::kFailed;
  job.error = why;
  job.metrics.finished_ms = now;
  load_queue_.erase(std::remove_if(load_queue_.begin(), load_queue_.end(),
                                   [&](const LoadRequest& r) { return r.job_id == job.job_id; }),
                    load_queue_.end());
  out.push_back(to_client(job.client, result_message(job)));
}

proto::JobResult Foreman::result_message(const JobRecord& job) const {
  proto::JobResult r;
  r.job_id = job.job_id;
  r.status = job_status_name(job.status);
  r.error = job.error;
  if (job.result) {
    r.mean_logits = job.result->mean_logits;
    r.predicted_class = job.result->predicted_class;
  }
  const auto& m = job.metrics;
  Json peaks = Json::object();
  for (const auto& [w, b] : m.peak_footprint) peaks[w] = b;
  r.metrics = Json{
      {"compression",
       {{"compressed_bytes", m.compressed_bytes},
        {"raw_bytes", m.raw_bytes},
        {"ratio_pct", m.raw_bytes ? compression_ratio(m.raw_bytes, m.compressed_bytes) : 0.0}}},
      {"makespan_ms", m.finished_ms - m.submitted_ms},
      {"peak_rss_bytes", peaks},
      {"redispatches", m.redispatches},
      {"tasks", job.graph.tasks().size()},
      {"tier_hits", m.tier_hits}};
  return r;
}

}  // namespace crowdpipe
