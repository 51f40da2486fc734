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

// The foreman is a deterministic state machine: every entry point takes the
// current time and returns the messages to send. Network servers and the
// simulation harness both drive it from a single event loop.
//
// Scheduling pass, run after every state change that can free a worker or
// unblock a task:
//   1. run a two-phase assignment round over pending tasks and idle workers;
//   2. place queued load requests on workers still idle;
//   3. for any artefact whose tasks are still pending after the round,
//      queue one more replica load unless one is already queued or in
//      flight, then try to place it.
// Claims go first so a freshly loaded worker is never handed a new load
// before it picks up the work it was loaded for.
// A worker is "protected" while it is the only connected holder of a shard
// that still has pending or blocked tasks. Load placement skips protected
// workers. When every connected worker is protected, a load may evict one
// only if its own shard has tasks ready to run.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "crowdpipe/graph/task_graph.hpp"
#include "crowdpipe/protocol/messages.hpp"
#include "crowdpipe/sched/affinity.hpp"
#include "crowdpipe/transport/codec.hpp"
#include "crowdpipe/transport/routing.hpp"

namespace crowdpipe {

struct ForemanConfig {
  std::size_t tau_ws = kDefaultTauWs;
  std::string strategy = "entropy_weighted_sum";
  std::int64_t heartbeat_interval_ms = 30000;
  int staleness_multiplier = 3;
  std::uint32_t max_attempts = 3;
};

struct Prediction {
  std::vector<double> mean_logits;
  std::int64_t predicted_class = -1;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Elementwise mean; argmax with the lowest index winning ties. Throws
/// kShapeMismatch on ragged input.
Prediction aggregate_results(const std::vector<std::vector<float>>& logits);

/// Survivor score used when re-placing work after a disconnect: entropy
/// weighted sum over (success rate, free RAM, battery, GPU flag) after
/// min-max normalization, plus (5 - tier) * 0.25.
std::vector<double> recovery_scores(const ArtefactId& target,
                                    std::span<const WorkerDescriptor> workers);

enum class JobStatus { kRunning, kComplete, kFailed };

const char* job_status_name(JobStatus status);

struct JobMetrics {
  std::int64_t submitted_ms = 0;
  std::int64_t finished_ms = 0;
  std::array<std::uint64_t, 4> tier_hits{};  // loads served at tiers 1..4
  std::uint64_t raw_bytes = 0;
  std::uint64_t compressed_bytes = 0;
  std::map<WorkerId, std::uint64_t> peak_footprint;
  std::vector<std::int64_t> pending_since;  // per task, -1 until pending
  std::vector<std::int64_t> completed_at;   // per task, -1 until complete
  std::uint32_t redispatches = 0;
};

struct JobRecord {
  JobId job_id;
  std::uint64_t seq = 0;
  std::string client;
  ValidatedPipeline pipeline;
  TaskGraph graph;
  // Load instructions for stages 1..S-1, held until first upstream
  // completion.
  std::map<std::uint32_t, proto::LoadModel> pending_load_instructions;
  std::set<std::uint32_t> jit_dispatched;
  std::map<std::uint32_t, std::uint32_t> jit_triggers;  // stage -> count
  JobStatus status = JobStatus::kRunning;
  std::optional<Prediction> result;
  std::string error;
  JobMetrics metrics;

  const ArtefactId& artefact(std::uint32_t stage) const {
    return pipeline.spec.stages.at(stage).artefact_id;
  }
};

struct Outbound {
  enum class To { kWorker, kClient };
  To to = To::kWorker;
  std::string address;
  proto::Message message;
};

struct RecoveryEvent {
  WorkerId worker_id;
  std::int64_t detected_ms = 0;
  std::uint64_t detection_round = 0;
  struct Affected {
    JobId job_id;
    TaskId task_id = 0;
    std::optional<std::uint64_t> redispatch_round;
    std::optional<std::int64_t> redispatch_ms;
  };
  std::vector<Affected> tasks;
};

class Foreman {
 public:
  Foreman(ForemanConfig config, std::shared_ptr<PayloadStore> store);

  /// Dispatches by message type. Protocol errors on worker messages (stale
  /// results, unknown tasks) are recorded in errors() and dropped.
  std::vector<Outbound> handle(const std::string& from, const proto::Message& m,
                               std::int64_t now_ms);

  std::vector<Outbound> register_worker(const proto::WorkerRegister& reg,
                                        std::int64_t now_ms);
  /// Throws kUnknownWorker.
  std::vector<Outbound> on_heartbeat(const proto::Heartbeat& hb, std::int64_t now_ms);
  /// Emits JOB_ACCEPTED, stage-0 loads for every connected worker, and
  /// stores the downstream load instructions. On validation or checksum
  /// failure emits only JOB_REJECTED.
  std::vector<Outbound> create_job(const proto::SubmitPipelineJob& submission,
                                   const std::string& client, std::int64_t now_ms);
  std::vector<Outbound> on_model_loaded(const proto::ModelLoaded& ack, std::int64_t now_ms);
  std::vector<Outbound> on_model_load_failed(const proto::ModelLoadFailed& nack,
                                             std::int64_t now_ms);
  std::vector<Outbound> on_model_unloaded(const proto::ModelUnloaded& ack,
                                          std::int64_t now_ms);
  /// Throws kUnknownJob, kUnknownTask, kWrongWorker.
  std::vector<Outbound> on_task_complete(const proto::TaskResult& result,
                                         std::int64_t now_ms);
  std::vector<Outbound> on_task_failed(const proto::TaskFailed& failure,
                                       std::int64_t now_ms);
  std::vector<Outbound> on_worker_disconnect(const WorkerId& worker, std::int64_t now_ms);
  /// Disconnects workers silent for staleness_multiplier intervals.
  std::vector<Outbound> check_staleness(std::int64_t now_ms);

  const JobRecord& job(const JobId& id) const;
  std::vector<JobId> job_ids() const;
  const WorkerDescriptor& worker(const WorkerId& id) const;
  std::vector<WorkerDescriptor> workers() const;
  std::uint64_t rounds() const { return rounds_; }
  const std::vector<RecoveryEvent>& recovery_log() const { return recovery_log_; }
  const std::vector<std::string>& errors() const { return errors_; }
  const ForemanConfig& config() const { return config_; }
  const PayloadStore& store() const { return *store_; }

 private:
  enum class Activity { kIdle, kLoading, kRunning };

  struct Slot {
    WorkerDescriptor desc;
    Activity activity = Activity::kIdle;
    std::optional<ArtefactId> loading;
    std::optional<std::pair<JobId, TaskId>> running;
    std::int64_t last_seen_ms = 0;
  };

  struct Artefact {
    std::string checksum;
    std::string blob_b64;
    std::uint64_t footprint = 0;
  };

  struct LoadRequest {
    ArtefactId artefact;
    JobId job_id;
    bool recovery = false;
    bool replica = false;  // load even if another worker already holds it
  };

  using Out = std::vector<Outbound>;

  Slot& slot(const WorkerId& id);
  JobRecord& job_mut(const JobId& id);
  std::vector<Slot*> ordered_slots();

  void schedule(std::int64_t now, Out& out);
  bool place_load(const LoadRequest& req, std::int64_t now, Out& out);
  void issue_load(Slot& s, const sched::LoadPlan& plan, const JobId& job, Out& out);
  void request_load(JobRecord& job, std::uint32_t stage, bool recovery);
  void assign_round(std::int64_t now, Out& out);
  void queue_deferred_loads(std::int64_t now, Out& out);

  bool resident_anywhere(const ArtefactId& a) const;
  bool load_outstanding(const ArtefactId& a) const;
  bool is_protected(const Slot& s) const;
  bool has_pending_work(const ArtefactId& a) const;
  bool has_unstarted_work(const ArtefactId& a) const;
  void note_tier(const JobId& job, sched::ResidencyTier tier);

  void finish_job(JobRecord& job, std::int64_t now, Out& out);
  void fail_job(JobRecord& job, const std::string& why, std::int64_t now, Out& out);
  proto::JobResult result_message(const JobRecord& job) const;

  ForemanConfig config_;
  std::shared_ptr<PayloadStore> store_;
  std::unique_ptr<sched::RankingStrategy> strategy_;

  std::map<WorkerId, Slot> slots_;
  std::uint64_t next_registration_ = 0;
  std::map<JobId, JobRecord> jobs_;
  std::uint64_t next_job_ = 1;
  std::map<ArtefactId, Artefact> artefacts_;
  std::vector<LoadRequest> load_queue_;
  std::map<ArtefactId, int> load_failures_;
  std::uint64_t rounds_ = 0;
  std::vector<RecoveryEvent> recovery_log_;
  std::vector<std::string> errors_;
};

}  // namespace crowdpipe
