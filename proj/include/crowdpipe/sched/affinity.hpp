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

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "crowdpipe/core/model.hpp"

namespace crowdpipe::sched {

enum class ResidencyTier : int { kResident = 1, kCached = 2, kIdle = 3, kEvict = 4 };

inline int tier_value(ResidencyTier t) { return static_cast<int>(t); }
const char* tier_name(ResidencyTier t);

/// Orders a set of workers, best first. Implementations must be pure
/// functions of their input.
class RankingStrategy {
 public:
  virtual ~RankingStrategy() = default;
  /// Returns indices into workers.
  virtual std::vector<std::size_t> order(
      std::span<const WorkerDescriptor> workers) const = 0;
  virtual std::string name() const = 0;
};

/// Registration order; telemetry is ignored.
class FifoRanking final : public RankingStrategy {
 public:
  std::vector<std::size_t> order(
      std::span<const WorkerDescriptor> workers) const override;
  std::string name() const override { return "fifo"; }
};

/// Descending entropy-weighted score over heartbeat telemetry; ties by
/// worker id.
class EntropyWeightedRanking final : public RankingStrategy {
 public:
  std::vector<std::size_t> order(
      std::span<const WorkerDescriptor> workers) const override;
  std::string name() const override { return "entropy_weighted_sum"; }
};

/// "fifo" or "entropy_weighted_sum"; throws kConfigError otherwise.
std::unique_ptr<RankingStrategy> make_strategy(const std::string& name);

ResidencyTier compute_tier(const ArtefactId& target, const WorkerDescriptor& w);

/// Connected workers whose confirmed resident shard is target.
std::vector<WorkerDescriptor> gate_workers(const ArtefactId& target,
                                           std::span<const WorkerDescriptor> fleet);

/// Throws kEmptyEligibleSet.
std::vector<WorkerDescriptor> rank_workers(
    std::span<const WorkerDescriptor> eligible, const RankingStrategy& strategy);

struct LoadPlan {
  WorkerId worker_id;
  ResidencyTier tier = ResidencyTier::kIdle;
  // Set whenever the chosen worker holds a different shard. That is always
  // the case at tier 4 and can also happen at tier 2.
  std::optional<ArtefactId> unload_first;
  ArtefactId load;

  bool is_noop() const { return tier == ResidencyTier::kResident; }
  bool from_disk() const { return tier == ResidencyTier::kCached; }
};

/// Lowest tier wins; ties within a tier go to the strategy's order.
/// Throws kNoWorkersAvailable when no candidate is connected.
LoadPlan select_load_target(const ArtefactId& target,
                            std::span<const WorkerDescriptor> fleet,
                            const RankingStrategy& strategy);

/// A pending task as the scheduler sees it. Callers pass demands in
/// priority order (job submission order, then task id).
struct TaskDemand {
  JobId job_id;
  TaskId task_id = 0;
  ArtefactId artefact;
};

enum class AssignPhase { kClaimed, kMcdm };

struct Assignment {
  std::size_t demand = 0;  // index into the demand list
  WorkerId worker_id;
  AssignPhase phase = AssignPhase::kClaimed;
};

struct AssignmentPlan {
  std::vector<Assignment> assignments;  // claims first, in claim order
  std::vector<std::size_t> deferred;    // demands with no gated worker left
};

/// Phase 1: resident workers claim one matching demand each, rarest shard
/// first (replica count within fleet, then worker id). Phase 2: remaining
/// demands in order take the best-ranked gated worker still free.
AssignmentPlan two_phase_assign(std::span<const TaskDemand> pending,
                                std::span<const WorkerDescriptor> fleet,
                                const RankingStrategy& strategy);

}  // namespace crowdpipe::sched
