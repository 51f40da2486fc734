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
#include "crowdpipe/sched/affinity.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "crowdpipe/sched/entropy.hpp"

namespace crowdpipe::sched {

const char* tier_name(ResidencyTier t) {
  switch (t) {
    case ResidencyTier::kResident: return "resident";
    case ResidencyTier::kCached: return "cached";
    case ResidencyTier::kIdle: return "idle";
    case ResidencyTier::kEvict: return "evict";
  }
  return "?";
}

std::vector<std::size_t> FifoRanking::order(
    std::span<const WorkerDescriptor> workers) const {
  std::vector<std::size_t> idx(workers.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (workers[a].registration_seq != workers[b].registration_seq) {
      return workers[a].registration_seq < workers[b].registration_seq;
    }
    return workers[a].worker_id < workers[b].worker_id;
  });
  return idx;
}

std::vector<std::size_t> EntropyWeightedRanking::order(
    std::span<const WorkerDescriptor> workers) const {
  std::vector<std::size_t> idx(workers.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> score(workers.size(), 0.0);
  if (workers.size() >= 2) {
    CriteriaMatrix m = telemetry_matrix(workers);
    score = weighted_scores(m, entropy_weights(m));
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return workers[a].worker_id < workers[b].worker_id;
  });
  return idx;
}

std::unique_ptr<RankingStrategy> make_strategy(const std::string& name) {
  if (name == "fifo") return std::make_unique<FifoRanking>();
  if (name == "entropy_weighted_sum") return std::make_unique<EntropyWeightedRanking>();
  throw Error(Errc::kConfigError, "unknown scheduler.strategy '" + name + "'");
}

ResidencyTier compute_tier(const ArtefactId& target, const WorkerDescriptor& w) {
  if (w.resident_partition == target) return ResidencyTier::kResident;
  if (w.disk_cache.count(target)) return ResidencyTier::kCached;
  if (!w.resident_partition) return ResidencyTier::kIdle;
  return ResidencyTier::kEvict;
}

std::vector<WorkerDescriptor> gate_workers(const ArtefactId& target,
                                           std::span<const WorkerDescriptor> fleet) {
  std::vector<WorkerDescriptor> out;
  for (const auto& w : fleet) {
    if (w.connected && w.resident_partition == target) out.push_back(w);
  }
  return out;
}

std::vector<WorkerDescriptor> rank_workers(
    std::span<const WorkerDescriptor> eligible, const RankingStrategy& strategy) {
  if (eligible.empty()) throw Error(Errc::kEmptyEligibleSet, "nothing to rank");
  std::vector<WorkerDescriptor> out;
  for (std::size_t i : strategy.order(eligible)) out.push_back(eligible[i]);
  return out;
}

LoadPlan select_load_target(const ArtefactId& target,
                            std::span<const WorkerDescriptor> fleet,
                            const RankingStrategy& strategy) {
  std::vector<WorkerDescriptor> best;
  ResidencyTier best_tier = ResidencyTier::kEvict;
  for (const auto& w : fleet) {
    if (!w.connected) continue;
    ResidencyTier t = compute_tier(target, w);
    if (best.empty() || tier_value(t) < tier_value(best_tier)) {
      best.clear();
      best_tier = t;
    }
    if (t == best_tier) best.push_back(w);
  }
  if (best.empty()) throw Error(Errc::kNoWorkersAvailable, "no connected worker");

  const WorkerDescriptor chosen = rank_workers(best, strategy).front();
  LoadPlan plan;
  plan.worker_id = chosen.worker_id;
  plan.tier = best_tier;
  plan.load = target;
  if (chosen.resident_partition && *chosen.resident_partition != target) {
    plan.unload_first = chosen.resident_partition;
  }
  return plan;
}

AssignmentPlan two_phase_assign(std::span<const TaskDemand> pending,
                                std::span<const WorkerDescriptor> fleet,
                                const RankingStrategy& strategy) {
  AssignmentPlan plan;
  std::vector<bool> taken(pending.size(), false);
  std::vector<bool> busy(fleet.size(), false);

  std::map<ArtefactId, std::size_t> replicas;
  std::vector<std::size_t> resident;
  for (std::size_t i = 0; i < fleet.size(); ++i) {
    if (fleet[i].connected && fleet[i].resident_partition) {
      ++replicas[*fleet[i].resident_partition];
      resident.push_back(i);
    }
  }
  std::sort(resident.begin(), resident.end(), [&](std::size_t a, std::size_t b) {
    auto ra = replicas[*fleet[a].resident_partition];
    auto rb = replicas[*fleet[b].resident_partition];
    if (ra != rb) return ra < rb;
    return fleet[a].worker_id < fleet[b].worker_id;
  });

  for (std::size_t w : resident) {
    for (std::size_t d = 0; d < pending.size(); ++d) {
      if (!taken[d] && pending[d].artefact == *fleet[w].resident_partition) {
        taken[d] = true;
        busy[w] = true;
        plan.assignments.push_back({d, fleet[w].worker_id, AssignPhase::kClaimed});
        break;
      }
    }
  }

  for (std::size_t d = 0; d < pending.size(); ++d) {
    if (taken[d]) continue;
    std::vector<WorkerDescriptor> gated;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      if (!busy[i] && fleet[i].connected &&
          fleet[i].resident_partition == pending[d].artefact) {
        gated.push_back(fleet[i]);
        where.push_back(i);
      }
    }
    if (gated.empty()) {
      plan.deferred.push_back(d);
      continue;
    }
    std::size_t pick = where[strategy.order(gated).front()];
    busy[pick] = true;
    taken[d] = true;
    plan.assignments.push_back({d, fleet[pick].worker_id, AssignPhase::kMcdm});
  }
  return plan;
}

}  // namespace crowdpipe::sched
