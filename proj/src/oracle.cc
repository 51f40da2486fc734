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

#include "crowdpipe/sim/oracle.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>

namespace crowdpipe::sim {

namespace {

enum class Op { kUnload, kLoad, kTask };

struct Pending {
  std::int64_t t;
  std::uint64_t seq;
  int worker;
  Op op;
  int arg;  // stage for loads, task index for tasks
  bool operator>(const Pending& o) const { return std::tie(t, seq) > std::tie(o.t, o.seq); }
};

struct Node {
  int stage = 0;
  bool done = false;
  bool started = false;
  int waiting = 0;  // unfinished predecessors
};

struct Request {
  int stage;
  bool replica;
};

class Model {
 public:
  Model(const FleetConfig& c, ExecutionMode mode)
      : c_(c), n_(static_cast<int>(c.inputs)), s_(static_cast<int>(c.stages)),
        nw_(static_cast<int>(c.workers.size())) {
    held_.assign(nw_, -1);
    disk_.resize(nw_);
    free_.assign(nw_, true);
    loading_.assign(nw_, -1);
    lane_.resize(nw_);
    lane_busy_.assign(nw_, false);
    shipped_.assign(nw_, false);
    for (int w = 0; w < nw_; ++w) {
      for (auto k : c.workers[w].precached) disk_[w].insert(static_cast<int>(k));
    }
    // Ranking among equally good load targets.
    rank_.resize(nw_);
    std::iota(rank_.begin(), rank_.end(), 0);
    if (c.strategy != "fifo") {
      std::vector<int> by_id(nw_);
      std::iota(by_id.begin(), by_id.end(), 0);
      std::sort(by_id.begin(), by_id.end(),
                [&](int a, int b) { return c.workers[a].id < c.workers[b].id; });
      for (int pos = 0; pos < nw_; ++pos) rank_[by_id[pos]] = pos;
    }
    nodes_.resize(static_cast<std::size_t>(n_ * s_));
    for (int k = 0; k < s_; ++k) {
      for (int i = 0; i < n_; ++i) {
        Node& t = nodes_[k * n_ + i];
        t.stage = k;
        t.waiting = k == 0 ? 0 : (mode == ExecutionMode::kBarrier ? n_ : 1);
      }
    }
    barrier_ = mode == ExecutionMode::kBarrier;
    first_done_.assign(s_, false);
  }

  std::int64_t run() {
    // Job creation: stage 0 goes to every worker.
    for (int w = 0; w < nw_; ++w) {
      if (held_[w] == 0) continue;
      if (free_[w]) load(w, 0);
    }
    pass();
    while (!queue_.empty()) {
      Pending p = queue_.top();
      queue_.pop();
      if (seq_ > 50'000'000) throw Error(Errc::kUnsupportedConfig, "oracle model diverged");
      now_ = p.t;
      lane_busy_[p.worker] = false;
      switch (p.op) {
        case Op::kUnload:
          held_[p.worker] = -1;
          break;
        case Op::kLoad:
          held_[p.worker] = p.arg;
          disk_[p.worker].insert(p.arg);
          free_[p.worker] = true;
          loading_[p.worker] = -1;
          pass();
          break;
        case Op::kTask:
          free_[p.worker] = true;
          if (complete(p.arg)) return now_;
          pass();
          break;
      }
      kick(p.worker);
    }
    throw Error(Errc::kUnsupportedConfig, "oracle model stalled");
  }

 private:
  bool runnable(const Node& t) const { return !t.started && t.waiting == 0; }

  bool stage_has_work(int k) const {
    for (int i = 0; i < n_; ++i) {
      if (!nodes_[k * n_ + i].started) return true;
    }
    return false;
  }

  bool held_elsewhere(int k, int except) const {
    for (int w = 0; w < nw_; ++w) {
      if (w != except && held_[w] == k) return true;
    }
    return false;
  }

  bool guarded(int w) const {
    return held_[w] >= 0 && !held_elsewhere(held_[w], w) && stage_has_work(held_[w]);
  }

  bool in_flight(int k) const {
    for (const auto& r : requests_) {
      if (r.stage == k) return true;
    }
    for (int w = 0; w < nw_; ++w) {
      if (loading_[w] == k) return true;
    }
    return false;
  }

  int tier(int w, int k) const {
    if (held_[w] == k) return 1;
    if (disk_[w].count(k)) return 2;
    if (held_[w] < 0) return 3;
    return 4;
  }

  void enqueue(int w, Op op, int arg) {
    lane_[w].push_back({op, arg});
    kick(w);
  }

  void kick(int w) {
    if (lane_busy_[w] || lane_[w].empty()) return;
    auto [op, arg] = lane_[w].front();
    lane_[w].pop_front();
    const WorkerSpec& spec = c_.workers[w];
    std::int64_t d = 0;
    if (op == Op::kLoad) d = shipped_[w] ? spec.cold_load_ms : spec.warm_load_ms;
    if (op == Op::kTask) d = spec.compute_for(static_cast<std::uint32_t>(nodes_[arg].stage));
    lane_busy_[w] = true;
    queue_.push({now_ + d, seq_++, w, op, arg});
  }

  void load(int w, int k) {
    free_[w] = false;
    loading_[w] = k;
    shipped_[w] = !disk_[w].count(k);
    if (held_[w] >= 0 && held_[w] != k) enqueue(w, Op::kUnload, held_[w]);
    enqueue(w, Op::kLoad, k);
  }

  // True when the request is settled (placed or found unnecessary).
  bool place(const Request& r) {
    if (!r.replica && held_elsewhere(r.stage, -1)) return true;
    bool everyone_guarded = true;
    for (int w = 0; w < nw_; ++w) everyone_guarded = everyone_guarded && guarded(w);
    if (everyone_guarded) {
      bool ready = false;
      for (int i = 0; i < n_; ++i) ready = ready || runnable(nodes_[r.stage * n_ + i]);
      if (!ready) return false;
    }
    int best = -1;
    for (int w = 0; w < nw_; ++w) {
      if (!free_[w] || (!everyone_guarded && guarded(w))) continue;
      if (best < 0 || tier(w, r.stage) < tier(best, r.stage) ||
          (tier(w, r.stage) == tier(best, r.stage) && rank_[w] < rank_[best])) {
        best = w;
      }
    }
    if (best < 0) return false;
    if (tier(best, r.stage) != 1) load(best, r.stage);
    return true;
  }

  void pass() {
    // Resident claims, rarest shard first.
    std::vector<int> claimers;
    std::vector<int> copies(s_, 0);
    for (int w = 0; w < nw_; ++w) {
      if (free_[w] && held_[w] >= 0) {
        claimers.push_back(w);
        ++copies[held_[w]];
      }
    }
    std::sort(claimers.begin(), claimers.end(), [&](int a, int b) {
      if (copies[held_[a]] != copies[held_[b]]) return copies[held_[a]] < copies[held_[b]];
      return c_.workers[a].id < c_.workers[b].id;
    });
    for (int w : claimers) {
      const int k = held_[w];
      for (int i = 0; i < n_; ++i) {
        Node& t = nodes_[k * n_ + i];
        if (runnable(t)) {
          t.started = true;
          free_[w] = false;
          enqueue(w, Op::kTask, k * n_ + i);
          break;
        }
      }
    }

    std::vector<Request> keep;
    auto reqs = std::move(requests_);
    requests_.clear();
    for (const auto& r : reqs) {
      if (!stage_has_work(r.stage)) continue;
      if (!place(r)) keep.push_back(r);
    }
    requests_ = std::move(keep);

    // Leftover runnable work asks for one more copy of its shard. Not kept
    // when unplaceable; the next pass asks again if still needed.
    for (int k = 0; k < s_; ++k) {
      bool leftover = false;
      for (int i = 0; i < n_; ++i) leftover = leftover || runnable(nodes_[k * n_ + i]);
      if (!leftover || in_flight(k)) continue;
      place({k, true});
    }
  }

  bool complete(int idx) {
    Node& t = nodes_[idx];
    t.done = true;
    const int k = t.stage;
    if (k + 1 < s_) {
      if (barrier_) {
        for (int i = 0; i < n_; ++i) --nodes_[(k + 1) * n_ + i].waiting;
      } else {
        --nodes_[idx + n_].waiting;
      }
      if (!first_done_[k]) {
        first_done_[k] = true;
        if (!held_elsewhere(k + 1, -1) && !in_flight(k + 1)) requests_.push_back({k + 1, false});
      }
    }
    return std::all_of(nodes_.begin(), nodes_.end(), [](const Node& x) { return x.done; });
  }

  const FleetConfig& c_;
  int n_, s_, nw_;
  bool barrier_ = false;
  std::vector<int> held_;  // acknowledged resident stage or -1
  std::vector<std::set<int>> disk_;
  std::vector<bool> free_;
  std::vector<int> loading_;
  std::vector<bool> shipped_;  // blob travels with the pending load
  std::vector<int> rank_;
  std::vector<std::deque<std::pair<Op, int>>> lane_;
  std::vector<bool> lane_busy_;
  std::vector<Node> nodes_;
  std::vector<Request> requests_;
  std::vector<bool> first_done_;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
  std::uint64_t seq_ = 0;
  std::int64_t now_ = 0;
};

bool same_telemetry(const TelemetrySnapshot& a, TelemetrySnapshot b) {
  b.timestamp_ms = a.timestamp_ms;
  return a == b;
}

}  // namespace

std::int64_t makespan_oracle(const FleetConfig& config, ExecutionMode mode) {
  check_config(config);
  if (!config.failures.empty()) {
    throw Error(Errc::kUnsupportedConfig, "failure injection is not modelled");
  }
  if (config.strategy != "fifo") {
    const TelemetrySnapshot ref = config.workers.front().telemetry.empty()
                                      ? TelemetrySnapshot{}
                                      : config.workers.front().telemetry.front();
    for (const auto& w : config.workers) {
      std::vector<TelemetrySnapshot> rows = w.telemetry;
      if (rows.empty()) rows.emplace_back();
      for (const auto& r : rows) {
        if (!same_telemetry(ref, r)) {
          throw Error(Errc::kUnsupportedConfig, "telemetry differs between workers");
        }
      }
    }
  }
  Model m(config, mode);
  return m.run();
}

}  // namespace crowdpipe::sim
