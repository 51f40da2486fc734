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

// Real-time deployments of the foreman and worker state machines. Both run
// a single poll loop; the foreman's clock is milliseconds since start.

#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "crowdpipe/foreman/foreman.hpp"
#include "crowdpipe/net/line_socket.hpp"
#include "crowdpipe/worker/agent.hpp"

namespace crowdpipe::net {

using LogFn = std::function<void(const std::string&)>;

struct ForemanServerConfig {
  Address listen;
  std::filesystem::path store_dir;
  ForemanConfig foreman;
  LogFn log;
};

class ForemanServer {
 public:
  explicit ForemanServer(ForemanServerConfig config);
  ~ForemanServer();

  std::uint16_t port() const;
  /// Serves until stop becomes true.
  void run(const std::atomic<bool>& stop);

 private:
  struct State;
  std::unique_ptr<State> state_;
};

struct WorkerClientConfig {
  Address foreman;
  WorkerAgentConfig agent;
  std::int64_t heartbeat_ms = 30000;
  // Cycled per heartbeat. Empty means read from the host.
  std::vector<TelemetrySnapshot> telemetry;
  std::chrono::milliseconds reconnect_delay{500};
  LogFn log;
};

class WorkerClient {
 public:
  explicit WorkerClient(WorkerClientConfig config);
  /// Connects, registers and serves until stop becomes true. Reconnects
  /// after a lost connection.
  void run(const std::atomic<bool>& stop);
  const WorkerAgent& agent() const { return agent_; }

 private:
  bool serve(LineConn& conn, const std::atomic<bool>& stop);
  TelemetrySnapshot next_telemetry();

  WorkerClientConfig config_;
  WorkerAgent agent_;
  std::uint64_t beats_ = 0;
};

/// Best-effort host telemetry: load average over core count, available
/// memory, defaults for the rest.
TelemetrySnapshot host_telemetry();

/// Sends the job and waits for its JOB_RESULT. Throws kConnectionRefused,
/// kJobRejected (with the foreman's reason) or kTimeout.
proto::JobResult submit_and_await(const proto::SubmitPipelineJob& job, const Address& foreman,
                                  std::chrono::milliseconds timeout);

}  // namespace crowdpipe::net
