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

#include "crowdpipe/net/services.hpp"

#include <poll.h>
#include <unistd.h>

#include <cstdlib>
#include <map>
#include <thread>

namespace crowdpipe::net {

namespace {

using Clock = std::chrono::steady_clock;

std::int64_t ms_since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
}

void say(const LogFn& log, const std::string& line) {
  if (log) log(line);
}

}  // namespace

// ---------------------------------------------------------------- foreman

struct ForemanServer::State {
  explicit State(ForemanServerConfig c)
      : config(std::move(c)),
        listener(config.listen),
        foreman(config.foreman, std::make_shared<FsPayloadStore>(config.store_dir)) {}

  struct Peer {
    LineConn conn;
    std::string address;  // worker id or client-N once known
    bool worker = false;
  };

  ForemanServerConfig config;
  Listener listener;
  Foreman foreman;
  std::map<int, Peer> peers;  // keyed by connection serial
  std::map<std::string, int> by_address;
  int next_serial = 0;
  Clock::time_point t0 = Clock::now();

  std::int64_t now() const { return ms_since(t0); }

  void drop(int serial) {
    auto it = peers.find(serial);
    if (it == peers.end()) return;
    Peer peer = std::move(it->second);
    peers.erase(it);
    auto owner = by_address.find(peer.address);
    if (owner == by_address.end() || owner->second != serial) return;
    by_address.erase(owner);
    if (peer.worker) {
      say(config.log, "worker " + peer.address + " disconnected");
      route(foreman.on_worker_disconnect(peer.address, now()));
    }
  }

  void route(const std::vector<Outbound>& out) {
    std::vector<int> dead;
    for (const auto& o : out) {
      auto it = by_address.find(o.address);
      if (it == by_address.end()) continue;  // gone; recovery handles it
      try {
        peers.at(it->second).conn.send_line(proto::encode_message(o.message));
      } catch (const Error& e) {
        say(config.log, "send to " + o.address + " failed: " + e.what());
        dead.push_back(it->second);
      }
    }
    for (int s : dead) drop(s);
  }

  void on_frame(int serial, const std::string& frame) {
    proto::Message m;
    try {
      m = proto::decode_message(frame);
    } catch (const Error& e) {
      say(config.log, std::string("bad frame: ") + e.what());
      return;
    }
    Peer& peer = peers.at(serial);
    if (auto* reg = std::get_if<proto::WorkerRegister>(&m)) {
      auto prev = by_address.find(reg->worker_id);
      if (prev != by_address.end() && prev->second != serial) {
        // A newer link replaces the old one; close it without a
        // disconnect since the registration below resets the worker.
        peers.erase(prev->second);
      }
      peer.address = reg->worker_id;
      peer.worker = true;
      by_address[peer.address] = serial;
      say(config.log, "worker " + peer.address + " registered");
    } else if (std::holds_alternative<proto::SubmitPipelineJob>(m)) {
      if (peer.address.empty()) {
        peer.address = "client-" + std::to_string(serial);
        by_address[peer.address] = serial;
      }
    } else if (peer.address.empty()) {
      say(config.log, std::string("dropping ") + proto::message_type(m) + " from unregistered peer");
      return;
    }
    const std::size_t errors_before = foreman.errors().size();
    route(foreman.handle(peer.address, m, now()));
    for (std::size_t i = errors_before; i < foreman.errors().size(); ++i) {
      say(config.log, foreman.errors()[i]);
    }
  }
};

ForemanServer::ForemanServer(ForemanServerConfig config)
    : state_(std::make_unique<State>(std::move(config))) {}

ForemanServer::~ForemanServer() = default;

std::uint16_t ForemanServer::port() const { return state_->listener.port(); }

void ForemanServer::run(const std::atomic<bool>& stop) {
  State& s = *state_;
  const std::int64_t check_every =
      std::max<std::int64_t>(10, std::min<std::int64_t>(1000, s.config.foreman.heartbeat_interval_ms));
  std::int64_t next_check = s.now() + check_every;
  say(s.config.log, "foreman listening on port " + std::to_string(port()));
  while (!stop.load()) {
    std::vector<pollfd> fds{{s.listener.fd(), POLLIN, 0}};
    std::vector<int> serials{-1};
    for (auto& [serial, peer] : s.peers) {
      fds.push_back({peer.conn.fd(), POLLIN, 0});
      serials.push_back(serial);
    }
    const int wait = static_cast<int>(std::clamp<std::int64_t>(next_check - s.now(), 0, 100));
    int r = ::poll(fds.data(), fds.size(), wait);
    if (r < 0 && errno != EINTR) throw Error(Errc::kProtocolError, "poll failed");
    if (r > 0) {
      if (fds[0].revents & POLLIN) {
        s.peers.emplace(s.next_serial++, State::Peer{s.listener.accept(), "", false});
      }
      for (std::size_t i = 1; i < fds.size(); ++i) {
        if (!fds[i].revents) continue;
        const int serial = serials[i];
        auto it = s.peers.find(serial);
        if (it == s.peers.end()) continue;
        if (!it->second.conn.pump()) {
          s.drop(serial);
          continue;
        }
        while (true) {
          auto pit = s.peers.find(serial);
          if (pit == s.peers.end()) break;
          auto line = pit->second.conn.next_line();
          if (!line) break;
          s.on_frame(serial, *line);
        }
      }
    }
    if (s.now() >= next_check) {
      s.route(s.foreman.check_staleness(s.now()));
      next_check = s.now() + check_every;
    }
  }
}

// ---------------------------------------------------------------- worker

TelemetrySnapshot host_telemetry() {
  TelemetrySnapshot t;
  double load[1] = {0.0};
  const long cores = ::sysconf(_SC_NPROCESSORS_ONLN);
  if (::getloadavg(load, 1) == 1 && cores > 0) {
    t.cpu_load = std::clamp(load[0] / static_cast<double>(cores), 0.0, 1.0);
  }
  const long pages = ::sysconf(_SC_AVPHYS_PAGES);
  const long page = ::sysconf(_SC_PAGESIZE);
  if (pages > 0 && page > 0) {
    t.ram_free_bytes = static_cast<std::uint64_t>(pages) * static_cast<std::uint64_t>(page);
  }
  return t;
}

WorkerClient::WorkerClient(WorkerClientConfig config)
    : config_(std::move(config)), agent_(config_.agent) {}

TelemetrySnapshot WorkerClient::next_telemetry() {
  TelemetrySnapshot t = config_.telemetry.empty()
                            ? host_telemetry()
                            : config_.telemetry[beats_ % config_.telemetry.size()];
  ++beats_;
  t.timestamp_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  return t;
}

bool WorkerClient::serve(LineConn& conn, const std::atomic<bool>& stop) {
  conn.send_line(proto::encode_message(agent_.registration()));
  auto next_beat = Clock::now();
  while (!stop.load()) {
    if (Clock::now() >= next_beat) {
      conn.send_line(proto::encode_message(agent_.emit_heartbeat(next_telemetry())));
      next_beat = Clock::now() + std::chrono::milliseconds(config_.heartbeat_ms);
    }
    auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(next_beat - Clock::now());
    wait = std::clamp(wait, std::chrono::milliseconds(0), std::chrono::milliseconds(100));
    std::optional<std::string> line;
    try {
      line = conn.read_line(wait);
    } catch (const Error&) {
      return false;
    }
    if (!line) continue;
    proto::Message m;
    try {
      m = proto::decode_message(*line);
    } catch (const Error& e) {
      say(config_.log, std::string("bad frame: ") + e.what());
      continue;
    }
    if (auto* load = std::get_if<proto::LoadModel>(&m)) {
      // Stand-in for transfer and session start-up time.
      auto delay = load->blob ? config_.agent.simulated_cold_load_ms
                              : config_.agent.simulated_warm_load_ms;
      if (delay && *delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(*delay));
    }
    for (const auto& reply : agent_.handle(m)) {
      conn.send_line(proto::encode_message(reply));
    }
  }
  return true;
}

void WorkerClient::run(const std::atomic<bool>& stop) {
  while (!stop.load()) {
    try {
      LineConn conn = connect_to(config_.foreman);
      say(config_.log, "connected to foreman");
      if (serve(conn, stop)) return;
      say(config_.log, "lost foreman connection");
    } catch (const Error& e) {
      say(config_.log, e.what());
    }
    agent_.drop_session();
    std::this_thread::sleep_for(config_.reconnect_delay);
  }
}

// ---------------------------------------------------------------- client

proto::JobResult submit_and_await(const proto::SubmitPipelineJob& job, const Address& foreman,
                                  std::chrono::milliseconds timeout) {
  LineConn conn = connect_to(foreman);
  conn.send_line(proto::encode_message(job));
  const auto deadline = Clock::now() + timeout;
  while (true) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) throw Error(Errc::kTimeout, "no JOB_RESULT before the deadline");
    std::optional<std::string> line;
    try {
      line = conn.read_line(left);
    } catch (const Error& e) {
      throw Error(Errc::kConnectionRefused, std::string("foreman went away: ") + e.what());
    }
    if (!line) continue;
    proto::Message m = proto::decode_message(*line);
    if (auto* rej = std::get_if<proto::JobRejected>(&m)) throw Error(Errc::kJobRejected, rej->reason);
    if (auto* res = std::get_if<proto::JobResult>(&m)) return *res;
  }
}

}  // namespace crowdpipe::net
