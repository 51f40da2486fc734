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

#include <atomic>
#include <filesystem>
#include <random>
#include <thread>

#include "doctest.h"
#include "crowdpipe/net/services.hpp"
#include "crowdpipe/sdk/submission.hpp"
#include "crowdpipe/sim/synthetic.hpp"
#include "crowdpipe/transport/digest.hpp"

using namespace crowdpipe;
namespace fs = std::filesystem;
using namespace std::chrono_literals;

namespace {

// A foreman and n workers on loopback, each on its own thread.
struct Cluster {
  fs::path root;
  std::atomic<bool> stop{false};
  std::unique_ptr<net::ForemanServer> server;
  std::vector<std::thread> threads;

  explicit Cluster(int workers) {
    root = fs::temp_directory_path() / ("crowdpipe-net-" + std::to_string(std::random_device{}()));
    net::ForemanServerConfig fc;
    fc.listen = net::parse_address("127.0.0.1:0");
    fc.store_dir = root / "store";
    fc.foreman.heartbeat_interval_ms = 200;
    server = std::make_unique<net::ForemanServer>(fc);
    threads.emplace_back([this] { server->run(stop); });
    for (int i = 0; i < workers; ++i) {
      net::WorkerClientConfig wc;
      wc.foreman = address();
      wc.heartbeat_ms = 200;
      wc.reconnect_delay = 50ms;
      wc.agent.worker_id = "w" + std::to_string(i);
      wc.agent.cache_dir = root / ("cache-" + std::to_string(i));
      wc.agent.store = std::make_shared<FsPayloadStore>(root / "store");
      wc.agent.executor = std::make_shared<AffineExecutor>();
      wc.telemetry = {TelemetrySnapshot{0.1 * i, 1u << 30, 0.9, 5.0 + i, 30.0, 0}};
      threads.emplace_back([this, wc] {
        net::WorkerClient client(wc);
        client.run(stop);
      });
    }
    std::this_thread::sleep_for(300ms);  // let everyone register
  }
  ~Cluster() {
    stop = true;
    for (auto& t : threads) t.join();
    fs::remove_all(root);
  }
  net::Address address() const { return {"127.0.0.1", server->port()}; }
};

proto::SubmitPipelineJob job_for(const sim::SyntheticPipeline& p) {
  std::vector<sdk::StageFile> files;
  for (std::size_t k = 0; k < p.blobs.size(); ++k) {
    files.push_back({p.manifests[k].artefact_id, p.manifests[k].input_shape,
                     p.manifests[k].output_shape, p.manifests[k].memory_footprint_bytes,
                     p.blobs[k], std::nullopt});
  }
  return sdk::build_submission(files, ExecutionMode::kStreaming, p.inputs);
}

Prediction reference(const sim::SyntheticPipeline& p) {
  std::vector<std::vector<float>> logits;
  for (const auto& in : p.inputs) logits.push_back(run_chain_reference(p.artefacts, in).to_floats());
  return aggregate_results(logits);
}

}  // namespace

TEST_CASE("address parsing") {
  auto a = net::parse_address("10.0.0.2:7400");
  CHECK(a.host == "10.0.0.2");
  CHECK(a.port == 7400);
  CHECK(net::parse_address(":81").port == 81);
  CHECK_THROWS_AS(net::parse_address("nohost"), Error);
  CHECK_THROWS_AS(net::parse_address("h:99999"), Error);
}

TEST_CASE("three workers over TCP reproduce the reference prediction") {
  Cluster c(3);
  auto p = sim::make_synthetic_pipeline(21, 3, 5, 8, 16, 2, {});
  auto r = net::submit_and_await(job_for(p), c.address(), 20s);
  REQUIRE(r.status == "complete");
  const auto ref = reference(p);
  CHECK(r.predicted_class == ref.predicted_class);
  CHECK(r.mean_logits == ref.mean_logits);
  CHECK(r.metrics.at("peak_rss_bytes").size() == 3);
  CHECK(r.metrics.contains("makespan_ms"));
}

TEST_CASE("rejection reason comes back verbatim") {
  Cluster c(1);
  auto p = sim::make_synthetic_pipeline(21, 2, 1, 8, 16, 2, {});
  auto job = job_for(p);
  job.stages[1].blob_checksum = sha256_hex("something else");
  try {
    net::submit_and_await(job, c.address(), 10s);
    FAIL("expected JobRejected");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kJobRejected);
    CHECK(std::string(e.what()).find("ChecksumMismatch") != std::string::npos);
  }
}

TEST_CASE("no foreman means connection refused") {
  net::Address a;
  {
    net::Listener l(net::parse_address("127.0.0.1:0"));
    a = {"127.0.0.1", l.port()};
  }  // closed again
  auto p = sim::make_synthetic_pipeline(1, 1, 1, 8, 16, 2, {});
  try {
    net::submit_and_await(job_for(p), a, 2s);
    FAIL("expected ConnectionRefused");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kConnectionRefused);
  }
}

TEST_CASE("a fleet-less foreman times out") {
  Cluster c(0);
  auto p = sim::make_synthetic_pipeline(1, 1, 1, 8, 16, 2, {});
  try {
    net::submit_and_await(job_for(p), c.address(), 500ms);
    FAIL("expected Timeout");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kTimeout);
  }
}
