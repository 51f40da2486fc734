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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "crowdpipe/kernels/affine.hpp"
#include "crowdpipe/transport/digest.hpp"
#include "crowdpipe/worker/agent.hpp"

using namespace crowdpipe;
namespace fs = std::filesystem;

namespace {

struct Rig {
  fs::path root;
  std::shared_ptr<FsPayloadStore> store;
  std::unique_ptr<WorkerAgent> agent;

  explicit Rig(std::size_t tau = kDefaultTauWs, std::uint64_t disk_budget = 0) {
    root = fs::temp_directory_path() / ("crowdpipe-worker-" + std::to_string(std::random_device{}()));
    store = std::make_shared<FsPayloadStore>(root / "store");
    WorkerAgentConfig c;
    c.worker_id = "w1";
    c.cache_dir = root / "cache";
    c.executor = std::make_shared<AffineExecutor>();
    c.store = store;
    c.tau_ws = tau;
    c.disk_budget_bytes = disk_budget;
    agent = std::make_unique<WorkerAgent>(c);
  }
  ~Rig() { fs::remove_all(root); }
};

AffineStageArtefact stage(std::uint64_t seed, Shape in, Shape out, bool tanh_on = true) {
  return AffineStageArtefact{seed, std::move(in), std::move(out), tanh_on};
}

proto::LoadModel load_msg(const std::string& id, const AffineStageArtefact& a,
                          std::uint64_t footprint, bool with_blob = true) {
  const std::string blob = a.serialize();
  proto::LoadModel m{id, sha256_hex(blob), footprint, std::nullopt};
  if (with_blob) m.blob = base64_encode(blob);
  return m;
}

Tensor tokens(std::uint64_t seed) {
  std::vector<std::int64_t> v(8);
  for (std::size_t i = 0; i < 8; ++i) v[i] = static_cast<std::int64_t>(kernels::splitmix64_at(seed, i) % 32);
  return Tensor::from_ints({1, 8}, v);
}

proto::TaskAssign task_for(const std::string& artefact, const Tensor& input, TaskId id = 0) {
  return {"job", id, 0, artefact, PayloadRouting{encode_payload(input, Codec::kZlib)}};
}

}  // namespace

TEST_CASE("splitmix64 matches the published first output") {
  CHECK(kernels::splitmix64_at(0, 0) == 0xe220a8397b1dcdafULL);
  CHECK(kernels::splitmix64_at(0, 1) == 0x6e789e6aa1b965f4ULL);
  float f = kernels::scaled_uniform(0);
  CHECK(f == -0.1f);
}

TEST_CASE("serial and parallel kernels agree bitwise") {
  std::mt19937_64 rng(3);
  for (auto [in, out] : {std::pair<std::size_t, std::size_t>{8, 128}, {128, 128}, {256, 512}, {3, 1}}) {
    const std::uint64_t seed = rng();
    auto ps = kernels::materialize_affine_serial(seed, in, out);
    auto po = kernels::materialize_affine_omp(seed, in, out);
    CHECK(ps.weights == po.weights);
    CHECK(ps.bias == po.bias);
    std::vector<float> x(in);
    std::uniform_real_distribution<float> d(-1, 1);
    for (auto& v : x) v = d(rng);
    std::vector<float> ys(out), yo(out);
    kernels::affine_forward_serial(ps, x, ys, true);
    kernels::affine_forward_omp(po, x, yo, true);
    CHECK(std::memcmp(ys.data(), yo.data(), out * sizeof(float)) == 0);
  }
}

TEST_CASE("affine kernel against a hand loop") {
  auto p = kernels::materialize_affine_serial(77, 5, 3);
  std::vector<float> x{1, -2, 0.5f, 3, 0};
  std::vector<float> y(3);
  kernels::affine_forward_serial(p, x, y, false);
  for (std::size_t r = 0; r < 3; ++r) {
    float acc = 0;
    for (std::size_t c = 0; c < 5; ++c) {
      acc += kernels::scaled_uniform(kernels::splitmix64_at(77, r * 5 + c)) * x[c];
    }
    acc += kernels::scaled_uniform(kernels::splitmix64_at(77, 15 + r));
    CHECK(y[r] == acc);
  }
  std::vector<float> bad(4);
  CHECK_THROWS_AS(kernels::affine_forward_serial(p, bad, y, false), Error);
}

TEST_CASE("artefact serialization round trip") {
  auto a = stage(9, {1, 8}, {1, 8, 16}, false);
  const auto bytes = a.serialize();
  auto b = AffineStageArtefact::parse(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
  CHECK(b.seed == 9);
  CHECK(b.input_shape == Shape{1, 8});
  CHECK(b.output_shape == Shape{1, 8, 16});
  CHECK_FALSE(b.apply_tanh);
  const std::string junk = "{}";
  CHECK_THROWS_AS(AffineStageArtefact::parse(std::span(reinterpret_cast<const std::uint8_t*>(junk.data()), junk.size())), Error);
}

TEST_CASE("identity executor returns its input") {
  IdentityExecutor ex;
  auto s = ex.open({});
  auto t = tokens(1);
  CHECK(s->run(t) == t);
}

TEST_CASE("load, residency violation, unload, reload") {
  Rig rig;
  auto& ag = *rig.agent;
  auto a = stage(1, {1, 8}, {1, 8, 16});
  auto b = stage(2, {1, 8, 16}, {1, 2});
  auto ack = ag.handle_load_model(load_msg("cell_a", a, 1000));
  CHECK(ack.source == "network");
  CHECK(ack.worker_id == "w1");
  CHECK(ag.cache().tracked_rss_bytes() == 1000);
  try {
    ag.handle_load_model(load_msg("cell_b", b, 2000));
    FAIL("expected ResidencyViolation");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kResidencyViolation);
  }
  CHECK(ag.cache().active_id() == std::optional<ArtefactId>("cell_a"));
  CHECK(ag.cache().tracked_rss_bytes() == 1000);

  ag.handle_unload_model("cell_a");
  CHECK(ag.cache().tracked_rss_bytes() == 0);
  CHECK(ag.cache().on_disk("cell_a"));
  try {
    ag.handle_unload_model("cell_a");
    FAIL("expected NotResident");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kNotResident);
  }
  ag.handle_load_model(load_msg("cell_b", b, 2000));
  CHECK(ag.cache().peak_rss_bytes() == 2000);
  CHECK(ag.cache().max_concurrent_sessions() == 1);

  ag.handle_unload_model("cell_b");
  auto warm = ag.handle_load_model(load_msg("cell_a", a, 1000, false));
  CHECK(warm.source == "disk_cache");
  CHECK(ag.cache().peak_rss_bytes() == 2000);
}

TEST_CASE("reload of the active shard is acknowledged without work") {
  Rig rig;
  auto a = stage(1, {1, 8}, {1, 2});
  rig.agent->handle_load_model(load_msg("cell_a", a, 10));
  auto ack = rig.agent->handle_load_model(load_msg("cell_a", a, 10));
  CHECK(ack.source == "session");
}

TEST_CASE("bad blobs are refused and leave no state") {
  Rig rig;
  auto a = stage(1, {1, 8}, {1, 2});
  auto m = load_msg("cell_a", a, 10);
  m.checksum[0] = m.checksum[0] == 'a' ? 'b' : 'a';
  auto replies = rig.agent->handle(proto::Message{m});
  REQUIRE(replies.size() == 1);
  CHECK(std::holds_alternative<proto::ModelLoadFailed>(replies[0]));
  CHECK_FALSE(rig.agent->cache().active_id().has_value());
  CHECK_FALSE(rig.agent->cache().on_disk("cell_a"));
  // disk load without a cached copy
  auto miss = rig.agent->handle(proto::Message{load_msg("cell_a", a, 10, false)});
  CHECK(std::holds_alternative<proto::ModelLoadFailed>(miss[0]));
}

TEST_CASE("task gating on the worker side") {
  Rig rig;
  auto a = stage(1, {1, 8}, {1, 8, 16});
  rig.agent->handle_load_model(load_msg("cell_b", a, 10));
  try {
    rig.agent->execute_task(task_for("cell_c", tokens(1)));
    FAIL("expected PartitionNotResident");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::kPartitionNotResident);
  }
  auto replies = rig.agent->handle(proto::Message{task_for("cell_c", tokens(1), 4)});
  REQUIRE(std::holds_alternative<proto::TaskFailed>(replies[0]));
  CHECK(std::get<proto::TaskFailed>(replies[0]).task_id == 4);
}

TEST_CASE("chained execution on separate agents equals the reference chain") {
  std::vector<AffineStageArtefact> chain{stage(11, {1, 8}, {1, 8, 16}),
                                         stage(12, {1, 8, 16}, {1, 8, 16}),
                                         stage(13, {1, 8, 16}, {1, 2}, false)};
  // tau 1 forces every hop through the store
  for (std::size_t tau : {std::size_t{1}, kDefaultTauWs}) {
    Rig r0(tau);
    WorkerAgentConfig base;
    base.executor = std::make_shared<AffineExecutor>(KernelPolicy::kParallel);
    base.store = r0.store;
    base.tau_ws = tau;
    std::vector<std::unique_ptr<WorkerAgent>> own;
    for (int i = 0; i < 3; ++i) {
      auto c = base;
      c.worker_id = "w" + std::to_string(i);
      c.cache_dir = r0.root / ("cache" + std::to_string(i));
      own.push_back(std::make_unique<WorkerAgent>(c));
      own.back()->handle_load_model(load_msg("s" + std::to_string(i), chain[i], 10));
    }
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const Tensor in = tokens(seed);
      PayloadRouting payload{encode_payload(in, Codec::kZlib)};
      for (int i = 0; i < 3; ++i) {
        proto::TaskAssign t{"job", 0, static_cast<std::uint32_t>(i), "s" + std::to_string(i), payload};
        payload = own[i]->execute_task(t).output;
        CHECK(payload.is_inline() == (tau != 1));
      }
      const Tensor got = decode_payload(resolve_payload(payload, *r0.store));
      CHECK(got == run_chain_reference(chain, in));
    }
  }
}

TEST_CASE("heartbeat reflects residency and disk") {
  Rig rig;
  TelemetrySnapshot t;
  t.battery_fraction = 0.4;
  auto hb = rig.agent->emit_heartbeat(t);
  CHECK_FALSE(hb.resident.has_value());
  CHECK(hb.cached.empty());
  CHECK(hb.telemetry == t);
  rig.agent->handle_load_model(load_msg("cell_a", stage(1, {1, 8}, {1, 2}), 55));
  hb = rig.agent->emit_heartbeat(t);
  CHECK(hb.resident == std::optional<ArtefactId>("cell_a"));
  CHECK(hb.cached == std::vector<ArtefactId>{"cell_a"});
  CHECK(hb.tracked_rss_bytes == 55);
}

TEST_CASE("unload message for a non-resident shard is acknowledged") {
  Rig rig;
  auto replies = rig.agent->handle(proto::Message{proto::UnloadModel{"ghost"}});
  REQUIRE(replies.size() == 1);
  CHECK(std::holds_alternative<proto::ModelUnloaded>(replies[0]));
}

TEST_CASE("disk cache is LRU beyond its budget, never evicting the active shard") {
  fs::path dir = fs::temp_directory_path() / ("crowdpipe-lru-" + std::to_string(std::random_device{}()));
  {
    SessionCache cache(dir, 25);
    const std::vector<std::uint8_t> ten(10, 1);
    cache.store_blob("a", ten);
    cache.store_blob("b", ten);
    (void)cache.read_blob("a");  // a is now more recent than b
    cache.store_blob("c", ten);
    CHECK(cache.on_disk("a"));
    CHECK_FALSE(cache.on_disk("b"));
    CHECK(cache.on_disk("c"));
    CHECK_THROWS_AS(cache.read_blob("b"), Error);
  }
  fs::remove_all(dir);
}

TEST_CASE("simulated load durations are reported") {
  Rig rig;
  WorkerAgentConfig c;
  c.worker_id = "sim";
  c.cache_dir = rig.root / "simcache";
  c.executor = std::make_shared<IdentityExecutor>();
  c.store = rig.store;
  c.simulated_cold_load_ms = 480;
  c.simulated_warm_load_ms = 60;
  WorkerAgent ag(c);
  proto::LoadModel m{"x", sha256_hex("blob"), 1, base64_encode("blob")};
  CHECK(ag.handle_load_model(m).load_duration_ms == 480);
  ag.handle_unload_model("x");
  m.blob.reset();
  CHECK(ag.handle_load_model(m).load_duration_ms == 60);
}
