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

// crowdpipe command line: foreman and worker services, job submission and
// the virtual-time simulator.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "crowdpipe/net/services.hpp"
#include "crowdpipe/sdk/submission.hpp"
#include "crowdpipe/sim/config.hpp"
#include "crowdpipe/sim/harness.hpp"
#include "crowdpipe/sim/report.hpp"
#include "crowdpipe/sim/synthetic.hpp"
#include "crowdpipe/transport/digest.hpp"
#include "crowdpipe/transport/store.hpp"

namespace {

using namespace crowdpipe;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void log_line(const std::string& s) { std::cerr << s << std::endl; }

// "cold=100,warm=30"
std::pair<std::int64_t, std::int64_t> parse_simulate_load(const std::string& text) {
  std::optional<std::int64_t> cold, warm;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto comma = text.find(',', pos);
    std::string part = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    auto eq = part.find('=');
    if (eq == std::string::npos) throw Error(Errc::kConfigError, "bad --simulate-load '" + text + "'");
    std::string key = part.substr(0, eq);
    std::int64_t v = 0;
    try {
      std::size_t used = 0;
      v = std::stoll(part.substr(eq + 1), &used);
      if (used != part.size() - eq - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(Errc::kConfigError, "bad number in --simulate-load '" + text + "'");
    }
    if (v < 0) throw Error(Errc::kConfigError, "--simulate-load delays must be >= 0");
    if (key == "cold") cold = v;
    else if (key == "warm") warm = v;
    else throw Error(Errc::kConfigError, "unknown --simulate-load key '" + key + "'");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (!cold || !warm) throw Error(Errc::kConfigError, "--simulate-load needs cold= and warm=");
  return {*cold, *warm};
}

int cmd_foreman(const std::string& listen, const std::string& store_dir, std::size_t tau_ws,
                const std::string& strategy, std::int64_t heartbeat_ms, int staleness) {
  net::ForemanServerConfig cfg;
  cfg.listen = net::parse_address(listen);
  cfg.store_dir = store_dir;
  cfg.foreman.tau_ws = tau_ws;
  cfg.foreman.strategy = strategy;
  cfg.foreman.heartbeat_interval_ms = heartbeat_ms;
  cfg.foreman.staleness_multiplier = staleness;
  cfg.log = log_line;
  net::ForemanServer server(std::move(cfg));
  log_line("foreman listening on port " + std::to_string(server.port()));
  server.run(g_stop);
  return 0;
}

int cmd_worker(const std::string& foreman, const std::string& id, const std::string& cache_dir,
               const std::string& store_dir, std::int64_t heartbeat_ms, const std::string& simulate_load,
               const std::string& telemetry_profile, std::size_t tau_ws, bool serial) {
  net::WorkerClientConfig cfg;
  cfg.foreman = net::parse_address(foreman);
  cfg.heartbeat_ms = heartbeat_ms;
  cfg.log = log_line;
  cfg.agent.worker_id = id;
  cfg.agent.cache_dir = cache_dir;
  cfg.agent.tau_ws = tau_ws;
  cfg.agent.executor = std::make_shared<AffineExecutor>(serial ? KernelPolicy::kSerial
                                                               : KernelPolicy::kParallel);
  // Large payloads travel by reference, so this must be the foreman's store.
  cfg.agent.store = std::make_shared<FsPayloadStore>(store_dir);
  if (!simulate_load.empty()) {
    auto [cold, warm] = parse_simulate_load(simulate_load);
    cfg.agent.simulated_cold_load_ms = cold;
    cfg.agent.simulated_warm_load_ms = warm;
  }
  if (!telemetry_profile.empty()) cfg.telemetry = sim::load_telemetry_profile(telemetry_profile);
  net::WorkerClient client(std::move(cfg));
  client.run(g_stop);
  return 0;
}

int cmd_submit(const std::string& foreman, const std::vector<std::string>& stages,
               const std::string& mode, const std::string& inputs, double timeout_s, bool json) {
  std::vector<std::filesystem::path> paths(stages.begin(), stages.end());
  auto job = sdk::build_submission(paths, parse_mode(mode), inputs);
  auto result = net::submit_and_await(
      job, net::parse_address(foreman),
      std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000)));
  if (json) {
    std::cout << canonical_dump(proto::to_json(proto::Message{result})) << "\n";
  } else {
    std::cout << sdk::render_result(result);
  }
  return result.status == "complete" ? 0 : 1;
}

int cmd_sim(const std::string& config_path, const std::string& mode,
            const std::optional<std::uint64_t>& seed, const std::string& format,
            const std::string& out) {
  sim::FleetConfig cfg = sim::load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (mode == "both") {
    cfg.modes = {ExecutionMode::kStreaming, ExecutionMode::kBarrier};
  } else {
    cfg.modes = {parse_mode(mode)};
  }
  const auto fmt = sim::parse_report_format(format);
  const auto report = sim::run_experiment(cfg);
  const std::string text = sim::render_report(report, fmt);
  if (out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(Errc::kFileMissing, "cannot write " + out);
    f << text;
  }
  for (const auto& m : report.modes) {
    if (m.status != "complete") return 1;
  }
  return 0;
}

int cmd_make_stages(const std::string& out_dir, std::uint32_t stages, std::uint32_t inputs,
                    std::uint64_t seed, std::int64_t seq_len, std::int64_t hidden,
                    std::int64_t classes) {
  std::filesystem::create_directories(out_dir);
  auto p = sim::make_synthetic_pipeline(seed, stages, inputs, seq_len, hidden, classes, {});
  for (std::uint32_t k = 0; k < stages; ++k) {
    sdk::StageFile s;
    s.artefact_id = p.manifests[k].artefact_id;
    s.input_shape = p.manifests[k].input_shape;
    s.output_shape = p.manifests[k].output_shape;
    s.memory_footprint_bytes = p.manifests[k].memory_footprint_bytes;
    s.artefact = p.blobs[k];
    s.sha256 = sha256_hex(s.artefact);
    auto path = std::filesystem::path(out_dir) / ("stage-" + std::to_string(k) + ".json");
    sdk::write_stage_file(path, s);
    std::cout << path.string() << "\n";
  }
  auto ipath = std::filesystem::path(out_dir) / "inputs.txt";
  sdk::write_inputs_file(ipath, p.inputs);
  std::cout << ipath.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowdpipe: staged inference over a worker fleet"};
  app.require_subcommand(1);

  auto* foreman = app.add_subcommand("foreman", "run the foreman service");
  std::string f_listen = "127.0.0.1:7400", f_store = "crowdpipe-store",
              f_strategy = "entropy_weighted_sum";
  std::size_t f_tau = kDefaultTauWs;
  std::int64_t f_hb = 30000;
  int f_stale = 3;
  foreman->add_option("--listen", f_listen, "host:port");
  foreman->add_option("--store-dir", f_store, "payload and artefact store");
  foreman->add_option("--tau-ws", f_tau, "inline threshold in bytes");
  foreman->add_option("--strategy", f_strategy)
      ->check(CLI::IsMember({"entropy_weighted_sum", "fifo"}));
  foreman->add_option("--heartbeat-ms", f_hb)->check(CLI::PositiveNumber);
  foreman->add_option("--staleness-multiplier", f_stale)->check(CLI::PositiveNumber);

  auto* worker = app.add_subcommand("worker", "run a worker agent");
  std::string w_foreman, w_id, w_cache, w_sim, w_tele, w_store = "crowdpipe-store";
  std::int64_t w_hb = 30000;
  std::size_t w_tau = kDefaultTauWs;
  bool w_serial = false;
  worker->add_option("--foreman", w_foreman)->required();
  worker->add_option("--worker-id", w_id)->required();
  worker->add_option("--cache-dir", w_cache)->required();
  worker->add_option("--store-dir", w_store, "shared payload store (same as the foreman's)");
  worker->add_option("--heartbeat-ms", w_hb)->check(CLI::PositiveNumber);
  worker->add_option("--simulate-load", w_sim, "cold=<ms>,warm=<ms>");
  worker->add_option("--telemetry-profile", w_tele, "JSON array of telemetry rows");
  worker->add_option("--tau-ws", w_tau);
  worker->add_flag("--serial-kernels", w_serial, "use the reference kernel");

  auto* submit = app.add_subcommand("submit", "submit a job and wait for its result");
  std::string s_foreman, s_mode = "streaming", s_inputs;
  std::vector<std::string> s_stages;
  double s_timeout = 600;
  bool s_json = false;
  submit->add_option("--foreman", s_foreman)->required();
  submit->add_option("--stage", s_stages, "stage file, in pipeline order")->required();
  submit->add_option("--mode", s_mode)->check(CLI::IsMember({"streaming", "barrier"}));
  submit->add_option("--inputs", s_inputs)->required();
  submit->add_option("--timeout-s", s_timeout)->check(CLI::PositiveNumber);
  submit->add_flag("--json", s_json, "print the raw JOB_RESULT");

  auto* simc = app.add_subcommand("sim", "run a virtual-time experiment");
  std::string m_config, m_mode = "both", m_format = "text", m_out;
  std::optional<std::uint64_t> m_seed;
  simc->add_option("--config", m_config)->required();
  simc->add_option("--mode", m_mode)->check(CLI::IsMember({"streaming", "barrier", "both"}));
  simc->add_option("--seed", m_seed);
  simc->add_option("--format", m_format)->check(CLI::IsMember({"text", "json", "csv"}));
  simc->add_option("--out", m_out);

  auto* mk = app.add_subcommand("make-stages", "write synthetic stage files and inputs");
  std::string k_out;
  std::uint32_t k_stages = 3, k_inputs = 5;
  std::uint64_t k_seed = 1;
  std::int64_t k_len = 8, k_hidden = 16, k_classes = 2;
  mk->add_option("--out-dir", k_out)->required();
  mk->add_option("--stages", k_stages)->check(CLI::Range(1u, 64u));
  mk->add_option("--inputs", k_inputs)->check(CLI::Range(1u, 100000u));
  mk->add_option("--seed", k_seed);
  mk->add_option("--seq-len", k_len)->check(CLI::PositiveNumber);
  mk->add_option("--hidden", k_hidden)->check(CLI::PositiveNumber);
  mk->add_option("--classes", k_classes)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::signal(SIGPIPE, SIG_IGN);

  try {
    if (*foreman) return cmd_foreman(f_listen, f_store, f_tau, f_strategy, f_hb, f_stale);
    if (*worker) return cmd_worker(w_foreman, w_id, w_cache, w_store, w_hb, w_sim, w_tele, w_tau, w_serial);
    if (*submit) return cmd_submit(s_foreman, s_stages, s_mode, s_inputs, s_timeout, s_json);
    if (*simc) return cmd_sim(m_config, m_mode, m_seed, m_format, m_out);
    if (*mk) return cmd_make_stages(k_out, k_stages, k_inputs, k_seed, k_len, k_hidden, k_classes);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
