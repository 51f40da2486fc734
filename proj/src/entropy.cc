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
#include "crowdpipe/sched/entropy.hpp"

#include <algorithm>
#include <cmath>

namespace crowdpipe::sched {

CriteriaMatrix CriteriaMatrix::from_rows(
    const std::vector<std::vector<double>>& rows, std::vector<bool> benefit) {
  CriteriaMatrix m;
  m.rows = rows.size();
  m.cols = rows.empty() ? 0 : rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != m.cols) throw Error(Errc::kDegenerateMatrix, "ragged rows");
    m.values.insert(m.values.end(), r.begin(), r.end());
  }
  m.benefit = benefit.empty() ? std::vector<bool>(m.cols, true) : std::move(benefit);
  if (m.benefit.size() != m.cols) {
    throw Error(Errc::kDegenerateMatrix, "orientation flags do not match columns");
  }
  return m;
}

CriteriaMatrix telemetry_matrix(std::span<const WorkerDescriptor> workers) {
  std::vector<std::vector<double>> rows;
  rows.reserve(workers.size());
  for (const auto& w : workers) {
    const auto& t = w.last_heartbeat;
    rows.push_back({t.cpu_load, static_cast<double>(t.ram_free_bytes),
                    t.battery_fraction, t.rtt_ms, t.temperature_c});
  }
  if (rows.empty()) {
    CriteriaMatrix m;
    m.cols = 5;
    m.benefit = {false, true, true, false, false};
    return m;
  }
  return CriteriaMatrix::from_rows(rows, {false, true, true, false, false});
}

CriteriaMatrix benefit_oriented(const CriteriaMatrix& m) {
  CriteriaMatrix out = m;
  for (std::size_t c = 0; c < m.cols; ++c) {
    double hi = -INFINITY;
    for (std::size_t r = 0; r < m.rows; ++r) {
      double v = m.at(r, c);
      if (!std::isfinite(v)) throw Error(Errc::kDegenerateMatrix, "non-finite entry");
      hi = std::max(hi, v);
    }
    for (std::size_t r = 0; r < m.rows; ++r) {
      if (!m.benefit[c]) out.at(r, c) = hi - m.at(r, c);
      if (out.at(r, c) < 0) {
        throw Error(Errc::kDegenerateMatrix, "negative benefit criterion");
      }
    }
    out.benefit[c] = true;
  }
  return out;
}

std::vector<double> entropy_weights(const CriteriaMatrix& raw) {
  if (raw.rows < 2) {
    throw Error(Errc::kDegenerateMatrix, "entropy weighting needs >= 2 rows");
  }
  CriteriaMatrix m = benefit_oriented(raw);
  const double rows = static_cast<double>(m.rows);
  const double k = 1.0 / std::log(rows);

  std::vector<double> divergence(m.cols, 0.0);
  for (std::size_t c = 0; c < m.cols; ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) sum += m.at(r, c);
    double h = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      double p = sum > 0.0 ? m.at(r, c) / sum : 1.0 / rows;
      if (p > 0.0) h -= p * std::log(p);
    }
    // A uniform column gives e_j = 1 up to rounding; snap the residue so
    // constant criteria carry exactly zero weight.
    double d = 1.0 - k * h;
    divergence[c] = d < 1e-12 ? 0.0 : d;
  }

  double total = 0.0;
  for (double d : divergence) total += d;
  std::vector<double> w(m.cols);
  for (std::size_t c = 0; c < m.cols; ++c) {
    w[c] = total > 0.0 ? divergence[c] / total : 1.0 / static_cast<double>(m.cols);
  }
  return w;
}

std::vector<double> weighted_scores(const CriteriaMatrix& raw,
                                    std::span<const double> weights) {
  CriteriaMatrix m = benefit_oriented(raw);
  std::vector<double> score(m.rows, 0.0);
  for (std::size_t c = 0; c < m.cols; ++c) {
    double lo = INFINITY, hi = -INFINITY;
    for (std::size_t r = 0; r < m.rows; ++r) {
      lo = std::min(lo, m.at(r, c));
      hi = std::max(hi, m.at(r, c));
    }
    for (std::size_t r = 0; r < m.rows; ++r) {
      double norm = hi > lo ? (m.at(r, c) - lo) / (hi - lo) : 0.5;
      score[r] += weights[c] * norm;
    }
  }
  return score;
}

}  // namespace crowdpipe::sched
