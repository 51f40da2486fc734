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

#include <cstddef>
#include <span>
#include <vector>

#include "crowdpipe/core/model.hpp"

namespace crowdpipe::sched {

/// Rows are alternatives (workers), columns are criteria.
struct CriteriaMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<bool> benefit;   // per column; false marks a cost criterion

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }

  static CriteriaMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                  std::vector<bool> benefit = {});
};

/// Columns: cpu_load (cost), ram_free (benefit), battery (benefit),
/// rtt (cost), temperature (cost).
CriteriaMatrix telemetry_matrix(std::span<const WorkerDescriptor> workers);

/// Cost columns become max_j - x, so every column reads "larger is better"
/// and stays non-negative.
CriteriaMatrix benefit_oriented(const CriteriaMatrix& m);

/// Shannon entropy weights. p_ij = x_ij / sum_i x_ij (0/0 -> 1/m),
/// e_j = -sum p ln p / ln m, d_j = 1 - e_j, w_j = d_j / sum d. All-zero
/// divergence falls back to uniform weights. Throws kDegenerateMatrix for
/// fewer than two rows.
std::vector<double> entropy_weights(const CriteriaMatrix& m);

/// Per-row sum of w_j times the min-max normalized benefit value; constant
/// columns normalize to 0.5.
std::vector<double> weighted_scores(const CriteriaMatrix& m,
                                    std::span<const double> weights);

}  // namespace crowdpipe::sched
