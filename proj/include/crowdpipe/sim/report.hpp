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

#include <string>

#include "crowdpipe/sim/harness.hpp"

namespace crowdpipe::sim {

enum class ReportFormat { kText, kJson, kCsv };

/// "text", "json" or "csv"; throws kConfigError otherwise.
ReportFormat parse_report_format(const std::string& name);

/// 100 * (1 - streaming / barrier).
double streaming_speedup_pct(std::int64_t streaming_ms, std::int64_t barrier_ms);

Json report_to_json(const MetricsReport& report);

/// Field order is fixed. csv has one row per (mode, worker).
std::string render_report(const MetricsReport& report, ReportFormat format);

}  // namespace crowdpipe::sim
