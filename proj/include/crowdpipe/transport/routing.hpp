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

#include "crowdpipe/transport/canonical.hpp"
#include "crowdpipe/transport/payload.hpp"
#include "crowdpipe/transport/store.hpp"

namespace crowdpipe {

inline constexpr std::size_t kDefaultTauWs = 1u << 20;

/// Envelopes whose canonical size is <= tau_ws travel inline; larger ones
/// are written to the store and referenced by key.
PayloadRouting route_payload(const PayloadEnvelope& envelope,
                             std::size_t tau_ws, PayloadStore& store);

PayloadEnvelope resolve_payload(const PayloadRouting& routing,
                                const PayloadStore& store);

Json routing_to_json(const PayloadRouting& routing);
PayloadRouting routing_from_json(const Json& json);

}  // namespace crowdpipe
