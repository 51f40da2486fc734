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
#include "crowdpipe/transport/routing.hpp"

#include "crowdpipe/core/errors.hpp"
#include "crowdpipe/transport/codec.hpp"

namespace crowdpipe {

PayloadRouting route_payload(const PayloadEnvelope& envelope,
                             std::size_t tau_ws, PayloadStore& store) {
  std::string bytes = canonical_bytes(envelope);
  if (bytes.size() <= tau_ws) return PayloadRouting{envelope};
  return PayloadRouting{StoreRef{store.put(bytes)}};
}

PayloadEnvelope resolve_payload(const PayloadRouting& routing,
                                const PayloadStore& store) {
  if (routing.is_inline()) return routing.envelope();
  return envelope_from_json(parse_json(store.get(routing.ref().key)));
}

Json routing_to_json(const PayloadRouting& routing) {
  if (routing.is_inline()) {
    return Json{{"inline", envelope_to_json(routing.envelope())}};
  }
  return Json{{"store_ref", routing.ref().key}};
}

PayloadRouting routing_from_json(const Json& json) {
  if (!json.is_object() || json.size() != 1) {
    throw Error(Errc::kProtocolError, "routing must have exactly one member");
  }
  if (json.contains("inline")) {
    return PayloadRouting{envelope_from_json(json.at("inline"))};
  }
  if (json.contains("store_ref") && json.at("store_ref").is_string()) {
    return PayloadRouting{StoreRef{json.at("store_ref").get<std::string>()}};
  }
  throw Error(Errc::kProtocolError, "routing has neither inline nor store_ref");
}

}  // namespace crowdpipe
