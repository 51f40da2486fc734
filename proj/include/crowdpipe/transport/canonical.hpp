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
#include <string_view>

#include "json.hpp"

namespace crowdpipe {

/// nlohmann::json keeps object members in a std::map, so dump() with no
/// indent is already the canonical form: UTF-8, keys sorted bytewise, no
/// insignificant whitespace.
using Json = nlohmann::json;

inline std::string canonical_dump(const Json& value) { return value.dump(); }

/// Parses text; throws Error(kProtocolError) on malformed input.
Json parse_json(std::string_view text);

}  // namespace crowdpipe
