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
#include <string>

#include "crowdpipe/transport/canonical.hpp"
#include "crowdpipe/transport/payload.hpp"

namespace crowdpipe {

enum class Codec { kZlib, kNone };

const char* codec_name(Codec codec);
Codec parse_codec(const std::string& name);

/// zlib output uses RFC 1950 framing at the library's default level.
PayloadEnvelope encode_payload(const Tensor& tensor, Codec codec);

/// Inverse of encode_payload. Throws kBase64Error, kDecompressError (bad
/// stream or unsupported codec tag) or kLengthMismatch.
Tensor decode_payload(const PayloadEnvelope& envelope);

Json envelope_to_json(const PayloadEnvelope& envelope);
PayloadEnvelope envelope_from_json(const Json& json);

/// The bytes used for size thresholds and content keys.
std::string canonical_bytes(const PayloadEnvelope& envelope);

/// Length in bytes of the envelope's payload after base64 decoding.
std::size_t encoded_length(const PayloadEnvelope& envelope);

/// Percentage of bytes saved: 100 * (1 - compressed / raw).
double compression_ratio(std::size_t raw_len, std::size_t compressed_len);

}  // namespace crowdpipe
