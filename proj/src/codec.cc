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
#include "crowdpipe/transport/codec.hpp"

#include <zlib.h>

#include "crowdpipe/core/errors.hpp"
#include "crowdpipe/transport/digest.hpp"

namespace crowdpipe {

namespace {

std::vector<std::uint8_t> zlib_compress(const std::vector<std::uint8_t>& in) {
  uLongf bound = compressBound(static_cast<uLong>(in.size()));
  std::vector<std::uint8_t> out(bound);
  int rc = compress2(out.data(), &bound, in.data(),
                     static_cast<uLong>(in.size()), Z_DEFAULT_COMPRESSION);
  if (rc != Z_OK) throw Error(Errc::kDecompressError, "zlib compress failed");
  out.resize(bound);
  return out;
}

// Inflates at most expected + 1 bytes. A stream that ends early or runs
// long is reported as a length mismatch; a malformed one as a codec error.
std::vector<std::uint8_t> zlib_inflate(const std::vector<std::uint8_t>& in,
                                       std::size_t expected) {
  std::vector<std::uint8_t> out(expected + 1);
  z_stream zs{};
  if (inflateInit(&zs) != Z_OK) {
    throw Error(Errc::kDecompressError, "inflateInit failed");
  }
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  std::size_t produced = out.size() - zs.avail_out;
  inflateEnd(&zs);
  if (rc == Z_DATA_ERROR || rc == Z_NEED_DICT || rc == Z_MEM_ERROR ||
      rc == Z_STREAM_ERROR) {
    throw Error(Errc::kDecompressError, "corrupt zlib stream");
  }
  if (produced != expected) {
    throw Error(Errc::kLengthMismatch,
                "inflated " + std::to_string(produced) + " bytes, expected " +
                    std::to_string(expected));
  }
  if (rc != Z_STREAM_END) {
    throw Error(Errc::kDecompressError, "zlib stream has trailing data");
  }
  out.resize(produced);
  return out;
}

}  // namespace

const char* codec_name(Codec codec) {
  return codec == Codec::kZlib ? "zlib" : "none";
}

Codec parse_codec(const std::string& name) {
  if (name == "zlib") return Codec::kZlib;
  if (name == "none") return Codec::kNone;
  throw Error(Errc::kDecompressError, "unsupported codec '" + name + "'");
}

PayloadEnvelope encode_payload(const Tensor& tensor, Codec codec) {
  PayloadEnvelope env;
  env.dtype = dtype_name(tensor.dtype());
  env.shape = tensor.shape();
  env.compression = codec_name(codec);
  env.data = codec == Codec::kZlib ? base64_encode(zlib_compress(tensor.bytes()))
                                   : base64_encode(tensor.bytes());
  return env;
}

Tensor decode_payload(const PayloadEnvelope& envelope) {
  Codec codec = parse_codec(envelope.compression);
  DType dtype = parse_dtype(envelope.dtype);
  std::size_t expected = element_size(dtype) * element_count(envelope.shape);
  auto raw = base64_decode(envelope.data);
  if (codec == Codec::kZlib) {
    raw = zlib_inflate(raw, expected);
  } else if (raw.size() != expected) {
    throw Error(Errc::kLengthMismatch,
                "payload has " + std::to_string(raw.size()) +
                    " bytes, expected " + std::to_string(expected));
  }
  return Tensor(dtype, envelope.shape, std::move(raw));
}

Json envelope_to_json(const PayloadEnvelope& envelope) {
  return Json{{"compression", envelope.compression},
              {"data", envelope.data},
              {"dtype", envelope.dtype},
              {"shape", envelope.shape}};
}

PayloadEnvelope envelope_from_json(const Json& json) {
  try {
    PayloadEnvelope env;
    env.compression = json.at("compression").get<std::string>();
    env.data = json.at("data").get<std::string>();
    env.dtype = json.at("dtype").get<std::string>();
    env.shape = json.at("shape").get<Shape>();
    return env;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kProtocolError, std::string("bad envelope: ") + e.what());
  }
}

std::string canonical_bytes(const PayloadEnvelope& envelope) {
  return canonical_dump(envelope_to_json(envelope));
}

std::size_t encoded_length(const PayloadEnvelope& envelope) {
  return base64_decode(envelope.data).size();
}

double compression_ratio(std::size_t raw_len, std::size_t compressed_len) {
  return 100.0 * (1.0 - static_cast<double>(compressed_len) /
                            static_cast<double>(raw_len));
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kProtocolError, std::string("malformed json: ") + e.what());
  }
}

}  // namespace crowdpipe
