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

#include <filesystem>
#include <random>

#include "doctest.h"
#include "crowdpipe/transport/codec.hpp"
#include "crowdpipe/transport/digest.hpp"
#include "crowdpipe/transport/routing.hpp"
#include "crowdpipe/transport/store.hpp"
#include "golden_messages.hpp"

using namespace crowdpipe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("crowdpipe-test-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

Tensor random_tensor(std::mt19937_64& rng) {
  Shape shape;
  const int rank = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < rank; ++i) shape.push_back(1 + static_cast<std::int64_t>(rng() % 9));
  const std::size_t n = element_count(shape);
  if (rng() % 2) {
    std::vector<std::int64_t> v(n);
    for (auto& x : v) x = static_cast<std::int64_t>(rng());
    return Tensor::from_ints(shape, v);
  }
  std::vector<float> v(n);
  std::uniform_real_distribution<float> d(-3.0f, 3.0f);
  for (auto& x : v) x = d(rng);
  return Tensor::from_floats(shape, v);
}

PayloadEnvelope envelope_of_size(std::size_t canonical_size) {
  // Grow the data field until the canonical form hits the target.
  PayloadEnvelope e{"none", "", "float32", {1}};
  const std::size_t base = canonical_bytes(e).size();
  REQUIRE(canonical_size >= base);
  e.data.assign(canonical_size - base, 'A');
  REQUIRE(canonical_bytes(e).size() == canonical_size);
  return e;
}

}  // namespace

TEST_CASE("sha256 and base64 known vectors") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(is_sha256_hex(sha256_hex("x")));
  CHECK_FALSE(is_sha256_hex("ABC"));
  CHECK(base64_encode("") == "");
  CHECK(base64_encode("f") == "Zg==");
  CHECK(base64_encode("fo") == "Zm8=");
  CHECK(base64_encode("foobar") == "Zm9vYmFy");
  auto d = base64_decode("Zm9vYg==");
  CHECK(std::string(d.begin(), d.end()) == "foob");
  CHECK_THROWS_AS(base64_decode("Zm9"), Error);
  CHECK_THROWS_AS(base64_decode("Zm9*"), Error);
}

TEST_CASE("zero activation compresses to the reference zlib size") {
  // 25 bytes: zlib default level on 3072 zero bytes (measured with an
  // independent zlib binding).
  auto e = encode_payload(Tensor::zeros(DType::kFloat32, {1, 768}), Codec::kZlib);
  CHECK(encoded_length(e) == 25);
  CHECK(e.compression == "zlib");
  CHECK(e.shape == Shape{1, 768});
  CHECK(decode_payload(e) == Tensor::zeros(DType::kFloat32, {1, 768}));
}

TEST_CASE("none codec is plain base64") {
  auto e = encode_payload(Tensor::zeros(DType::kFloat32, {1, 768}), Codec::kNone);
  CHECK(e.compression == "none");
  CHECK(encoded_length(e) == 3072);
}

TEST_CASE("decode errors") {
  auto e = encode_payload(Tensor::zeros(DType::kFloat32, {1, 768}), Codec::kNone);
  auto bytes = base64_decode(e.data);
  bytes.resize(100);
  e.data = base64_encode(bytes);
  try {
    decode_payload(e);
    FAIL("expected LengthMismatch");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::kLengthMismatch);
  }
  auto z = encode_payload(Tensor::zeros(DType::kFloat32, {1, 768}), Codec::kZlib);
  z.compression = "lz4";
  try {
    decode_payload(z);
    FAIL("expected DecompressError");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::kDecompressError);
  }
  z.compression = "zlib";
  z.data = base64_encode("not a zlib stream");
  CHECK_THROWS_AS(decode_payload(z), Error);
}

TEST_CASE("encode/decode round trip on random tensors") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 500; ++i) {
    Tensor t = random_tensor(rng);
    for (auto codec : {Codec::kZlib, Codec::kNone}) {
      auto e = encode_payload(t, codec);
      CHECK(decode_payload(e) == t);
      CHECK(envelope_from_json(envelope_to_json(e)) == e);
    }
  }
}

TEST_CASE("routing threshold and round trip") {
  TempDir dir;
  FsPayloadStore store(dir.path);
  const std::size_t tau = 1 << 20;
  CHECK(route_payload(envelope_of_size(tau), tau, store).is_inline());
  CHECK_FALSE(route_payload(envelope_of_size(tau + 1), tau, store).is_inline());
  CHECK_FALSE(route_payload(envelope_of_size(2 * tau), tau, store).is_inline());
  CHECK(route_payload(envelope_of_size(1168), tau, store).is_inline());

  std::mt19937_64 rng(23);
  for (std::size_t t : {std::size_t{1}, std::size_t{1024}, tau}) {
    for (int i = 0; i < 50; ++i) {
      auto e = encode_payload(random_tensor(rng), i % 2 ? Codec::kZlib : Codec::kNone);
      auto r = route_payload(e, t, store);
      CHECK(resolve_payload(r, store) == e);
      CHECK(routing_from_json(routing_to_json(r)) == r);
    }
  }
}

TEST_CASE("store keys are content addresses and writes are idempotent") {
  TempDir dir;
  FsPayloadStore store(dir.path);
  auto e = encode_payload(testing::golden_activation(), Codec::kZlib);
  auto a = route_payload(e, 1, store);
  auto b = route_payload(e, 1, store);
  REQUIRE_FALSE(a.is_inline());
  CHECK(a == b);
  CHECK(a.ref().key == sha256_hex(canonical_bytes(e)));
  std::size_t files = 0;
  for (auto& entry : fs::directory_iterator(dir.path)) {
    ++files;
    CHECK(entry.path().extension() == ".bin");
  }
  CHECK(files == 1);
  CHECK(testing::read_file(store.path_for(a.ref().key).string()) == canonical_bytes(e));
}

TEST_CASE("store errors: missing and tampered") {
  TempDir dir;
  FsPayloadStore store(dir.path);
  const std::string key = store.put("payload bytes");
  CHECK(store.get(key) == "payload bytes");
  {
    std::fstream f(store.path_for(key), std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.put('P');
  }
  try {
    store.get(key);
    FAIL("expected HashMismatch");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::kHashMismatch);
  }
  fs::remove(store.path_for(key));
  try {
    resolve_payload(PayloadRouting{StoreRef{key}}, store);
    FAIL("expected MissingKey");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::kMissingKey);
  }
}

TEST_CASE("compression ratio arithmetic") {
  CHECK(compression_ratio(3072, 1168) == doctest::Approx(61.979166).epsilon(1e-6));
  CHECK(compression_ratio(3072, 3072) == 0.0);
  CHECK(compression_ratio(3072, 1536) == 50.0);
}

TEST_CASE("low-entropy fixture compresses well, random data still round-trips") {
  auto raw = testing::read_file(std::string(CROWDPIPE_TEST_DATA) +
                                "/fixtures/low_entropy_activation_1x768.f32");
  REQUIRE(raw.size() == 3072);
  Tensor t(DType::kFloat32, {1, 768}, std::vector<std::uint8_t>(raw.begin(), raw.end()));
  auto e = encode_payload(t, Codec::kZlib);
  CHECK(compression_ratio(3072, encoded_length(e)) >= 50.0);

  std::mt19937_64 rng(1);
  std::vector<std::uint8_t> noise(3072);
  for (auto& b : noise) b = static_cast<std::uint8_t>(rng());
  Tensor r(DType::kFloat32, {1, 768}, noise);
  auto er = encode_payload(r, Codec::kZlib);
  CHECK(compression_ratio(3072, encoded_length(er)) <= 0.0);
  CHECK(decode_payload(er) == r);
}

TEST_CASE("envelopes match the golden files") {
  const auto dir = testing::golden_dir();
  CHECK(canonical_bytes(encode_payload(testing::golden_activation(), Codec::kZlib)) ==
        testing::read_file(dir + "/envelope_float32.json"));
  CHECK(canonical_bytes(encode_payload(testing::golden_tokens(), Codec::kZlib)) ==
        testing::read_file(dir + "/envelope_int64.json"));
  CHECK(canonical_bytes(encode_payload(testing::golden_plain(), Codec::kNone)) ==
        testing::read_file(dir + "/envelope_none.json"));
}

TEST_CASE("every message type matches its golden file") {
  const auto msgs = testing::golden_messages();
  CHECK(msgs.size() == std::variant_size_v<proto::Message>);
  for (const auto& [name, msg] : msgs) {
    CAPTURE(name);
    const auto golden = testing::read_file(testing::golden_dir() + "/messages/" + name + ".json");
    REQUIRE_FALSE(golden.empty());
    CHECK(std::string(proto::message_type(msg)) == name);
    CHECK(proto::encode_message(msg) == golden);
    CHECK(proto::encode_message(proto::decode_message(golden)) == golden);
  }
}

TEST_CASE("malformed frames are protocol errors") {
  for (const char* frame : {"", "{", "[]", R"({"type":"NOPE"})", R"({"type":"UNLOAD_MODEL"})"}) {
    CAPTURE(frame);
    try {
      proto::decode_message(frame);
      FAIL("expected ProtocolError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kProtocolError);
    }
  }
}
