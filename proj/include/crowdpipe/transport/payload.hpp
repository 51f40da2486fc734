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

// Value types for activations on the wire. Behavior lives in codec.hpp and
// routing.hpp; this header only fixes the shapes of the data.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace crowdpipe {

using Shape = std::vector<std::int64_t>;

enum class DType { kFloat32, kInt64 };

std::size_t element_size(DType dtype);
const char* dtype_name(DType dtype);
DType parse_dtype(const std::string& name);

/// Product of the dimensions; throws kInvalidTensor on a non-positive dim.
std::size_t element_count(const Shape& shape);

/// Dense little-endian row-major tensor.
class Tensor {
 public:
  Tensor() = default;
  Tensor(DType dtype, Shape shape, std::vector<std::uint8_t> bytes);

  static Tensor from_floats(Shape shape, std::span<const float> values);
  static Tensor from_ints(Shape shape, std::span<const std::int64_t> values);
  static Tensor zeros(DType dtype, Shape shape);

  DType dtype() const { return dtype_; }
  const Shape& shape() const { return shape_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::size_t size() const { return element_count(shape_); }

  std::vector<float> to_floats() const;
  std::vector<std::int64_t> to_ints() const;
  /// Elements widened to float regardless of dtype.
  std::vector<float> as_float_values() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  DType dtype_ = DType::kFloat32;
  Shape shape_;
  std::vector<std::uint8_t> bytes_;
};

/// Self-describing activation as it travels between endpoints.
struct PayloadEnvelope {
  std::string compression;  // "zlib" or "none"; other tags are reserved
  std::string data;         // base64 of the (possibly compressed) bytes
  std::string dtype;
  Shape shape;

  friend bool operator==(const PayloadEnvelope&,
                         const PayloadEnvelope&) = default;
};

struct StoreRef {
  std::string key;  // sha256 hex of the canonical envelope bytes
  friend bool operator==(const StoreRef&, const StoreRef&) = default;
};

/// Either the envelope itself or a reference into the payload store.
struct PayloadRouting {
  std::variant<PayloadEnvelope, StoreRef> value;

  bool is_inline() const {
    return std::holds_alternative<PayloadEnvelope>(value);
  }
  const PayloadEnvelope& envelope() const {
    return std::get<PayloadEnvelope>(value);
  }
  const StoreRef& ref() const { return std::get<StoreRef>(value); }

  friend bool operator==(const PayloadRouting&,
                         const PayloadRouting&) = default;
};

}  // namespace crowdpipe
