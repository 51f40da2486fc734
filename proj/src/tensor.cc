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
#include <bit>
#include <cstring>

#include "crowdpipe/core/errors.hpp"
#include "crowdpipe/transport/payload.hpp"

static_assert(std::endian::native == std::endian::little,
              "tensor byte layout assumes a little-endian host");

namespace crowdpipe {

std::size_t element_size(DType dtype) {
  return dtype == DType::kFloat32 ? 4 : 8;
}

const char* dtype_name(DType dtype) {
  return dtype == DType::kFloat32 ? "float32" : "int64";
}

DType parse_dtype(const std::string& name) {
  if (name == "float32") return DType::kFloat32;
  if (name == "int64") return DType::kInt64;
  throw Error(Errc::kInvalidTensor, "unknown dtype '" + name + "'");
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) {
    if (d <= 0) throw Error(Errc::kInvalidTensor, "non-positive dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(DType dtype, Shape shape, std::vector<std::uint8_t> bytes)
    : dtype_(dtype), shape_(std::move(shape)), bytes_(std::move(bytes)) {
  if (shape_.empty()) throw Error(Errc::kInvalidTensor, "empty shape");
  if (bytes_.size() != element_size(dtype_) * element_count(shape_)) {
    throw Error(Errc::kInvalidTensor, "byte length does not match shape");
  }
}

Tensor Tensor::from_floats(Shape shape, std::span<const float> values) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  if (!values.empty()) std::memcpy(bytes.data(), values.data(), bytes.size());
  return Tensor(DType::kFloat32, std::move(shape), std::move(bytes));
}

Tensor Tensor::from_ints(Shape shape, std::span<const std::int64_t> values) {
  std::vector<std::uint8_t> bytes(values.size() * 8);
  if (!values.empty()) std::memcpy(bytes.data(), values.data(), bytes.size());
  return Tensor(DType::kInt64, std::move(shape), std::move(bytes));
}

Tensor Tensor::zeros(DType dtype, Shape shape) {
  std::size_t n = element_count(shape) * element_size(dtype);
  return Tensor(dtype, std::move(shape), std::vector<std::uint8_t>(n, 0));
}

std::vector<float> Tensor::to_floats() const {
  if (dtype_ != DType::kFloat32) {
    throw Error(Errc::kInvalidTensor, "tensor is not float32");
  }
  std::vector<float> out(size());
  std::memcpy(out.data(), bytes_.data(), bytes_.size());
  return out;
}

std::vector<std::int64_t> Tensor::to_ints() const {
  if (dtype_ != DType::kInt64) {
    throw Error(Errc::kInvalidTensor, "tensor is not int64");
  }
  std::vector<std::int64_t> out(size());
  std::memcpy(out.data(), bytes_.data(), bytes_.size());
  return out;
}

std::vector<float> Tensor::as_float_values() const {
  if (dtype_ == DType::kFloat32) return to_floats();
  auto ints = to_ints();
  return std::vector<float>(ints.begin(), ints.end());
}

}  // namespace crowdpipe
