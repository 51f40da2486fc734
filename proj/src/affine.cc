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
#include "crowdpipe/kernels/affine.hpp"

#include <cmath>

#include "crowdpipe/core/errors.hpp"

namespace crowdpipe::kernels {

namespace {

constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

void check_dims(const AffineParams& p, std::span<const float> x,
                std::span<float> y) {
  if (x.size() != p.in || y.size() != p.out) {
    throw Error(Errc::kExecutorFailure, "affine kernel dimension mismatch");
  }
}

inline float row_value(const AffineParams& p, std::span<const float> x,
                       std::size_t r, bool apply_tanh) {
  const float* a = p.weights.data() + r * p.in;
  float acc = 0.0f;
  for (std::size_t c = 0; c < p.in; ++c) acc += a[c] * x[c];
  acc += p.bias[r];
  return apply_tanh ? std::tanh(acc) : acc;
}

}  // namespace

std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * kGamma;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

float scaled_uniform(std::uint64_t bits) {
  double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
  return static_cast<float>(u * 0.2 - 0.1);
}

AffineParams materialize_affine_serial(std::uint64_t seed, std::size_t in,
                                       std::size_t out) {
  AffineParams p{in, out, std::vector<float>(in * out), std::vector<float>(out)};
  const std::size_t nw = in * out;
  for (std::size_t k = 0; k < nw; ++k) p.weights[k] = scaled_uniform(splitmix64_at(seed, k));
  for (std::size_t r = 0; r < out; ++r) p.bias[r] = scaled_uniform(splitmix64_at(seed, nw + r));
  return p;
}

AffineParams materialize_affine_omp(std::uint64_t seed, std::size_t in,
                                    std::size_t out) {
  AffineParams p{in, out, std::vector<float>(in * out), std::vector<float>(out)};
  const std::int64_t nw = static_cast<std::int64_t>(in * out);
  float* w = p.weights.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t k = 0; k < nw; ++k) {
    w[k] = scaled_uniform(splitmix64_at(seed, static_cast<std::uint64_t>(k)));
  }
  for (std::size_t r = 0; r < out; ++r) {
    p.bias[r] = scaled_uniform(splitmix64_at(seed, static_cast<std::uint64_t>(nw) + r));
  }
  return p;
}

void affine_forward_serial(const AffineParams& p, std::span<const float> x,
                           std::span<float> y, bool apply_tanh) {
  check_dims(p, x, y);
  for (std::size_t r = 0; r < p.out; ++r) y[r] = row_value(p, x, r, apply_tanh);
}

void affine_forward_omp(const AffineParams& p, std::span<const float> x,
                        std::span<float> y, bool apply_tanh) {
  check_dims(p, x, y);
  const std::int64_t rows = static_cast<std::int64_t>(p.out);
#pragma omp parallel for schedule(static) if (p.out * p.in >= 16384)
  for (std::int64_t r = 0; r < rows; ++r) {
    y[static_cast<std::size_t>(r)] =
        row_value(p, x, static_cast<std::size_t>(r), apply_tanh);
  }
}

}  // namespace crowdpipe::kernels
