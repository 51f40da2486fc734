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
#include <cstdint>
#include <span>
#include <vector>

namespace crowdpipe::kernels {

/// splitmix64; element k of a stream seeded with s is mix(s + (k+1)*gamma),
/// so any element can be produced independently of the others.
std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index);

/// Maps a splitmix64 output to a float in [-0.1, 0.1]: the top 53 bits give
/// u in [0,1) as a double, then float(u * 0.2 - 0.1).
float scaled_uniform(std::uint64_t bits);

/// Dense y = A x + b with A stored row-major (out x in). Weights come first
/// in the generator stream, then the bias.
struct AffineParams {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<float> weights;
  std::vector<float> bias;
};

AffineParams materialize_affine_serial(std::uint64_t seed, std::size_t in,
                                       std::size_t out);
AffineParams materialize_affine_omp(std::uint64_t seed, std::size_t in,
                                    std::size_t out);

/// Reference kernel: per row, acc = 0; acc += A[r][c] * x[c] for c in
/// order; y[r] = acc + b[r]; optional tanh. Float32 throughout.
void affine_forward_serial(const AffineParams& p, std::span<const float> x,
                           std::span<float> y, bool apply_tanh);

/// Rows split across threads; each row keeps the reference summation
/// order, so results are bitwise identical to the serial kernel.
void affine_forward_omp(const AffineParams& p, std::span<const float> x,
                        std::span<float> y, bool apply_tanh);

}  // namespace crowdpipe::kernels
