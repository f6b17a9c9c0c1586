// Copyright 2026 The donormem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

namespace donormem {

// Philox4x32-10 block function (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

// Mixes an arbitrary list of identifiers into a 64-bit stream id.
std::uint64_t derive_stream_id(std::initializer_list<std::uint64_t> ids);

// A random stream addressed by (seed, stream id). Draw n is a pure function of
// (seed, stream, n), so streams can be evaluated on any worker in any order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint32_t next_u32();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();
  // Sum of `trials` Bernoulli(p) draws.
  std::uint32_t binomial(std::uint32_t trials, double p);

  std::uint64_t draws() const { return block_ * 4 - (4 - lane_); }

 private:
  PhiloxKey key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  int lane_ = 4;
  PhiloxCounter buffer_{};
};

}  // namespace donormem
