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


#include <cmath>
#include <set>

#include "doctest.h"

#include "donormem/rng.hpp"

using namespace donormem;

TEST_SUITE("rng") {

// Known-answer vectors published with the Random123 library.
TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are pure functions of seed, stream and draw index") {
  RandomStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u32();
    CHECK(x == b.next_u32());
    differs_c |= x != c.next_u32();
    differs_d |= x != d.next_u32();
  }
  CHECK(differs_c);
  CHECK(differs_d);
  CHECK(a.draws() == 100);
}

TEST_CASE("derive_stream_id separates nearby id lists") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 30; ++i)
    for (std::uint64_t j = 0; j < 30; ++j) seen.insert(derive_stream_id({i, j}));
  CHECK(seen.size() == 900);
  CHECK(derive_stream_id({1, 2}) != derive_stream_id({2, 1}));
  CHECK(derive_stream_id({1}) != derive_stream_id({1, 0}));
}

TEST_CASE("uniform and normal moments") {
  RandomStream s(2026, 1);
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0;
  double lo = 1, hi = 0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    su += u;
    su2 += u * u;
    const double g = s.normal();
    sn += g;
    sn2 += g * g;
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  // 5 sigma bands
  CHECK(std::abs(su / n - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(su2 / n - 1.0 / 3) < 5 * std::sqrt(4.0 / 45 / n));
  CHECK(std::abs(sn / n) < 5 / std::sqrt(n));
  CHECK(std::abs(sn2 / n - 1) < 5 * std::sqrt(2.0 / n));
}

TEST_CASE("binomial mean and variance") {
  RandomStream s(5, 5);
  for (double p : {0.0, 0.05, 0.5, 0.93, 1.0}) {
    const int reps = 20000;
    const std::uint32_t trials = 200;
    double m = 0, m2 = 0;
    for (int i = 0; i < reps; ++i) {
      const double k = s.binomial(trials, p);
      CHECK(k <= trials);
      m += k;
      m2 += k * k;
    }
    m /= reps;
    const double var = m2 / reps - m * m;
    const double mean_expect = trials * p, var_expect = trials * p * (1 - p);
    if (p == 0.0 || p == 1.0) {
      CHECK(m == mean_expect);
      CHECK(var == doctest::Approx(0.0));
    } else {
      CHECK(std::abs(m - mean_expect) < 5 * std::sqrt(var_expect / reps));
      CHECK(var == doctest::Approx(var_expect).epsilon(0.05));
    }
  }
}

}  // TEST_SUITE
