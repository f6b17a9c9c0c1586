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

// Random states and unitaries for property tests. Deliberately independent of
// the library's own generators.

#include <random>

#include <Eigen/Dense>

#include "donormem/spin_core.hpp"

namespace donormem::test {

template <int N>
Eigen::Matrix<Complex, N, N> ginibre(std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Eigen::Matrix<Complex, N, N> m;
  for (int r = 0; r < N; ++r)
    for (int c = 0; c < N; ++c) m(r, c) = Complex(g(gen), g(gen));
  return m;
}

inline Matrix4c random_density4(std::mt19937_64& gen) {
  const Matrix4c g = ginibre<4>(gen);
  const Matrix4c rho = g * g.adjoint();
  return rho / rho.trace().real();
}

inline Matrix4c random_unitary4(std::mt19937_64& gen) {
  Eigen::HouseholderQR<Matrix4c> qr(ginibre<4>(gen));
  return qr.householderQ();
}

inline Matrix2c random_unitary2(std::mt19937_64& gen) {
  Eigen::HouseholderQR<Matrix2c> qr(ginibre<2>(gen));
  return qr.householderQ();
}

// Haar-random pure qubit state as a density matrix.
inline Matrix2c random_pure2(std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Eigen::Vector2cd v(Complex(g(gen), g(gen)), Complex(g(gen), g(gen)));
  v.normalize();
  return v * v.adjoint();
}

}  // namespace donormem::test
