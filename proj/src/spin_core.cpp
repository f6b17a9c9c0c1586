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

#include "donormem/spin_core.hpp"

#include <cmath>

namespace donormem {

namespace {

Matrix2c pauli2(PauliAxis axis) {
  Matrix2c s;
  switch (axis) {
    case PauliAxis::kI: s << 1, 0, 0, 1; break;
    case PauliAxis::kX: s << 0, 1, 1, 0; break;
    case PauliAxis::kY: s << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case PauliAxis::kZ: s << 1, 0, 0, -1; break;
  }
  return s;
}

Matrix4c kron(const Matrix2c& a, const Matrix2c& b) {
  Matrix4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

void check_state(const Matrix4c& m) {
  if (!is_hermitian(m, kHermitianTol))
    throw std::invalid_argument("density matrix is not Hermitian");
  if (std::abs(m.trace() - Complex(1.0)) > kTraceTol)
    throw std::invalid_argument("density matrix trace is not 1");
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(m);
  if (es.eigenvalues().minCoeff() < -kPositivityTol)
    throw std::invalid_argument("density matrix has a negative eigenvalue");
}

}  // namespace

void DonorParams::validate() const {
  if (!(gamma_e > 0) || !(gamma_n > 0) || !(hyperfine_A > 0) || !(b0 > 0))
    throw std::invalid_argument("DonorParams fields must be strictly positive");
}

DensityMatrix4::DensityMatrix4() : m_(Matrix4c::Zero()) { m_(kDownUp, kDownUp) = 1.0; }

DensityMatrix4::DensityMatrix4(const Matrix4c& m) : m_(m) { check_state(m_); }

DensityMatrix4 DensityMatrix4::unchecked(const Matrix4c& m) { return {m, NoCheck{}}; }

DensityMatrix4 DensityMatrix4::pure(const Vector4c& psi) {
  const double n = psi.norm();
  if (n == 0) throw std::invalid_argument("zero state vector");
  const Vector4c v = psi / n;
  return DensityMatrix4(Matrix4c(v * v.adjoint()));
}

DensityMatrix4 DensityMatrix4::basis_state(BasisIndex i) {
  Matrix4c m = Matrix4c::Zero();
  m(i, i) = 1.0;
  return {m, NoCheck{}};
}

bool is_hermitian(const Matrix4c& m, double tol) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

Matrix4c pauli_operator(Spin target, PauliAxis axis) {
  const Matrix2c id = Matrix2c::Identity();
  return target == Spin::kElectron ? kron(pauli2(axis), id) : kron(id, pauli2(axis));
}

Hamiltonian4 build_hamiltonian(const DonorParams& p, Approximation approx) {
  p.validate();
  using enum PauliAxis;
  const Matrix4c sz = pauli_operator(Spin::kElectron, kZ);
  const Matrix4c iz = pauli_operator(Spin::kNucleus, kZ);
  Matrix4c h = 0.5 * p.gamma_e * p.b0 * sz - 0.5 * p.gamma_n * p.b0 * iz;
  h += 0.25 * p.hyperfine_A * (sz * iz);
  if (approx == Approximation::kFull) {
    const Matrix4c flip_flop =
        pauli_operator(Spin::kElectron, kX) * pauli_operator(Spin::kNucleus, kX) +
        pauli_operator(Spin::kElectron, kY) * pauli_operator(Spin::kNucleus, kY);
    h += 0.25 * p.hyperfine_A * flip_flop;
  }
  return {h, approx};
}

Eigensystem4 eigensystem(const Hamiltonian4& h) {
  // Relative tolerance: entries are O(1e10) Hz.
  const double scale = std::max(1.0, h.matrix.cwiseAbs().maxCoeff());
  if (!is_hermitian(h.matrix, kHermitianTol * scale))
    throw std::invalid_argument("eigensystem: Hamiltonian is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(h.matrix);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensystem: solver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

TransitionFrequencies transition_frequencies(const DonorParams& p) {
  p.validate();
  const double ze = p.gamma_e * p.b0;
  const double zn = p.gamma_n * p.b0;
  const double half_a = 0.5 * p.hyperfine_A;
  return {ze + half_a, ze - half_a, half_a + zn, half_a - zn};
}

double expectation(const DensityMatrix4& rho, const Matrix4c& obs) {
  const double scale = std::max(1.0, obs.cwiseAbs().maxCoeff());
  if (!is_hermitian(obs, kHermitianTol * scale))
    throw std::invalid_argument("expectation: observable is not Hermitian");
  return (rho.matrix() * obs).trace().real();
}

double purity(const DensityMatrix4& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

DensityMatrix4 electron_state_with_nucleus_up(const Matrix2c& rho_e) {
  Matrix2c up = Matrix2c::Zero();
  up(0, 0) = 1.0;
  return DensityMatrix4(kron(rho_e, up));
}

Matrix2c reduce_to_electron(const DensityMatrix4& rho) {
  const Matrix4c& m = rho.matrix();
  Matrix2c out;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) out(a, b) = m(2 * a, 2 * b) + m(2 * a + 1, 2 * b + 1);
  return out;
}

}  // namespace donormem
