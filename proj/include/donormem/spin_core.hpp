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
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace donormem {

using Complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Matrix4c = Eigen::Matrix4cd;
using Vector4c = Eigen::Vector4cd;

// Two-spin basis ordering shared by every module. Electron first, nucleus
// second; |up> is the +1 eigenstate of sigma_z for both spins.
enum BasisIndex : int {
  kUpUp = 0,      // |up, Up>
  kUpDown = 1,    // |up, Down>
  kDownUp = 2,    // |down, Up>
  kDownDown = 3,  // |down, Down>
};

inline constexpr std::array<const char*, 4> kBasisLabels = {
    "|up,Up>", "|up,Down>", "|down,Up>", "|down,Down>"};

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kTraceTol = 1e-12;
inline constexpr double kPositivityTol = 1e-10;
inline constexpr double kOrthonormalTol = 1e-10;

enum class Spin { kElectron, kNucleus };
enum class PauliAxis { kI, kX, kY, kZ };
enum class Approximation { kFull, kSecular };

// Physical constants of the donor. All quantities are magnitudes; signs of
// the Zeeman terms are fixed by build_hamiltonian.
struct DonorParams {
  double gamma_e = 28.0e9;      // Hz/T
  double gamma_n = 17.2e6;      // Hz/T
  double hyperfine_A = 97e6;    // Hz
  double b0 = 1.55;             // T

  void validate() const;
};

// Hermitian, unit-trace, positive 4x4 state of the electron-nuclear pair.
// Construction validates; use unchecked() only for trusted propagation.
class DensityMatrix4 {
 public:
  DensityMatrix4();
  explicit DensityMatrix4(const Matrix4c& m);

  static DensityMatrix4 unchecked(const Matrix4c& m);
  static DensityMatrix4 pure(const Vector4c& psi);
  static DensityMatrix4 basis_state(BasisIndex i);

  const Matrix4c& matrix() const { return m_; }
  Complex operator()(int r, int c) const { return m_(r, c); }
  double population(BasisIndex i) const { return m_(i, i).real(); }

 private:
  struct NoCheck {};
  DensityMatrix4(const Matrix4c& m, NoCheck) : m_(m) {}
  Matrix4c m_;
};

struct Hamiltonian4 {
  Matrix4c matrix;  // Hz
  Approximation approximation = Approximation::kSecular;
};

struct Eigensystem4 {
  Eigen::Vector4d eigenvalues;  // Hz, ascending
  Matrix4c eigenvectors;        // columns
};

struct TransitionFrequencies {
  double nu_mw_up = 0;    // electron flip, nucleus Up
  double nu_mw_down = 0;  // electron flip, nucleus Down
  double nu_rf_down = 0;  // nuclear flip, electron down
  double nu_rf_up = 0;    // nuclear flip, electron up
};

bool is_hermitian(const Matrix4c& m, double tol = kHermitianTol);

// sigma_axis on the target spin, identity on the other.
Matrix4c pauli_operator(Spin target, PauliAxis axis);

// Spin operators are S = sigma/2, I = sigma/2. The nuclear Zeeman term carries
// a negative sign (positive gyromagnetic ratio of 31P), which puts the
// electron-down NMR line at A/2 + gamma_n B0.
Hamiltonian4 build_hamiltonian(const DonorParams& p,
                               Approximation approx = Approximation::kSecular);

// Throws std::invalid_argument on non-Hermitian input.
Eigensystem4 eigensystem(const Hamiltonian4& h);

TransitionFrequencies transition_frequencies(const DonorParams& p);

// Tr(rho obs). Throws std::invalid_argument if obs is not Hermitian.
double expectation(const DensityMatrix4& rho, const Matrix4c& obs);

double purity(const DensityMatrix4& rho);

// Embeds a single-electron state with the nucleus in |Up>.
DensityMatrix4 electron_state_with_nucleus_up(const Matrix2c& rho_e);

// Partial trace over the nucleus.
Matrix2c reduce_to_electron(const DensityMatrix4& rho);

}  // namespace donormem
