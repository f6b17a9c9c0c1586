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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "donormem/fitting.hpp"
#include "donormem/noise_readout.hpp"
#include "donormem/spin_core.hpp"

namespace donormem {

using Vector2c = Eigen::Vector2cd;

struct TomographyPlan {
  std::vector<double> phases_deg = default_phases();
  bool include_z = true;

  static std::vector<double> default_phases();  // 0, 15, ..., 345
  void validate() const;
};

struct PointEstimate {
  ReadoutBasis basis = ReadoutBasis::kXY;
  double phase_deg = 0.0;
  double p = 0.0;    // reported click probability
  double std = 0.0;  // spread across repetitions
  double sem = 0.0;  // error of the pooled mean; used as fit weight
  std::uint64_t shots_total = 0;  // 0 in analytic mode
};

struct XYTomographyData {
  std::vector<PointEstimate> xy;
  std::optional<PointEstimate> z;
  std::vector<ShotRecord> records;  // empty in analytic mode
};

// Returns the state right before readout. `phase_deg` selects an XY readout
// basis (a MW pi/2 pulse at that phase is appended); nullopt reads Z directly.
using Preparation = std::function<DensityMatrix4(std::optional<double> phase_deg)>;

// Point p of the plan draws from streams derive_stream_id({point_base + p, r}).
XYTomographyData run_xy_tomography(const Preparation& prepare, const TomographyPlan& plan,
                                   const NoiseConfig& cfg, std::uint64_t point_base = 0);

// Groups measurement records by basis/phase and estimates each point.
XYTomographyData tomography_from_records(const std::vector<ShotRecord>& records);

struct SinusoidFit {
  double offset = 0, amplitude = 0, phase_deg = 0;
  double offset_err = 0, amplitude_err = 0, phase_err_deg = 0;
  // offset + a cos(phi) + b sin(phi); covariance over (offset, a, b)
  double a = 0, b = 0;
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
  bool phase_defined = true;  // false when the amplitude is within 1 sigma of 0
  bool converged = true;
  std::string diagnostics;
};

// Least-squares fit of offset + amplitude cos(phi - phase). Needs >= 4 points.
SinusoidFit sinusoid_fit(std::span<const double> phases_deg, std::span<const double> probs,
                         std::span<const double> errors);
SinusoidFit sinusoid_fit(const XYTomographyData& data);

struct BlochVector {
  double x = 0, y = 0, z = 0;
  double x_err = 0, y_err = 0, z_err = 0;
  double xy_cov = 0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  double norm() const { return vec().norm(); }
};

// z_estimate is the reported probability of the |up> outcome.
BlochVector bloch_from_tomography(const SinusoidFit& fit, double z_estimate, double z_err,
                                  double visibility);
BlochVector bloch_from_tomography(const XYTomographyData& data, double visibility);

// Radial rescaling onto the Bloch ball.
BlochVector project_to_ball(const BlochVector& b);

// (1 + b.sigma)/2 in the electron basis (|up>, |down>), after projection.
Matrix2c density_from_bloch(const BlochVector& b);
Eigen::Vector3d bloch_of(const Matrix2c& rho);
Vector2c pure_state_from_bloch(const Eigen::Vector3d& n);

double state_fidelity(const Matrix2c& rho, const Vector2c& psi);

// Process basis {I, X, iY, Z}.
const std::array<Matrix2c, 4>& process_basis();
inline constexpr std::array<const char*, 4> kProcessBasisLabels = {"I", "X", "iY", "Z"};

struct ProcessMatrix {
  Matrix4c chi = Matrix4c::Zero();
  Matrix4c errors = Matrix4c::Zero();  // real part: std of Re(chi), imag part: std of Im(chi)
};

Matrix2c apply_chi(const Matrix4c& chi, const Matrix2c& rho);
// || sum chi_mn E_n^dagger E_m - 1 ||_F
double trace_preservation_residual(const Matrix4c& chi);
double min_eigenvalue(const Matrix4c& chi);

// Conversions between {I, X, iY, Z} and {I, X, Y, Z}.
Matrix4c chi_to_pauli_basis(const Matrix4c& chi);
Matrix4c chi_from_pauli_basis(const Matrix4c& chi_pauli);

// Linear inversion. Throws std::invalid_argument if the inputs do not span
// the operator space.
Matrix4c linear_inversion_chi(std::span<const Matrix2c> inputs, std::span<const Matrix2c> outputs);

struct MleOptions {
  int restarts = 5;
  std::uint64_t seed = 0x4d4c45;
};

struct MleResult {
  ProcessMatrix process;
  bool converged = true;
  bool unchanged = false;  // raw chi was already physical
  int iterations = 0;
  double chi2 = 0.0;
};

// Nearest physical chi: chi = T^dagger T / Tr over a lower-triangular T, made
// exactly trace preserving by a congruence, fitted by weighted least squares
// to the measured output Bloch vectors.
MleResult mle_project(const Matrix4c& raw_chi, std::span<const Matrix2c> inputs,
                      std::span<const BlochVector> measured_outputs,
                      const MleOptions& options = {});

// Linear inversion followed by mle_project.
MleResult process_tomography(std::span<const Matrix2c> inputs,
                             std::span<const BlochVector> measured_outputs,
                             const MleOptions& options = {});

// The four protocol inputs +X, +Y, +Z, -Z as ideal density matrices.
std::array<Matrix2c, 4> standard_inputs();
std::array<Vector2c, 4> standard_input_kets();

struct ValueWithError {
  double value = 0.0;
  double error = 0.0;
};

// f_p / f_i with first-order error propagation. Throws on f_i == 0.
ValueWithError memory_fidelity(ValueWithError f_p, ValueWithError f_i);

enum class MonteCarloMode { kDensityElements, kCountsBootstrap };

struct MonteCarloInputs {
  std::array<BlochVector, 4> outputs;  // memory outputs (SF_p, F_p)
  std::optional<std::array<BlochVector, 4>> initialized;  // (SF_i, F_i)
  // Counts-bootstrap mode resamples these instead of perturbing Bloch vectors.
  std::optional<std::array<XYTomographyData, 4>> output_data;
  std::optional<std::array<XYTomographyData, 4>> init_data;
  double visibility = 1.0;
};

struct MonteCarloResult {
  int samples = 0;
  Matrix4c chi_std = Matrix4c::Zero();
  Matrix4c chi_init_std = Matrix4c::Zero();
  double f_p_std = 0, f_i_std = 0, f_m_std = 0;
  std::array<double, 4> sf_p_std{}, sf_i_std{}, sf_m_std{};
  double sf_p_mean_std = 0, sf_i_mean_std = 0, sf_m_mean_std = 0;
  int unphysical = 0;  // projected samples violating the physicality tolerances
  int not_converged = 0;
};

// Resamples the measured data n_samples times, reruns tomography + MLE per
// sample and reports standard deviations. Sample s draws from stream
// derive_stream_id({seed, s}); results do not depend on `workers`.
MonteCarloResult monte_carlo_errors(const MonteCarloInputs& in, int n_samples, std::uint64_t seed,
                                    int workers = 1,
                                    MonteCarloMode mode = MonteCarloMode::kDensityElements);

struct StateFidelities {
  std::array<ValueWithError, 4> sf;  // per input
  ValueWithError mean;
};

struct FidelityReport {
  StateFidelities sf_init, sf_process, sf_memory;
  std::array<ValueWithError, 4> sf_memory_mc;  // Monte Carlo errors for SF_m
  ValueWithError f_p, f_i, f_m;
};

// Haar-average state fidelity of a single-qubit channel, by Gauss-Legendre
// product quadrature over the Bloch sphere.
double haar_average_fidelity(const std::function<Matrix2c(const Matrix2c&)>& channel);
double average_fidelity_from_chi(const Matrix4c& chi);  // (2 chi_II + 1) / 3

struct MeasurePrepareOptimum {
  double fidelity = 0;
  Eigen::Vector3d axis, prepare_plus, prepare_minus;
};
// Brute-force search over measure-along-an-axis-then-reprepare channels.
MeasurePrepareOptimum best_measure_prepare_fidelity(int grid_points = 400);

}  // namespace donormem
