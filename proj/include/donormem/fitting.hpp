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

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace donormem {

struct FitResult {
  std::vector<double> params;
  std::vector<double> errors;  // sqrt(diag(covariance))
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;           // sum of squared weighted residuals
  double residual_norm = 0.0;  // sqrt(chi2)
  double gradient_norm = 0.0;  // max cosine between residual and Jacobian columns
  bool converged = false;
  int iterations = 0;
  std::string message;
};

struct FitOptions {
  int max_iterations = 200;
  double gtol = 1e-10;
  double xtol = 1e-14;
  double ftol = 0.0;  // relative cost reduction that counts as converged; 0 disables
};

// Generic bounded least squares: minimize |r(p)|^2. `jacobian` may be empty,
// in which case central differences are used.
struct LeastSquaresProblem {
  int n_residuals = 0;
  std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r)> residuals;
  std::function<void(const Eigen::VectorXd& p, Eigen::MatrixXd& jac)> jacobian;
  Eigen::VectorXd lower;  // empty: unbounded
  Eigen::VectorXd upper;
};

// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt scaling). Bounds are
// enforced by projection. Deterministic for fixed inputs.
FitResult least_squares(const LeastSquaresProblem& problem, const Eigen::VectorXd& init,
                        const FitOptions& options = {});

Eigen::MatrixXd finite_difference_jacobian(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& residuals,
    const Eigen::VectorXd& p, int n_residuals);

// Scalar curve model y = f(x; p).
struct CurveModel {
  int n_params = 0;
  std::function<double(double x, std::span<const double> p)> value;
  // Optional analytic gradient with respect to p.
  std::function<void(double x, std::span<const double> p, std::span<double> grad)> gradient;
  std::vector<double> lower;
  std::vector<double> upper;
};

// Minimizes sum(((y - f(x)) / y_err)^2). Throws std::invalid_argument on
// mismatched lengths or non-positive y_err.
FitResult nlls_fit(const CurveModel& model, std::span<const double> x, std::span<const double> y,
                   std::span<const double> y_err, std::span<const double> init,
                   const FitOptions& options = {});

// y = y0 + K exp(-(tau / T2)^alpha)
CurveModel stretched_exp_model();

struct StretchedExpFit {
  double y0 = 0, k = 0, t2 = 0, alpha = 0;
  double y0_err = 0, k_err = 0, t2_err = 0, alpha_err = 0;
  bool degenerate = false;  // no resolvable decay: T2 unidentifiable
  FitResult fit;
};

// Throws std::invalid_argument for fewer than 5 points.
StretchedExpFit stretched_exp_fit(std::span<const double> tau, std::span<const double> signal,
                                  std::span<const double> signal_err);

struct PowerLawFit {
  double prefactor = 0, exponent = 0;
  double prefactor_err = 0, exponent_err = 0;
  double log_covariance = 0;  // cov(ln prefactor, exponent)
  double chi2 = 0;
};

// t2 = prefactor * n^exponent via weighted regression in log-log space.
// Throws std::invalid_argument on non-positive t2 or fewer than 3 points.
PowerLawFit power_law_fit(std::span<const double> n, std::span<const double> t2,
                          std::span<const double> t2_err);

}  // namespace donormem
