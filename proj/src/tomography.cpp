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

#include "donormem/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "donormem/rng.hpp"

namespace donormem {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

Matrix4c kron2(const Matrix2c& a, const Matrix2c& b) {
  Matrix4c out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

Eigen::Vector4cd vec(const Matrix2c& m) {
  return Eigen::Vector4cd(m(0, 0), m(1, 0), m(0, 1), m(1, 1));
}

Matrix4c hermitize(const Matrix4c& m) { return 0.5 * (m + m.adjoint()); }

}  // namespace

std::vector<double> TomographyPlan::default_phases() {
  std::vector<double> out;
  for (int k = 0; k < 24; ++k) out.push_back(15.0 * k);
  return out;
}

void TomographyPlan::validate() const {
  for (std::size_t i = 0; i < phases_deg.size(); ++i) {
    if (!(phases_deg[i] >= 0 && phases_deg[i] < 360))
      throw std::invalid_argument("TomographyPlan: phases must lie in [0, 360)");
    if (i > 0 && !(phases_deg[i] > phases_deg[i - 1]))
      throw std::invalid_argument("TomographyPlan: phases must be distinct and sorted");
  }
}

namespace {

PointEstimate estimate_point(const DensityMatrix4& rho, const NoiseConfig& cfg,
                             std::uint64_t point_id, ReadoutBasis basis, double phase,
                             std::vector<ShotRecord>& sink) {
  PointEstimate pe;
  pe.basis = basis;
  pe.phase_deg = phase;
  if (cfg.analytic) {
    const double p_up = rho.population(kUpUp) + rho.population(kUpDown);
    pe.p = click_probability(std::clamp(p_up, 0.0, 1.0), cfg.readout_visibility);
    return pe;
  }
  auto recs = measure_point(rho, cfg, point_id, basis, phase);
  const auto est = estimate_probability(recs);
  pe.p = est.mean;
  pe.std = est.std;
  pe.sem = est.sem;
  for (const auto& r : recs) pe.shots_total += r.shots;
  sink.insert(sink.end(), recs.begin(), recs.end());
  return pe;
}

}  // namespace

XYTomographyData run_xy_tomography(const Preparation& prepare, const TomographyPlan& plan,
                                   const NoiseConfig& cfg, std::uint64_t point_base) {
  plan.validate();
  cfg.validate();
  XYTomographyData out;
  for (std::size_t k = 0; k < plan.phases_deg.size(); ++k) {
    const double phase = plan.phases_deg[k];
    out.xy.push_back(
        estimate_point(prepare(phase), cfg, point_base + k, ReadoutBasis::kXY, phase, out.records));
  }
  if (plan.include_z)
    out.z = estimate_point(prepare(std::nullopt), cfg, point_base + plan.phases_deg.size(),
                           ReadoutBasis::kZ, 0.0, out.records);
  return out;
}

XYTomographyData tomography_from_records(const std::vector<ShotRecord>& records) {
  std::map<double, std::vector<ShotRecord>> xy;
  std::vector<ShotRecord> z;
  for (const auto& r : records) {
    if (r.basis == ReadoutBasis::kZ) z.push_back(r);
    else xy[r.phase_deg].push_back(r);
  }
  XYTomographyData out;
  out.records = records;
  const auto make = [](const std::vector<ShotRecord>& group, ReadoutBasis basis, double phase) {
    const auto est = estimate_probability(group);
    PointEstimate pe{basis, phase, est.mean, est.std, est.sem, 0};
    for (const auto& r : group) pe.shots_total += r.shots;
    return pe;
  };
  for (const auto& [phase, group] : xy) out.xy.push_back(make(group, ReadoutBasis::kXY, phase));
  if (!z.empty()) out.z = make(z, ReadoutBasis::kZ, 0.0);
  return out;
}

SinusoidFit sinusoid_fit(std::span<const double> phases_deg, std::span<const double> probs,
                         std::span<const double> errors) {
  const std::size_t n = phases_deg.size();
  if (n < 4) throw std::invalid_argument("sinusoid_fit: need at least 4 points");
  if (probs.size() != n || errors.size() != n)
    throw std::invalid_argument("sinusoid_fit: length mismatch");

  const bool unweighted = std::all_of(errors.begin(), errors.end(), [](double e) { return e <= 0; });
  double floor = 0;
  for (double e : errors)
    if (e > 0) floor = floor == 0 ? e : std::min(floor, e);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = unweighted ? 1.0 : std::max(errors[i], floor);

  CurveModel model;
  model.n_params = 3;
  model.value = [](double phi, std::span<const double> p) {
    return p[0] + p[1] * std::cos(phi * kDeg) + p[2] * std::sin(phi * kDeg);
  };
  model.gradient = [](double phi, std::span<const double>, std::span<double> g) {
    g[0] = 1.0;
    g[1] = std::cos(phi * kDeg);
    g[2] = std::sin(phi * kDeg);
  };
  const std::vector<double> init = {0.5, 0.0, 0.0};
  const FitResult fr = nlls_fit(model, phases_deg, probs, w, init);

  SinusoidFit out;
  out.converged = fr.converged;
  out.diagnostics = fr.message;
  out.offset = fr.params[0];
  out.a = fr.params[1];
  out.b = fr.params[2];
  if (!unweighted) out.covariance = fr.covariance;
  const double a = out.a, b = out.b;
  const Eigen::Matrix3d& c = out.covariance;
  out.amplitude = std::hypot(a, b);
  out.offset_err = std::sqrt(c(0, 0));
  if (out.amplitude > 0) {
    const double a2 = out.amplitude * out.amplitude;
    out.amplitude_err = std::sqrt(std::max(0.0, (a * a * c(1, 1) + b * b * c(2, 2) + 2 * a * b * c(1, 2)) / a2));
    out.phase_err_deg =
        std::sqrt(std::max(0.0, (b * b * c(1, 1) + a * a * c(2, 2) - 2 * a * b * c(1, 2)) / (a2 * a2))) / kDeg;
    double ph = std::atan2(b, a) / kDeg;
    if (ph < 0) ph += 360.0;
    if (ph >= 360.0) ph -= 360.0;
    out.phase_deg = ph;
  } else {
    out.amplitude_err = std::sqrt(std::max(c(1, 1), c(2, 2)));
  }
  if (!(out.amplitude > 1e-12) || out.amplitude <= out.amplitude_err) {
    out.phase_defined = false;
    out.diagnostics = "amplitude consistent with zero: phase undefined";
  }
  return out;
}

SinusoidFit sinusoid_fit(const XYTomographyData& data) {
  std::vector<double> ph, p, e;
  for (const auto& pt : data.xy) {
    ph.push_back(pt.phase_deg);
    p.push_back(pt.p);
    e.push_back(pt.sem);
  }
  return sinusoid_fit(ph, p, e);
}

BlochVector bloch_from_tomography(const SinusoidFit& fit, double z_estimate, double z_err,
                                  double visibility) {
  if (!(visibility > 0)) throw std::invalid_argument("bloch_from_tomography: visibility must be > 0");
  BlochVector b;
  b.x = 2.0 * fit.a / visibility;
  b.y = 2.0 * fit.b / visibility;
  b.z = (2.0 * z_estimate - 1.0) / visibility;
  b.x_err = 2.0 * std::sqrt(fit.covariance(1, 1)) / visibility;
  b.y_err = 2.0 * std::sqrt(fit.covariance(2, 2)) / visibility;
  b.xy_cov = 4.0 * fit.covariance(1, 2) / (visibility * visibility);
  b.z_err = 2.0 * z_err / visibility;
  return b;
}

BlochVector bloch_from_tomography(const XYTomographyData& data, double visibility) {
  if (!data.z) throw std::invalid_argument("bloch_from_tomography: no Z-basis estimate");
  return bloch_from_tomography(sinusoid_fit(data), data.z->p, data.z->sem, visibility);
}

BlochVector project_to_ball(const BlochVector& b) {
  const double n = b.norm();
  if (n <= 1.0) return b;
  BlochVector out = b;
  out.x /= n;
  out.y /= n;
  out.z /= n;
  return out;
}

Matrix2c density_from_bloch(const BlochVector& in) {
  const BlochVector b = project_to_ball(in);
  Matrix2c rho;
  rho << 0.5 * (1 + b.z), Complex(0.5 * b.x, -0.5 * b.y), Complex(0.5 * b.x, 0.5 * b.y),
      0.5 * (1 - b.z);
  return rho;
}

Eigen::Vector3d bloch_of(const Matrix2c& rho) {
  return {2.0 * rho(1, 0).real(), 2.0 * rho(1, 0).imag(), (rho(0, 0) - rho(1, 1)).real()};
}

Vector2c pure_state_from_bloch(const Eigen::Vector3d& n) {
  const Eigen::Vector3d u = n.normalized();
  const double theta = std::acos(std::clamp(u.z(), -1.0, 1.0));
  const double phi = std::atan2(u.y(), u.x());
  return {Complex(std::cos(theta / 2), 0), std::polar(std::sin(theta / 2), phi)};
}

double state_fidelity(const Matrix2c& rho, const Vector2c& psi) {
  return std::clamp((psi.adjoint() * rho * psi)(0, 0).real(), 0.0, 1.0);
}

const std::array<Matrix2c, 4>& process_basis() {
  static const std::array<Matrix2c, 4> basis = [] {
    std::array<Matrix2c, 4> e;
    e[0] << 1, 0, 0, 1;
    e[1] << 0, 1, 1, 0;
    e[2] << 0, 1, -1, 0;  // i * sigma_y
    e[3] << 1, 0, 0, -1;
    return e;
  }();
  return basis;
}

Matrix2c apply_chi(const Matrix4c& chi, const Matrix2c& rho) {
  const auto& e = process_basis();
  Matrix2c out = Matrix2c::Zero();
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n)
      if (chi(m, n) != Complex(0)) out += chi(m, n) * e[m] * rho * e[n].adjoint();
  return out;
}

namespace {

Matrix2c tp_operator(const Matrix4c& chi) {
  const auto& e = process_basis();
  Matrix2c g = Matrix2c::Zero();
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) g += chi(m, n) * e[n].adjoint() * e[m];
  return g;
}

}  // namespace

double trace_preservation_residual(const Matrix4c& chi) {
  return (tp_operator(chi) - Matrix2c::Identity()).norm();
}

double min_eigenvalue(const Matrix4c& chi) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(hermitize(chi), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

Matrix4c chi_to_pauli_basis(const Matrix4c& chi) {
  const std::array<Complex, 4> c = {1.0, 1.0, Complex(0, 1), 1.0};
  Matrix4c out;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) out(m, n) = c[m] * std::conj(c[n]) * chi(m, n);
  return out;
}

Matrix4c chi_from_pauli_basis(const Matrix4c& chi_pauli) {
  const std::array<Complex, 4> c = {1.0, 1.0, Complex(0, 1), 1.0};
  Matrix4c out;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) out(m, n) = std::conj(c[m]) * c[n] * chi_pauli(m, n);
  return out;
}

Matrix4c linear_inversion_chi(std::span<const Matrix2c> inputs, std::span<const Matrix2c> outputs) {
  if (inputs.size() != 4 || outputs.size() != 4)
    throw std::invalid_argument("linear_inversion_chi: need exactly four input/output pairs");
  Matrix4c in, out;
  for (int j = 0; j < 4; ++j) {
    in.col(j) = vec(inputs[j]);
    out.col(j) = vec(outputs[j]);
  }
  Eigen::JacobiSVD<Matrix4c> svd(in);
  const auto& s = svd.singularValues();
  if (!(s(3) > 1e-9 * s(0)))
    throw std::invalid_argument("linear_inversion_chi: input states do not span the operator space");
  const Matrix4c superop = out * in.inverse();

  const auto& e = process_basis();
  Eigen::Matrix<Complex, 16, 16> b;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) {
      const Matrix4c term = kron2(e[n].conjugate(), e[m]);
      b.col(4 * m + n) = Eigen::Map<const Eigen::Matrix<Complex, 16, 1>>(term.data());
    }
  const Eigen::Matrix<Complex, 16, 1> rhs = Eigen::Map<const Eigen::Matrix<Complex, 16, 1>>(superop.data());
  const Eigen::Matrix<Complex, 16, 1> c = b.fullPivLu().solve(rhs);
  Matrix4c chi;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) chi(m, n) = c(4 * m + n);
  return hermitize(chi);
}

namespace {

constexpr int kMleParams = 16;

Matrix4c chi_from_params(const Eigen::VectorXd& p) {
  Matrix4c t = Matrix4c::Zero();
  int k = 4;
  for (int i = 0; i < 4; ++i) {
    t(i, i) = p(i);
    for (int j = 0; j < i; ++j, k += 2) t(i, j) = Complex(p(k), p(k + 1));
  }
  Matrix4c chi = t.adjoint() * t;
  const double tr = chi.trace().real();
  return tr > 0 ? Matrix4c(chi / tr) : Matrix4c(Matrix4c::Identity() / 4.0);
}

// Lower-triangular T with chi = T^dagger T, from a reversed Cholesky factor.
Eigen::VectorXd params_from_chi(const Matrix4c& chi_in) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> es(hermitize(chi_in));
  Eigen::Vector4d ev = es.eigenvalues().cwiseMax(1e-4);
  Matrix4c chi = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  chi /= chi.trace().real();
  Matrix4c rev;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) rev(i, j) = chi(3 - i, 3 - j);
  const Matrix4c l = Eigen::LLT<Matrix4c>(rev).matrixL();
  Matrix4c t;  // T = P L^dagger P
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) t(i, j) = std::conj(l(3 - j, 3 - i));
  Eigen::VectorXd p(kMleParams);
  int k = 4;
  for (int i = 0; i < 4; ++i) {
    p(i) = t(i, i).real();  // Cholesky diagonal is real and positive
    for (int j = 0; j < i; ++j, k += 2) {
      p(k) = t(i, j).real();
      p(k + 1) = t(i, j).imag();
    }
  }
  return p;
}

// Congruence that makes the map exactly trace preserving: chi -> the process
// of rho -> E(G^{-1/2} rho G^{-1/2}), with G = sum chi_mn E_n^dagger E_m.
Matrix4c restore_trace_preservation(const Matrix4c& chi) {
  const Matrix2c g = tp_operator(chi);
  Eigen::SelfAdjointEigenSolver<Matrix2c> es(0.5 * (g + g.adjoint()));
  const Eigen::Vector2d ev = es.eigenvalues();
  if (!(ev.minCoeff() > 0)) return chi;
  const Matrix2c g_inv_sqrt =
      es.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint();
  const auto& e = process_basis();
  Matrix4c a;
  for (int m = 0; m < 4; ++m)
    for (int k = 0; k < 4; ++k) a(m, k) = 0.5 * (e[k].adjoint() * e[m] * g_inv_sqrt).trace();
  return hermitize(a.transpose() * chi * a.conjugate());
}

}  // namespace

MleResult mle_project(const Matrix4c& raw_chi, std::span<const Matrix2c> inputs,
                      std::span<const BlochVector> measured, const MleOptions& options) {
  if (inputs.size() != measured.size() || inputs.empty())
    throw std::invalid_argument("mle_project: inputs and outputs differ in size");
  MleResult res;
  const Matrix4c raw = hermitize(raw_chi);
  if (min_eigenvalue(raw) >= -1e-12 && trace_preservation_residual(raw) <= 1e-10) {
    res.process.chi = raw;
    res.unchanged = true;
    return res;
  }

  const int n_in = static_cast<int>(inputs.size());
  double err_floor = 0;
  for (const auto& b : measured)
    for (double e : {b.x_err, b.y_err, b.z_err})
      if (e > 0) err_floor = err_floor == 0 ? e : std::min(err_floor, e);
  if (err_floor == 0) err_floor = 1e-6;
  const auto w = [&](double e) { return 1.0 / std::max(e, err_floor); };

  // chi = T^dagger T / Tr, made exactly trace preserving: every trial point
  // is a physical process, so no penalty terms are needed.
  LeastSquaresProblem prob;
  prob.n_residuals = 3 * n_in;
  prob.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const Matrix4c chi = restore_trace_preservation(chi_from_params(p));
    for (int j = 0; j < n_in; ++j) {
      const Eigen::Vector3d pred = bloch_of(apply_chi(chi, inputs[j]));
      const auto& m = measured[j];
      r(3 * j) = (pred.x() - m.x) * w(m.x_err);
      r(3 * j + 1) = (pred.y() - m.y) * w(m.y_err);
      r(3 * j + 2) = (pred.z() - m.z) * w(m.z_err);
    }
  };

  FitOptions fo;
  fo.gtol = 1e-9;
  fo.ftol = 1e-10;
  fo.max_iterations = 400;
  const Eigen::VectorXd start = params_from_chi(raw);
  FitResult best;
  bool have_best = false;
  RandomStream rs(options.seed, 0);
  for (int attempt = 0; attempt <= options.restarts; ++attempt) {
    Eigen::VectorXd init = start;
    if (attempt > 0)
      for (int i = 0; i < init.size(); ++i) init(i) += 0.05 * rs.normal();
    FitResult fr = least_squares(prob, init, fo);
    res.iterations += fr.iterations;
    if (!have_best || fr.chi2 < best.chi2) {
      best = fr;
      have_best = true;
    }
    if (fr.converged) break;
  }
  const Eigen::VectorXd p = Eigen::Map<const Eigen::VectorXd>(best.params.data(), kMleParams);
  res.process.chi = restore_trace_preservation(chi_from_params(p));
  res.converged = best.converged;
  res.chi2 = best.chi2;
  return res;
}

std::array<Matrix2c, 4> standard_inputs() {
  std::array<Matrix2c, 4> out;
  const auto kets = standard_input_kets();
  for (int j = 0; j < 4; ++j) out[j] = kets[j] * kets[j].adjoint();
  return out;
}

std::array<Vector2c, 4> standard_input_kets() {
  return {pure_state_from_bloch({1, 0, 0}), pure_state_from_bloch({0, 1, 0}),
          pure_state_from_bloch({0, 0, 1}), pure_state_from_bloch({0, 0, -1})};
}

MleResult process_tomography(std::span<const Matrix2c> inputs,
                             std::span<const BlochVector> measured_outputs, const MleOptions& options) {
  std::vector<Matrix2c> outs;
  for (const auto& b : measured_outputs) {
    // Linear inversion uses the unprojected estimates.
    Matrix2c rho;
    rho << 0.5 * (1 + b.z), Complex(0.5 * b.x, -0.5 * b.y), Complex(0.5 * b.x, 0.5 * b.y),
        0.5 * (1 - b.z);
    outs.push_back(rho);
  }
  const Matrix4c raw = linear_inversion_chi(inputs, outs);
  return mle_project(raw, inputs, measured_outputs, options);
}

ValueWithError memory_fidelity(ValueWithError f_p, ValueWithError f_i) {
  if (f_i.value == 0.0) throw std::invalid_argument("memory_fidelity: f_i must be non-zero");
  const double fm = f_p.value / f_i.value;
  const double rel_p = f_p.value != 0 ? f_p.error / f_p.value : 0.0;
  const double rel_i = f_i.error / f_i.value;
  return {fm, std::abs(fm) * std::hypot(rel_p, rel_i)};
}

namespace {

struct SampleOutcome {
  Matrix4c chi, chi_init;
  double f_p = 0, f_i = 0, f_m = 0;
  std::array<double, 4> sf_p{}, sf_i{}, sf_m{};
  double sf_p_mean = 0, sf_i_mean = 0, sf_m_mean = 0;
  bool physical = true;
  bool converged = true;
};

bool physical(const Matrix4c& chi) {
  return (chi - chi.adjoint()).cwiseAbs().maxCoeff() <= 1e-8 && min_eigenvalue(chi) >= -1e-8 &&
         trace_preservation_residual(chi) <= 1e-6;
}

BlochVector perturb(const BlochVector& b, RandomStream& rs) {
  BlochVector out = b;
  out.x += b.x_err * rs.normal();
  out.y += b.y_err * rs.normal();
  out.z += b.z_err * rs.normal();
  return out;
}

BlochVector bootstrap(const XYTomographyData& data, double visibility, RandomStream& rs) {
  XYTomographyData copy = data;
  const auto redraw = [&](PointEstimate& pe) {
    if (pe.shots_total == 0) return;
    const auto k = rs.binomial(static_cast<std::uint32_t>(pe.shots_total), pe.p);
    const double n = static_cast<double>(pe.shots_total);
    pe.p = k / n;
    // keep the original weights so every resample uses the same fit
  };
  for (auto& pe : copy.xy) redraw(pe);
  if (copy.z) redraw(*copy.z);
  return bloch_from_tomography(copy, visibility);
}

template <typename F>
void parallel_for(int n, int workers, F&& body) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) body(i);
    });
  for (auto& t : pool) t.join();
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  double mean = 0;
  for (double x : v) mean += x;
  mean /= v.size();
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (v.size() - 1));
}

}  // namespace

MonteCarloResult monte_carlo_errors(const MonteCarloInputs& in, int n_samples, std::uint64_t seed,
                                    int workers, MonteCarloMode mode) {
  if (n_samples < 2) throw std::invalid_argument("monte_carlo_errors: need at least 2 samples");
  if (mode == MonteCarloMode::kCountsBootstrap &&
      (!in.output_data || (in.initialized && !in.init_data)))
    throw std::invalid_argument("monte_carlo_errors: counts bootstrap needs tomography data");

  const auto inputs = standard_inputs();
  const auto kets = standard_input_kets();
  std::vector<SampleOutcome> samples(n_samples);

  parallel_for(n_samples, workers, [&](int s) {
    RandomStream rs(seed, derive_stream_id({seed, static_cast<std::uint64_t>(s)}));
    SampleOutcome& o = samples[s];
    const auto draw = [&](const std::array<BlochVector, 4>& base,
                          const std::optional<std::array<XYTomographyData, 4>>& data) {
      std::array<BlochVector, 4> out;
      for (int j = 0; j < 4; ++j)
        out[j] = mode == MonteCarloMode::kCountsBootstrap ? bootstrap((*data)[j], in.visibility, rs)
                                                          : perturb(base[j], rs);
      return out;
    };
    const auto outs = draw(in.outputs, in.output_data);
    const MleResult mp = process_tomography(inputs, outs);
    o.chi = mp.process.chi;
    o.f_p = o.chi(0, 0).real();
    o.physical = physical(o.chi);
    o.converged = mp.converged;
    for (int j = 0; j < 4; ++j) {
      o.sf_p[j] = state_fidelity(density_from_bloch(outs[j]), kets[j]);
      o.sf_p_mean += o.sf_p[j] / 4;
    }
    if (in.initialized) {
      const auto inits = draw(*in.initialized, in.init_data);
      const MleResult mi = process_tomography(inputs, inits);
      o.chi_init = mi.process.chi;
      o.f_i = o.chi_init(0, 0).real();
      o.f_m = o.f_i != 0 ? o.f_p / o.f_i : 0.0;
      o.physical = o.physical && physical(o.chi_init);
      o.converged = o.converged && mi.converged;
      for (int j = 0; j < 4; ++j) {
        o.sf_i[j] = state_fidelity(density_from_bloch(inits[j]), kets[j]);
        o.sf_m[j] = o.sf_i[j] != 0 ? o.sf_p[j] / o.sf_i[j] : 0.0;
        o.sf_i_mean += o.sf_i[j] / 4;
      }
      o.sf_m_mean = o.sf_i_mean != 0 ? o.sf_p_mean / o.sf_i_mean : 0.0;
    }
  });

  MonteCarloResult res;
  res.samples = n_samples;
  const auto column = [&](auto getter) {
    std::vector<double> v;
    v.reserve(n_samples);
    for (const auto& s : samples) v.push_back(getter(s));
    return sample_std(v);
  };
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 4; ++n) {
      res.chi_std(m, n) = Complex(column([&](const SampleOutcome& s) { return s.chi(m, n).real(); }),
                                  column([&](const SampleOutcome& s) { return s.chi(m, n).imag(); }));
      if (in.initialized)
        res.chi_init_std(m, n) =
            Complex(column([&](const SampleOutcome& s) { return s.chi_init(m, n).real(); }),
                    column([&](const SampleOutcome& s) { return s.chi_init(m, n).imag(); }));
    }
  res.f_p_std = column([](const SampleOutcome& s) { return s.f_p; });
  res.sf_p_mean_std = column([](const SampleOutcome& s) { return s.sf_p_mean; });
  for (int j = 0; j < 4; ++j) res.sf_p_std[j] = column([&](const SampleOutcome& s) { return s.sf_p[j]; });
  if (in.initialized) {
    res.f_i_std = column([](const SampleOutcome& s) { return s.f_i; });
    res.f_m_std = column([](const SampleOutcome& s) { return s.f_m; });
    res.sf_i_mean_std = column([](const SampleOutcome& s) { return s.sf_i_mean; });
    res.sf_m_mean_std = column([](const SampleOutcome& s) { return s.sf_m_mean; });
    for (int j = 0; j < 4; ++j) {
      res.sf_i_std[j] = column([&](const SampleOutcome& s) { return s.sf_i[j]; });
      res.sf_m_std[j] = column([&](const SampleOutcome& s) { return s.sf_m[j]; });
    }
  }
  for (const auto& s : samples) {
    if (!s.physical) ++res.unphysical;
    if (!s.converged) ++res.not_converged;
  }
  return res;
}

namespace {

// Gauss-Legendre nodes/weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.resize(n);
  w.resize(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * z * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1 - z * z) * dp * dp);
  }
}

struct SphereRule {
  std::vector<Eigen::Vector3d> points;
  std::vector<double> weights;  // sum to 1
};

const SphereRule& sphere_rule() {
  static const SphereRule rule = [] {
    SphereRule r;
    std::vector<double> x, w;
    gauss_legendre(8, x, w);
    const int n_phi = 16;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (int k = 0; k < n_phi; ++k) {
        const double phi = 2 * kPi * k / n_phi;
        const double s = std::sqrt(1 - x[i] * x[i]);
        r.points.emplace_back(s * std::cos(phi), s * std::sin(phi), x[i]);
        r.weights.push_back(w[i] / (2.0 * n_phi));
      }
    return r;
  }();
  return rule;
}

}  // namespace

double haar_average_fidelity(const std::function<Matrix2c(const Matrix2c&)>& channel) {
  const auto& rule = sphere_rule();
  double f = 0;
  for (std::size_t i = 0; i < rule.points.size(); ++i) {
    const Vector2c psi = pure_state_from_bloch(rule.points[i]);
    f += rule.weights[i] * state_fidelity(channel(psi * psi.adjoint()), psi);
  }
  return f;
}

double average_fidelity_from_chi(const Matrix4c& chi) { return (2.0 * chi(0, 0).real() + 1.0) / 3.0; }

namespace {

std::vector<Eigen::Vector3d> fibonacci_sphere(int n) {
  std::vector<Eigen::Vector3d> pts;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(1 - z * z);
    pts.emplace_back(r * std::cos(golden * i), r * std::sin(golden * i), z);
  }
  return pts;
}

Matrix2c measure_prepare(const Matrix2c& rho, const Eigen::Vector3d& axis,
                         const Eigen::Vector3d& plus, const Eigen::Vector3d& minus) {
  const Vector2c up = pure_state_from_bloch(axis);
  const double p_plus = state_fidelity(rho, up);
  BlochVector bp{plus.x(), plus.y(), plus.z()}, bm{minus.x(), minus.y(), minus.z()};
  return p_plus * density_from_bloch(bp) + (1 - p_plus) * density_from_bloch(bm);
}

}  // namespace

MeasurePrepareOptimum best_measure_prepare_fidelity(int grid_points) {
  const auto grid = fibonacci_sphere(grid_points);
  const auto& rule = sphere_rule();
  MeasurePrepareOptimum best;
  best.fidelity = -1;
  // Coarse search: for each axis, each outcome's preparation is chosen independently.
  for (const auto& axis : grid) {
    double part[2] = {-1, -1};
    Eigen::Vector3d arg[2];
    for (const auto& a : grid) {
      double fp = 0, fm = 0;
      for (std::size_t i = 0; i < rule.points.size(); ++i) {
        const auto& s = rule.points[i];
        const double sa = 0.5 * (1 + s.dot(a));
        fp += rule.weights[i] * 0.5 * (1 + s.dot(axis)) * sa;
        fm += rule.weights[i] * 0.5 * (1 - s.dot(axis)) * sa;
      }
      if (fp > part[0]) part[0] = fp, arg[0] = a;
      if (fm > part[1]) part[1] = fm, arg[1] = a;
    }
    if (part[0] + part[1] > best.fidelity) {
      best.fidelity = part[0] + part[1];
      best.axis = axis;
      best.prepare_plus = arg[0];
      best.prepare_minus = arg[1];
    }
  }
  // Local refinement on the full channel.
  RandomStream rs(0x636c61, 0);
  const auto eval = [&](const MeasurePrepareOptimum& c) {
    return haar_average_fidelity(
        [&](const Matrix2c& rho) { return measure_prepare(rho, c.axis, c.prepare_plus, c.prepare_minus); });
  };
  best.fidelity = eval(best);
  double step = 0.1;
  for (int it = 0; it < 600; ++it) {
    MeasurePrepareOptimum trial = best;
    for (Eigen::Vector3d* v : {&trial.axis, &trial.prepare_plus, &trial.prepare_minus}) {
      *v += step * Eigen::Vector3d(rs.normal(), rs.normal(), rs.normal());
      v->normalize();
    }
    trial.fidelity = eval(trial);
    if (trial.fidelity > best.fidelity) best = trial;
    if (it % 100 == 99) step *= 0.5;
  }
  return best;
}

}  // namespace donormem
