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

#include "donormem/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace donormem {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& p, const LeastSquaresProblem& prob) {
  Eigen::VectorXd q = p;
  if (prob.lower.size() == p.size()) q = q.cwiseMax(prob.lower);
  if (prob.upper.size() == p.size()) q = q.cwiseMin(prob.upper);
  return q;
}

// Max |cos| between the residual and each Jacobian column, skipping columns
// pinned at a bound with the gradient pushing outward.
double scaled_gradient(const Eigen::MatrixXd& jac, const Eigen::VectorXd& r,
                       const Eigen::VectorXd& p, const LeastSquaresProblem& prob) {
  const double rn = r.norm();
  if (rn == 0.0) return 0.0;
  const Eigen::VectorXd g = jac.transpose() * r;
  double worst = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    const double cn = jac.col(i).norm();
    if (cn == 0.0) continue;
    const bool at_lower = prob.lower.size() == p.size() && p(i) <= prob.lower(i) && g(i) > 0;
    const bool at_upper = prob.upper.size() == p.size() && p(i) >= prob.upper(i) && g(i) < 0;
    if (at_lower || at_upper) continue;
    worst = std::max(worst, std::abs(g(i)) / (cn * rn));
  }
  return worst;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cutoff = s.size() ? s(0) * 1e-14 * a.cols() : 0.0;
  Eigen::VectorXd inv(s.size());
  for (int i = 0; i < s.size(); ++i) inv(i) = s(i) > cutoff ? 1.0 / s(i) : 0.0;
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace

Eigen::MatrixXd finite_difference_jacobian(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>& residuals,
    const Eigen::VectorXd& p, int n_residuals) {
  Eigen::MatrixXd jac(n_residuals, p.size());
  Eigen::VectorXd rp(n_residuals), rm(n_residuals);
  for (int i = 0; i < p.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(p(i)));
    Eigen::VectorXd q = p;
    q(i) = p(i) + h;
    residuals(q, rp);
    q(i) = p(i) - h;
    residuals(q, rm);
    jac.col(i) = (rp - rm) / (2.0 * h);
  }
  return jac;
}

FitResult least_squares(const LeastSquaresProblem& prob, const Eigen::VectorXd& init,
                        const FitOptions& opt) {
  const int m = prob.n_residuals;
  const int n = static_cast<int>(init.size());
  const auto eval_jac = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& jac) {
    if (prob.jacobian) {
      jac.resize(m, n);
      prob.jacobian(p, jac);
    } else {
      jac = finite_difference_jacobian(prob.residuals, p, m);
    }
  };

  Eigen::VectorXd p = project(init, prob);
  Eigen::VectorXd r(m);
  prob.residuals(p, r);
  double cost = r.squaredNorm();
  Eigen::MatrixXd jac;
  eval_jac(p, jac);

  FitResult res;
  double lambda = -1.0;
  bool done = false;
  int it = 0;
  for (; it < opt.max_iterations && !done; ++it) {
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    res.gradient_norm = scaled_gradient(jac, r, p, prob);
    if (cost == 0.0 || res.gradient_norm <= opt.gtol) {
      res.converged = true;
      res.message = cost == 0.0 ? "exact fit" : "gradient below tolerance";
      break;
    }
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-300);
    if (lambda < 0) lambda = 1e-3;

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += lambda * diag;
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      const Eigen::VectorXd trial = project(p + step, prob);
      Eigen::VectorXd rt(m);
      prob.residuals(trial, rt);
      const double trial_cost = rt.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost < cost) {
        const double rel_step = (trial - p).norm() / (p.norm() + opt.xtol);
        const double rel_drop = (cost - trial_cost) / cost;
        p = trial;
        r = rt;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        eval_jac(p, jac);
        if (rel_step <= opt.xtol) {
          done = true;
          res.message = "step below tolerance";
        } else if (opt.ftol > 0 && rel_drop <= opt.ftol) {
          done = true;
          res.converged = true;
          res.message = "relative reduction below tolerance";
        }
      } else {
        lambda *= 4.0;
        if (lambda > 1e16) {
          done = true;
          res.message = "no further decrease";
          break;
        }
      }
    }
  }
  res.iterations = it;
  // Undamped polishing steps: exact for linear models, harmless otherwise.
  for (int k = 0; k < 2 && cost > 0; ++k) {
    const Eigen::VectorXd step = pseudo_inverse(jac) * (-r);
    const Eigen::VectorXd trial = project(p + step, prob);
    Eigen::VectorXd rt(m);
    prob.residuals(trial, rt);
    const double trial_cost = rt.squaredNorm();
    if (!(std::isfinite(trial_cost) && trial_cost <= cost)) break;
    p = trial;
    r = rt;
    cost = trial_cost;
    eval_jac(p, jac);
  }
  res.gradient_norm = scaled_gradient(jac, r, p, prob);
  if (!res.converged) {
    // Stalled at a point that is stationary to working precision.
    res.converged = done && (cost < 1e-26 || res.gradient_norm <= 1e-6);
    if (!done) res.message = "iteration limit reached";
  }

  res.params.assign(p.data(), p.data() + n);
  res.covariance = pseudo_inverse(jac.transpose() * jac);
  res.errors.resize(n);
  for (int i = 0; i < n; ++i) res.errors[i] = std::sqrt(std::max(0.0, res.covariance(i, i)));
  res.chi2 = cost;
  res.residual_norm = std::sqrt(cost);
  return res;
}

FitResult nlls_fit(const CurveModel& model, std::span<const double> x, std::span<const double> y,
                   std::span<const double> y_err, std::span<const double> init,
                   const FitOptions& options) {
  if (x.size() != y.size() || x.size() != y_err.size())
    throw std::invalid_argument("nlls_fit: x, y and y_err lengths differ");
  if (static_cast<int>(init.size()) != model.n_params)
    throw std::invalid_argument("nlls_fit: init has the wrong number of parameters");
  for (double e : y_err)
    if (!(e > 0)) throw std::invalid_argument("nlls_fit: y_err must be > 0");

  const int m = static_cast<int>(x.size());
  const int n = model.n_params;
  LeastSquaresProblem prob;
  prob.n_residuals = m;
  prob.residuals = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    const std::span<const double> ps(p.data(), n);
    for (int i = 0; i < m; ++i) r(i) = (y[i] - model.value(x[i], ps)) / y_err[i];
  };
  if (model.gradient) {
    prob.jacobian = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& jac) {
      const std::span<const double> ps(p.data(), n);
      std::vector<double> grad(n);
      for (int i = 0; i < m; ++i) {
        model.gradient(x[i], ps, grad);
        for (int j = 0; j < n; ++j) jac(i, j) = -grad[j] / y_err[i];
      }
    };
  }
  if (!model.lower.empty()) prob.lower = Eigen::Map<const Eigen::VectorXd>(model.lower.data(), n);
  if (!model.upper.empty()) prob.upper = Eigen::Map<const Eigen::VectorXd>(model.upper.data(), n);
  return least_squares(prob, Eigen::Map<const Eigen::VectorXd>(init.data(), n), options);
}

CurveModel stretched_exp_model() {
  CurveModel m;
  m.n_params = 4;
  m.value = [](double tau, std::span<const double> p) {
    return p[0] + p[1] * std::exp(-std::pow(tau / p[2], p[3]));
  };
  m.gradient = [](double tau, std::span<const double> p, std::span<double> g) {
    const double ratio = tau / p[2];
    const double u = std::pow(ratio, p[3]);
    const double e = std::exp(-u);
    g[0] = 1.0;
    g[1] = e;
    g[2] = p[1] * e * p[3] * u / p[2];
    g[3] = ratio > 0 ? -p[1] * e * u * std::log(ratio) : 0.0;
  };
  m.lower = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
             1e-300, 1e-3};
  m.upper = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             std::numeric_limits<double>::infinity(), 4.0};
  return m;
}

StretchedExpFit stretched_exp_fit(std::span<const double> tau, std::span<const double> signal,
                                  std::span<const double> signal_err) {
  const std::size_t n = tau.size();
  if (n < 5) throw std::invalid_argument("stretched_exp_fit: need at least 5 points");
  if (signal.size() != n || signal_err.size() != n)
    throw std::invalid_argument("stretched_exp_fit: length mismatch");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return tau[a] < tau[b]; });
  const std::size_t edge = std::max<std::size_t>(1, n / 5);
  double head = 0, tail = 0;
  for (std::size_t i = 0; i < edge; ++i) {
    head += signal[order[i]];
    tail += signal[order[n - 1 - i]];
  }
  head /= edge;
  tail /= edge;

  StretchedExpFit out;
  const double y0 = tail, k = head - tail;
  std::vector<double> errs(signal_err.begin(), signal_err.end());
  std::nth_element(errs.begin(), errs.begin() + n / 2, errs.end());
  const double typical_err = errs[n / 2] / std::sqrt(static_cast<double>(edge));
  if (std::abs(k) <= 3.0 * typical_err) {
    out.degenerate = true;
    out.y0 = y0;
    out.fit.message = "no resolvable decay: T2 unidentifiable";
    return out;
  }

  // Half-decay crossing, linearly interpolated in log time.
  double t_half = tau[order[n / 2]];
  const double target = y0 + 0.5 * k;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = signal[order[i]] - target, b = signal[order[i + 1]] - target;
    if (a == 0) {
      t_half = tau[order[i]];
      break;
    }
    if ((a > 0) != (b > 0)) {
      const double t0 = std::max(tau[order[i]], 1e-300), t1 = tau[order[i + 1]];
      const double w = a / (a - b);
      t_half = std::exp(std::log(t0) + w * (std::log(t1) - std::log(t0)));
      break;
    }
  }
  // exp(-(t_half/T2)) = 1/2 at alpha = 1
  const double t2_init = t_half / std::log(2.0);

  const std::vector<double> init = {y0, k, t2_init, 1.0};
  out.fit = nlls_fit(stretched_exp_model(), tau, signal, signal_err, init);
  out.y0 = out.fit.params[0];
  out.k = out.fit.params[1];
  out.t2 = out.fit.params[2];
  out.alpha = out.fit.params[3];
  out.y0_err = out.fit.errors[0];
  out.k_err = out.fit.errors[1];
  out.t2_err = out.fit.errors[2];
  out.alpha_err = out.fit.errors[3];
  return out;
}

PowerLawFit power_law_fit(std::span<const double> n, std::span<const double> t2,
                          std::span<const double> t2_err) {
  if (n.size() != t2.size() || n.size() != t2_err.size())
    throw std::invalid_argument("power_law_fit: length mismatch");
  if (n.size() < 3) throw std::invalid_argument("power_law_fit: need at least 3 points");
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(n.size()), ly(n.size()), w(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (!(n[i] >= 1)) throw std::invalid_argument("power_law_fit: n must be >= 1");
    if (!(t2[i] > 0)) throw std::invalid_argument("power_law_fit: t2 must be > 0");
    if (!(t2_err[i] > 0)) throw std::invalid_argument("power_law_fit: t2_err must be > 0");
    const double sigma_log = t2_err[i] / t2[i];
    w[i] = 1.0 / (sigma_log * sigma_log);
    lx[i] = std::log(n[i]);
    ly[i] = std::log(t2[i]);
    sw += w[i];
    sx += w[i] * lx[i];
    sy += w[i] * ly[i];
    sxx += w[i] * lx[i] * lx[i];
    sxy += w[i] * lx[i] * ly[i];
  }
  const double det = sw * sxx - sx * sx;
  if (!(det > 0)) throw std::invalid_argument("power_law_fit: need at least two distinct n");
  PowerLawFit out;
  const double slope = (sw * sxy - sx * sy) / det;
  const double icpt = (sxx * sy - sx * sxy) / det;
  out.exponent = slope;
  out.prefactor = std::exp(icpt);
  out.exponent_err = std::sqrt(sw / det);
  out.prefactor_err = out.prefactor * std::sqrt(sxx / det);
  out.log_covariance = -sx / det;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double d = ly[i] - icpt - slope * lx[i];
    out.chi2 += w[i] * d * d;
  }
  return out;
}

}  // namespace donormem
