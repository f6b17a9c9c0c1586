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

#include "donormem/experiments.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "donormem/rng.hpp"

namespace donormem {

namespace {

constexpr double kPi = std::numbers::pi;

NoiseConfig noise_for(const ExperimentConfig& cfg) {
  NoiseConfig n = cfg.noise;
  n.rng_seed = n.analytic ? cfg.seed.value_or(0) : cfg.require_seed();
  return n;
}

std::uint64_t point_base(int input_index, bool memory) {
  return static_cast<std::uint64_t>(2 * input_index + (memory ? 1 : 0)) * 100;
}

double measure(const DensityMatrix4& rho, const NoiseConfig& noise, std::uint64_t point_id,
               ReadoutBasis basis, double phase, double* err) {
  if (noise.analytic) {
    *err = 0;
    const double p_up = rho.population(kUpUp) + rho.population(kUpDown);
    return click_probability(std::clamp(p_up, 0.0, 1.0), noise.readout_visibility);
  }
  const auto est = estimate_probability(measure_point(rho, noise, point_id, basis, phase));
  *err = est.sem;
  return est.mean;
}

}  // namespace

const char* coherence_mode_name(CoherenceMode m) {
  switch (m) {
    case CoherenceMode::kMemory: return "memory";
    case CoherenceMode::kNucleus: return "nucleus";
    case CoherenceMode::kElectron: return "electron";
  }
  return "?";
}

std::vector<double> ShiftScanConfig::default_delays() {
  std::vector<double> d;
  for (int k = 0; k <= 25; ++k) d.push_back(20e-6 * k);
  return d;
}

void ExperimentConfig::validate() const {
  const auto wrap = [](const char* section, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(section) + ": " + e.what());
    }
  };
  wrap("donor", [&] { donor.validate(); });
  wrap("noise", [&] { noise.validate(); });
  wrap("shift", [&] { shift.validate(); });
  wrap("sequence", [&] { sequence.validate(); });
  wrap("tomography", [&] { plan.validate(); });
  if (plan.phases_deg.size() < 4) throw ConfigError("tomography.phases_deg: need at least 4 phases");
  if (coherence.n_list.empty()) throw ConfigError("coherence.n_list must not be empty");
  for (int n : coherence.n_list)
    if (n < 1) throw ConfigError("coherence.n_list entries must be >= 1");
  if (coherence.points < 5) throw ConfigError("coherence.points must be >= 5");
  if (coherence.t2_base && !(*coherence.t2_base > 0)) throw ConfigError("coherence.t2_base must be > 0");
  if (shift_scan.delays.empty()) throw ConfigError("shift_scan.delays must not be empty");
  for (double d : shift_scan.delays)
    if (!(d >= 0)) throw ConfigError("shift_scan.delays entries must be >= 0");
  if (!(shift_scan.ramsey_wait > 0)) throw ConfigError("shift_scan.ramsey_wait must be > 0");
  if (!(shift_scan.rf_duration > 0)) throw ConfigError("shift_scan.rf_duration must be > 0");
  if (mc_samples != 0 && mc_samples < 2) throw ConfigError("mc_samples must be 0 or >= 2");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!noise.analytic && !seed) throw ConfigError("seed: required for sampled (non-analytic) runs");
}

SequenceConfig ExperimentConfig::shift_calibrated_sequence() {
  SequenceConfig s;
  s.mw_rabi = 50e3;
  s.mw_carrier_offset = -12.75e3;
  s.recovery_rf_phase = 20.0;
  return s;
}

void ExperimentConfig::make_ideal() {
  noise.dephasing = false;
  noise.init_error = 0;
  noise.readout_visibility = 1.0;
  noise.static_detuning_e = 0;
  noise.static_detuning_n = 0;
  noise.analytic = true;
  shift = ShiftModel::none();
  sequence.mw_carrier_offset = 0;
  sequence.recovery_rf_phase = 0;
}

std::uint64_t ExperimentConfig::require_seed() const {
  if (!seed) throw ConfigError("seed: required for sampled (non-analytic) runs");
  return *seed;
}

std::array<InputState, 4> standard_input_states() {
  std::array<InputState, 4> s;
  s[0].kind = InputKind::kPlusX;
  s[1].kind = InputKind::kPlusY;
  s[2].kind = InputKind::kPlusZ;
  s[3].kind = InputKind::kMinusZ;
  return s;
}

PulseSequence memory_sequence(const ExperimentConfig& cfg, const InputState& input, bool memory,
                              std::optional<double> tomography_phase) {
  SequenceConfig sc = cfg.sequence;
  sc.input = input;
  sc.include_memory = memory;
  sc.tomography_phase = tomography_phase;
  return build_memory_sequence(sc, cfg.donor);
}

StateTomoRun analyze_state_tomo(const XYTomographyData& data, const InputState& input, bool memory,
                                double visibility) {
  StateTomoRun run;
  run.input = input;
  run.memory = memory;
  run.data = data;
  run.fit = sinusoid_fit(data);
  if (!data.z) throw std::invalid_argument("state tomography: no Z-basis records");
  run.bloch = bloch_from_tomography(run.fit, data.z->p, data.z->sem, visibility);
  run.fidelity = state_fidelity(density_from_bloch(run.bloch), pure_state_from_bloch(ideal_bloch(input)));
  return run;
}

StateTomoRun run_state_tomo(const ExperimentConfig& cfg, const InputState& input, bool memory,
                            std::uint64_t base) {
  cfg.validate();
  const NoiseConfig noise = noise_for(cfg);
  const PulseSequence plain = memory_sequence(cfg, input, memory, std::nullopt);
  SequenceConfig sc = cfg.sequence;
  const DensityMatrix4 rho0 = initialize_state(noise.init_error);
  const Preparation prepare = [&](std::optional<double> phase) {
    const PulseSequence seq = phase ? with_tomography_pulse(plain, *phase, sc, cfg.donor) : plain;
    return apply_sequence(rho0, seq, cfg.donor, noise, cfg.shift);
  };
  const auto data = run_xy_tomography(prepare, cfg.plan, noise, base);
  return analyze_state_tomo(data, input, memory, noise.readout_visibility);
}

ProcessRun analyze_process(const std::array<XYTomographyData, 4>& outputs,
                           const std::optional<std::array<XYTomographyData, 4>>& initialized,
                           double visibility, int mc_samples, std::uint64_t seed, int workers,
                           MonteCarloMode mode) {
  const auto states = standard_input_states();
  const auto inputs = standard_inputs();
  const auto kets = standard_input_kets();
  ProcessRun run;

  const auto tomo = [&](const std::array<XYTomographyData, 4>& data, bool memory,
                        std::array<StateTomoRun, 4>& runs, Matrix4c& raw, MleResult& mle) {
    std::array<BlochVector, 4> b;
    std::array<Matrix2c, 4> rho;
    for (int j = 0; j < 4; ++j) {
      runs[j] = analyze_state_tomo(data[j], states[j], memory, visibility);
      b[j] = runs[j].bloch;
      rho[j] << 0.5 * (1 + b[j].z), Complex(0.5 * b[j].x, -0.5 * b[j].y),
          Complex(0.5 * b[j].x, 0.5 * b[j].y), 0.5 * (1 - b[j].z);
    }
    raw = linear_inversion_chi(inputs, rho);
    mle = process_tomography(inputs, b);
    return b;
  };

  MonteCarloInputs mci;
  mci.visibility = visibility;
  mci.outputs = tomo(outputs, true, run.outputs, run.raw_p, run.chi_p);
  mci.output_data = outputs;
  if (initialized) {
    run.initialized.emplace();
    mci.initialized = tomo(*initialized, false, *run.initialized, run.raw_i, run.chi_i);
    mci.init_data = initialized;
  }
  if (mc_samples >= 2) run.mc = monte_carlo_errors(mci, mc_samples, seed, workers, mode);

  FidelityReport& r = run.report;
  const auto fill = [&](StateFidelities& sf, const std::array<StateTomoRun, 4>& runs,
                        const std::array<double, 4>& err, double mean_err) {
    sf.mean = {0, mean_err};
    for (int j = 0; j < 4; ++j) {
      sf.sf[j] = {state_fidelity(density_from_bloch(runs[j].bloch), kets[j]), err[j]};
      sf.mean.value += sf.sf[j].value / 4;
    }
  };
  fill(r.sf_process, run.outputs, run.mc.sf_p_std, run.mc.sf_p_mean_std);
  r.f_p = {run.chi_p.process.chi(0, 0).real(), run.mc.f_p_std};
  if (run.initialized) {
    fill(r.sf_init, *run.initialized, run.mc.sf_i_std, run.mc.sf_i_mean_std);
    for (int j = 0; j < 4; ++j) {
      r.sf_memory.sf[j] = memory_fidelity(r.sf_process.sf[j], r.sf_init.sf[j]);
      r.sf_memory_mc[j] = {r.sf_memory.sf[j].value, run.mc.sf_m_std[j]};
    }
    r.sf_memory.mean = memory_fidelity(r.sf_process.mean, r.sf_init.mean);
    r.f_i = {run.chi_i.process.chi(0, 0).real(), run.mc.f_i_std};
    r.f_m = memory_fidelity(r.f_p, r.f_i);
  }
  const Matrix4c chi = run.chi_p.process.chi;
  run.haar_fidelity_p = haar_average_fidelity([&](const Matrix2c& rho) { return apply_chi(chi, rho); });
  return run;
}

ProcessRun run_process_tomo(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto states = standard_input_states();
  std::array<XYTomographyData, 4> out, init;
  for (int j = 0; j < 4; ++j) {
    out[j] = run_state_tomo(cfg, states[j], true, point_base(j, true)).data;
    init[j] = run_state_tomo(cfg, states[j], false, point_base(j, false)).data;
  }
  const std::uint64_t mc_seed = derive_stream_id({cfg.seed.value_or(0), 0x6d6f6e7465ULL});
  return analyze_process(out, init, cfg.noise.readout_visibility, cfg.mc_samples, mc_seed, cfg.workers,
                         cfg.mc_mode);
}

CoherenceScanResult run_coherence_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  CoherenceScanResult res;
  res.mode = cfg.coherence.mode;
  double base = 0, expo = 0;
  switch (res.mode) {
    case CoherenceMode::kMemory:
      base = cfg.noise.storage_t2_base;
      expo = cfg.noise.cpmg_exponent;
      break;
    case CoherenceMode::kNucleus:  // reaches ~80 ms at N = 256
      base = 80e-3 / std::pow(256.0, 0.28);
      expo = 0.28;
      break;
    case CoherenceMode::kElectron:
      base = 80e-3 / std::pow(256.0, 0.75);
      expo = 0.75;
      break;
  }
  res.t2_base = cfg.coherence.t2_base.value_or(base);
  res.exponent = cfg.coherence.exponent.value_or(expo);

  NoiseConfig noise = noise_for(cfg);
  noise.storage_t2_base = res.t2_base;
  noise.cpmg_exponent = res.exponent;
  const DensityMatrix4 rho0 = initialize_state(noise.init_error);

  std::vector<double> fit_n, fit_t2, fit_err;
  const int points = cfg.coherence.points;
  for (std::size_t ni = 0; ni < cfg.coherence.n_list.size(); ++ni) {
    DecayCurve curve;
    curve.n_pulses = cfg.coherence.n_list[ni];
    curve.injected_t2 = cpmg_t2(curve.n_pulses, res.t2_base, res.exponent);
    for (int k = 0; k < points; ++k) {
      // 0.1 T2 to 3 T2, log-spaced
      const double tau = curve.injected_t2 * 0.1 * std::pow(30.0, static_cast<double>(k) / (points - 1));
      SequenceConfig sc = cfg.sequence;
      sc.mw_carrier_offset = 0;
      sc.recovery_rf_phase = 0;
      sc.input = InputState{};
      sc.dd_pulses = curve.n_pulses;
      sc.hard_dd = true;
      sc.storage_time = tau;
      sc.tomography_phase = 0.0;
      PulseSequence seq;
      ReadoutBasis basis = ReadoutBasis::kXY;
      switch (res.mode) {
        case CoherenceMode::kMemory: seq = build_memory_sequence(sc, cfg.donor); break;
        case CoherenceMode::kElectron: seq = build_electron_cpmg_sequence(sc, cfg.donor); break;
        case CoherenceMode::kNucleus:
          seq = build_nuclear_cpmg_sequence(sc, cfg.donor);
          basis = ReadoutBasis::kZ;
          break;
      }
      const DensityMatrix4 rho = apply_sequence(rho0, seq, cfg.donor, noise, ShiftModel::none());
      const std::uint64_t id =
          derive_stream_id({0x636f68ULL, static_cast<std::uint64_t>(res.mode), ni, static_cast<std::uint64_t>(k)});
      double err = 0;
      const double p = measure(rho, noise, id, basis, 0.0, &err);
      curve.tau.push_back(tau);
      curve.p.push_back(p);
      curve.p_err.push_back(err);
    }
    // Analytic curves carry no error bars; fit them unweighted.
    std::vector<double> w = curve.p_err;
    for (double& e : w)
      if (e <= 0) e = 1e-3;
    curve.fit = stretched_exp_fit(curve.tau, curve.p, w);
    if (!curve.fit.degenerate && curve.fit.fit.converged && curve.fit.t2 > 0) {
      fit_n.push_back(curve.n_pulses);
      fit_t2.push_back(curve.fit.t2);
      fit_err.push_back(curve.fit.t2_err > 0 ? curve.fit.t2_err : 1e-3 * curve.fit.t2);
    }
    res.curves.push_back(std::move(curve));
  }
  if (fit_n.size() >= 3) res.power_law = power_law_fit(fit_n, fit_t2, fit_err);
  return res;
}

ShiftScanResult run_shift_scan(const ExperimentConfig& cfg) {
  cfg.validate();
  const NoiseConfig noise = noise_for(cfg);
  const auto& sc = cfg.shift_scan;
  const double rabi = cfg.sequence.mw_rabi;
  const auto f = transition_frequencies(cfg.donor);
  const double t_half = 0.25 / rabi;
  const auto half_pi = [&](double carrier_offset, double phase) {
    Pulse p;
    p.channel = Channel::kMW;
    p.carrier = f.nu_mw_up + carrier_offset;
    p.phase_deg = normalize_phase_deg(phase);
    p.rabi = rabi;
    p.duration = t_half;
    return p;
  };
  const auto ramsey = [&](double carrier_offset, std::optional<double> delay, int quad) {
    PulseSequence seq;
    seq.mw_frame_offset = carrier_offset;
    seq.stored = StoredCoherence::kElectron;
    if (delay) {
      seq.append(Stage::kInit, OffResonantRf{sc.rf_duration});
      seq.append(Stage::kInit, FreeEvolution{*delay});
    }
    seq.append(Stage::kInit, half_pi(carrier_offset, 0.0));
    seq.append(Stage::kInit, FreeEvolution{sc.ramsey_wait});
    seq.append(Stage::kTomography, half_pi(carrier_offset, 90.0 * quad));
    return seq;
  };

  // Exact phase response to a constant electron detuning, pulses included:
  // a constant shift d is the same as lowering the carrier offset by d.
  NoiseConfig clean = noise;
  clean.analytic = true;
  clean.dephasing = false;
  clean.readout_visibility = 1.0;
  const DensityMatrix4 ground = initialize_state(0.0);
  const auto response = [&](double d) {
    std::array<double, 2> q{};
    for (int quad = 0; quad < 2; ++quad) {
      const DensityMatrix4 rho =
          apply_sequence(ground, ramsey(sc.ramsey_offset - d, std::nullopt, quad), cfg.donor, clean, ShiftModel::none());
      double unused = 0;
      q[quad] = 2.0 * measure(rho, clean, 0, ReadoutBasis::kXY, 90.0 * quad, &unused) - 1.0;
    }
    return std::atan2(q[1], q[0]);
  };
  const auto wrap = [](double a) { return std::remainder(a, 2 * kPi); };

  ShiftScanResult res;
  // Phase accrues during the free wait plus 2/pi of each pi/2 pulse.
  res.effective_time = sc.ramsey_wait + 4.0 * t_half / kPi;
  const double slope_guess = -2 * kPi * res.effective_time;  // d(theta)/d(detuning) near resonance
  const DensityMatrix4 rho0 = initialize_state(noise.init_error);

  for (std::size_t i = 0; i < sc.delays.size(); ++i) {
    const double delay = sc.delays[i];
    std::array<double, 2> q{}, q_err{};
    for (int quad = 0; quad < 2; ++quad) {
      const DensityMatrix4 rho = apply_sequence(rho0, ramsey(sc.ramsey_offset, delay, quad), cfg.donor, noise, cfg.shift);
      const std::uint64_t id = derive_stream_id({0x736869ULL, i, static_cast<std::uint64_t>(quad)});
      const double p = measure(rho, noise, id, ReadoutBasis::kXY, 90.0 * quad, &q_err[quad]);
      q[quad] = (2.0 * p - 1.0) / noise.readout_visibility;
      q_err[quad] *= 2.0 / noise.readout_visibility;
    }
    const double r2 = q[0] * q[0] + q[1] * q[1];
    const double theta = std::atan2(q[1], q[0]);
    const double theta_err =
        r2 > 0 ? std::sqrt(q[1] * q[1] * q_err[0] * q_err[0] + q[0] * q[0] * q_err[1] * q_err[1]) / r2 : 0.0;

    // Secant search for the constant detuning that reproduces theta.
    double d0 = 0.0, d1 = 1e3;
    double g0 = wrap(response(d0) - theta), g1 = wrap(response(d1) - theta);
    for (int it = 0; it < 60 && std::abs(d1 - d0) > 1e-6; ++it) {
      const double slope = g1 != g0 ? (g1 - g0) / (d1 - d0) : slope_guess;
      const double d2 = d1 - g1 / (std::abs(slope) > 1e-3 * std::abs(slope_guess) ? slope : slope_guess);
      d0 = d1;
      g0 = g1;
      d1 = d2;
      g1 = wrap(response(d1) - theta);
    }
    const double h = 10.0;
    const double local_slope = wrap(response(d1 + h) - response(d1 - h)) / (2 * h);

    ShiftScanPoint pt;
    pt.delay = delay;
    pt.detuning = d1;
    pt.detuning_err = theta_err / std::abs(local_slope);
    const double window = 2 * t_half + sc.ramsey_wait;
    pt.model_window = shift_integral(delay, delay + window, cfg.shift) / window;
    pt.model_start = shift_detuning(delay, cfg.shift);
    res.points.push_back(pt);
  }
  return res;
}

}  // namespace donormem
