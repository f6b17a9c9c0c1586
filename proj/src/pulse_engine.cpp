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

#include "donormem/pulse_engine.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace donormem {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSelectivityWindow = 10.0;  // in units of the pulse Rabi frequency

// Electron / nuclear sigma_z eigenvalue of basis state k.
int electron_sign(int k) { return k / 2 == 0 ? 1 : -1; }
int nuclear_sign(int k) { return k % 2 == 0 ? 1 : -1; }

Matrix2c rabi_block(double delta, double rabi, double phase_deg, double duration) {
  const double phi = phase_deg * kPi / 180.0;
  const double nx = std::sin(phi);
  const double ny = -std::cos(phi);
  const double w = std::hypot(delta, rabi);
  Matrix2c u = Matrix2c::Identity();
  if (w == 0.0 || duration == 0.0) return u;
  const double c = std::cos(kPi * w * duration);
  const double s = std::sin(kPi * w * duration);
  const Complex i(0, 1);
  // exp(-i pi t (delta sz + rabi n.sigma)) in the (upper, lower) basis
  const double mz = delta / w, mx = rabi * nx / w, my = rabi * ny / w;
  u(0, 0) = c - i * s * mz;
  u(1, 1) = c + i * s * mz;
  u(0, 1) = -i * s * Complex(mx, -my);
  u(1, 0) = -i * s * Complex(mx, my);
  return u;
}

Matrix4c embed(const Matrix2c& block, TransitionLevels lv) {
  Matrix4c u = Matrix4c::Identity();
  u(lv.upper, lv.upper) = block(0, 0);
  u(lv.upper, lv.lower) = block(0, 1);
  u(lv.lower, lv.upper) = block(1, 0);
  u(lv.lower, lv.lower) = block(1, 1);
  return u;
}

DensityMatrix4 conjugate(const Matrix4c& u, const DensityMatrix4& rho) {
  Matrix4c m = u * rho.matrix() * u.adjoint();
  m = 0.5 * (m + m.adjoint()).eval();
  return DensityMatrix4::unchecked(m);
}

}  // namespace

TransitionLevels levels_of(Transition t) {
  switch (t) {
    case Transition::kMwUp: return {kUpUp, kDownUp};
    case Transition::kMwDown: return {kUpDown, kDownDown};
    case Transition::kRfDown: return {kDownDown, kDownUp};
    case Transition::kRfUp: return {kUpUp, kUpDown};
  }
  throw std::logic_error("unknown transition");
}

double frequency_of(Transition t, const TransitionFrequencies& f) {
  switch (t) {
    case Transition::kMwUp: return f.nu_mw_up;
    case Transition::kMwDown: return f.nu_mw_down;
    case Transition::kRfDown: return f.nu_rf_down;
    case Transition::kRfUp: return f.nu_rf_up;
  }
  throw std::logic_error("unknown transition");
}

double normalize_phase_deg(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0) r += 360.0;
  if (r >= 360.0) r = 0.0;
  return r;
}

double Pulse::angle() const { return kTwoPi * rabi * duration; }

void Pulse::validate() const {
  if (!(duration >= 0)) throw std::invalid_argument("Pulse: duration must be >= 0");
  if (!(rabi >= 0)) throw std::invalid_argument("Pulse: rabi must be >= 0");
  if (!(phase_deg >= 0 && phase_deg < 360))
    throw std::invalid_argument("Pulse: phase must be normalized to [0, 360)");
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::kInit: return "init";
    case Stage::kTransfer: return "transfer";
    case Stage::kStorage: return "storage";
    case Stage::kRecovery: return "recovery";
    case Stage::kTomography: return "tomography";
  }
  return "?";
}

double SequenceEvent::elapsed() const {
  return std::visit(
      [](const auto& e) -> double {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, Pulse>) return e.elapsed();
        else if constexpr (std::is_same_v<T, ReadoutMarker>) return 0.0;
        else return e.duration;
      },
      body);
}

double PulseSequence::total_duration() const {
  double t = 0;
  for (const auto& e : events) t += e.elapsed();
  return t;
}

double PulseSequence::stage_duration(Stage s) const {
  double t = 0;
  for (const auto& e : events)
    if (e.stage == s) t += e.elapsed();
  return t;
}

int PulseSequence::pulse_count(Stage s) const {
  int n = 0;
  for (const auto& e : events)
    if (e.stage == s && std::holds_alternative<Pulse>(e.body)) ++n;
  return n;
}

void PulseSequence::validate() const {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (static_cast<int>(events[i].stage) < static_cast<int>(events[i - 1].stage))
      throw std::invalid_argument("PulseSequence: stages out of protocol order");
  for (const auto& e : events) {
    if (const auto* p = std::get_if<Pulse>(&e.body)) p->validate();
    if (e.elapsed() < 0) throw std::invalid_argument("PulseSequence: negative duration");
  }
}

void write_timeline(std::ostream& os, const PulseSequence& seq) {
  char buf[160];
  for (const auto& e : seq.events) {
    const char* stage = stage_name(e.stage);
    if (const auto* p = std::get_if<Pulse>(&e.body)) {
      std::snprintf(buf, sizeof buf, "%s %s%s %.3f %.3f %.6e\n", stage,
                    p->channel == Channel::kMW ? "MW" : "RF", p->hard ? "-HARD" : "",
                    p->carrier, p->phase_deg, p->duration);
    } else if (const auto* f = std::get_if<FreeEvolution>(&e.body)) {
      std::snprintf(buf, sizeof buf, "%s FREE - - %.6e\n", stage, f->duration);
    } else if (const auto* r = std::get_if<OffResonantRf>(&e.body)) {
      std::snprintf(buf, sizeof buf, "%s RF-OFFRES - - %.6e\n", stage, r->duration);
    } else {
      std::snprintf(buf, sizeof buf, "%s READOUT - - %.6e\n", stage, 0.0);
    }
    os << buf;
  }
}

std::string timeline_string(const PulseSequence& seq) {
  std::ostringstream ss;
  write_timeline(ss, seq);
  return ss.str();
}

void ShiftModel::validate() const {
  if (!(peak_detuning >= 0)) throw std::invalid_argument("ShiftModel: peak_detuning must be >= 0");
  if (!(decay_time > 0)) throw std::invalid_argument("ShiftModel: decay_time must be > 0");
}

double shift_detuning(double t, const ShiftModel& model) {
  if (t < 0) throw std::invalid_argument("shift_detuning: negative time");
  if (model.shape == ShiftShape::kNone) return 0.0;
  return model.peak_detuning * std::exp(-t / model.decay_time);
}

double shift_integral(double t0, double t1, const ShiftModel& model) {
  if (model.shape == ShiftShape::kNone || t1 <= t0) return 0.0;
  const double tau = model.decay_time;
  return model.peak_detuning * tau * (std::exp(-t0 / tau) - std::exp(-t1 / tau));
}

Transition addressed_transition(const Pulse& pulse, const DonorParams& params) {
  const auto f = transition_frequencies(params);
  const Transition candidates[2][2] = {{Transition::kMwUp, Transition::kMwDown},
                                       {Transition::kRfDown, Transition::kRfUp}};
  const auto& pair = candidates[pulse.channel == Channel::kMW ? 0 : 1];
  Transition best = pair[0];
  double best_gap = std::numeric_limits<double>::infinity();
  for (Transition t : pair) {
    const double gap = std::abs(pulse.carrier - frequency_of(t, f));
    if (gap < best_gap) {
      best_gap = gap;
      best = t;
    }
  }
  if (!(best_gap < kSelectivityWindow * pulse.rabi)) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "carrier %.1f Hz is not within %.0f x rabi of any %s transition", pulse.carrier,
                  kSelectivityWindow, pulse.channel == Channel::kMW ? "MW" : "RF");
    throw AddressingError(buf);
  }
  return best;
}

Matrix4c pulse_unitary(const Pulse& pulse, const DonorParams& params, double detuning) {
  pulse.validate();
  const Transition t = addressed_transition(pulse, params);
  const TransitionLevels lv = levels_of(t);
  if (pulse.hard) {
    const double half = 0.5 * pulse.angle();
    const double phi = pulse.phase_deg * kPi / 180.0;
    const Complex i(0, 1);
    Matrix2c b;
    b(0, 0) = std::cos(half);
    b(1, 1) = std::cos(half);
    b(0, 1) = -i * std::sin(half) * Complex(std::sin(phi), std::cos(phi));
    b(1, 0) = -i * std::sin(half) * Complex(std::sin(phi), -std::cos(phi));
    return embed(b, lv);
  }
  const double nu = frequency_of(t, transition_frequencies(params));
  const double delta = (nu + detuning) - pulse.carrier;
  return embed(rabi_block(delta, pulse.rabi, pulse.phase_deg, pulse.duration), lv);
}

Eigen::Vector4d level_energies(const FrameDetuning& d) {
  Eigen::Vector4d e;
  for (int k = 0; k < 4; ++k)
    e(k) = 0.5 * d.electron * electron_sign(k) - 0.5 * d.nuclear * nuclear_sign(k);
  return e;
}

Matrix4c free_evolution(const FrameDetuning& cycles) {
  const Eigen::Vector4d phase = level_energies(cycles);
  Matrix4c u = Matrix4c::Zero();
  for (int k = 0; k < 4; ++k) u(k, k) = std::polar(1.0, -kTwoPi * phase(k));
  return u;
}

Matrix4c free_evolution(double duration, const DonorParams& params,
                        const FrameDetuning& static_detuning, const ShiftModel& shift,
                        std::optional<double> t_since_last_rf) {
  if (duration < 0) throw std::invalid_argument("free_evolution: negative duration");
  params.validate();
  FrameDetuning cycles{static_detuning.electron * duration, static_detuning.nuclear * duration};
  if (t_since_last_rf) {
    const double s = shift_integral(*t_since_last_rf, *t_since_last_rf + duration, shift);
    cycles.electron += s;
    if (shift.applies_to == ShiftTarget::kElectronAndNucleus)
      cycles.nuclear += shift.nuclear_scale * s;
  }
  return free_evolution(cycles);
}

const char* input_name(InputKind k) {
  switch (k) {
    case InputKind::kPlusX: return "+X";
    case InputKind::kPlusY: return "+Y";
    case InputKind::kPlusZ: return "+Z";
    case InputKind::kMinusZ: return "-Z";
    case InputKind::kCustom: return "custom";
  }
  return "?";
}

Eigen::Vector3d ideal_bloch(const InputState& s) {
  switch (s.kind) {
    case InputKind::kPlusX: return {1, 0, 0};
    case InputKind::kPlusY: return {0, 1, 0};
    case InputKind::kPlusZ: return {0, 0, 1};
    case InputKind::kMinusZ: return {0, 0, -1};
    case InputKind::kCustom: {
      const double phi = s.phi_deg * kPi / 180.0;
      return {std::sin(s.theta_rad) * std::cos(phi), std::sin(s.theta_rad) * std::sin(phi),
              -std::cos(s.theta_rad)};
    }
  }
  return {0, 0, 0};
}

void SequenceConfig::validate() const {
  if (dd_pulses < 0) throw ConfigError("sequence.dd_pulses must be >= 0");
  if (!(storage_time >= 0)) throw ConfigError("sequence.storage_time must be >= 0");
  if (!(transfer_rf_pi > 0) || !(dd_rf_pi > 0))
    throw ConfigError("sequence RF pi durations must be > 0");
  if (!(mw_rabi > 0)) throw ConfigError("sequence.mw_rabi must be > 0");
  const double dd_time = hard_dd ? 0.0 : dd_pulses * dd_rf_pi;
  if (storage_time < dd_time * (1.0 - 1e-12))
    throw ConfigError("sequence.storage_time is shorter than the DD pulses it must contain");
}

namespace {

Pulse mw_pulse(const SequenceConfig& cfg, const TransitionFrequencies& f, double angle,
               double phase) {
  Pulse p;
  p.channel = Channel::kMW;
  p.carrier = f.nu_mw_up + cfg.mw_carrier_offset;
  p.phase_deg = normalize_phase_deg(phase);
  p.rabi = cfg.mw_rabi;
  p.duration = angle / (kTwoPi * cfg.mw_rabi);
  return p;
}

Pulse rf_pi(const TransitionFrequencies& f, double duration, double phase, double angle = kPi) {
  Pulse p;
  p.channel = Channel::kRF;
  p.carrier = f.nu_rf_down;
  p.phase_deg = normalize_phase_deg(phase);
  p.rabi = 1.0 / (2.0 * duration);
  p.duration = duration * angle / kPi;
  return p;
}

void append_init(PulseSequence& seq, const SequenceConfig& cfg, const TransitionFrequencies& f) {
  switch (cfg.input.kind) {
    case InputKind::kMinusZ: return;
    case InputKind::kPlusX: seq.append(Stage::kInit, mw_pulse(cfg, f, kPi / 2, 0.0)); return;
    case InputKind::kPlusY: seq.append(Stage::kInit, mw_pulse(cfg, f, kPi / 2, 90.0)); return;
    case InputKind::kPlusZ: seq.append(Stage::kInit, mw_pulse(cfg, f, kPi, 0.0)); return;
    case InputKind::kCustom:
      if (cfg.input.theta_rad != 0.0)
        seq.append(Stage::kInit, mw_pulse(cfg, f, cfg.input.theta_rad, cfg.input.phi_deg));
      return;
  }
}

// CPMG storage block: free tau/2N, pi, free tau/N, ..., pi, free tau/2N.
void append_dd_storage(PulseSequence& seq, const SequenceConfig& cfg, const Pulse& dd) {
  const int n = cfg.dd_pulses;
  if (n == 0) {
    seq.append(Stage::kStorage, FreeEvolution{cfg.storage_time});
    return;
  }
  const double free_total = std::max(0.0, cfg.storage_time - n * dd.elapsed());
  const double edge = free_total / (2.0 * n);
  seq.append(Stage::kStorage, FreeEvolution{edge});
  for (int k = 0; k < n; ++k) {
    seq.append(Stage::kStorage, dd);
    seq.append(Stage::kStorage, FreeEvolution{k + 1 < n ? 2.0 * edge : edge});
  }
}

}  // namespace

PulseSequence build_memory_sequence(const SequenceConfig& cfg, const DonorParams& params) {
  cfg.validate();
  const auto f = transition_frequencies(params);
  PulseSequence seq;
  seq.mw_frame_offset = cfg.mw_carrier_offset;
  seq.stored = StoredCoherence::kNuclear;
  append_init(seq, cfg, f);
  if (cfg.include_memory) {
    const Pulse transfer_rf = rf_pi(f, cfg.transfer_rf_pi, cfg.transfer_phase);
    const Pulse transfer_mw = mw_pulse(cfg, f, kPi, cfg.transfer_phase);
    seq.append(Stage::kTransfer, transfer_rf);
    seq.append(Stage::kTransfer, transfer_mw);
    Pulse dd = rf_pi(f, cfg.dd_rf_pi, cfg.transfer_phase + cfg.dd_phase_offset);
    dd.hard = cfg.hard_dd;
    append_dd_storage(seq, cfg, dd);
    Pulse recovery_rf = transfer_rf;
    recovery_rf.phase_deg = normalize_phase_deg(cfg.transfer_phase + cfg.recovery_rf_phase);
    seq.append(Stage::kRecovery, transfer_mw);
    seq.append(Stage::kRecovery, recovery_rf);
  }
  if (cfg.tomography_phase) seq = with_tomography_pulse(std::move(seq), *cfg.tomography_phase, cfg, params);
  return seq;
}

PulseSequence build_electron_cpmg_sequence(const SequenceConfig& cfg, const DonorParams& params) {
  cfg.validate();
  const auto f = transition_frequencies(params);
  PulseSequence seq;
  seq.mw_frame_offset = cfg.mw_carrier_offset;
  seq.stored = StoredCoherence::kElectron;
  seq.append(Stage::kInit, mw_pulse(cfg, f, kPi / 2, cfg.transfer_phase));
  Pulse dd = mw_pulse(cfg, f, kPi, cfg.transfer_phase + cfg.dd_phase_offset);
  dd.hard = cfg.hard_dd;
  SequenceConfig storage_cfg = cfg;
  append_dd_storage(seq, storage_cfg, dd);
  seq = with_tomography_pulse(std::move(seq), cfg.tomography_phase.value_or(0.0), cfg, params);
  return seq;
}

PulseSequence build_nuclear_cpmg_sequence(const SequenceConfig& cfg, const DonorParams& params) {
  cfg.validate();
  const auto f = transition_frequencies(params);
  PulseSequence seq;
  seq.mw_frame_offset = cfg.mw_carrier_offset;
  seq.stored = StoredCoherence::kNuclear;
  seq.append(Stage::kInit, rf_pi(f, cfg.transfer_rf_pi, cfg.transfer_phase, kPi / 2));
  Pulse dd = rf_pi(f, cfg.dd_rf_pi, cfg.transfer_phase + cfg.dd_phase_offset);
  dd.hard = cfg.hard_dd;
  append_dd_storage(seq, cfg, dd);
  // Map the nuclear X projection onto |down,Up>, then onto the electron.
  seq.append(Stage::kRecovery, rf_pi(f, cfg.transfer_rf_pi, cfg.transfer_phase + 180.0, kPi / 2));
  seq.append(Stage::kRecovery, mw_pulse(cfg, f, kPi, 0.0));
  return seq;
}

PulseSequence with_tomography_pulse(PulseSequence seq, double phase_deg, const SequenceConfig& cfg,
                                    const DonorParams& params) {
  const auto f = transition_frequencies(params);
  seq.append(Stage::kTomography, mw_pulse(cfg, f, kPi / 2, phase_deg));
  return seq;
}

namespace {

struct Propagation {
  const DonorParams& params;
  const NoiseConfig& noise;
  const ShiftModel& shift;
  double mw_frame_offset;
  StoredCoherence stored;
  std::optional<double> clock;  // time since the end of the last RF pulse

  double shift_at(double dt) const {
    return clock ? shift_detuning(*clock + dt, shift) : 0.0;
  }
  double nuclear_share() const {
    return shift.applies_to == ShiftTarget::kElectronAndNucleus ? shift.nuclear_scale : 0.0;
  }
  void advance(double dt) {
    if (clock) *clock += dt;
  }
};

DensityMatrix4 run_pulse(const DensityMatrix4& rho, const Pulse& p, Propagation& st) {
  if (p.hard) {
    DensityMatrix4 out = conjugate(pulse_unitary(p, st.params), rho);
    if (p.channel == Channel::kRF) st.clock = 0.0;
    return out;
  }
  const double mid_shift = st.shift_at(0.5 * p.duration);
  const FrameDetuning frame{mid_shift - st.mw_frame_offset, st.nuclear_share() * mid_shift};
  const Transition t = addressed_transition(p, st.params);
  const TransitionLevels lv = levels_of(t);
  double transition_shift = 0.0;
  switch (t) {
    case Transition::kMwUp:
    case Transition::kMwDown: transition_shift = mid_shift; break;
    case Transition::kRfDown: transition_shift = frame.nuclear; break;
    case Transition::kRfUp: transition_shift = -frame.nuclear; break;
  }
  Matrix4c u = pulse_unitary(p, st.params, transition_shift);
  // Frame phases of the idle levels and the common phase of the driven pair.
  const Eigen::Vector4d e = level_energies(frame);
  const double mean = 0.5 * (e(lv.upper) + e(lv.lower));
  Matrix4c d = Matrix4c::Zero();
  for (int k = 0; k < 4; ++k) {
    const double ek = (k == lv.upper || k == lv.lower) ? mean : e(k);
    d(k, k) = std::polar(1.0, -kTwoPi * ek * p.duration);
  }
  DensityMatrix4 out = conjugate(d * u, rho);
  if (p.channel == Channel::kRF) st.clock = 0.0;
  else st.advance(p.duration);
  return out;
}

DensityMatrix4 run_free(const DensityMatrix4& rho, double dt, bool in_storage, Propagation& st) {
  FrameDetuning cycles{(st.noise.static_detuning_e - st.mw_frame_offset) * dt,
                       st.noise.static_detuning_n * dt};
  if (st.clock) {
    const double s = shift_integral(*st.clock, *st.clock + dt, st.shift);
    cycles.electron += s;
    cycles.nuclear += st.nuclear_share() * s;
  }
  DensityMatrix4 out = conjugate(free_evolution(cycles), rho);
  if (st.noise.dephasing && dt > 0) {
    const bool envelope = in_storage && st.noise.storage_mode == StorageDecayMode::kEnvelope;
    if (!(envelope && st.stored == StoredCoherence::kElectron))
      out = dephase(out, dt, st.noise.t2star_e, st.noise.t2star_alpha_e, DephasingTarget::kElectron);
    if (!(envelope && st.stored == StoredCoherence::kNuclear))
      out = dephase(out, dt, st.noise.t2star_n, st.noise.t2star_alpha_n, DephasingTarget::kNuclear);
  }
  st.advance(dt);
  return out;
}

}  // namespace

DensityMatrix4 apply_sequence(const DensityMatrix4& rho0, const PulseSequence& seq,
                              const DonorParams& params, const NoiseConfig& noise,
                              const ShiftModel& shift) {
  seq.validate();
  shift.validate();
  Propagation st{params, noise, shift, seq.mw_frame_offset, seq.stored, std::nullopt};
  DensityMatrix4 rho = rho0;

  const double storage_time = seq.stage_duration(Stage::kStorage);
  const int storage_pulses = seq.pulse_count(Stage::kStorage);
  bool storage_seen = false;
  bool envelope_applied = false;
  const auto apply_envelope = [&] {
    if (envelope_applied || !storage_seen) return;
    envelope_applied = true;
    if (!noise.dephasing || noise.storage_mode != StorageDecayMode::kEnvelope) return;
    const double t2 = cpmg_t2(std::max(storage_pulses, 1), noise.storage_t2_base, noise.cpmg_exponent);
    rho = dephase(rho, storage_time, t2, noise.storage_stretch_alpha,
                  seq.stored == StoredCoherence::kNuclear ? DephasingTarget::kNuclear
                                                          : DephasingTarget::kElectron);
  };

  for (const auto& ev : seq.events) {
    const bool in_storage = ev.stage == Stage::kStorage;
    if (in_storage) storage_seen = true;
    else apply_envelope();
    if (const auto* p = std::get_if<Pulse>(&ev.body)) {
      rho = run_pulse(rho, *p, st);
    } else if (const auto* f = std::get_if<FreeEvolution>(&ev.body)) {
      rho = run_free(rho, f->duration, in_storage, st);
    } else if (const auto* r = std::get_if<OffResonantRf>(&ev.body)) {
      rho = run_free(rho, r->duration, in_storage, st);
      st.clock = 0.0;
    }
  }
  apply_envelope();
  return rho;
}

}  // namespace donormem
