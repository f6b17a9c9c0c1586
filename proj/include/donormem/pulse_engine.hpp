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

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "donormem/noise_readout.hpp"
#include "donormem/spin_core.hpp"

namespace donormem {

enum class Channel { kMW, kRF };

enum class Transition { kMwUp, kMwDown, kRfDown, kRfUp };

// The pair of basis states a transition connects. `upper` plays the role of
// |+Z> for the pulse phase convention, `lower` of |-Z>: a pi/2 pulse at phase 0
// takes `lower` to (upper + lower)/sqrt(2).
struct TransitionLevels {
  BasisIndex upper;
  BasisIndex lower;
};
TransitionLevels levels_of(Transition t);
double frequency_of(Transition t, const TransitionFrequencies& f);

struct Pulse {
  Channel channel = Channel::kMW;
  double carrier = 0.0;    // Hz
  double phase_deg = 0.0;  // normalized to [0, 360)
  double duration = 0.0;   // s
  double rabi = 0.0;       // Hz; a pi pulse lasts 1 / (2 rabi)
  // Hard pulses rotate by the nominal angle 2 pi rabi duration, ignore any
  // detuning and take no time.
  bool hard = false;

  double angle() const;
  double elapsed() const { return hard ? 0.0 : duration; }
  void validate() const;
};

double normalize_phase_deg(double deg);

struct FreeEvolution {
  double duration = 0.0;
};

// RF pulse tuned far from every nuclear line: no coherent action, but it
// restarts the resonance-shift transient.
struct OffResonantRf {
  double duration = 0.0;
};

struct ReadoutMarker {};

enum class Stage { kInit, kTransfer, kStorage, kRecovery, kTomography };
const char* stage_name(Stage s);

struct SequenceEvent {
  Stage stage = Stage::kInit;
  std::variant<Pulse, FreeEvolution, OffResonantRf, ReadoutMarker> body;

  double elapsed() const;
};

enum class StoredCoherence { kNuclear, kElectron };

struct PulseSequence {
  std::vector<SequenceEvent> events;
  // MW frame: the single MW carrier of the sequence minus the steady-state
  // nucleus-Up ESR frequency.
  double mw_frame_offset = 0.0;
  StoredCoherence stored = StoredCoherence::kNuclear;

  double total_duration() const;
  double stage_duration(Stage s) const;
  int pulse_count(Stage s) const;
  // Throws std::invalid_argument if stages are out of protocol order.
  void validate() const;
  void append(Stage s, const Pulse& p) { events.push_back({s, p}); }
  void append(Stage s, FreeEvolution f) { events.push_back({s, f}); }
  void append(Stage s, OffResonantRf r) { events.push_back({s, r}); }
};

// One event per line: stage, channel, carrier Hz, phase deg, duration s.
void write_timeline(std::ostream& os, const PulseSequence& seq);
std::string timeline_string(const PulseSequence& seq);

enum class ShiftShape { kExponential, kNone };
enum class ShiftTarget { kElectron, kElectronAndNucleus };

// Transient upward shift of the ESR frequency after each RF pulse.
struct ShiftModel {
  double peak_detuning = 10e3;  // Hz
  double decay_time = 100e-6;   // s
  ShiftShape shape = ShiftShape::kExponential;
  ShiftTarget applies_to = ShiftTarget::kElectron;
  double nuclear_scale = 0.0;

  void validate() const;
  static ShiftModel none() {
    ShiftModel m;
    m.shape = ShiftShape::kNone;
    return m;
  }
};

double shift_detuning(double t_since_last_rf, const ShiftModel& model);
// Integral of shift_detuning over [t0, t1], in cycles (Hz * s).
double shift_integral(double t0, double t1, const ShiftModel& model);

class AddressingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Selects the transition whose frequency lies nearest the carrier, within
// 10 x rabi. Throws AddressingError otherwise.
Transition addressed_transition(const Pulse& pulse, const DonorParams& params);

// Rotating-frame propagator of a rectangular pulse. `detuning` shifts the
// addressed transition's instantaneous frequency.
Matrix4c pulse_unitary(const Pulse& pulse, const DonorParams& params, double detuning = 0.0);

// Level detunings (Hz) of the doubly rotating frame: the electron Zeeman term
// is offset by `electron`, the nuclear one by `nuclear`.
struct FrameDetuning {
  double electron = 0.0;
  double nuclear = 0.0;
};
Eigen::Vector4d level_energies(const FrameDetuning& d);

// Diagonal propagator for accumulated detuning (in cycles, i.e. integrated Hz).
Matrix4c free_evolution(const FrameDetuning& accumulated_cycles);
// Propagation over `duration` with constant frame detuning and, if given, the
// shift transient starting `t_since_last_rf` into its decay.
Matrix4c free_evolution(double duration, const DonorParams& params,
                        const FrameDetuning& static_detuning = {},
                        const ShiftModel& shift = ShiftModel::none(),
                        std::optional<double> t_since_last_rf = std::nullopt);

enum class InputKind { kPlusX, kPlusY, kPlusZ, kMinusZ, kCustom };

struct InputState {
  InputKind kind = InputKind::kPlusX;
  double theta_rad = 0.0;  // kCustom: polar angle from -Z (the initialized |down>)
  double phi_deg = 0.0;    // kCustom: azimuth of the rotation
};

const char* input_name(InputKind k);
// Ideal Bloch vector of an input state, electron Pauli convention.
Eigen::Vector3d ideal_bloch(const InputState& s);

struct SequenceConfig {
  InputState input;
  double storage_time = 195.8e-6;  // 1 us free precession plus two DD pulses
  int dd_pulses = 2;
  double dd_phase_offset = 90.0;
  double transfer_rf_pi = 50e-6;
  double dd_rf_pi = 97.4e-6;
  std::optional<double> tomography_phase;
  double mw_rabi = 100e3;
  double mw_carrier_offset = 0.0;  // MW carrier minus steady-state resonance, Hz
  double transfer_phase = 0.0;
  // Extra phase of the recovery RF pulse; compensates the electron phase
  // picked up while the shift is active during recovery.
  double recovery_rf_phase = 0.0;
  bool hard_dd = false;  // instantaneous ideal DD pulses
  bool include_memory = true;  // false: init (+ tomography) only

  void validate() const;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

PulseSequence build_memory_sequence(const SequenceConfig& cfg, const DonorParams& params);

// Single-spin CPMG storage sequences used for the lifetime comparisons: the
// electron one stores |+X> on the ESR line, the nuclear one on the NMR line
// with a CNOT-style readout through the electron.
PulseSequence build_electron_cpmg_sequence(const SequenceConfig& cfg, const DonorParams& params);
PulseSequence build_nuclear_cpmg_sequence(const SequenceConfig& cfg, const DonorParams& params);

// Appends a MW pi/2 readout-basis pulse at `phase_deg` in the tomography stage.
PulseSequence with_tomography_pulse(PulseSequence seq, double phase_deg,
                                    const SequenceConfig& cfg, const DonorParams& params);

// Runs the sequence left to right. Pulses see the shift frozen at their
// midpoint; free evolution integrates it exactly; the shift clock restarts at
// the end of every RF pulse and is inactive before the first one.
DensityMatrix4 apply_sequence(const DensityMatrix4& rho0, const PulseSequence& seq,
                              const DonorParams& params, const NoiseConfig& noise,
                              const ShiftModel& shift);

}  // namespace donormem
