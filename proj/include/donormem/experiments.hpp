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

// Experiment runners shared by the command-line tool and the acceptance suite.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "donormem/fitting.hpp"
#include "donormem/noise_readout.hpp"
#include "donormem/pulse_engine.hpp"
#include "donormem/spin_core.hpp"
#include "donormem/tomography.hpp"

namespace donormem {

enum class CoherenceMode { kMemory, kNucleus, kElectron };
const char* coherence_mode_name(CoherenceMode m);

struct CoherenceScanConfig {
  CoherenceMode mode = CoherenceMode::kMemory;
  std::vector<int> n_list = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  int points = 12;  // log-spaced storage times per N
  // Injected T2(N) = t2_base * N^exponent. Unset: the mode's default
  // (memory uses the noise config's storage values).
  std::optional<double> t2_base;
  std::optional<double> exponent;
};

struct ShiftScanConfig {
  std::vector<double> delays = default_delays();  // s after the end of the RF pulse
  double ramsey_offset = 15e3;  // MW carrier above the steady-state line, Hz
  double ramsey_wait = 10e-6;   // free precession between the pi/2 pulses, s
  double rf_duration = 50e-6;   // off-resonant RF pulse that restarts the shift

  static std::vector<double> default_delays();  // 0 to 500 us in 20 us steps
};

struct ExperimentConfig {
  DonorParams donor;
  NoiseConfig noise;
  ShiftModel shift;
  SequenceConfig sequence = shift_calibrated_sequence();
  TomographyPlan plan;
  CoherenceScanConfig coherence;
  ShiftScanConfig shift_scan;
  int mc_samples = 2000;
  MonteCarloMode mc_mode = MonteCarloMode::kDensityElements;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int workers = 1;

  // Memory sequence whose MW carrier and recovery phase are tuned for the
  // default shift transient.
  static SequenceConfig shift_calibrated_sequence();

  // Throws ConfigError whose message starts with the offending field path.
  void validate() const;
  // Noise-free, shift-free, infinite-shot settings.
  void make_ideal();
  // The seed, or ConfigError if unset; stochastic runs require one.
  std::uint64_t require_seed() const;
};

// Memory sequence with an optional tomography pulse, for one input state.
PulseSequence memory_sequence(const ExperimentConfig& cfg, const InputState& input, bool memory,
                              std::optional<double> tomography_phase);

struct StateTomoRun {
  InputState input;
  bool memory = false;
  XYTomographyData data;
  SinusoidFit fit;
  BlochVector bloch;
  double fidelity = 0;  // against the ideal input
};

// Simulated XY + Z tomography of one input, before (memory = false) or after
// the memory sequence. point_base numbers the measurement streams.
StateTomoRun run_state_tomo(const ExperimentConfig& cfg, const InputState& input, bool memory,
                            std::uint64_t point_base);
// Same analysis on existing data.
StateTomoRun analyze_state_tomo(const XYTomographyData& data, const InputState& input, bool memory,
                                double visibility);

std::array<InputState, 4> standard_input_states();  // +X, +Y, +Z, -Z

struct ProcessRun {
  std::array<StateTomoRun, 4> outputs;
  std::optional<std::array<StateTomoRun, 4>> initialized;
  Matrix4c raw_p = Matrix4c::Zero(), raw_i = Matrix4c::Zero();
  MleResult chi_p, chi_i;
  MonteCarloResult mc;
  FidelityReport report;
  double haar_fidelity_p = 0;  // quadrature over the fitted chi_p
};

ProcessRun run_process_tomo(const ExperimentConfig& cfg);
// Analysis half of run_process_tomo, also used for external records.
ProcessRun analyze_process(const std::array<XYTomographyData, 4>& outputs,
                           const std::optional<std::array<XYTomographyData, 4>>& initialized,
                           double visibility, int mc_samples, std::uint64_t seed, int workers,
                           MonteCarloMode mode);

struct DecayCurve {
  int n_pulses = 0;
  double injected_t2 = 0;
  std::vector<double> tau, p, p_err;
  StretchedExpFit fit;
};

struct CoherenceScanResult {
  CoherenceMode mode = CoherenceMode::kMemory;
  double t2_base = 0, exponent = 0;
  std::vector<DecayCurve> curves;
  std::optional<PowerLawFit> power_law;  // needs >= 3 non-degenerate fits
};

// Runs without the shift transient and with the MW carrier on resonance: the
// transient's N-dependent recovery error would otherwise mask the storage decay.
CoherenceScanResult run_coherence_scan(const ExperimentConfig& cfg);

struct ShiftScanPoint {
  double delay = 0;
  double detuning = 0, detuning_err = 0;  // Ramsey estimate, Hz
  double model_window = 0;  // shift averaged over the Ramsey window
  double model_start = 0;   // shift at the first pi/2 pulse
};

struct ShiftScanResult {
  std::vector<ShiftScanPoint> points;
  double effective_time = 0;  // phase-accumulation time of one Ramsey shot
};

ShiftScanResult run_shift_scan(const ExperimentConfig& cfg);

}  // namespace donormem
