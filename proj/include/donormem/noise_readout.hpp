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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "donormem/rng.hpp"
#include "donormem/spin_core.hpp"

namespace donormem {

enum class StorageDecayMode {
  kEnvelope,     // one exp(-(tau/T2(N))^alpha) factor on the stored coherence
  kMicroscopic,  // per-interval free-precession dephasing and detuning only
};

// Decoherence, readout and sampling settings. Times in seconds, detunings in Hz.
struct NoiseConfig {
  bool dephasing = true;  // master switch for all decay channels
  double t2star_e = 160e-6;
  double t2star_alpha_e = 1.0;
  double t2star_n = 0.5;
  double t2star_alpha_n = 1.0;

  StorageDecayMode storage_mode = StorageDecayMode::kEnvelope;
  double storage_t2_base = 10.87e-3;  // T2 at N = 1; reaches ~80 ms at N = 256
  double storage_stretch_alpha = 2.0;
  double cpmg_exponent = 0.36;

  // Quasi-static detunings acting during free precession.
  double static_detuning_e = 0.0;
  double static_detuning_n = 0.0;

  double init_error = 0.0;
  double readout_visibility = 0.9;
  std::uint32_t shots_per_point = 200;
  std::uint32_t repetitions = 25;
  std::uint64_t rng_seed = 0;
  bool analytic = false;  // infinite-shot expectations instead of sampling

  void validate() const;
};

enum class DephasingTarget {
  kElectron,  // coherences between different electron states
  kNuclear,   // coherences between different nuclear states
  kDouble,    // Gaussian phase noise on the total Zeeman term; the double-quantum
              // coherence gets the full factor, single coherences its 4th root
};

enum class ReadoutBasis { kXY, kZ };

struct ShotRecord {
  ReadoutBasis basis = ReadoutBasis::kZ;
  double phase_deg = 0.0;  // meaningful for kXY only
  std::uint32_t shots = 0;
  std::uint32_t counts_up = 0;
  std::uint32_t repetition = 0;
};

struct ProbabilityEstimate {
  double mean = 0.0;
  double std = 0.0;  // spread across repetitions
  double sem = 0.0;  // standard error of the pooled mean
};

// (1 - error)|down,Up><down,Up| plus error spread over the other basis states.
DensityMatrix4 initialize_state(double error_prob);

DensityMatrix4 dephase(const DensityMatrix4& rho, double duration, double t2, double alpha,
                       DephasingTarget target);

double cpmg_t2(int n_pulses, double t2_base, double exponent);

double click_probability(double p_up, double visibility);

ShotRecord measure_electron_z(const DensityMatrix4& rho, const NoiseConfig& cfg,
                              RandomStream& stream, ReadoutBasis basis = ReadoutBasis::kZ,
                              double phase_deg = 0.0, std::uint32_t repetition = 0);

// All repetitions of one measurement point. Repetition r draws from the stream
// (cfg.rng_seed, derive_stream_id({point_id, r})).
std::vector<ShotRecord> measure_point(const DensityMatrix4& rho, const NoiseConfig& cfg,
                                      std::uint64_t point_id, ReadoutBasis basis,
                                      double phase_deg);

// Throws std::invalid_argument on an empty list.
ProbabilityEstimate estimate_probability(const std::vector<ShotRecord>& records);

// Measurement-record CSV: header `basis,phase_deg,shots,counts_up,repetition`.
void write_records_csv(std::ostream& os, const std::vector<ShotRecord>& records);

class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Throws SchemaError naming the missing column or offending line.
std::vector<ShotRecord> read_records_csv(std::istream& is);

}  // namespace donormem
