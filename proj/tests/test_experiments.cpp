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


#include <cmath>

#include "doctest.h"

#include "donormem/experiments.hpp"

using namespace donormem;

namespace {

ExperimentConfig ideal_config() {
  ExperimentConfig c;
  c.make_ideal();
  c.mc_samples = 0;
  return c;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("ideal state tomography of the initialized inputs") {
  const ExperimentConfig c = ideal_config();
  const auto inputs = standard_input_states();
  const StateTomoRun pz = run_state_tomo(c, inputs[2], false, 0);
  CHECK(pz.fit.amplitude < 1e-9);
  CHECK_FALSE(pz.fit.phase_defined);
  CHECK(pz.bloch.z == doctest::Approx(1.0).epsilon(1e-9));

  const StateTomoRun px = run_state_tomo(c, inputs[0], false, 0);
  // a cosine with unit contrast and zero phase
  CHECK(px.fit.amplitude == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(std::remainder(px.fit.phase_deg, 360.0) == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(px.fidelity >= 1 - 1e-9);

  const StateTomoRun py = run_state_tomo(c, inputs[1], true, 0);
  CHECK(py.bloch.y == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(py.fidelity >= 1 - 1e-9);
}

TEST_CASE("ideal process tomography is the identity") {
  const ProcessRun run = run_process_tomo(ideal_config());
  CHECK(run.chi_p.process.chi(0, 0).real() >= 1 - 1e-6);
  REQUIRE(run.initialized.has_value());
  CHECK(run.report.f_m.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(run.haar_fidelity_p >= 1 - 1e-6);
  for (const auto& s : run.outputs) CHECK(s.fidelity >= 1 - 1e-9);
}

TEST_CASE("noisy defaults keep the memory below the initialized fidelity") {
  ExperimentConfig c;
  c.noise.analytic = true;
  c.mc_samples = 0;
  const ProcessRun run = run_process_tomo(c);
  CHECK(run.report.f_i.value < 1.0);
  CHECK(run.report.f_p.value < run.report.f_i.value);
  CHECK(run.report.f_m.value == doctest::Approx(run.report.f_p.value / run.report.f_i.value));
}

TEST_CASE("shift scan tracks the transient") {
  ExperimentConfig c;
  c.noise.analytic = true;
  c.shift_scan.delays = {0.0, 100e-6, 520e-6};
  const ShiftScanResult res = run_shift_scan(c);
  REQUIRE(res.points.size() == 3);
  CHECK(res.points[0].detuning == doctest::Approx(10e3).epsilon(0.15));
  CHECK(std::abs(res.points[2].detuning) < 100.0);
  for (const auto& p : res.points) CHECK(std::abs(p.detuning - p.model_window) < 10.0);

  c.noise.analytic = false;
  c.seed = 3;
  const ShiftScanResult sampled = run_shift_scan(c);
  for (const auto& p : sampled.points) {
    CHECK(p.detuning_err > 0);
    CHECK(std::abs(p.detuning - p.model_window) < 4 * p.detuning_err);
  }
}

TEST_CASE("coherence scans recover the injected scaling") {
  for (CoherenceMode mode : {CoherenceMode::kMemory, CoherenceMode::kNucleus, CoherenceMode::kElectron}) {
    ExperimentConfig c;
    c.seed = 8;
    c.coherence.mode = mode;
    const CoherenceScanResult res = run_coherence_scan(c);
    REQUIRE(res.power_law.has_value());
    CHECK_MESSAGE(std::abs(res.power_law->exponent - res.exponent) <= 0.05, coherence_mode_name(mode));
    for (const auto& curve : res.curves) CHECK(curve.tau.size() == 12u);
  }
}

}  // TEST_SUITE
