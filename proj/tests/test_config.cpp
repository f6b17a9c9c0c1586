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


#include <string>

#include "doctest.h"

#include "donormem/config.hpp"

using namespace donormem;
using nlohmann::json;

namespace {

std::string error_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("empty document gives the defaults") {
  const ExperimentConfig c = config_from_json(json::object());
  const ExperimentConfig d;
  CHECK(config_to_json(c) == config_to_json(d));
  CHECK(c.sequence.mw_rabi == 50e3);
  CHECK(c.noise.readout_visibility == 0.9);
  CHECK_FALSE(c.seed.has_value());
}

TEST_CASE("json round trip") {
  ExperimentConfig c;
  c.seed = 1234;
  c.noise.shots_per_point = 77;
  c.noise.storage_mode = StorageDecayMode::kMicroscopic;
  c.shift.applies_to = ShiftTarget::kElectronAndNucleus;
  c.sequence.input.kind = InputKind::kCustom;
  c.sequence.input.theta_rad = 0.3;
  c.sequence.tomography_phase = 45.0;
  c.coherence.mode = CoherenceMode::kNucleus;
  c.coherence.t2_base = 0.01;
  c.plan.phases_deg = {0, 90, 180, 270};
  c.mc_mode = MonteCarloMode::kCountsBootstrap;
  const json j = config_to_json(c);
  const ExperimentConfig back = config_from_json(json::parse(j.dump()));
  CHECK(config_to_json(back) == j);
  CHECK(config_hash(back) == config_hash(c));
}

TEST_CASE("unknown fields are reported with their path") {
  CHECK(error_of({{"bogus", 1}}) == "bogus: unknown field");
  CHECK(error_of({{"noise", {{"t2star", 1.0}}}}) == "noise.t2star: unknown field");
  CHECK(error_of({{"sequence", {{"input", {{"phase", 0}}}}}}) == "sequence.input.phase: unknown field");
}

TEST_CASE("type and value errors are reported with their path") {
  CHECK(error_of({{"noise", {{"shots_per_point", -1}}}}) == "noise.shots_per_point: expected a non-negative integer");
  CHECK(error_of({{"noise", {{"dephasing", 1}}}}) == "noise.dephasing: expected a boolean");
  CHECK(error_of({{"donor", {{"b0", "high"}}}}) == "donor.b0: expected a number");
  CHECK(error_of({{"tomography", {{"phases_deg", {0, "a"}}}}}) == "tomography.phases_deg[1]: expected a number");
  CHECK(error_of({{"shift", 3}}) == "shift: expected an object");
  const std::string e = error_of({{"coherence", {{"mode", "hybrid"}}}});
  CHECK(e.rfind("coherence.mode: unknown value 'hybrid'", 0) == 0);
  CHECK(e.find("memory, nucleus, electron") != std::string::npos);
}

TEST_CASE("validation names the offending field") {
  ExperimentConfig c;
  c.noise.analytic = true;
  CHECK_NOTHROW(c.validate());
  c.workers = 0;
  CHECK_THROWS_WITH_AS(c.validate(), "workers must be >= 1", ConfigError);
  c.workers = 1;
  c.noise.analytic = false;
  CHECK_THROWS_WITH_AS(c.validate(), "seed: required for sampled (non-analytic) runs", ConfigError);
  CHECK_THROWS_AS(c.require_seed(), ConfigError);
  c.seed = 5;
  CHECK(c.require_seed() == 5);
  c.noise.readout_visibility = 1.5;
  try {
    c.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("noise", 0) == 0);
  }
}

TEST_CASE("config hash") {
  ExperimentConfig a;
  const std::string h = config_hash(a);
  CHECK(h.size() == 16);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
  ExperimentConfig b = a;
  b.out_dir = "elsewhere";
  b.workers = 8;
  CHECK(config_hash(b) == h);  // where and how fast do not change results
  b.noise.t2star_e *= 1.0000001;
  CHECK(config_hash(b) != h);
  b = a;
  b.seed = 1;
  CHECK(config_hash(b) != h);
}

TEST_CASE("loading files") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

}  // TEST_SUITE
