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


#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "donormem/commands.hpp"

using namespace donormem;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("donormem_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& leaf = "") const { return (path / leaf).string(); }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

ExperimentConfig small_config(const std::string& out) {
  ExperimentConfig c;
  c.seed = 42;
  c.out_dir = out;
  c.noise.shots_per_point = 100;
  c.noise.repetitions = 5;
  c.plan.phases_deg = {0, 45, 90, 135, 180, 225, 270, 315};
  c.mc_samples = 12;
  return c;
}

}  // namespace

TEST_SUITE("commands") {

TEST_CASE("state tomography artifacts and ingest round trip") {
  TempDir dir("state");
  const ExperimentConfig c = small_config(dir.str());
  const auto files = cmd_state_tomo(c);
  CHECK(files.size() == 4 * 2 * 2 + 1);
  const json doc = json::parse(slurp(dir.str("state_tomo.json")));
  CHECK(doc["meta"]["config_hash"] == config_hash(c));
  CHECK(doc["meta"]["seed"] == 42);

  const std::string rec = dir.str("records_px_memory.csv");
  const std::string text = slurp(rec);
  CHECK(text.rfind("# donormem state-tomo config_hash=" + config_hash(c), 0) == 0);

  ExperimentConfig ci = c;
  ci.out_dir = dir.str("ingest");
  cmd_ingest(ci, {{rec}, {}});
  const json ing = json::parse(slurp(dir.str("ingest/ingest_state.json")));
  json direct;
  for (const auto& s : doc["states"])
    if (s["input"] == "+X" && s["stage"] == "memory") direct = s;
  REQUIRE_FALSE(direct.is_null());
  for (const char* k : {"x", "y", "z", "x_err", "z_err"})
    CHECK(ing["state"]["bloch"][k].get<double>() == doctest::Approx(direct["bloch"][k].get<double>()).epsilon(1e-12));
}

TEST_CASE("process tomography output does not depend on the worker count") {
  TempDir dir("workers");
  ExperimentConfig c = small_config(dir.str("w1"));
  c.workers = 1;
  cmd_process_tomo(c);
  c.out_dir = dir.str("w4");
  c.workers = 4;
  const auto files = cmd_process_tomo(c);
  CHECK(files.size() == 2 * 8 + 1);
  for (const auto& f : files) {
    const std::string leaf = fs::path(f).filename().string();
    CHECK_MESSAGE(slurp(dir.str("w1/" + leaf)) == slurp(f), leaf);
  }
  const json doc = json::parse(slurp(dir.str("w4/process_tomo.json")));
  CHECK(doc["basis_order"] == json({"I", "X", "iY", "Z"}));
  CHECK(doc["monte_carlo"]["samples"] == 12);
  CHECK(doc["fidelities"].contains("F_m"));
}

TEST_CASE("ingest reports malformed records with file and line") {
  TempDir dir("bad");
  ExperimentConfig c = small_config(dir.str("out"));
  const std::string missing = dir.str("missing.csv");
  write(missing, "basis,phase_deg,shots,repetition\nZ,,10,0\n");
  try {
    cmd_ingest(c, {{missing}, {}});
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find(missing) != std::string::npos);
    CHECK(msg.find("counts_up") != std::string::npos);
  }
  const std::string over = dir.str("over.csv");
  write(over, "basis,phase_deg,shots,counts_up,repetition\nZ,,10,3,0\nZ,,10,11,1\n");
  try {
    cmd_ingest(c, {{over}, {}});
    FAIL("expected an error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 3: counts_up exceeds shots") != std::string::npos);
  }
  CHECK_THROWS_AS(cmd_ingest(c, {{over, over}, {}}), std::invalid_argument);
  CHECK_THROWS_AS(cmd_ingest(c, {{dir.str("nope.csv")}, {}}), std::runtime_error);
}

TEST_CASE("fit command on a curve file") {
  TempDir dir("fit");
  const std::string data = dir.str("curve.csv");
  std::ostringstream os;
  os << "# synthetic\nx,y,y_err\n";
  for (int i = 0; i < 15; ++i) {
    const double x = 1e-3 * std::pow(10.0, 2.5 * i / 14.0);
    os << x << "," << 0.1 + 0.8 * std::exp(-std::pow(x / 0.08, 2.0)) << ",0.01\n";
  }
  write(data, os.str());
  ExperimentConfig c;
  c.out_dir = dir.str("out");
  cmd_fit(c, FitKind::kStretchedExp, data);
  const json doc = json::parse(slurp(dir.str("out/fit_stretched_exp.json")));
  CHECK(doc["fit"]["T2_s"].get<double>() == doctest::Approx(0.08).epsilon(1e-6));
  CHECK(doc["fit"]["alpha"].get<double>() == doctest::Approx(2.0).epsilon(1e-6));

  write(data, "x,y,y_err\n1,2\n");
  CHECK_THROWS_AS(read_curve_csv(data), SchemaError);
  write(data, "x,y,y_err\n1,two,3\n");
  CHECK_THROWS_AS(read_curve_csv(data), SchemaError);
}

}  // TEST_SUITE
