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

// Command implementations behind the donormem tool. Each writes its data
// files under cfg.out_dir and returns the paths it wrote.

#include <optional>
#include <string>
#include <vector>

#include "donormem/config.hpp"
#include "donormem/experiments.hpp"

namespace donormem {

struct InputSelection {
  bool all = true;  // the four standard inputs; otherwise cfg.sequence.input
};

std::vector<std::string> cmd_state_tomo(const ExperimentConfig& cfg, InputSelection inputs = {});
std::vector<std::string> cmd_process_tomo(const ExperimentConfig& cfg);
std::vector<std::string> cmd_coherence_scan(const ExperimentConfig& cfg);
std::vector<std::string> cmd_shift_scan(const ExperimentConfig& cfg);

struct IngestRequest {
  // One file: state tomography. Four files (+X, +Y, +Z, -Z): process tomography.
  std::vector<std::string> records;
  std::vector<std::string> init_records;  // optional, four files
};
std::vector<std::string> cmd_ingest(const ExperimentConfig& cfg, const IngestRequest& req);

enum class FitKind { kStretchedExp, kPowerLaw };
std::vector<std::string> cmd_fit(const ExperimentConfig& cfg, FitKind kind, const std::string& data_csv);

// x, y, y_err table; '#' lines are skipped and the first other line is the header.
struct CurveTable {
  std::vector<double> x, y, y_err;
};
CurveTable read_curve_csv(const std::string& path);

}  // namespace donormem
