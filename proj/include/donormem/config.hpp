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

// JSON (de)serialization of ExperimentConfig and the reproducibility hash.

#include <cstdint>
#include <string>

#include "json.hpp"

#include "donormem/experiments.hpp"

namespace donormem {

// Starts from defaults and overrides the fields present in `j`. Unknown
// fields and type mismatches throw ConfigError naming the field path.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

nlohmann::json config_to_json(const ExperimentConfig& cfg);

// FNV-1a 64 over the canonical JSON of every field that affects results
// (output directory and worker count excluded), as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace donormem
