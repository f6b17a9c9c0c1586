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

#include "donormem/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

namespace donormem {

using nlohmann::json;

namespace {

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_or_root() + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    out = convert<T>(j_.at(key), field(key));
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) out.reset();
    else out = convert<T>(j_.at(key), field(key));
  }

  template <typename Fn>
  void section(const char* key, Fn&& fn) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    Reader sub(j_.at(key), field(key));
    fn(sub);
    sub.finish();
  }

  template <typename E>
  void get_enum(const char* key, E& out, std::initializer_list<std::pair<const char*, E>> names) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const std::string s = convert<std::string>(j_.at(key), field(key));
    for (const auto& [name, value] : names)
      if (s == name) {
        out = value;
        return;
      }
    std::string allowed;
    for (const auto& [name, value] : names) allowed += std::string(allowed.empty() ? "" : ", ") + name;
    throw ConfigError(field(key) + ": unknown value '" + s + "' (expected one of " + allowed + ")");
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ConfigError(field(key.c_str()) + ": unknown field");
  }

  std::string field(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string path_or_root() const { return path_.empty() ? "<root>" : path_; }

  template <typename T>
  static T convert(const json& v, const std::string& path) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(path + ": expected a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(path + ": expected a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(path + ": expected a number");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
      if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
        throw ConfigError(path + ": expected a non-negative integer");
      return v.get<T>();
    } else {
      if (!v.is_array()) throw ConfigError(path + ": expected an array");
      T out;
      for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(convert<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
      return out;
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

const std::initializer_list<std::pair<const char*, InputKind>> kInputNames = {
    {"+X", InputKind::kPlusX}, {"+Y", InputKind::kPlusY}, {"+Z", InputKind::kPlusZ},
    {"-Z", InputKind::kMinusZ}, {"custom", InputKind::kCustom}};
const std::initializer_list<std::pair<const char*, StorageDecayMode>> kStorageModes = {
    {"envelope", StorageDecayMode::kEnvelope}, {"microscopic", StorageDecayMode::kMicroscopic}};
const std::initializer_list<std::pair<const char*, ShiftShape>> kShapes = {
    {"exponential", ShiftShape::kExponential}, {"none", ShiftShape::kNone}};
const std::initializer_list<std::pair<const char*, ShiftTarget>> kTargets = {
    {"electron", ShiftTarget::kElectron}, {"electron_and_nucleus", ShiftTarget::kElectronAndNucleus}};
const std::initializer_list<std::pair<const char*, CoherenceMode>> kModes = {
    {"memory", CoherenceMode::kMemory}, {"nucleus", CoherenceMode::kNucleus},
    {"electron", CoherenceMode::kElectron}};
const std::initializer_list<std::pair<const char*, MonteCarloMode>> kMcModes = {
    {"density", MonteCarloMode::kDensityElements}, {"counts", MonteCarloMode::kCountsBootstrap}};

template <typename E>
std::string name_of(E value, std::initializer_list<std::pair<const char*, E>> names) {
  for (const auto& [name, v] : names)
    if (v == value) return name;
  return "?";
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  Reader root(j, "");
  root.section("donor", [&](Reader& r) {
    r.get("gamma_e", c.donor.gamma_e);
    r.get("gamma_n", c.donor.gamma_n);
    r.get("hyperfine_A", c.donor.hyperfine_A);
    r.get("b0", c.donor.b0);
  });
  root.section("noise", [&](Reader& r) {
    auto& n = c.noise;
    r.get("dephasing", n.dephasing);
    r.get("t2star_e", n.t2star_e);
    r.get("t2star_alpha_e", n.t2star_alpha_e);
    r.get("t2star_n", n.t2star_n);
    r.get("t2star_alpha_n", n.t2star_alpha_n);
    r.get_enum("storage_mode", n.storage_mode, kStorageModes);
    r.get("storage_t2_base", n.storage_t2_base);
    r.get("storage_stretch_alpha", n.storage_stretch_alpha);
    r.get("cpmg_exponent", n.cpmg_exponent);
    r.get("static_detuning_e", n.static_detuning_e);
    r.get("static_detuning_n", n.static_detuning_n);
    r.get("init_error", n.init_error);
    r.get("readout_visibility", n.readout_visibility);
    r.get("shots_per_point", n.shots_per_point);
    r.get("repetitions", n.repetitions);
    r.get("analytic", n.analytic);
  });
  root.section("shift", [&](Reader& r) {
    r.get("peak_detuning", c.shift.peak_detuning);
    r.get("decay_time", c.shift.decay_time);
    r.get_enum("shape", c.shift.shape, kShapes);
    r.get_enum("applies_to", c.shift.applies_to, kTargets);
    r.get("nuclear_scale", c.shift.nuclear_scale);
  });
  root.section("sequence", [&](Reader& r) {
    auto& s = c.sequence;
    r.section("input", [&](Reader& ri) {
      ri.get_enum("kind", s.input.kind, kInputNames);
      ri.get("theta_rad", s.input.theta_rad);
      ri.get("phi_deg", s.input.phi_deg);
    });
    r.get("storage_time", s.storage_time);
    r.get("dd_pulses", s.dd_pulses);
    r.get("dd_phase_offset", s.dd_phase_offset);
    r.get("transfer_rf_pi", s.transfer_rf_pi);
    r.get("dd_rf_pi", s.dd_rf_pi);
    r.get_optional("tomography_phase", s.tomography_phase);
    r.get("mw_rabi", s.mw_rabi);
    r.get("mw_carrier_offset", s.mw_carrier_offset);
    r.get("transfer_phase", s.transfer_phase);
    r.get("recovery_rf_phase", s.recovery_rf_phase);
    r.get("hard_dd", s.hard_dd);
    r.get("include_memory", s.include_memory);
  });
  root.section("tomography", [&](Reader& r) {
    r.get("phases_deg", c.plan.phases_deg);
    r.get("include_z", c.plan.include_z);
  });
  root.section("coherence", [&](Reader& r) {
    r.get_enum("mode", c.coherence.mode, kModes);
    r.get("n_list", c.coherence.n_list);
    r.get("points", c.coherence.points);
    r.get_optional("t2_base", c.coherence.t2_base);
    r.get_optional("exponent", c.coherence.exponent);
  });
  root.section("shift_scan", [&](Reader& r) {
    r.get("delays", c.shift_scan.delays);
    r.get("ramsey_offset", c.shift_scan.ramsey_offset);
    r.get("ramsey_wait", c.shift_scan.ramsey_wait);
    r.get("rf_duration", c.shift_scan.rf_duration);
  });
  root.get("mc_samples", c.mc_samples);
  root.get_enum("mc_mode", c.mc_mode, kMcModes);
  root.get("out_dir", c.out_dir);
  root.get_optional("seed", c.seed);
  root.get("workers", c.workers);
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
  const auto& n = c.noise;
  const auto& s = c.sequence;
  json j;
  j["donor"] = {{"gamma_e", c.donor.gamma_e},
                {"gamma_n", c.donor.gamma_n},
                {"hyperfine_A", c.donor.hyperfine_A},
                {"b0", c.donor.b0}};
  j["noise"] = {{"dephasing", n.dephasing},
                {"t2star_e", n.t2star_e},
                {"t2star_alpha_e", n.t2star_alpha_e},
                {"t2star_n", n.t2star_n},
                {"t2star_alpha_n", n.t2star_alpha_n},
                {"storage_mode", name_of(n.storage_mode, kStorageModes)},
                {"storage_t2_base", n.storage_t2_base},
                {"storage_stretch_alpha", n.storage_stretch_alpha},
                {"cpmg_exponent", n.cpmg_exponent},
                {"static_detuning_e", n.static_detuning_e},
                {"static_detuning_n", n.static_detuning_n},
                {"init_error", n.init_error},
                {"readout_visibility", n.readout_visibility},
                {"shots_per_point", n.shots_per_point},
                {"repetitions", n.repetitions},
                {"analytic", n.analytic}};
  j["shift"] = {{"peak_detuning", c.shift.peak_detuning},
                {"decay_time", c.shift.decay_time},
                {"shape", name_of(c.shift.shape, kShapes)},
                {"applies_to", name_of(c.shift.applies_to, kTargets)},
                {"nuclear_scale", c.shift.nuclear_scale}};
  j["sequence"] = {{"input",
                    {{"kind", name_of(s.input.kind, kInputNames)},
                     {"theta_rad", s.input.theta_rad},
                     {"phi_deg", s.input.phi_deg}}},
                   {"storage_time", s.storage_time},
                   {"dd_pulses", s.dd_pulses},
                   {"dd_phase_offset", s.dd_phase_offset},
                   {"transfer_rf_pi", s.transfer_rf_pi},
                   {"dd_rf_pi", s.dd_rf_pi},
                   {"tomography_phase", s.tomography_phase ? json(*s.tomography_phase) : json(nullptr)},
                   {"mw_rabi", s.mw_rabi},
                   {"mw_carrier_offset", s.mw_carrier_offset},
                   {"transfer_phase", s.transfer_phase},
                   {"recovery_rf_phase", s.recovery_rf_phase},
                   {"hard_dd", s.hard_dd},
                   {"include_memory", s.include_memory}};
  j["tomography"] = {{"phases_deg", c.plan.phases_deg}, {"include_z", c.plan.include_z}};
  j["coherence"] = {{"mode", name_of(c.coherence.mode, kModes)},
                    {"n_list", c.coherence.n_list},
                    {"points", c.coherence.points},
                    {"t2_base", c.coherence.t2_base ? json(*c.coherence.t2_base) : json(nullptr)},
                    {"exponent", c.coherence.exponent ? json(*c.coherence.exponent) : json(nullptr)}};
  j["shift_scan"] = {{"delays", c.shift_scan.delays},
                     {"ramsey_offset", c.shift_scan.ramsey_offset},
                     {"ramsey_wait", c.shift_scan.ramsey_wait},
                     {"rf_duration", c.shift_scan.rf_duration}};
  j["mc_samples"] = c.mc_samples;
  j["mc_mode"] = name_of(c.mc_mode, kMcModes);
  j["out_dir"] = c.out_dir;
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["workers"] = c.workers;
  return j;
}

std::string config_hash(const ExperimentConfig& cfg) {
  json j = config_to_json(cfg);
  j.erase("out_dir");
  j.erase("workers");
  const std::string text = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace donormem
