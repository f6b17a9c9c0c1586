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

#include "donormem/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace donormem {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* kBasisOrder[] = {"I", "X", "iY", "Z"};

struct Emitter {
  const ExperimentConfig& cfg;
  std::string command;
  std::vector<std::string> written;

  std::string hash() const { return config_hash(cfg); }

  json meta() const {
    json m;
    m["command"] = command;
    m["config_hash"] = hash();
    m["seed"] = cfg.seed ? json(*cfg.seed) : json(nullptr);
    m["config"] = config_to_json(cfg);
    m["config"].erase("out_dir");
    m["config"].erase("workers");
    return m;
  }

  std::string path(const std::string& name) const { return (fs::path(cfg.out_dir) / name).string(); }

  std::ofstream open(const std::string& name) {
    fs::create_directories(cfg.out_dir);
    const std::string p = path(name);
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + p);
    written.push_back(p);
    return os;
  }

  std::string provenance() const {
    return "# donormem " + command + " config_hash=" + hash() +
           " seed=" + (cfg.seed ? std::to_string(*cfg.seed) : std::string("none")) + "\n";
  }

  void curve(const std::string& name, const char* header, const std::vector<double>& x,
             const std::vector<double>& y, const std::vector<double>& err) {
    auto os = open(name);
    os << provenance() << header << "\n";
    char buf[128];
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g\n", x[i], y[i], err[i]);
      os << buf;
    }
  }

  void records(const std::string& name, const std::vector<ShotRecord>& recs) {
    auto os = open(name);
    os << provenance();
    write_records_csv(os, recs);
  }

  void document(const std::string& name, json body) {
    body["meta"] = meta();
    auto os = open(name);
    os << body.dump(2) << "\n";
  }
};

std::string tag(const InputState& s) {
  switch (s.kind) {
    case InputKind::kPlusX: return "px";
    case InputKind::kPlusY: return "py";
    case InputKind::kPlusZ: return "pz";
    case InputKind::kMinusZ: return "mz";
    case InputKind::kCustom: return "custom";
  }
  return "x";
}

json complex_matrix(const Matrix4c& m) {
  json re = json::array(), im = json::array();
  for (int r = 0; r < 4; ++r) {
    json rr = json::array(), ii = json::array();
    for (int c = 0; c < 4; ++c) {
      rr.push_back(m(r, c).real());
      ii.push_back(m(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return {{"re", re}, {"im", im}};
}

json value(const ValueWithError& v) { return {{"value", v.value}, {"error", v.error}}; }

json state_json(const StateTomoRun& run) {
  const BlochVector& b = run.bloch;
  const BlochVector p = project_to_ball(b);
  json j;
  j["input"] = input_name(run.input.kind);
  j["stage"] = run.memory ? "memory" : "init";
  j["sinusoid"] = {{"offset", run.fit.offset},
                   {"offset_err", run.fit.offset_err},
                   {"amplitude", run.fit.amplitude},
                   {"amplitude_err", run.fit.amplitude_err},
                   {"phase_deg", run.fit.phase_defined ? json(run.fit.phase_deg) : json(nullptr)},
                   {"phase_err_deg", run.fit.phase_defined ? json(run.fit.phase_err_deg) : json(nullptr)},
                   {"phase_defined", run.fit.phase_defined},
                   {"converged", run.fit.converged},
                   {"diagnostics", run.fit.diagnostics}};
  if (run.data.z) j["z_probability"] = {{"p_up", run.data.z->p}, {"p_err", run.data.z->sem}};
  j["bloch"] = {{"x", b.x}, {"y", b.y}, {"z", b.z}, {"x_err", b.x_err}, {"y_err", b.y_err},
                {"z_err", b.z_err}, {"xy_cov", b.xy_cov}, {"norm", b.norm()}};
  j["purity"] = 0.5 * (1.0 + p.norm() * p.norm());
  j["fidelity"] = run.fidelity;
  return j;
}

void emit_state(Emitter& e, const StateTomoRun& run) {
  const std::string stem = tag(run.input) + "_" + (run.memory ? "memory" : "init");
  std::vector<double> x, y, err;
  for (const auto& pt : run.data.xy) {
    x.push_back(pt.phase_deg);
    y.push_back(pt.p);
    err.push_back(pt.sem);
  }
  e.curve("state_" + stem + ".csv", "phase_deg,p_up,p_err", x, y, err);
  if (!run.data.records.empty()) e.records("records_" + stem + ".csv", run.data.records);
}

json process_json(const ProcessRun& run, int mc_samples) {
  json j;
  j["basis_order"] = kBasisOrder;
  j["chi_p"] = complex_matrix(run.chi_p.process.chi);
  j["chi_p_err"] = complex_matrix(run.mc.chi_std);
  j["chi_p_linear"] = complex_matrix(run.raw_p);
  j["mle_p"] = {{"converged", run.chi_p.converged}, {"unchanged", run.chi_p.unchanged},
                {"iterations", run.chi_p.iterations}};
  const FidelityReport& r = run.report;
  const auto sf_table = [](const StateFidelities& s) {
    json t;
    const char* names[] = {"+X", "+Y", "+Z", "-Z"};
    for (int k = 0; k < 4; ++k) t[names[k]] = value(s.sf[k]);
    t["mean"] = value(s.mean);
    return t;
  };
  json fid;
  fid["F_p"] = value(r.f_p);
  fid["SF_p"] = sf_table(r.sf_process);
  fid["haar_average_p"] = run.haar_fidelity_p;
  if (run.initialized) {
    j["chi_i"] = complex_matrix(run.chi_i.process.chi);
    j["chi_i_err"] = complex_matrix(run.mc.chi_init_std);
    j["chi_i_linear"] = complex_matrix(run.raw_i);
    j["mle_i"] = {{"converged", run.chi_i.converged}, {"unchanged", run.chi_i.unchanged},
                  {"iterations", run.chi_i.iterations}};
    fid["F_i"] = value(r.f_i);
    fid["F_m"] = value(r.f_m);
    fid["F_m_mc_std"] = run.mc.f_m_std;
    fid["SF_i"] = sf_table(r.sf_init);
    fid["SF_m"] = sf_table(r.sf_memory);
    json mc;
    const char* names[] = {"+X", "+Y", "+Z", "-Z"};
    for (int k = 0; k < 4; ++k) mc[names[k]] = r.sf_memory_mc[k].error;
    mc["mean"] = run.mc.sf_m_mean_std;
    fid["SF_m_mc_std"] = mc;
  }
  j["fidelities"] = fid;
  j["monte_carlo"] = {{"samples", mc_samples >= 2 ? mc_samples : 0},
                      {"unphysical", run.mc.unphysical},
                      {"not_converged", run.mc.not_converged}};
  json states = json::array();
  for (const auto& s : run.outputs) states.push_back(state_json(s));
  if (run.initialized)
    for (const auto& s : *run.initialized) states.push_back(state_json(s));
  j["states"] = states;
  j["units"] = {{"fidelity", "fraction"}, {"chi", "dimensionless, trace 1"}};
  return j;
}

json stretched_json(const StretchedExpFit& f) {
  return {{"y0", f.y0},          {"y0_err", f.y0_err}, {"K", f.k},
          {"K_err", f.k_err},    {"T2_s", f.t2},       {"T2_err_s", f.t2_err},
          {"alpha", f.alpha},    {"alpha_err", f.alpha_err}, {"degenerate", f.degenerate},
          {"converged", f.fit.converged}, {"chi2", f.fit.chi2}, {"message", f.fit.message}};
}

json power_json(const PowerLawFit& f) {
  return {{"prefactor", f.prefactor}, {"prefactor_err", f.prefactor_err}, {"exponent", f.exponent},
          {"exponent_err", f.exponent_err}, {"chi2", f.chi2}};
}

std::vector<ShotRecord> read_records_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  try {
    return read_records_csv(in);
  } catch (const SchemaError& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace

std::vector<std::string> cmd_state_tomo(const ExperimentConfig& cfg, InputSelection sel) {
  cfg.validate();
  Emitter e{cfg, "state-tomo", {}};
  std::vector<InputState> inputs;
  if (sel.all) {
    const auto s = standard_input_states();
    inputs.assign(s.begin(), s.end());
  } else {
    inputs.push_back(cfg.sequence.input);
  }
  json runs = json::array();
  for (std::size_t j = 0; j < inputs.size(); ++j) {
    for (bool memory : {false, true}) {
      const auto run = run_state_tomo(cfg, inputs[j], memory, (2 * j + (memory ? 1 : 0)) * 100);
      emit_state(e, run);
      runs.push_back(state_json(run));
    }
  }
  e.document("state_tomo.json", {{"states", runs}, {"visibility", cfg.noise.readout_visibility}});
  return e.written;
}

std::vector<std::string> cmd_process_tomo(const ExperimentConfig& cfg) {
  const ProcessRun run = run_process_tomo(cfg);
  Emitter e{cfg, "process-tomo", {}};
  for (const auto& s : run.outputs) emit_state(e, s);
  for (const auto& s : *run.initialized) emit_state(e, s);
  e.document("process_tomo.json", process_json(run, cfg.mc_samples));
  return e.written;
}

std::vector<std::string> cmd_coherence_scan(const ExperimentConfig& cfg) {
  const CoherenceScanResult res = run_coherence_scan(cfg);
  Emitter e{cfg, "coherence-scan", {}};
  const std::string mode = coherence_mode_name(res.mode);
  json curves = json::array();
  for (const auto& c : res.curves) {
    e.curve("coherence_" + mode + "_N" + std::to_string(c.n_pulses) + ".csv", "tau_s,p_up,p_err", c.tau,
            c.p, c.p_err);
    json cj = stretched_json(c.fit);
    cj["N"] = c.n_pulses;
    cj["injected_T2_s"] = c.injected_t2;
    curves.push_back(cj);
  }
  json body = {{"mode", mode},
               {"injected", {{"t2_base_s", res.t2_base}, {"exponent", res.exponent}}},
               {"fits", curves},
               {"power_law", res.power_law ? power_json(*res.power_law) : json(nullptr)}};
  e.document("coherence_" + mode + ".json", body);
  return e.written;
}

std::vector<std::string> cmd_shift_scan(const ExperimentConfig& cfg) {
  const ShiftScanResult res = run_shift_scan(cfg);
  Emitter e{cfg, "shift-scan", {}};
  std::vector<double> x, y, err;
  json pts = json::array();
  for (const auto& p : res.points) {
    x.push_back(p.delay);
    y.push_back(p.detuning);
    err.push_back(p.detuning_err);
    pts.push_back({{"delay_s", p.delay},
                   {"detuning_hz", p.detuning},
                   {"detuning_err_hz", p.detuning_err},
                   {"model_window_hz", p.model_window},
                   {"model_start_hz", p.model_start}});
  }
  e.curve("shift_scan.csv", "delay_s,detuning_hz,detuning_err_hz", x, y, err);
  json body = {
      {"method",
       "Ramsey fringe after an off-resonant RF pulse: two MW pi/2 pulses with the carrier offset from the "
       "steady-state resonance, read out in two quadratures; the detuning is the static offset whose "
       "noiseless fringe phase matches the measured one"},
      {"ramsey_offset_hz", cfg.shift_scan.ramsey_offset},
      {"ramsey_wait_s", cfg.shift_scan.ramsey_wait},
      {"effective_time_s", res.effective_time},
      {"points", pts}};
  e.document("shift_scan.json", body);
  return e.written;
}

std::vector<std::string> cmd_ingest(const ExperimentConfig& cfg, const IngestRequest& req) {
  Emitter e{cfg, "ingest", {}};
  const double v = cfg.noise.readout_visibility;
  if (req.records.size() == 1) {
    InputState in = cfg.sequence.input;
    const auto data = tomography_from_records(read_records_file(req.records[0]));
    const auto run = analyze_state_tomo(data, in, true, v);
    e.document("ingest_state.json", {{"source", req.records[0]}, {"state", state_json(run)}});
    return e.written;
  }
  if (req.records.size() != 4)
    throw std::invalid_argument("ingest: give one records file, or four (+X, +Y, +Z, -Z)");
  if (!req.init_records.empty() && req.init_records.size() != 4)
    throw std::invalid_argument("ingest: init records need four files (+X, +Y, +Z, -Z)");
  std::array<XYTomographyData, 4> out;
  std::optional<std::array<XYTomographyData, 4>> init;
  for (int j = 0; j < 4; ++j) out[j] = tomography_from_records(read_records_file(req.records[j]));
  if (!req.init_records.empty()) {
    init.emplace();
    for (int j = 0; j < 4; ++j) (*init)[j] = tomography_from_records(read_records_file(req.init_records[j]));
  }
  const std::uint64_t mc_seed = derive_stream_id({cfg.seed.value_or(0), 0x6d6f6e7465ULL});
  const ProcessRun run = analyze_process(out, init, v, cfg.mc_samples, mc_seed, cfg.workers, cfg.mc_mode);
  json body = process_json(run, cfg.mc_samples);
  body["sources"] = {{"records", req.records}, {"init_records", req.init_records}};
  e.document("ingest_process.json", body);
  return e.written;
}

CurveTable read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CurveTable t;
  std::string line;
  bool header = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw SchemaError(path + ": not a number: '" + cell + "'", line_no);
      }
    }
    if (v.size() != 3) throw SchemaError(path + ": expected 3 columns (x, y, y_err)", line_no);
    t.x.push_back(v[0]);
    t.y.push_back(v[1]);
    t.y_err.push_back(v[2]);
  }
  return t;
}

std::vector<std::string> cmd_fit(const ExperimentConfig& cfg, FitKind kind, const std::string& data_csv) {
  const CurveTable t = read_curve_csv(data_csv);
  Emitter e{cfg, "fit", {}};
  if (kind == FitKind::kStretchedExp) {
    const auto f = stretched_exp_fit(t.x, t.y, t.y_err);
    e.document("fit_stretched_exp.json", {{"source", data_csv}, {"model", "y0 + K exp(-(x/T2)^alpha)"},
                                          {"fit", stretched_json(f)}});
  } else {
    const auto f = power_law_fit(t.x, t.y, t.y_err);
    e.document("fit_power_law.json",
               {{"source", data_csv}, {"model", "prefactor * x^exponent"}, {"fit", power_json(f)}});
  }
  return e.written;
}

}  // namespace donormem
