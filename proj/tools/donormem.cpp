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

// donormem: command-line front end for the donor quantum-memory simulator.

#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "donormem/commands.hpp"

using namespace donormem;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> mc_samples;
  std::optional<std::uint32_t> shots;
  std::optional<int> workers;
  bool ideal = false;
  bool analytic = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "RNG seed (required for sampled runs)");
  app->add_option("--out", f.out, "output directory");
  app->add_option("--mc-samples", f.mc_samples, "Monte Carlo samples (default 2000)");
  app->add_option("--shots", f.shots, "shots per point per repetition");
  app->add_option("--workers", f.workers, "worker threads; results do not depend on it");
  app->add_flag("--ideal", f.ideal, "disable all noise and the resonance shift");
  app->add_flag("--analytic", f.analytic, "infinite-shot expectations instead of sampling");
}

// Flags win over the file; `apply` sets subcommand-specific flags.
ExperimentConfig resolve(const CommonFlags& f, const std::function<void(ExperimentConfig&)>& apply = {}) {
  ExperimentConfig cfg = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (apply) apply(cfg);
  if (f.seed) cfg.seed = f.seed;
  if (f.out) cfg.out_dir = *f.out;
  if (f.mc_samples) cfg.mc_samples = *f.mc_samples;
  if (f.shots) cfg.noise.shots_per_point = *f.shots;
  if (f.workers) cfg.workers = *f.workers;
  if (f.analytic) cfg.noise.analytic = true;
  if (f.ideal) cfg.make_ideal();
  cfg.validate();
  return cfg;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void report(const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-donor electron-nuclear quantum memory simulator"};
  app.require_subcommand(1);

  CommonFlags st_f, pt_f, cs_f, ss_f, in_f, fit_f;

  auto* st = app.add_subcommand("state-tomo", "XY + Z state tomography before and after the memory");
  add_common(st, st_f);
  std::string st_input = "all";
  st->add_option("--input", st_input, "all, or use the config's sequence.input")
      ->check(CLI::IsMember({"all", "config"}));

  auto* pt = app.add_subcommand("process-tomo", "four-input process tomography with MLE and Monte Carlo");
  add_common(pt, pt_f);

  auto* cs = app.add_subcommand("coherence-scan", "storage-time sweeps per CPMG pulse count with fits");
  add_common(cs, cs_f);
  std::optional<std::string> cs_mode;
  std::optional<std::string> cs_n;
  cs->add_option("--mode", cs_mode, "memory, nucleus or electron")
      ->check(CLI::IsMember({"memory", "nucleus", "electron"}));
  cs->add_option("--n-list", cs_n, "comma-separated pulse counts");

  auto* ss = app.add_subcommand("shift-scan", "Ramsey extraction of the RF-induced ESR shift");
  add_common(ss, ss_f);

  auto* in = app.add_subcommand("ingest", "tomography on external measurement-record CSV files");
  add_common(in, in_f);
  std::string in_records, in_init;
  in->add_option("--records", in_records, "one file, or four comma-separated (+X,+Y,+Z,-Z)")->required();
  in->add_option("--init-records", in_init, "four comma-separated files of initialized inputs");

  auto* fit = app.add_subcommand("fit", "fit an x,y,y_err CSV");
  add_common(fit, fit_f);
  std::string fit_kind, fit_data;
  fit->add_option("--kind", fit_kind, "stretched-exp or power-law")
      ->required()
      ->check(CLI::IsMember({"stretched-exp", "power-law"}));
  fit->add_option("--data", fit_data, "CSV file")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (st->parsed()) {
      report(cmd_state_tomo(resolve(st_f), InputSelection{st_input == "all"}));
    } else if (pt->parsed()) {
      report(cmd_process_tomo(resolve(pt_f)));
    } else if (cs->parsed()) {
      const ExperimentConfig cfg = resolve(cs_f, [&](ExperimentConfig& c) {
        if (cs_mode)
          c.coherence.mode = *cs_mode == "memory"    ? CoherenceMode::kMemory
                             : *cs_mode == "nucleus" ? CoherenceMode::kNucleus
                                                     : CoherenceMode::kElectron;
        if (cs_n) {
          c.coherence.n_list.clear();
          for (const auto& item : split_list(*cs_n)) c.coherence.n_list.push_back(std::stoi(item));
        }
      });
      report(cmd_coherence_scan(cfg));
    } else if (ss->parsed()) {
      report(cmd_shift_scan(resolve(ss_f)));
    } else if (in->parsed()) {
      ExperimentConfig cfg = resolve(in_f);
      report(cmd_ingest(cfg, IngestRequest{split_list(in_records), split_list(in_init)}));
    } else if (fit->parsed()) {
      report(cmd_fit(resolve(fit_f), fit_kind == "stretched-exp" ? FitKind::kStretchedExp : FitKind::kPowerLaw,
                     fit_data));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
