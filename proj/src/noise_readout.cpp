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

#include "donormem/noise_readout.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace donormem {

void NoiseConfig::validate() const {
  if (!(t2star_e > 0) || !(t2star_n > 0) || !(storage_t2_base > 0))
    throw std::invalid_argument("NoiseConfig: dephasing times must be > 0");
  if (!(t2star_alpha_e > 0) || !(t2star_alpha_n > 0) || !(storage_stretch_alpha > 0))
    throw std::invalid_argument("NoiseConfig: stretch exponents must be > 0");
  if (!(readout_visibility >= 0.0 && readout_visibility <= 1.0))
    throw std::invalid_argument("NoiseConfig: readout_visibility must lie in [0, 1]");
  if (!(init_error >= 0.0 && init_error < 1.0))
    throw std::invalid_argument("NoiseConfig: init_error must lie in [0, 1)");
  if (shots_per_point < 1 || repetitions < 1)
    throw std::invalid_argument("NoiseConfig: shots_per_point and repetitions must be >= 1");
}

DensityMatrix4 initialize_state(double error_prob) {
  if (!(error_prob >= 0.0 && error_prob < 1.0))
    throw std::invalid_argument("initialize_state: error_prob must lie in [0, 1)");
  Matrix4c m = Matrix4c::Zero();
  for (int i = 0; i < 4; ++i) m(i, i) = error_prob / 3.0;
  m(kDownUp, kDownUp) = 1.0 - error_prob;
  return DensityMatrix4(m);
}

DensityMatrix4 dephase(const DensityMatrix4& rho, double duration, double t2, double alpha,
                       DephasingTarget target) {
  if (duration < 0) throw std::invalid_argument("dephase: negative duration");
  if (!(t2 > 0) || !(alpha > 0)) throw std::invalid_argument("dephase: t2 and alpha must be > 0");
  if (duration == 0) return rho;
  const double lambda = std::exp(-std::pow(duration / t2, alpha));
  Matrix4c m = rho.matrix();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      const bool e_differs = (i / 2) != (j / 2);
      const bool n_differs = (i % 2) != (j % 2);
      double f = 1.0;
      switch (target) {
        case DephasingTarget::kElectron: f = e_differs ? lambda : 1.0; break;
        case DephasingTarget::kNuclear: f = n_differs ? lambda : 1.0; break;
        case DephasingTarget::kDouble: {
          // total Zeeman quantum number m = s_e + s_n in units of 1/2
          const auto m_of = [](int k) { return (k / 2 == 0 ? 1 : -1) + (k % 2 == 0 ? 1 : -1); };
          const double dm = (m_of(i) - m_of(j)) / 4.0;
          f = std::pow(lambda, dm * dm);
          break;
        }
      }
      m(i, j) *= f;
    }
  }
  return DensityMatrix4::unchecked(m);
}

double cpmg_t2(int n_pulses, double t2_base, double exponent) {
  if (n_pulses < 1) throw std::invalid_argument("cpmg_t2: n_pulses must be >= 1");
  return t2_base * std::pow(static_cast<double>(n_pulses), exponent);
}

double click_probability(double p_up, double visibility) {
  return 0.5 + visibility * (p_up - 0.5);
}

namespace {

double p_up_of(const DensityMatrix4& rho) {
  return std::clamp(rho.population(kUpUp) + rho.population(kUpDown), 0.0, 1.0);
}

}  // namespace

ShotRecord measure_electron_z(const DensityMatrix4& rho, const NoiseConfig& cfg,
                              RandomStream& stream, ReadoutBasis basis, double phase_deg,
                              std::uint32_t repetition) {
  const double p = click_probability(p_up_of(rho), cfg.readout_visibility);
  ShotRecord r;
  r.basis = basis;
  r.phase_deg = basis == ReadoutBasis::kXY ? phase_deg : 0.0;
  r.shots = cfg.shots_per_point;
  r.counts_up = stream.binomial(cfg.shots_per_point, p);
  r.repetition = repetition;
  return r;
}

std::vector<ShotRecord> measure_point(const DensityMatrix4& rho, const NoiseConfig& cfg,
                                      std::uint64_t point_id, ReadoutBasis basis,
                                      double phase_deg) {
  std::vector<ShotRecord> out;
  out.reserve(cfg.repetitions);
  for (std::uint32_t r = 0; r < cfg.repetitions; ++r) {
    RandomStream stream(cfg.rng_seed, derive_stream_id({point_id, r}));
    out.push_back(measure_electron_z(rho, cfg, stream, basis, phase_deg, r));
  }
  return out;
}

ProbabilityEstimate estimate_probability(const std::vector<ShotRecord>& records) {
  if (records.empty()) throw std::invalid_argument("estimate_probability: no records");
  std::vector<double> fractions;
  fractions.reserve(records.size());
  for (const auto& r : records) {
    if (r.shots == 0) throw std::invalid_argument("estimate_probability: record with zero shots");
    fractions.push_back(static_cast<double>(r.counts_up) / r.shots);
  }
  const auto n = static_cast<double>(fractions.size());
  double mean = 0;
  for (double f : fractions) mean += f;
  mean /= n;
  ProbabilityEstimate est{mean, 0.0, 0.0};
  if (fractions.size() > 1) {
    double ss = 0;
    for (double f : fractions) ss += (f - mean) * (f - mean);
    est.std = std::sqrt(ss / (n - 1));
    est.sem = est.std / std::sqrt(n);
  } else {
    est.sem = std::sqrt(mean * (1 - mean) / records.front().shots);
  }
  return est;
}

void write_records_csv(std::ostream& os, const std::vector<ShotRecord>& records) {
  os << "basis,phase_deg,shots,counts_up,repetition\n";
  char buf[64];
  for (const auto& r : records) {
    if (r.basis == ReadoutBasis::kZ) {
      os << "Z,,";
    } else {
      std::snprintf(buf, sizeof buf, "%.6f", r.phase_deg);
      os << "XY," << buf << ',';
    }
    os << r.shots << ',' << r.counts_up << ',' << r.repetition << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  for (auto& c : out) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    while (!c.empty() && c.front() == ' ') c.erase(c.begin());
  }
  return out;
}

std::uint32_t parse_uint(const std::string& s, const char* column, int line) {
  std::uint32_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (s.empty() || ec != std::errc() || ptr != end)
    throw SchemaError(std::string("column '") + column + "' is not a non-negative integer", line);
  return v;
}

}  // namespace

std::vector<ShotRecord> read_records_csv(std::istream& is) {
  static const char* kColumns[] = {"basis", "phase_deg", "shots", "counts_up", "repetition"};
  std::string line;
  int line_no = 0;
  // Leading '#' lines carry provenance and are skipped.
  do {
    if (!std::getline(is, line)) throw SchemaError("empty measurement-record file", line_no + 1);
    ++line_no;
  } while (!line.empty() && line[0] == '#');
  const int header_line = line_no;
  const auto header = split_csv(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* name : kColumns)
    if (!col.count(name)) throw SchemaError(std::string("missing column '") + name + "'", header_line);

  std::vector<ShotRecord> out;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw SchemaError("expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(cells.size()),
                        line_no);
    ShotRecord r;
    const std::string& basis = cells[col["basis"]];
    const std::string& phase = cells[col["phase_deg"]];
    if (basis == "Z") {
      r.basis = ReadoutBasis::kZ;
      if (!phase.empty()) throw SchemaError("Z-basis row must have an empty phase_deg", line_no);
    } else if (basis == "XY") {
      r.basis = ReadoutBasis::kXY;
      try {
        std::size_t used = 0;
        r.phase_deg = std::stod(phase, &used);
        if (used != phase.size()) throw std::invalid_argument(phase);
      } catch (const std::exception&) {
        throw SchemaError("column 'phase_deg' is not a number", line_no);
      }
    } else {
      throw SchemaError("column 'basis' must be XY or Z, got '" + basis + "'", line_no);
    }
    r.shots = parse_uint(cells[col["shots"]], "shots", line_no);
    r.counts_up = parse_uint(cells[col["counts_up"]], "counts_up", line_no);
    r.repetition = parse_uint(cells[col["repetition"]], "repetition", line_no);
    if (r.shots == 0) throw SchemaError("shots must be >= 1", line_no);
    if (r.counts_up > r.shots) throw SchemaError("counts_up exceeds shots", line_no);
    out.push_back(r);
  }
  return out;
}

}  // namespace donormem
