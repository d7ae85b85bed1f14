#pragma once

#include "swipt/types.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace swipt {

// Shortest round-trippable decimal form; keeps CSV output byte-stable across
// runs and exact under re-parsing.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RegionRow {
  double sweep_value = 0.0;
  double sum_rate = 0.0;
  std::vector<double> q;
  bool feasible = true;
  double gap = 0.0;
  std::vector<double> fracs;
};

struct RERegion {
  int users = 2;
  std::vector<std::string> frac_names;
  std::vector<RegionRow> rows;
};

inline std::string region_csv_header(const RERegion& region) {
  std::string h = "sweep_value,sum_rate_bps_hz";
  for (int k = 1; k <= region.users; ++k) h += ",q" + std::to_string(k) + "_w";
  h += ",feasible,gap";
  for (const auto& f : region.frac_names) h += "," + f;
  return h;
}

inline void write_region_csv(const std::string& path, const RERegion& region) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << region_csv_header(region) << "\n";
  for (const auto& row : region.rows) {
    out << format_double(row.sweep_value) << "," << format_double(row.sum_rate);
    for (double q : row.q) out << "," << format_double(q);
    out << "," << (row.feasible ? 1 : 0) << "," << format_double(row.gap);
    for (double f : row.fracs) out << "," << format_double(f);
    out << "\n";
  }
}

inline RERegion read_region_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv " + path);
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) cols.push_back(tok);
  }
  RERegion region;
  int qcount = 0;
  for (const auto& c : cols) {
    if (c.size() >= 3 && c.front() == 'q' && c.substr(c.size() - 2) == "_w") ++qcount;
    if (c.rfind("frac_", 0) == 0) region.frac_names.push_back(c);
  }
  region.users = qcount;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    RegionRow row;
    std::size_t i = 0;
    row.sweep_value = vals.at(i++);
    row.sum_rate = vals.at(i++);
    for (int k = 0; k < qcount; ++k) row.q.push_back(vals.at(i++));
    row.feasible = vals.at(i++) != 0.0;
    row.gap = vals.at(i++);
    while (i < vals.size()) row.fracs.push_back(vals.at(i++));
    region.rows.push_back(std::move(row));
  }
  return region;
}

// Run summary shared by the solve verb and the sweep rows.
struct SolveSummary {
  std::string scheme;
  double sum_rate = 0.0;
  std::vector<double> energies;
  std::vector<double> targets;
  bool feasible = true;
  double gap = 0.0;
  std::vector<std::string> frac_names;
  std::vector<double> fracs;
  std::vector<double> dual;
  std::vector<std::string> notes;
};

inline void emit_summary(std::ostream& os, const SolveSummary& s) {
  os << "scheme            : " << s.scheme << "\n";
  os << "avg sum-rate      : " << format_double(s.sum_rate) << " bits/s/Hz\n";
  for (std::size_t k = 0; k < s.energies.size(); ++k) {
    os << "avg E[Q" << (k + 1) << "]         : " << format_double(s.energies[k]) << " W";
    if (k < s.targets.size()) os << "  (target " << format_double(s.targets[k]) << " W)";
    os << "\n";
  }
  os << "feasible          : " << (s.feasible ? "yes" : "no") << "\n";
  os << "duality gap est.  : " << format_double(s.gap) << " bits/s/Hz\n";
  for (std::size_t i = 0; i < s.fracs.size(); ++i)
    os << s.frac_names[i] << std::string(s.frac_names[i].size() < 18 ? 18 - s.frac_names[i].size() : 1, ' ')
       << ": " << format_double(s.fracs[i]) << "\n";
  os << "dual variables    :";
  for (double m : s.dual) os << " " << format_double(m);
  os << "\n";
  for (const auto& note : s.notes) os << "note              : " << note << "\n";
}

}  // namespace swipt
