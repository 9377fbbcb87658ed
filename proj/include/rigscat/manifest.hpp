#pragma once
// Run manifests (JSON) and CSV artifacts.
//
// CSV: header row, comma separator, '.' decimal, 17 significant digits —
// lossless double round-trip so that run comparison can diff artifacts
// bit-for-bit.  Manifests echo the config, record tolerances, per-check
// diagnostics and artifact paths (relative to the manifest's directory).

#include <rigscat/common.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace rigscat {

using ojson = nlohmann::ordered_json;

inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline void csv_write(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
  ensure(bool(out), "cannot write CSV '" + path + "'");
  for (std::size_t j = 0; j < table.header.size(); ++j)
    out << (j ? "," : "") << table.header[j];
  out << "\n";
  for (const auto& row : table.rows) {
    ensure(row.size() == table.header.size(), "CSV row width mismatch");
    for (std::size_t j = 0; j < row.size(); ++j)
      out << (j ? "," : "") << format_full(row[j]);
    out << "\n";
  }
}

inline CsvTable csv_read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ensure(bool(in), "cannot read CSV '" + path + "'");
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    if (first) {
      while (std::getline(ls, cell, ',')) t.header.push_back(cell);
      first = false;
    } else {
      std::vector<double> row;
      while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

// A named diagnostic with its tolerance; manifests carry a list of these and
// the run exit status is the conjunction.
struct CheckRecord {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline ojson checks_to_json(const std::vector<CheckRecord>& checks) {
  ojson arr = ojson::array();
  for (const auto& c : checks) {
    ojson j;
    j["name"] = c.name;
    j["value"] = c.value;
    j["tolerance"] = c.tolerance;
    j["pass"] = c.pass;
    arr.push_back(j);
  }
  return arr;
}

inline void write_manifest(const std::string& path, const ojson& manifest) {
  std::ofstream out(path, std::ios::binary);
  ensure(bool(out), "cannot write manifest '" + path + "'");
  out << manifest.dump(2) << "\n";
}

inline ojson read_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  ensure(bool(in), "cannot read manifest '" + path + "'");
  ojson j;
  in >> j;
  return j;
}

struct ArtifactDiff {
  std::string artifact;
  double maxDeviation = 0.0;
  bool comparable = true;  // same shape
};

struct CompareReport {
  std::vector<ArtifactDiff> diffs;
  double maxDeviation = 0.0;
  bool comparable = true;
};

// Entrywise max deviation over the CSV artifacts both manifests share.
inline CompareReport compare_runs(const std::string& manifestPathA,
                                  const std::string& manifestPathB) {
  namespace fs = std::filesystem;
  ojson a = read_manifest(manifestPathA);
  ojson b = read_manifest(manifestPathB);
  ensure(a.contains("artifacts") && b.contains("artifacts"),
         "manifest missing artifacts section");
  fs::path dirA = fs::path(manifestPathA).parent_path();
  fs::path dirB = fs::path(manifestPathB).parent_path();
  CompareReport rep;
  for (auto it = a["artifacts"].begin(); it != a["artifacts"].end(); ++it) {
    const std::string key = it.key();
    if (!b["artifacts"].contains(key)) continue;
    CsvTable ta = csv_read((dirA / it.value().get<std::string>()).string());
    CsvTable tb = csv_read((dirB / b["artifacts"][key].get<std::string>()).string());
    ArtifactDiff d;
    d.artifact = key;
    if (ta.header != tb.header || ta.rows.size() != tb.rows.size()) {
      d.comparable = false;
      rep.comparable = false;
    } else {
      for (std::size_t i = 0; i < ta.rows.size(); ++i) {
        if (ta.rows[i].size() != tb.rows[i].size()) {
          d.comparable = false;
          rep.comparable = false;
          break;
        }
        for (std::size_t j = 0; j < ta.rows[i].size(); ++j)
          d.maxDeviation = std::max(d.maxDeviation,
                                    std::abs(ta.rows[i][j] - tb.rows[i][j]));
      }
    }
    rep.maxDeviation = std::max(rep.maxDeviation, d.maxDeviation);
    rep.diffs.push_back(std::move(d));
  }
  ensure(!rep.diffs.empty(), "manifests share no artifacts");
  return rep;
}

}  // namespace rigscat
