#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "invfeat/errors.hpp"
#include "invfeat/pointcloud.hpp"
#include "invfeat/sym_matrix.hpp"
#include "invfeat/targets.hpp"

namespace invfeat {

/// Full-precision decimal rendering (17 significant digits round-trips
/// IEEE-754 doubles exactly).
inline std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// Write-to-temp-then-rename so readers never observe a partial file.
inline void atomic_write(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("atomic_write: cannot open " + tmp.string());
    out << content;
    if (!out) throw Error("atomic_write: write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<double> parse_reals(const std::string& line,
                                       const std::string& path, int lineno) {
  std::istringstream is(line);
  std::vector<double> vals;
  double v;
  while (is >> v) vals.push_back(v);
  std::string junk;
  is.clear();
  if (is >> junk)
    throw ParseError(path + ":" + std::to_string(lineno) +
                     ": unexpected token '" + junk + "'");
  return vals;
}

}  // namespace detail

/// Matrix text format: first line "n", then n whitespace-separated rows of n
/// decimal reals. Symmetrized on load; *asymmetry_out (if given) receives the
/// recorded max-abs asymmetry so callers can warn past 1e-9.
inline SymMatrix load_matrix(const std::string& path,
                             double* asymmetry_out = nullptr) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::string line;
  int lineno = 0;
  auto next_line = [&]() {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(path + ":1: missing size line");
  int n = 0;
  try {
    std::size_t pos = 0;
    n = std::stoi(line, &pos);
    if (line.find_first_not_of(" \t\r", pos) != std::string::npos)
      throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ParseError(path + ":" + std::to_string(lineno) +
                     ": expected matrix size, got '" + line + "'");
  }
  if (n < 1)
    throw ParseError(path + ":" + std::to_string(lineno) +
                     ": matrix size must be >= 1");
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i) {
    if (!next_line())
      throw ParseError(path + ":" + std::to_string(lineno + 1) +
                       ": missing matrix row " + std::to_string(i + 1));
    const auto vals = detail::parse_reals(line, path, lineno);
    if (static_cast<int>(vals.size()) != n)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(n) + " values, got " +
                       std::to_string(vals.size()));
    for (int j = 0; j < n; ++j) m(i, j) = vals[static_cast<std::size_t>(j)];
  }
  SymMatrix X(std::move(m));
  if (asymmetry_out) *asymmetry_out = X.load_asymmetry();
  return X;
}

inline std::string format_matrix(const SymMatrix& X) {
  std::ostringstream os;
  os << X.n() << "\n";
  for (int i = 0; i < X.n(); ++i) {
    for (int j = 0; j < X.n(); ++j) {
      if (j) os << " ";
      os << fmt_double(X(i, j));
    }
    os << "\n";
  }
  return os.str();
}

inline void save_matrix(const std::string& path, const SymMatrix& X) {
  atomic_write(path, format_matrix(X));
}

/// Point-cloud text format: first line "d n", then n lines of d decimal reals
/// (one point per line; in memory points are columns).
inline PointCloud load_cloud(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::string line;
  int lineno = 0;
  auto next_line = [&]() {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError(path + ":1: missing 'd n' header line");
  int d = 0, n = 0;
  {
    std::istringstream is(line);
    if (!(is >> d >> n))
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected 'd n', got '" + line + "'");
    std::string junk;
    if (is >> junk)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": unexpected token '" + junk + "'");
  }
  if (d < 1 || n < 1)
    throw ParseError(path + ":" + std::to_string(lineno) +
                     ": d and n must be >= 1");
  Eigen::MatrixXd coords(d, n);
  for (int i = 0; i < n; ++i) {
    if (!next_line())
      throw ParseError(path + ":" + std::to_string(lineno + 1) +
                       ": missing point " + std::to_string(i + 1));
    const auto vals = detail::parse_reals(line, path, lineno);
    if (static_cast<int>(vals.size()) != d)
      throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                       std::to_string(d) + " coordinates, got " +
                       std::to_string(vals.size()));
    for (int r = 0; r < d; ++r) coords(r, i) = vals[static_cast<std::size_t>(r)];
  }
  return PointCloud(std::move(coords));
}

inline std::string format_cloud(const PointCloud& V) {
  std::ostringstream os;
  os << V.d() << " " << V.n() << "\n";
  for (int i = 0; i < V.n(); ++i) {
    for (int r = 0; r < V.d(); ++r) {
      if (r) os << " ";
      os << fmt_double(V.coords()(r, i));
    }
    os << "\n";
  }
  return os.str();
}

inline void save_cloud(const std::string& path, const PointCloud& V) {
  atomic_write(path, format_cloud(V));
}

/// Element symbols H through Ar; heavier elements are rejected by lookup
/// failure rather than guessed.
inline const std::map<std::string, double>& element_charges() {
  static const std::map<std::string, double> table = {
      {"H", 1},   {"He", 2},  {"Li", 3},  {"Be", 4},  {"B", 5},   {"C", 6},
      {"N", 7},   {"O", 8},   {"F", 9},   {"Ne", 10}, {"Na", 11}, {"Mg", 12},
      {"Al", 13}, {"Si", 14}, {"P", 15},  {"S", 16},  {"Cl", 17}, {"Ar", 18}};
  return table;
}

/// Standard XYZ: atom count line, comment line, then "Symbol x y z" lines.
inline Molecule load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ":1: empty file");
  int n = 0;
  try {
    std::size_t pos = 0;
    n = std::stoi(line, &pos);
    if (line.find_first_not_of(" \t\r", pos) != std::string::npos)
      throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw ParseError(path + ":1: expected atom count, got '" + line + "'");
  }
  if (n < 1) throw ParseError(path + ":1: atom count must be >= 1");
  if (!std::getline(in, line))
    throw ParseError(path + ":2: missing comment line");
  Eigen::VectorXd charges(n);
  Eigen::MatrixXd coords(n, 3);
  for (int i = 0; i < n; ++i) {
    const int lineno = i + 3;
    if (!std::getline(in, line))
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": missing atom line");
    std::istringstream is(line);
    std::string symbol;
    double x, y, z;
    if (!(is >> symbol >> x >> y >> z))
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected 'Symbol x y z', got '" + line + "'");
    const auto& table = element_charges();
    const auto it = table.find(symbol);
    if (it == table.end())
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": unknown element symbol '" + symbol +
                       "' (table covers H through Ar)");
    charges(i) = it->second;
    coords(i, 0) = x;
    coords(i, 1) = y;
    coords(i, 2) = z;
  }
  return Molecule(std::move(charges), std::move(coords));
}

/// Dataset manifest for cloud-pair regression:
///   {"clouds": ["a.txt", ...], "pairs": [[i, j, target], ...]}
/// Cloud paths are resolved relative to the manifest's directory.
struct CloudPairManifest {
  std::vector<std::string> cloud_paths;
  struct Pair {
    int i, j;
    double target;
  };
  std::vector<Pair> pairs;
};

inline CloudPairManifest load_cloud_pair_manifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": invalid JSON: " + e.what());
  }
  CloudPairManifest m;
  if (!j.is_object() || !j.contains("clouds") || !j["clouds"].is_array())
    throw ParseError(path + ": expected object with a 'clouds' array");
  const auto base = std::filesystem::path(path).parent_path();
  for (const auto& c : j["clouds"]) {
    if (!c.is_string()) throw ParseError(path + ": cloud entries must be paths");
    m.cloud_paths.push_back((base / c.get<std::string>()).string());
  }
  if (j.contains("pairs")) {
    if (!j["pairs"].is_array())
      throw ParseError(path + ": 'pairs' must be an array");
    for (const auto& p : j["pairs"]) {
      if (!p.is_array() || p.size() != 3)
        throw ParseError(path + ": pair entries must be [i, j, target]");
      CloudPairManifest::Pair pr{p[0].get<int>(), p[1].get<int>(),
                                 p[2].get<double>()};
      if (pr.i < 0 || pr.j < 0 ||
          pr.i >= static_cast<int>(m.cloud_paths.size()) ||
          pr.j >= static_cast<int>(m.cloud_paths.size()))
        throw ParseError(path + ": pair index out of range");
      if (!std::isfinite(pr.target))
        throw ParseError(path + ": pair target must be finite");
      m.pairs.push_back(pr);
    }
  }
  return m;
}

/// Dataset manifest for matrix regression:
///   {"matrices": ["m0.txt", ...], "targets": [y0, ...]}
struct MatrixManifest {
  std::vector<std::string> matrix_paths;
  std::vector<double> targets;
};

inline MatrixManifest load_matrix_manifest(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": invalid JSON: " + e.what());
  }
  MatrixManifest m;
  if (!j.is_object() || !j.contains("matrices") || !j["matrices"].is_array())
    throw ParseError(path + ": expected object with a 'matrices' array");
  const auto base = std::filesystem::path(path).parent_path();
  for (const auto& c : j["matrices"]) {
    if (!c.is_string())
      throw ParseError(path + ": matrix entries must be paths");
    m.matrix_paths.push_back((base / c.get<std::string>()).string());
  }
  if (j.contains("targets")) {
    if (!j["targets"].is_array())
      throw ParseError(path + ": 'targets' must be an array");
    for (const auto& t : j["targets"]) m.targets.push_back(t.get<double>());
    if (m.targets.size() != m.matrix_paths.size())
      throw ParseError(path + ": targets count != matrices count");
  }
  return m;
}

}  // namespace invfeat
