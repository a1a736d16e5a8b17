#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "pndkit/detection.hpp"
#include "pndkit/error.hpp"
#include "pndkit/jsd.hpp"
#include "pndkit/metrics.hpp"
#include "pndkit/pnd.hpp"
#include "pndkit/simulator.hpp"

namespace pndkit {

/// Round-trip decimal representation; NaN is written as an empty field.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
  const std::string t = trim(s);
  double v = 0.0;
  const char* first = t.data();
  const char* last = t.data() + t.size();
  if (!t.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (t.empty() || ec != std::errc() || ptr != last) throw InvalidInput(what + ": not a number: '" + t + "'");
  return v;
}

/// Comma-separated table with a mandatory header. Blank lines and lines
/// starting with '#' are skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;

  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw InvalidInput("CSV is missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }

  double number(std::size_t row, std::size_t col) const {
    return parse_double(rows[row][col], "line " + std::to_string(line_numbers[row]) + ", column '" + header[col] + "'");
  }
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    auto fields = split(s, ',');
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw InvalidInput("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                         " fields, found " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(lineno);
  }
  if (t.header.empty()) throw InvalidInput("CSV is empty");
  return t;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_csv(in);
}

inline void require_header(const CsvTable& t, const std::vector<std::string>& expected, const std::string& what) {
  if (t.header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw InvalidInput(what + ": header must be '" + want + "'");
  }
}

inline void write_pnd_csv(std::ostream& out, const PndMatrix& p) {
  out << "j,k,p\n";
  for (int j = 0; j <= p.n_max(); ++j)
    for (int k = 0; k <= p.n_max(); ++k) out << j << ',' << k << ',' << fmt(p(j, k)) << '\n';
}

inline PndMatrix read_pnd_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  require_header(t, {"j", "k", "p"}, "PND CSV");
  int n_max = 0;
  std::vector<std::array<double, 3>> cells;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double j = t.number(r, 0), k = t.number(r, 1), v = t.number(r, 2);
    require(j >= 0 && k >= 0 && j == std::floor(j) && k == std::floor(k), "PND CSV: indices must be nonnegative integers");
    n_max = std::max({n_max, static_cast<int>(j), static_cast<int>(k)});
    cells.push_back({j, k, v});
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
  for (const auto& c : cells) m(static_cast<int>(c[0]), static_cast<int>(c[1])) = c[2];
  return PndMatrix(std::move(m));
}

/// Complex amplitude on a complete rectangular lattice, any row order.
inline JsdGrid read_jsd_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  require_header(t, {"omega_s", "omega_i", "re", "im"}, "JSD CSV");
  std::set<double> xs, ys;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    xs.insert(t.number(r, 0));
    ys.insert(t.number(r, 1));
  }
  require(xs.size() >= 2 && ys.size() >= 2, "JSD CSV: need at least two points per axis");
  require(t.rows.size() == xs.size() * ys.size(), "JSD CSV: lattice is incomplete or has duplicates");
  const std::vector<double> vx(xs.begin(), xs.end()), vy(ys.begin(), ys.end());
  const UniformAxis ax = UniformAxis::from_points(vx);
  const UniformAxis ay = UniformAxis::from_points(vy);
  Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(ax.size, ay.size);
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(ax.size, ay.size);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto a = std::lower_bound(vx.begin(), vx.end(), t.number(r, 0)) - vx.begin();
    const auto b = std::lower_bound(vy.begin(), vy.end(), t.number(r, 1)) - vy.begin();
    require(seen(a, b) == 0, "JSD CSV: duplicate lattice point");
    seen(a, b) = 1;
    f(a, b) = {t.number(r, 2), t.number(r, 3)};
  }
  return JsdGrid(ax, ay, std::move(f));
}

inline FilterProfile read_filter_csv(std::istream& in, FilterProfile::Kind kind) {
  const CsvTable t = read_csv(in);
  require_header(t, {"omega", "t"}, "filter CSV");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t r = 0; r < t.rows.size(); ++r) pts.emplace_back(t.number(r, 0), t.number(r, 1));
  std::sort(pts.begin(), pts.end());
  std::vector<double> w;
  Eigen::VectorXd v(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t k = 0; k < pts.size(); ++k) {
    w.push_back(pts[k].first);
    v(static_cast<Eigen::Index>(k)) = pts[k].second;
  }
  return FilterProfile(UniformAxis::from_points(w), std::move(v), kind);
}

inline const std::vector<std::string>& count_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c{"nu", "n_m"};
    for (int a = 1; a <= 4; ++a)
      for (int b = 1; b <= 4; ++b) c.push_back("f" + std::to_string(a) + std::to_string(b));
    return c;
  }();
  return cols;
}

inline void write_counts_csv(std::ostream& out, const std::vector<CountRecord>& records) {
  const auto& cols = count_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n';
  for (const auto& r : records) {
    out << r.nu << ',' << fmt(r.n_m);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) out << ',' << fmt(r.f(a, b));
    out << '\n';
  }
}

struct CountLog {
  /// One record per setting id, ascending.
  std::vector<CountRecord> records;
  /// Number of input rows per setting before summation.
  std::map<int, int> rows_per_setting;
};

/// Reads `nu,n_m,f11..f44`. Each row must satisfy sum f = n_m; rows sharing a
/// setting id (for example one row per second of acquisition) are summed.
inline CountLog read_counts_csv(std::istream& in) {
  const CsvTable t = read_csv(in);
  require_header(t, count_columns(), "count CSV");
  require(!t.rows.empty(), "count CSV has no data rows");
  std::map<int, CountRecord> by_nu;
  CountLog log;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double nu = t.number(r, 0);
    require(nu >= 0 && nu == std::floor(nu) && nu < 1e6, "count CSV line " + std::to_string(t.line_numbers[r]) +
                                                             ": nu must be a nonnegative integer");
    CountRecord rec;
    rec.nu = static_cast<int>(nu);
    rec.n_m = t.number(r, 1);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) rec.f(a, b) = t.number(r, static_cast<std::size_t>(2 + 4 * a + b));
    try {
      rec.validate();
    } catch (const InvalidInput& e) {
      throw InvalidInput("count CSV line " + std::to_string(t.line_numbers[r]) + ": " + e.what());
    }
    auto [it, fresh] = by_nu.try_emplace(rec.nu, rec);
    if (!fresh) {
      it->second.f += rec.f;
      it->second.n_m += rec.n_m;
    }
    ++log.rows_per_setting[rec.nu];
  }
  for (auto& [nu, rec] : by_nu) log.records.push_back(rec);
  return log;
}

inline CountLog read_counts_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  return read_counts_csv(in);
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "cell_id,p_g,n_m,eta,d,gamma,rep,rmsle,pg_hat,etaHs_hat,etaHi_hat,g2s_hat,g2i_hat,gh2s_hat,gh2i_hat,converged\n";
  for (const auto& r : rows) {
    out << r.cell.id << ',' << fmt(r.cell.p_g) << ',' << fmt(r.cell.n_m) << ',' << fmt(r.cell.eta) << ','
        << fmt(r.cell.d) << ',' << fmt(r.cell.gamma) << ',' << r.rep << ',' << fmt(r.rmsle);
    for (double v : r.hat) out << ',' << fmt(v);
    out << ',' << (r.converged ? 1 : 0) << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "characteristic,sample_size,mean,std,q05,q50,q95,n_fail\n";
  for (const auto& r : rows) {
    out << r.characteristic << ',' << fmt(r.sample_size) << ',' << fmt(r.mean) << ',' << fmt(r.std) << ','
        << fmt(r.q05) << ',' << fmt(r.q50) << ',' << fmt(r.q95) << ',' << r.n_fail << '\n';
  }
}

inline void write_key_values(std::ostream& out, const std::string& key_header,
                             const std::vector<std::pair<std::string, double>>& kv) {
  out << key_header << ",value\n";
  for (const auto& [k, v] : kv) out << k << ',' << fmt(v) << '\n';
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace pndkit
