#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "polarlab/error.hpp"
#include "polarlab/process.hpp"
#include "polarlab/transform.hpp"

namespace polarlab {

/// Per-index estimates of H(U_i | U_1^{i-1} Y_1^N) (bits) and
/// Z(U_i | U_1^{i-1} Y_1^N). Vectors are indexed 0..N-1 for i = 1..N.
struct Profile {
  std::size_t N = 0;
  Method method = Method::exact;
  std::vector<double> H, Z, H_stderr, Z_stderr;

  explicit Profile(std::size_t n = 0, Method m = Method::exact)
      : N(n), method(m), H(n, 0.0), Z(n, 0.0), H_stderr(n, 0.0), Z_stderr(n, 0.0) {}

  double mean_H() const {
    double s = 0;
    for (double h : H) s += h;
    return N ? s / static_cast<double>(N) : 0.0;
  }
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV schema: index,branch_path,H,H_stderr,Z,Z_stderr,method
inline void write_profile_csv(std::ostream& out, const Profile& p) {
  out << "index,branch_path,H,H_stderr,Z,Z_stderr,method\n";
  for (std::size_t i = 1; i <= p.N; ++i) {
    out << i << ',';
    for (Bit b : branch_path(i, p.N)) out << static_cast<int>(b);
    out << ',' << format_double(p.H[i - 1]) << ',' << format_double(p.H_stderr[i - 1]) << ','
        << format_double(p.Z[i - 1]) << ',' << format_double(p.Z_stderr[i - 1]) << ','
        << to_string(p.method) << '\n';
  }
}

inline Profile read_profile_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "index,branch_path,H,H_stderr,Z,Z_stderr,method")
    throw Error("profile CSV: unexpected header");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw Error("profile CSV: expected 7 columns");
    rows.push_back(std::move(cells));
  }
  Profile p(rows.size(), rows.empty() || rows[0][6] == "exact" ? Method::exact : Method::monte_carlo);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (std::stoul(rows[r][0]) != r + 1) throw Error("profile CSV: indices out of order");
    p.H[r] = std::stod(rows[r][2]);
    p.H_stderr[r] = std::stod(rows[r][3]);
    p.Z[r] = std::stod(rows[r][4]);
    p.Z_stderr[r] = std::stod(rows[r][5]);
  }
  return p;
}

}  // namespace polarlab
