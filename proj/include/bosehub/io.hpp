#pragma once

// File formats: CSV tables (17 significant digits, "NA" for missing values),
// key=value text records, and the binary state-vector format.
//
// State-vector file, all fields little-endian:
//   char[4]  "BHSV"
//   uint32   format version (1)
//   uint32   basis order tag (kBasisOrderTag)
//   uint32   L
//   uint32   N
//   uint64   dimension
//   double   amplitudes[dimension]

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bosehub/fock.hpp"

namespace bosehub::io {

static_assert(std::endian::native == std::endian::little, "state-vector I/O assumes a little-endian host");

class FormatError : public std::runtime_error {
public:
  FormatError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

inline std::string format_double(double x) {
  if (std::isnan(x)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline double parse_double(const std::string& s) {
  if (s == "NA") return std::numeric_limits<double>::quiet_NaN();
  if (s.empty() || std::isspace(static_cast<unsigned char>(s[0]))) throw FormatError("not a number: '" + s + "'");
  // strtod rather than stod: subnormals must parse back to themselves
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw FormatError("not a number: '" + s + "'");
  if (end != s.c_str() + s.size()) throw FormatError("trailing characters in number: '" + s + "'");
  return v;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

// ---------------------------------------------------------------------------
// CSV

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline void write_csv(std::ostream& os, const Table& t) {
  for (std::size_t j = 0; j < t.header.size(); ++j) os << (j ? "," : "") << t.header[j];
  os << '\n';
  for (auto& r : t.rows) {
    if (r.size() != t.header.size()) throw FormatError("write_csv: row width does not match header");
    for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << format_double(r[j]);
    os << '\n';
  }
}

inline Table read_csv(std::istream& is) {
  Table t;
  std::string line;
  if (!std::getline(is, line)) throw FormatError("read_csv: empty input");
  for (auto& h : split(trim(line), ',')) t.header.push_back(trim(h));
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(trim(line), ',');
    if (cells.size() != t.header.size()) throw FormatError("expected " + std::to_string(t.header.size()) + " fields", lineno);
    std::vector<double> r;
    r.reserve(cells.size());
    try {
      for (auto& c : cells) r.push_back(parse_double(trim(c)));
    } catch (const FormatError& e) {
      throw FormatError(e.what(), lineno);
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

inline void write_csv(const std::string& path, const Table& t) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_csv(os, t);
}

inline Table read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_csv(is);
}

// ---------------------------------------------------------------------------
// key = value records; '#' starts a comment

using Record = std::vector<std::pair<std::string, std::string>>;

inline void write_record(std::ostream& os, const Record& r) {
  for (auto& [k, v] : r) os << k << " = " << v << '\n';
}

inline Record read_record(std::istream& is) {
  Record r;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("expected 'key = value'", lineno);
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw FormatError("empty key", lineno);
    for (auto& [k, v] : r)
      if (k == key) throw FormatError("duplicate key '" + key + "'", lineno);
    r.emplace_back(std::move(key), trim(line.substr(eq + 1)));
  }
  return r;
}

inline const std::string* find(const Record& r, const std::string& key) {
  for (auto& [k, v] : r)
    if (k == key) return &v;
  return nullptr;
}

// ---------------------------------------------------------------------------
// State vectors

struct StateFile {
  std::uint32_t version = 1;
  std::uint32_t order_tag = kBasisOrderTag;
  std::uint32_t L = 0;
  std::uint32_t N = 0;
  std::vector<double> amplitudes;
};

inline constexpr char kStateMagic[4] = {'B', 'H', 'S', 'V'};

namespace detail {
template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw FormatError("state file: truncated header");
  return v;
}
}  // namespace detail

inline void write_state(std::ostream& os, const std::vector<double>& psi, int L, int N) {
  os.write(kStateMagic, 4);
  detail::put<std::uint32_t>(os, 1);
  detail::put<std::uint32_t>(os, kBasisOrderTag);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(L));
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(N));
  detail::put<std::uint64_t>(os, psi.size());
  os.write(reinterpret_cast<const char*>(psi.data()), std::streamsize(psi.size() * sizeof(double)));
}

inline StateFile read_state(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, kStateMagic, 4) != 0) throw FormatError("state file: bad magic");
  StateFile f;
  f.version = detail::get<std::uint32_t>(is);
  if (f.version != 1) throw FormatError("state file: unsupported version " + std::to_string(f.version));
  f.order_tag = detail::get<std::uint32_t>(is);
  if (f.order_tag != kBasisOrderTag) throw FormatError("state file: unknown basis order tag");
  f.L = detail::get<std::uint32_t>(is);
  f.N = detail::get<std::uint32_t>(is);
  const auto dim = detail::get<std::uint64_t>(is);
  if (dim != basis_size(int(f.L), int(f.N))) throw FormatError("state file: dimension does not match (L, N)");
  f.amplitudes.resize(dim);
  if (!is.read(reinterpret_cast<char*>(f.amplitudes.data()), std::streamsize(dim * sizeof(double))))
    throw FormatError("state file: truncated payload");
  return f;
}

inline void write_state(const std::string& path, const std::vector<double>& psi, int L, int N) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_state(os, psi, L, N);
}

inline StateFile read_state(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_state(is);
}

}  // namespace bosehub::io
