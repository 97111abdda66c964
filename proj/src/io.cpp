#include "hetlayer/io.hpp"

#include <bit>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace hetlayer {

static_assert(std::endian::native == std::endian::little, "binary field format assumes little-endian doubles");

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
  return std::string(buf, r.ptr);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
  if (!out) throw FormatError("write failed: " + path.string());
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::vector<double> split_numbers(const std::string& line, char sep, const std::string& where) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t end = line.find(sep, pos);
    if (end == std::string::npos) end = line.size();
    std::string item = line.substr(pos, end - pos);
    while (!item.empty() && (item.back() == '\r' || item.back() == ' ')) item.pop_back();
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    double v = 0.0;
    const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size())
      throw FormatError(where + ": bad number '" + item + "'");
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

std::string field_header(const Field2D& u) {
  std::string s = std::to_string(u.m) + " " + std::to_string(u.grid.rows()) + " " + std::to_string(u.grid.cols()) +
                  " " + format_double(u.grid.t.half_length()) + " " + format_double(u.grid.x.half_length());
  if (u.order == 4) s += " order=4";
  return s + "\n";
}

Field2D parse_header(const std::string& line, const std::string& name) {
  std::istringstream in(line);
  std::vector<std::string> tok;
  for (std::string t; in >> t;) tok.push_back(t);
  int order = 2;
  if (tok.size() == 6) {
    if (tok[5] == "order=4") order = 4;
    else if (tok[5] != "order=2") throw FormatError(name + ":1: unknown tag '" + tok[5] + "'");
    tok.pop_back();
  }
  if (tok.size() != 5) throw FormatError(name + ":1: expected header 'm n_t n_x T L'");
  try {
    const int m = std::stoi(tok[0]);
    const std::size_t nt = std::stoul(tok[1]), nx = std::stoul(tok[2]);
    const double T = std::stod(tok[3]), L = std::stod(tok[4]);
    if (m < 1) throw FormatError(name + ":1: bad dimension");
    Field2D u(Grid2D{Grid1D(T, nt), Grid1D(L, nx)}, m);
    u.order = order;
    return u;
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(name + ":1: bad header (" + e.what() + ")");
  }
}

}  // namespace

void write_profile_csv(const std::filesystem::path& path, const Path1D& e) {
  std::string s = "x";
  for (int k = 1; k <= e.m; ++k) s += ",u" + std::to_string(k);
  s += "\n";
  for (std::size_t j = 0; j < e.size(); ++j) {
    s += format_double(e.grid.node(j));
    for (double v : e.at(j)) s += "," + format_double(v);
    s += "\n";
  }
  write_file(path, s);
}

Path1D read_profile_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  const std::string name = path.string();
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,", 0) != 0) throw FormatError(name + ":1: expected header 'x,u1,...'");
  const int m = static_cast<int>(std::count(line.begin(), line.end(), ','));
  std::vector<double> xs, vals;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto row = split_numbers(line, ',', name + ":" + std::to_string(lineno));
    if (static_cast<int>(row.size()) != m + 1) throw FormatError(name + ":" + std::to_string(lineno) + ": wrong column count");
    xs.push_back(row[0]);
    vals.insert(vals.end(), row.begin() + 1, row.end());
  }
  if (xs.size() < 3) throw FormatError(name + ": too few rows");
  const double L = xs.back();
  if (std::fabs(xs.front() + L) > 1e-12 * L) throw FormatError(name + ": x range is not symmetric");
  Grid1D g(L, xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j)
    if (std::fabs(xs[j] - g.node(j)) > 1e-9 * L) throw FormatError(name + ": x values are not a uniform grid");
  return Path1D(g, m, std::move(vals), false);
}

void write_orbit_csv(const std::filesystem::path& path, const AbstractOrbit& V) {
  std::string s = "t";
  for (std::size_t k = 1; k <= V.d; ++k) s += ",u" + std::to_string(k);
  s += "\n";
  for (std::size_t i = 0; i < V.knots(); ++i) {
    s += format_double(V.t[i]);
    for (double v : V.at(i)) s += "," + format_double(v);
    s += "\n";
  }
  write_file(path, s);
}

void write_field_csv(const std::filesystem::path& path, const Field2D& u) {
  std::string s = field_header(u);
  s.reserve(u.values.size() * 26);
  for (std::size_t i = 0; i < u.grid.rows(); ++i) {
    const std::string t = format_double(u.grid.t.node(i));
    for (std::size_t j = 0; j < u.grid.cols(); ++j) {
      s += t;
      s += ',';
      s += format_double(u.grid.x.node(j));
      for (double v : u.at(i, j)) {
        s += ',';
        s += format_double(v);
      }
      s += '\n';
    }
  }
  write_file(path, s);
}

void write_field_binary(const std::filesystem::path& path, const Field2D& u) {
  std::string s = field_header(u);
  const std::size_t head = s.size();
  s.resize(head + u.values.size() * sizeof(double));
  std::memcpy(s.data() + head, u.values.data(), u.values.size() * sizeof(double));
  write_file(path, s);
}

Field2D read_field(const std::filesystem::path& path) {
  const std::string data = read_file(path);
  const std::string name = path.string();
  const auto nl = data.find('\n');
  if (nl == std::string::npos) throw FormatError(name + ": missing header line");
  Field2D u = parse_header(data.substr(0, nl), name);
  const std::size_t m = static_cast<std::size_t>(u.m);

  if (path.extension() == ".bin") {
    const std::size_t bytes = u.values.size() * sizeof(double);
    if (data.size() - nl - 1 != bytes) throw FormatError(name + ": payload size does not match the header");
    std::memcpy(u.values.data(), data.data() + nl + 1, bytes);
    return u;
  }

  std::istringstream in(data.substr(nl + 1));
  std::string line;
  std::size_t node = 0;
  int lineno = 1;
  const double tol_t = 1e-9 * u.grid.t.half_length(), tol_x = 1e-9 * u.grid.x.half_length();
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = name + ":" + std::to_string(lineno);
    auto row = split_numbers(line, ',', where);
    if (row.size() != m + 2) throw FormatError(where + ": wrong column count");
    if (node >= u.grid.rows() * u.grid.cols()) throw FormatError(where + ": more rows than the header declares");
    const std::size_t i = node / u.grid.cols(), j = node % u.grid.cols();
    if (std::fabs(row[0] - u.grid.t.node(i)) > tol_t || std::fabs(row[1] - u.grid.x.node(j)) > tol_x)
      throw FormatError(where + ": (t, x) does not match the grid");
    std::copy(row.begin() + 2, row.end(), u.at(i, j).begin());
    ++node;
  }
  if (node != u.grid.rows() * u.grid.cols()) throw FormatError(name + ": fewer rows than the header declares");
  return u;
}

}  // namespace hetlayer
