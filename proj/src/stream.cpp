#include "ivla/stream.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ivla/error.hpp"

namespace ivla {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) out.push_back(part);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double parse_double(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  double x = 0;
  auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || end != t.data() + t.size() || t.empty()) {
    throw DataError(where + ": bad number '" + t + "'");
  }
  return x;
}

Matrix parse_factor(const std::string& field, char name, std::size_t rows,
                    std::size_t k, const std::string& where) {
  const std::string f = trim(field);
  if (f.size() < 2 || f[0] != name || f[1] != '=') {
    throw DataError(where + ": expected '" + std::string(1, name) + "=...'");
  }
  const auto values = split(f.substr(2), ',');
  if (values.size() != rows * k) {
    throw DataError(where + ": " + std::string(1, name) + " has " +
                    std::to_string(values.size()) + " values, expected " +
                    std::to_string(rows * k));
  }
  Matrix m(rows, k);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < rows; ++i) {
      m(i, j) = parse_double(values[j * rows + i], where);
    }
  }
  return m;
}

}  // namespace

std::vector<RankKUpdate> read_update_stream(std::istream& in,
                                            const ShapeMap& shapes) {
  std::vector<RankKUpdate> out;
  std::string line;
  std::size_t record = 0;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::string where = "record " + std::to_string(record++);
    const auto fields = split(t, ';');
    if (fields.size() != 4) {
      throw DataError(where + ": expected 'name;k;u=...;v=...'");
    }
    const std::string name = trim(fields[0]);
    auto it = shapes.find(name);
    if (it == shapes.end()) {
      throw DataError(where + ": '" + name + "' is not an updatable matrix");
    }
    const double k = parse_double(fields[1], where);
    if (k < 1 || k != static_cast<double>(static_cast<std::size_t>(k))) {
      throw DataError(where + ": rank must be a positive integer");
    }
    const auto rank = static_cast<std::size_t>(k);
    out.push_back({name, parse_factor(fields[2], 'u', it->second.rows, rank, where),
                   parse_factor(fields[3], 'v', it->second.cols, rank, where)});
  }
  return out;
}

std::vector<RankKUpdate> load_update_stream(const std::string& path,
                                            const ShapeMap& shapes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open update stream '" + path + "'");
  return read_update_stream(in, shapes);
}

void write_update_stream(std::ostream& out,
                         const std::vector<RankKUpdate>& updates) {
  auto put = [&](const Matrix& m) {
    char buf[32];
    bool first = true;
    for (std::size_t j = 0; j < m.cols(); ++j) {
      for (std::size_t i = 0; i < m.rows(); ++i) {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, m(i, j));
        (void)ec;
        if (!first) out << ',';
        out.write(buf, end - buf);
        first = false;
      }
    }
  };
  for (const auto& up : updates) {
    out << up.target << ';' << up.rank() << ";u=";
    put(up.u);
    out << ";v=";
    put(up.v);
    out << '\n';
  }
}

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  for (const auto& part : split(text, ',')) {
    const std::string p = trim(part);
    if (p.empty()) continue;
    const auto eq = p.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == p.size()) {
      throw ConfigError("expected key=value, got '" + p + "'");
    }
    out[trim(p.substr(0, eq))] = trim(p.substr(eq + 1));
  }
  return out;
}

DimBindings parse_dims(const std::string& text) {
  DimBindings dims;
  for (const auto& [key, value] : parse_key_values(text)) {
    std::size_t x = 0;
    auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), x);
    if (ec != std::errc() || end != value.data() + value.size() || x == 0) {
      throw ConfigError("dimension " + key + " must be a positive integer");
    }
    dims[key] = x;
  }
  return dims;
}

}  // namespace ivla
