#include "capspace/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <istream>
#include <ostream>

namespace capspace::io {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 8)) throw ValidationError("matrix cache truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

constexpr std::string_view kCacheMagic = "CSPC1";

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::optional<double> parse_double(std::string_view field) {
  field = trim(field);
  if (field.empty()) return std::nullopt;
  if (field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

void write_matrix_csv(std::ostream& out, const LabeledMatrix& m) {
  for (const auto& c : m.cols) out << ',' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    out << m.rows.at(static_cast<std::size_t>(i));
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) out << ',' << format_double(m.values(i, j));
    out << '\n';
  }
}

LabeledMatrix read_matrix_csv(std::istream& in) {
  LabeledMatrix m;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) return m;
  ++lineno;
  auto header = split_csv_line(line);
  m.cols.assign(header.begin() + 1, header.end());
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != m.cols.size() + 1) throw ParseError(lineno, "expected " + std::to_string(m.cols.size() + 1) + " fields");
    m.rows.push_back(f[0]);
    std::vector<double> r;
    r.reserve(m.cols.size());
    for (std::size_t j = 1; j < f.size(); ++j) {
      auto v = parse_double(f[j]);
      if (!v) throw ParseError(lineno, "not a number: '" + f[j] + "'");
      r.push_back(*v);
    }
    rows.push_back(std::move(r));
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < m.cols.size(); ++j) m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_matrix_cache(std::ostream& out, const Matrix& m) {
  out.write(kCacheMagic.data(), static_cast<std::streamsize>(kCacheMagic.size()));
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
}

Matrix read_matrix_cache(std::istream& in) {
  std::array<char, 5> magic{};
  if (!in.read(magic.data(), 5) || std::string_view(magic.data(), 5) != kCacheMagic)
    throw ValidationError("not a CSPC1 matrix cache");
  const auto rows = get_u64(in);
  const auto cols = get_u64(in);
  if (rows > (1ULL << 32) || cols > (1ULL << 32)) throw ValidationError("matrix cache dimensions implausible");
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = std::bit_cast<double>(get_u64(in));
  return m;
}

}  // namespace capspace::io
