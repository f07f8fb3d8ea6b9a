#include "capspace/trade_ingest.hpp"

#include "capspace/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace capspace::trade {

namespace {

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

std::string strip(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<std::size_t> find_code(const std::vector<std::string>& codes, std::string_view code) {
  auto it = std::lower_bound(codes.begin(), codes.end(), code);
  if (it == codes.end() || *it != code) return std::nullopt;
  return static_cast<std::size_t>(it - codes.begin());
}

// Maps header names to column positions; returns -1 when absent.
int column_of(const std::vector<std::string>& header, std::initializer_list<std::string_view> names) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto h = lower(strip(header[i]));
    for (auto n : names)
      if (h == n) return static_cast<int>(i);
  }
  return -1;
}

std::vector<std::string> sorted_keys(const std::unordered_map<std::string, std::size_t>& ids,
                                     std::vector<std::size_t>& remap) {
  std::vector<std::string> codes;
  codes.reserve(ids.size());
  for (const auto& [code, _] : ids) codes.push_back(code);
  std::sort(codes.begin(), codes.end());
  remap.assign(ids.size(), 0);
  for (std::size_t i = 0; i < codes.size(); ++i) remap[ids.at(codes[i])] = i;
  return codes;
}

Eigen::VectorXi row_sums(const Matrix& m) {
  Eigen::VectorXi out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out(i) = static_cast<int>(std::lround(m.row(i).sum()));
  return out;
}

Eigen::VectorXi col_sums(const Matrix& m) {
  Eigen::VectorXi out(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) out(j) = static_cast<int>(std::lround(m.col(j).sum()));
  return out;
}

}  // namespace

std::optional<std::size_t> ExportTable::country_index(std::string_view code) const {
  return find_code(countries, code);
}

std::optional<std::size_t> ExportTable::product_index(std::string_view code) const {
  return find_code(products, code);
}

bool SpecializationMatrix::is_pruned() const {
  return (diversity.array() > 0).all() && (ubiquity.array() > 0).all();
}

ExportTable parse_trade_csv(std::istream& in, int year) {
  ExportTable table;
  table.year = year;
  table.values.resize(0, 0);

  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!strip(line).empty()) {
      header = io::split_csv_line(line);
      break;
    }
  }
  if (header.empty()) return table;

  const int c_year = column_of(header, {"year", "t"});
  const int c_exp = column_of(header, {"exporter", "i"});
  const int c_imp = column_of(header, {"importer", "j"});
  const int c_prod = column_of(header, {"product", "k"});
  const int c_val = column_of(header, {"value", "v"});
  if (c_year < 0 || c_exp < 0 || c_imp < 0 || c_prod < 0 || c_val < 0)
    throw ParseError(lineno, "header must name year, exporter, importer, product, value");

  std::unordered_map<std::string, std::size_t> country_ids;
  std::unordered_map<std::string, std::size_t> product_ids;
  std::unordered_map<std::uint64_t, double> cells;

  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    auto f = io::split_csv_line(line);
    if (f.size() != header.size())
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    auto y = io::parse_double(f[static_cast<std::size_t>(c_year)]);
    if (!y || *y != std::floor(*y)) throw ParseError(lineno, "bad year '" + f[static_cast<std::size_t>(c_year)] + "'");
    auto v = io::parse_double(f[static_cast<std::size_t>(c_val)]);
    if (!v || !std::isfinite(*v)) throw ParseError(lineno, "bad value '" + f[static_cast<std::size_t>(c_val)] + "'");
    if (*v < 0.0) throw ValidationError("line " + std::to_string(lineno) + ": negative export value " + io::format_double(*v));
    if (static_cast<int>(*y) != year) continue;

    const auto exporter = strip(f[static_cast<std::size_t>(c_exp)]);
    const auto product = strip(f[static_cast<std::size_t>(c_prod)]);
    if (exporter.empty() || product.empty()) throw ParseError(lineno, "empty exporter or product code");
    auto ci = country_ids.try_emplace(exporter, country_ids.size()).first->second;
    auto pi = product_ids.try_emplace(product, product_ids.size()).first->second;
    cells[(static_cast<std::uint64_t>(ci) << 32) | pi] += *v;
  }

  std::vector<std::size_t> crow, pcol;
  table.countries = sorted_keys(country_ids, crow);
  table.products = sorted_keys(product_ids, pcol);
  table.values = Matrix::Zero(static_cast<Eigen::Index>(table.countries.size()),
                              static_cast<Eigen::Index>(table.products.size()));
  for (const auto& [key, val] : cells) {
    auto ci = crow[key >> 32];
    auto pi = pcol[key & 0xffffffffULL];
    table.values(static_cast<Eigen::Index>(ci), static_cast<Eigen::Index>(pi)) = val;
  }
  return table;
}

void write_trade_csv(std::ostream& out, const ExportTable& t) {
  out << "year,exporter,importer,product,value\n";
  for (Eigen::Index c = 0; c < t.values.rows(); ++c)
    for (Eigen::Index p = 0; p < t.values.cols(); ++p) {
      const double v = t.values(c, p);
      if (v == 0.0) continue;
      out << t.year << ',' << t.countries[static_cast<std::size_t>(c)] << ",ALL,"
          << t.products[static_cast<std::size_t>(p)] << ',' << io::format_double(v) << '\n';
    }
}

RcaMatrix compute_rca(const ExportTable& t) {
  const double world = t.values.sum();
  if (!(world > 0.0)) throw ValidationError("no trade: total world exports are zero");

  const Vector product_totals = t.values.colwise().sum().transpose();
  const Vector country_totals = t.values.rowwise().sum();

  std::vector<Eigen::Index> kept;
  RcaMatrix r;
  r.countries = t.countries;
  for (Eigen::Index p = 0; p < t.values.cols(); ++p) {
    if (product_totals(p) > 0.0) {
      kept.push_back(p);
      r.products.push_back(t.products[static_cast<std::size_t>(p)]);
    } else {
      r.dropped_products.push_back(t.products[static_cast<std::size_t>(p)]);
    }
  }

  r.values = Matrix::Zero(t.values.rows(), static_cast<Eigen::Index>(kept.size()));
  for (Eigen::Index c = 0; c < t.values.rows(); ++c) {
    if (!(country_totals(c) > 0.0)) continue;  // zero-export country keeps an all-zero row
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const auto p = kept[k];
      const double x = t.values(c, p);
      if (x == 0.0) continue;
      r.values(c, static_cast<Eigen::Index>(k)) = (x / country_totals(c)) / (product_totals(p) / world);
    }
  }
  return r;
}

SpecializationMatrix binarize(const RcaMatrix& r, double threshold) {
  if (!(threshold > 0.0)) throw ValidationError("RCA threshold must be > 0");
  Matrix m = (r.values.array() > threshold).cast<double>().matrix();
  return from_binary(m, r.countries, r.products);
}

SpecializationMatrix from_binary(const Matrix& m, std::vector<std::string> countries,
                                 std::vector<std::string> products) {
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (m.data()[i] != 0.0 && m.data()[i] != 1.0) throw ValidationError("specialization matrix must be 0/1");
  if (countries.empty())
    for (Eigen::Index c = 0; c < m.rows(); ++c) countries.push_back("C" + std::to_string(c));
  if (products.empty())
    for (Eigen::Index p = 0; p < m.cols(); ++p) products.push_back("P" + std::to_string(p));
  if (static_cast<Eigen::Index>(countries.size()) != m.rows() || static_cast<Eigen::Index>(products.size()) != m.cols())
    throw ValidationError("code lists do not match matrix shape");
  SpecializationMatrix s;
  s.countries = std::move(countries);
  s.products = std::move(products);
  s.m = m;
  s.diversity = row_sums(m);
  s.ubiquity = col_sums(m);
  return s;
}

SpecializationMatrix prune(const SpecializationMatrix& s) {
  std::vector<Eigen::Index> rows, cols;
  for (Eigen::Index c = 0; c < s.m.rows(); ++c)
    if (s.diversity(c) > 0) rows.push_back(c);
  for (Eigen::Index p = 0; p < s.m.cols(); ++p)
    if (s.ubiquity(p) > 0) cols.push_back(p);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  std::vector<std::string> cc, pc;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    cc.push_back(s.countries[static_cast<std::size_t>(rows[i])]);
    for (std::size_t j = 0; j < cols.size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s.m(rows[i], cols[j]);
  }
  for (auto p : cols) pc.push_back(s.products[static_cast<std::size_t>(p)]);
  return from_binary(m, std::move(cc), std::move(pc));
}

// ---------------------------------------------------------------------------

std::string_view indicator_name(Indicator ind) {
  switch (ind) {
    case Indicator::LogGdpPerCapita: return "log_gdp_per_capita";
    case Indicator::Population: return "population";
    case Indicator::InvestmentGdp: return "investment_gdp";
    case Indicator::ExportGdp: return "export_gdp";
    case Indicator::GdpPerCapitaGrowth: return "gdp_per_capita_growth";
  }
  return "unknown";
}

std::optional<double> IndicatorTable::value(std::string_view country, Indicator ind, int year) const {
  auto rec = records.find(std::string(country));
  if (rec == records.end()) return std::nullopt;
  auto s = rec->second.series.find(ind);
  if (s == rec->second.series.end()) return std::nullopt;
  auto v = s->second.find(year);
  if (v == s->second.end()) return std::nullopt;
  return v->second;
}

std::optional<double> IndicatorTable::growth_average(std::string_view country, int base_year, int window) const {
  if (window < 1) throw ValidationError("growth window must be >= 1 year");
  double sum = 0.0;
  for (int y = base_year + 1; y <= base_year + window; ++y) {
    auto v = value(country, Indicator::GdpPerCapitaGrowth, y);
    if (!v) return std::nullopt;
    sum += *v;
  }
  return sum / window;
}

void IndicatorTable::mark_joinable(const std::vector<std::string>& trade_countries) {
  std::vector<std::string> sorted = trade_countries;
  std::sort(sorted.begin(), sorted.end());
  for (auto& [code, rec] : records) rec.joinable = std::binary_search(sorted.begin(), sorted.end(), code);
}

IndicatorTable parse_indicators_csv(std::istream& in) {
  IndicatorTable table;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (!strip(line).empty()) {
      header = io::split_csv_line(line);
      break;
    }
  }
  if (header.empty()) return table;
  const int c_country = column_of(header, {"country", "country_code", "country code", "iso3"});
  const int c_ind = column_of(header, {"indicator", "series", "series_code", "series code", "indicator_code"});
  const int c_year = column_of(header, {"year"});
  const int c_val = column_of(header, {"value"});
  if (c_country < 0 || c_ind < 0 || c_year < 0 || c_val < 0)
    throw ParseError(lineno, "header must name country, indicator, year, value");

  while (std::getline(in, line)) {
    ++lineno;
    if (strip(line).empty()) continue;
    auto f = io::split_csv_line(line);
    if (f.size() != header.size())
      throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    const auto name = strip(f[static_cast<std::size_t>(c_ind)]);
    std::optional<Indicator> ind;
    bool log_it = false;
    double scale = 1.0;
    if (name == "log_gdp_per_capita") ind = Indicator::LogGdpPerCapita;
    else if (name == "NY.GDP.PCAP.KD") ind = Indicator::LogGdpPerCapita, log_it = true;
    else if (name == "population") ind = Indicator::Population;
    else if (name == "SP.POP.TOTL") ind = Indicator::Population, scale = 1e-6;
    else if (name == "investment_gdp" || name == "NE.GDI.TOTL.ZS") ind = Indicator::InvestmentGdp;
    else if (name == "export_gdp" || name == "NE.EXP.GNFS.ZS") ind = Indicator::ExportGdp;
    else if (name == "gdp_per_capita_growth" || name == "NY.GDP.PCAP.KD.ZG") ind = Indicator::GdpPerCapitaGrowth;
    if (!ind) {
      ++table.skipped_unknown;
      continue;
    }
    auto y = io::parse_double(f[static_cast<std::size_t>(c_year)]);
    if (!y || *y != std::floor(*y)) throw ParseError(lineno, "bad year '" + f[static_cast<std::size_t>(c_year)] + "'");
    const auto raw = strip(f[static_cast<std::size_t>(c_val)]);
    std::optional<double> v;
    if (!raw.empty() && raw != ".." && raw != "NA" && raw != "nan") {
      v = io::parse_double(raw);
      if (!v) throw ParseError(lineno, "bad value '" + raw + "'");
      if (log_it) v = *v > 0.0 ? std::optional<double>(std::log(*v)) : std::nullopt;
      else if (v) *v *= scale;
    }
    const auto code = strip(f[static_cast<std::size_t>(c_country)]);
    auto& rec = table.records[code];
    rec.code = code;
    rec.series[*ind][static_cast<int>(*y)] = v;
  }
  return table;
}

}  // namespace capspace::trade
