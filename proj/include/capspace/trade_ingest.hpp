#pragma once

// Trade and indicator ingestion: long-format CSV -> country x product export
// table -> revealed comparative advantage -> binary specialization matrix.

#include "capspace/common.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace capspace::trade {

/// Export values x_cp for one year. Rows/columns are sorted by code.
struct ExportTable {
  int year = 0;
  std::vector<std::string> countries;
  std::vector<std::string> products;
  Matrix values;  // |countries| x |products|, all >= 0

  std::optional<std::size_t> country_index(std::string_view code) const;
  std::optional<std::size_t> product_index(std::string_view code) const;
};

struct RcaMatrix {
  std::vector<std::string> countries;
  std::vector<std::string> products;
  Matrix values;
  /// Products removed because nobody exported them (world total is zero).
  std::vector<std::string> dropped_products;
};

/// Binary M with its diversity (row sums) and ubiquity (column sums).
struct SpecializationMatrix {
  std::vector<std::string> countries;
  std::vector<std::string> products;
  Matrix m;
  Eigen::VectorXi diversity;
  Eigen::VectorXi ubiquity;

  Eigen::Index n_countries() const { return m.rows(); }
  Eigen::Index n_products() const { return m.cols(); }
  bool is_pruned() const;
};

/// Reads year,exporter,importer,product,value rows (BACI's t,i,j,k,v header
/// is accepted too), keeps rows of `year`, sums over importers.
ExportTable parse_trade_csv(std::istream& in, int year);

/// Inverse of parse_trade_csv for an aggregated table (importer written as "ALL").
void write_trade_csv(std::ostream& out, const ExportTable& t);

RcaMatrix compute_rca(const ExportTable& t);

/// M_cp = 1 iff RCA_cp > threshold (strict).
SpecializationMatrix binarize(const RcaMatrix& r, double threshold = 1.0);

/// Wraps an explicit 0/1 matrix. Codes default to C0.., P0.. when omitted.
SpecializationMatrix from_binary(const Matrix& m, std::vector<std::string> countries = {},
                                 std::vector<std::string> products = {});

/// Removes countries with zero diversity and products with zero ubiquity.
SpecializationMatrix prune(const SpecializationMatrix& s);

// ---------------------------------------------------------------------------
// World Development Indicators style panel

enum class Indicator { LogGdpPerCapita, Population, InvestmentGdp, ExportGdp, GdpPerCapitaGrowth };

std::string_view indicator_name(Indicator ind);

struct CountryIndicators {
  std::string code;
  /// year -> value; nullopt marks a value that was present but missing ("..", empty).
  std::map<Indicator, std::map<int, std::optional<double>>> series;
  /// False when the country does not appear in the trade data.
  bool joinable = true;
};

class IndicatorTable {
public:
  std::map<std::string, CountryIndicators> records;
  std::size_t skipped_unknown = 0;

  std::optional<double> value(std::string_view country, Indicator ind, int year) const;

  /// Mean growth over years base_year+1 .. base_year+window (base year excluded).
  /// nullopt when any year in the window is absent or missing.
  std::optional<double> growth_average(std::string_view country, int base_year, int window) const;

  void mark_joinable(const std::vector<std::string>& trade_countries);
};

/// CSV with columns country, indicator, year, value. Indicator names are the
/// snake_case names from indicator_name() or the WDI series codes
/// NY.GDP.PCAP.KD (logged on read), SP.POP.TOTL (converted to millions),
/// NE.GDI.TOTL.ZS, NE.EXP.GNFS.ZS, NY.GDP.PCAP.KD.ZG. Unknown indicators are
/// counted in skipped_unknown.
IndicatorTable parse_indicators_csv(std::istream& in);

}  // namespace capspace::trade
