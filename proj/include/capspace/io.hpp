#pragma once

#include "capspace/common.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace capspace::io {

/// Splits one CSV record. Handles double-quoted fields with "" escapes; no
/// embedded newlines.
std::vector<std::string> split_csv_line(std::string_view line);

/// Strict decimal parse of the whole field (surrounding blanks allowed).
std::optional<double> parse_double(std::string_view field);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Matrix with row and column labels, as stored in the CSV layout
///   ,col1,col2,...
///   row1,v11,v12,...
struct LabeledMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  Matrix values;
};

void write_matrix_csv(std::ostream& out, const LabeledMatrix& m);
LabeledMatrix read_matrix_csv(std::istream& in);

/// Binary cache: "CSPC1", uint64 rows, uint64 cols (little-endian), then
/// rows*cols IEEE-754 doubles in row-major order, little-endian.
void write_matrix_cache(std::ostream& out, const Matrix& m);
Matrix read_matrix_cache(std::istream& in);

}  // namespace capspace::io
