#pragma once

// File plumbing for the CLI: atomic writes, hashing, JSON round trips of the
// model objects that stages hand to each other.

#include "capspace/capability_model.hpp"
#include "capspace/complexity_core.hpp"
#include "capspace/trade_ingest.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace capspace::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// Thrown for a missing upstream artifact; the message names the stage.
struct MissingStage : ValidationError {
  using ValidationError::ValidationError;
};

std::string read_file(const fs::path& p);
/// Writes to a sibling temporary and renames over the target.
void write_atomic(const fs::path& p, const std::string& content);
std::string sha256_file(const fs::path& p);

/// Requires `p` to exist, otherwise MissingStage naming `stage`.
void require_artifact(const fs::path& p, const std::string& stage);

/// JSON cannot hold infinities; they are written as "inf" / "-inf" strings.
json number(double v);
double to_double(const json& j);
std::string format_value(double v);
double parse_value(const std::string& s);
std::vector<double> parse_list(const std::string& s);

/// Stable 64-bit FNV-1a, used to derive per-country seeds from codes.
std::uint64_t fnv1a(const std::string& s);

json to_json(const model::GmmFit& g);
model::GmmFit gmm_from_json(const json& j);
json to_json(const model::BlockParams& p);
model::BlockParams params_from_json(const json& j);
json to_json(const model::BlockLayout& l);
model::BlockLayout layout_from_json(const json& j);
json to_json(const model::ProductCatalog& c);
model::ProductCatalog catalog_from_json(const json& j);
std::string mode_name(model::SpaceMode m);
model::SpaceMode parse_mode(const std::string& s);

/// Trade table for a year and its pruned specialization matrix.
struct TradeData {
  trade::ExportTable table;
  trade::RcaMatrix rca;
  trade::SpecializationMatrix m;
};

TradeData load_trade(const fs::path& p, int year);

/// code,value,rank with rank 1 for the largest value.
std::string ranked_csv(const std::vector<std::string>& codes, const Vector& v);
/// Reads code,value[,...] files such as eci.csv.
std::vector<std::pair<std::string, double>> read_code_values(const fs::path& p);

/// Trade-code -> indicator-code map from a CSV with country_code and
/// country_iso3 columns (BACI's country_codes file has both).
std::map<std::string, std::string> read_country_map(const fs::path& p);

}  // namespace capspace::cli
