#include "artifacts.hpp"

#include "capspace/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace capspace::cli {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ValidationError("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string sha256_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

void require_artifact(const fs::path& p, const std::string& stage) {
  if (!fs::exists(p)) throw MissingStage(p.string() + " not found; run the '" + stage + "' stage first");
}

json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}

double to_double(const json& j) {
  if (j.is_string()) return parse_value(j.get<std::string>());
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

std::string format_value(double v) { return io::format_double(v); }

double parse_value(const std::string& s) {
  if (s == "inf" || s == "+inf" || s == "Inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf" || s == "-Inf") return -std::numeric_limits<double>::infinity();
  auto v = io::parse_double(s);
  if (!v) throw ValidationError("not a number: '" + s + "'");
  return *v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& f : io::split_csv_line(s)) out.push_back(parse_value(f));
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

json to_json(const model::GmmFit& g) {
  json j;
  j["n"] = g.n;
  j["weights"] = g.weights;
  j["means"] = g.means;
  j["sds"] = g.sds;
  j["log_likelihood"] = g.log_likelihood;
  j["aic"] = g.aic;
  j["bic"] = g.bic;
  j["iterations"] = g.iterations;
  j["converged"] = g.converged;
  j["data_min"] = g.data_min;
  j["data_max"] = g.data_max;
  j["data_mean"] = g.data_mean;
  return j;
}

model::GmmFit gmm_from_json(const json& j) {
  model::GmmFit g;
  g.n = j.at("n").get<int>();
  g.weights = j.at("weights").get<std::vector<double>>();
  g.means = j.at("means").get<std::vector<double>>();
  g.sds = j.at("sds").get<std::vector<double>>();
  g.log_likelihood = j.value("log_likelihood", 0.0);
  g.aic = j.value("aic", 0.0);
  g.bic = j.value("bic", 0.0);
  g.iterations = j.value("iterations", 0);
  g.converged = j.value("converged", false);
  g.data_min = j.at("data_min").get<double>();
  g.data_max = j.at("data_max").get<double>();
  g.data_mean = j.at("data_mean").get<double>();
  if (g.weights.size() != static_cast<std::size_t>(g.n) || g.means.size() != g.weights.size() ||
      g.sds.size() != g.weights.size())
    throw ValidationError("gmm: component arrays do not match n");
  return g;
}

json to_json(const model::BlockParams& p) {
  json j;
  const auto a = p.to_array();
  for (std::size_t i = 0; i < 6; ++i) j[model::BlockParams::names()[i]] = a[i];
  return j;
}

model::BlockParams params_from_json(const json& j) {
  std::array<double, 6> a{};
  for (std::size_t i = 0; i < 6; ++i) a[i] = j.at(model::BlockParams::names()[i]).get<double>();
  return model::BlockParams::from_array(a);
}

json to_json(const model::BlockLayout& l) {
  json j;
  j["n_capabilities"] = l.n_capabilities;
  j["n_periphery"] = l.n_periphery;
  j["n_core"] = l.n_core;
  j["blocks"] = json::array();
  for (const auto& b : l.blocks)
    j["blocks"].push_back({{"type", b.type == model::BlockType::Core ? "core" : "periphery"},
                           {"begin", b.begin},
                           {"end", b.end},
                           {"component", b.component}});
  return j;
}

model::BlockLayout layout_from_json(const json& j) {
  model::BlockLayout l;
  l.n_capabilities = j.at("n_capabilities").get<int>();
  l.n_periphery = j.at("n_periphery").get<int>();
  l.n_core = j.at("n_core").get<int>();
  for (const auto& b : j.at("blocks")) {
    model::Block blk;
    blk.type = b.at("type").get<std::string>() == "core" ? model::BlockType::Core : model::BlockType::Periphery;
    blk.begin = b.at("begin").get<int>();
    blk.end = b.at("end").get<int>();
    blk.component = b.at("component").get<int>();
    l.blocks.push_back(blk);
  }
  return l;
}

json to_json(const model::ProductCatalog& c) {
  json j;
  j["gmm"] = to_json(c.gmm);
  j["k_min"] = c.k_min;
  j["k_max"] = c.k_max;
  j["pci_min"] = c.pci_min;
  j["pci_max"] = c.pci_max;
  j["products"] = json::array();
  for (const auto& p : c.products)
    j["products"].push_back(
        {{"capabilities", p.capabilities}, {"k0", p.k0}, {"k_scaled", p.k_scaled}, {"origin_block", p.origin_block}});
  return j;
}

model::ProductCatalog catalog_from_json(const json& j) {
  model::ProductCatalog c;
  c.gmm = gmm_from_json(j.at("gmm"));
  c.k_min = j.at("k_min").get<int>();
  c.k_max = j.at("k_max").get<int>();
  c.pci_min = j.at("pci_min").get<double>();
  c.pci_max = j.at("pci_max").get<double>();
  for (const auto& p : j.at("products")) {
    model::Product prod;
    prod.capabilities = p.at("capabilities").get<std::vector<int>>();
    prod.k0 = p.at("k0").get<int>();
    prod.k_scaled = p.at("k_scaled").get<double>();
    prod.origin_block = p.value("origin_block", 0);
    c.products.push_back(std::move(prod));
  }
  if (c.products.empty()) throw ValidationError("catalog has no products");
  return c;
}

std::string mode_name(model::SpaceMode m) { return m == model::SpaceMode::Beta ? "beta" : "constant"; }

model::SpaceMode parse_mode(const std::string& s) {
  if (s == "constant") return model::SpaceMode::Constant;
  if (s == "beta") return model::SpaceMode::Beta;
  throw ValidationError("mode must be 'constant' or 'beta', got '" + s + "'");
}

TradeData load_trade(const fs::path& p, int year) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open trade file " + p.string());
  TradeData d;
  d.table = trade::parse_trade_csv(in, year);
  d.rca = trade::compute_rca(d.table);
  d.m = trade::prune(trade::binarize(d.rca));
  if (d.m.n_countries() < 2 || d.m.n_products() < 2)
    throw ValidationError("trade data for " + std::to_string(year) + " leaves fewer than 2 countries or products");
  return d;
}

std::string ranked_csv(const std::vector<std::string>& codes, const Vector& v) {
  std::vector<std::size_t> order(codes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v(static_cast<Eigen::Index>(a)) > v(static_cast<Eigen::Index>(b)); });
  std::vector<std::size_t> rank(codes.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r + 1;
  std::string out = "code,value,rank\n";
  for (std::size_t i = 0; i < codes.size(); ++i)
    out += codes[i] + "," + format_value(v(static_cast<Eigen::Index>(i))) + "," + std::to_string(rank[i]) + "\n";
  return out;
}

std::vector<std::pair<std::string, double>> read_code_values(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::string line;
  std::vector<std::pair<std::string, double>> out;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    auto f = io::split_csv_line(line);
    if (f.size() < 2) throw ParseError(lineno, p.string() + ": expected code,value");
    out.emplace_back(f[0], parse_value(f[1]));
  }
  return out;
}

std::map<std::string, std::string> read_country_map(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::string line;
  std::map<std::string, std::string> out;
  int c_code = -1, c_iso = -1;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = io::split_csv_line(line);
    if (c_code < 0) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == "country_code") c_code = static_cast<int>(i);
        if (f[i] == "country_iso3") c_iso = static_cast<int>(i);
      }
      if (c_code < 0 || c_iso < 0) throw ParseError(lineno, p.string() + ": need country_code and country_iso3 columns");
      continue;
    }
    if (static_cast<int>(f.size()) <= std::max(c_code, c_iso)) throw ParseError(lineno, p.string() + ": short row");
    out[f[static_cast<std::size_t>(c_code)]] = f[static_cast<std::size_t>(c_iso)];
  }
  return out;
}

}  // namespace capspace::cli
