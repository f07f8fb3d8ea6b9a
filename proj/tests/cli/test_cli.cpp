#include "doctest.h"

#include "artifacts.hpp"
#include "cli.hpp"
#include "plots.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using namespace capspace;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path p;
  TempDir() {
    std::random_device rd;
    p = fs::temp_directory_path() / ("capspace_cli_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(p);
  }
  ~TempDir() { fs::remove_all(p); }
};

struct Call {
  int code;
  std::string out, err;
};

Call call(std::vector<std::string> args) {
  args.insert(args.begin(), "capspace");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Nested country/product structure: able countries export hard products.
void write_fixture(const fs::path& dir) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u;
  std::normal_distribution<double> nd;
  const int nc = 30, np = 60;
  std::vector<double> ability(nc), difficulty(np);
  for (auto& a : ability) a = u(rng);
  for (auto& d : difficulty) d = u(rng);
  std::ofstream t(dir / "trade.csv");
  t << "year,exporter,importer,product,value\n";
  for (int year : {2004, 2005})
    for (int c = 0; c < nc; ++c)
      for (int p = 0; p < np; ++p) {
        const bool strong = ability[c] + 0.15 * nd(rng) > difficulty[p];
        const double v = (strong ? 1000.0 : 20.0) * std::exp(nd(rng));
        char cc[8], pp[8];
        std::snprintf(cc, sizeof cc, "C%02d", c);
        std::snprintf(pp, sizeof pp, "P%03d", p);
        for (const char* imp : {"X1", "X2"}) t << year << "," << cc << "," << imp << "," << pp << "," << v / 2 << "\n";
      }
  std::ofstream w(dir / "wdi.csv");
  w << "country,indicator,year,value\n";
  for (int c = 0; c < nc; ++c) {
    char cc[8];
    std::snprintf(cc, sizeof cc, "C%02d", c);
    w << cc << ",log_gdp_per_capita,2005," << 7 + 3 * ability[c] + 0.5 * nd(rng) << "\n";
    w << cc << ",population,2005," << std::exp(2 + nd(rng)) << "\n";
    w << cc << ",investment_gdp,2005," << 22 + 4 * nd(rng) << "\n";
    w << cc << ",export_gdp,2005," << 35 + 8 * nd(rng) << "\n";
    for (int y = 2006; y <= 2010; ++y) w << cc << ",gdp_per_capita_growth," << y << "," << 2 + ability[c] + nd(rng) << "\n";
  }
}

std::vector<std::string> with_out(std::vector<std::string> a, const fs::path& out) {
  a.push_back("--out");
  a.push_back(out.string());
  return a;
}

// Runs every stage into `out`; returns false on the first non-zero exit.
bool pipeline(const fs::path& dir, const fs::path& out, std::string* log) {
  const std::string trade = (dir / "trade.csv").string(), wdi = (dir / "wdi.csv").string();
  const std::vector<std::vector<std::string>> steps = {
      {"ingest", "--in", trade, "--year", "2005", "--indicators", wdi},
      {"complexity", "--in", trade, "--year", "2005"},
      {"product-space", "--in", trade, "--year", "2005", "--seed", "7"},
      {"gmm", "--in", trade, "--year", "2005", "--seed", "7", "--n-max", "2"},
      {"calibrate", "--in", trade, "--year", "2005", "--seed", "7", "--pop", "6", "--gens", "2", "--n-products", "60",
       "--cap-max", "8", "--block-size", "5", "--components", "2"},
      {"simulate", "--seed", "7", "--components", "2"},
      {"infer", "--in", trade, "--year", "2005", "--seed", "7", "--restarts", "1", "--iters", "10", "--rho-grid",
       "1,-inf", "--nu-grid", "1,2"},
      {"regress", "--indicators", wdi, "--start-year", "2005", "--window", "5", "--spec", "1,3"},
      {"report"}};
  for (const auto& s : steps) {
    auto r = call(with_out(s, out));
    if (r.code != 0) {
      if (log) *log = s[0] + " exited " + std::to_string(r.code) + ": " + r.err;
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("full pipeline runs and is reproducible from one seed") {
  TempDir d;
  write_fixture(d.p);
  std::string log;
  REQUIRE_MESSAGE(pipeline(d.p, d.p / "a", &log), log);
  REQUIRE_MESSAGE(pipeline(d.p, d.p / "b", &log), log);
  for (const char* f : {"eci.csv", "pci.csv", "complexity.json", "network.csv", "nodes.csv", "report.json", "gmm.json",
                        "calibration.json", "catalog.json", "space.csv", "inference.csv", "capabilities.json",
                        "regressions.json", "regressions.csv", "weights_hist.svg", "degree_hist.svg",
                        "centrality_hist.svg", "heatmap.svg", "eci_k1_scatter.svg", "exports.csv",
                        "specialization.cspc"}) {
    CAPTURE(f);
    REQUIRE(fs::exists(d.p / "a" / f));
    CHECK(slurp(d.p / "a" / f) == slurp(d.p / "b" / f));
  }
  const auto m = cli::json::parse(slurp(d.p / "a" / "manifest.json"));
  for (const char* s : {"ingest", "complexity", "product-space", "gmm", "calibrate", "simulate", "infer", "regress", "report"})
    CHECK(m["stages"].contains(s));
  CHECK(m["stages"]["infer"]["seeds"].contains("infer"));
  CHECK(m["stages"]["complexity"]["inputs"][0]["sha256"].get<std::string>().size() == 64);

  const auto reg = cli::json::parse(slurp(d.p / "a" / "regressions.json"));
  CHECK(reg["regressions"].size() == 2);
  CHECK(reg["regressions"][0]["coefficients"][1]["term"] == "eci");
  CHECK(slurp(d.p / "a" / "inference.csv").rfind("code,K0,K1,KL,clarity,rho,nu", 0) == 0);
}

TEST_CASE("complexity writes ranked eci and pci") {
  TempDir d;
  write_fixture(d.p);
  auto r = call({"complexity", "--in", (d.p / "trade.csv").string(), "--year", "2005", "--out", (d.p / "o").string()});
  REQUIRE(r.code == 0);
  auto eci = cli::read_code_values(d.p / "o" / "eci.csv");
  CHECK(eci.size() == 30);
  std::istringstream in(slurp(d.p / "o" / "eci.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "code,value,rank");
  CHECK(fs::exists(d.p / "o" / "manifest.json"));
}

TEST_CASE("changing one input byte changes the recorded hash") {
  TempDir d;
  write_fixture(d.p);
  const auto out = (d.p / "o").string();
  auto hash = [&] {
    REQUIRE(call({"complexity", "--in", (d.p / "trade.csv").string(), "--year", "2005", "--out", out}).code == 0);
    return cli::json::parse(slurp(d.p / "o" / "manifest.json"))["stages"]["complexity"]["inputs"][0]["sha256"].get<std::string>();
  };
  const auto h1 = hash();
  std::string s = slurp(d.p / "trade.csv");
  const auto pos = s.rfind('5');
  s[pos] = '6';
  std::ofstream(d.p / "trade.csv", std::ios::binary) << s;
  CHECK(hash() != h1);
}

TEST_CASE("exit codes") {
  TempDir d;
  write_fixture(d.p);
  const auto out = (d.p / "o").string();
  SUBCASE("missing input names the path") {
    auto r = call({"complexity", "--in", (d.p / "nope.csv").string(), "--year", "2005", "--out", out});
    CHECK(r.code == 1);
    CHECK(r.err.find("nope.csv") != std::string::npos);
  }
  SUBCASE("unknown flag prints usage") {
    auto r = call({"complexity", "--bogus", "--out", out});
    CHECK(r.code == 1);
    CHECK(r.err.find("Usage") != std::string::npos);
  }
  SUBCASE("unknown subcommand") { CHECK(call({"frobnicate"}).code == 1); }
  SUBCASE("stochastic stage without a seed") {
    CHECK(call({"gmm", "--in", (d.p / "trade.csv").string(), "--year", "2005", "--out", out}).code == 1);
  }
  SUBCASE("report without upstream outputs names the stage") {
    auto r = call({"report", "--out", out});
    CHECK(r.code == 1);
    CHECK(r.err.find("product-space") != std::string::npos);
  }
  SUBCASE("calibrate without gmm.json names the stage") {
    auto r = call({"calibrate", "--in", (d.p / "trade.csv").string(), "--year", "2005", "--seed", "1", "--out", out});
    CHECK(r.code == 1);
    CHECK(r.err.find("'gmm'") != std::string::npos);
  }
  SUBCASE("bad mode") {
    CHECK(call({"simulate", "--seed", "1", "--mode", "weird", "--out", out}).code == 1);
  }
  SUBCASE("help") { CHECK(call({"--help"}).code == 0); }
}

TEST_CASE("histogram of three values has three bars; empty data gives a placeholder") {
  const std::string svg = cli::plots::histogram_svg({0.1, 0.5, 0.9}, "w", "x");
  std::size_t bars = 0;
  for (std::size_t pos = svg.find("class=\"bar\""); pos != std::string::npos; pos = svg.find("class=\"bar\"", pos + 1)) ++bars;
  CHECK(bars == 3);
  std::string warn;
  const std::string empty = cli::plots::histogram_svg({}, "w", "x", &warn);
  CHECK(empty.find("no data") != std::string::npos);
  CHECK(!warn.empty());
  auto h = cli::plots::histogram({1, 1, 1});
  CHECK(h.counts.size() == 1);
  CHECK(h.counts[0] == 3);
}

TEST_CASE("artifact helpers") {
  CHECK(std::isinf(cli::parse_value("-inf")));
  CHECK(cli::parse_list("1,0,-3,-inf").size() == 4);
  CHECK_THROWS_AS(cli::parse_value("abc"), ValidationError);
  CHECK(cli::number(-INFINITY) == "-inf");
  CHECK(cli::to_double(cli::json("-inf")) < 0);
  CHECK(cli::fnv1a("USA") == cli::fnv1a("USA"));
  CHECK(cli::fnv1a("USA") != cli::fnv1a("USB"));
  TempDir d;
  std::ofstream(d.p / "abc.txt") << "abc";
  CHECK(cli::sha256_file(d.p / "abc.txt") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
