#include "cli.hpp"

#include "artifacts.hpp"
#include "plots.hpp"

#include "capspace/calibrate.hpp"
#include "capspace/econometrics.hpp"
#include "capspace/infer.hpp"
#include "capspace/io.hpp"
#include "capspace/product_space.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#ifndef CAPSPACE_VERSION
#define CAPSPACE_VERSION "0.0.0"
#endif

namespace capspace::cli {

namespace {

// per-stage seed derivation: derive_seed(root, {stage})
enum StageId : std::uint64_t { kProductSpace = 2, kGmm = 3, kCalibrate = 4, kSimulate = 5, kInfer = 6 };

struct Stage {
  std::string name;
  fs::path out;
  json config = json::object();
  std::vector<fs::path> inputs;
  json seeds = json::object();
  std::vector<std::string> outputs;
  std::vector<std::string> warnings;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& file, const std::string& content) {
    write_atomic(out / file, content);
    outputs.push_back(file);
  }
  void write_json(const std::string& file, const json& j) { write(file, j.dump(2) + "\n"); }

  void finish(std::ostream& err) {
    for (const auto& w : warnings) err << "warning: " << w << "\n";
    const fs::path mpath = out / "manifest.json";
    json m = json::object();
    if (fs::exists(mpath)) {
      try {
        m = json::parse(read_file(mpath));
      } catch (const json::exception&) {
        m = json::object();
      }
    }
    m["software"] = {{"name", "capspace"}, {"version", CAPSPACE_VERSION}};
    json in = json::array();
    for (const auto& p : inputs)
      in.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}, {"bytes", fs::file_size(p)}});
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    char stamp[32];
    const std::time_t t = std::time(nullptr);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    m["stages"][name] = {{"config", config},   {"inputs", in},         {"seeds", seeds},
                         {"outputs", outputs}, {"warnings", warnings}, {"wall_clock_seconds", wall},
                         {"finished_at", stamp}};
    write_atomic(mpath, m.dump(2) + "\n");
  }
};

json summary_json(const space::DistributionSummary& s) {
  return {{"n", s.n},         {"mean", s.mean}, {"median", s.median}, {"mode", s.mode},
          {"iqr", s.iqr},     {"skew", s.skew}, {"kurtosis", s.kurtosis}, {"min", s.min},
          {"max", s.max},     {"mode_method", s.mode_method == space::ModeMethod::ExactCount ? "exact" : "histogram"}};
}

json report_json(const space::NetworkReport& r) {
  return {{"nodes", r.nodes},
          {"density", r.density},
          {"transitivity", r.transitivity},
          {"leiden_modularity", r.leiden_modularity},
          {"leiden_communities", r.leiden_communities},
          {"pci_modularity", r.pci_modularity},
          {"pci_best_bins", r.pci_best_bins},
          {"pci_centrality_r", number(r.pci_centrality_r)},
          {"dpci_proximity_r", number(r.dpci_proximity_r)},
          {"weights", summary_json(r.weights)},
          {"degrees", summary_json(r.degrees)},
          {"centrality", summary_json(r.centrality)}};
}

json ks_json(const space::KsResult& k) { return {{"d", k.d}, {"p", k.p}}; }

json comparison_json(const calib::ComparisonReport& c) {
  json rows = json::array();
  auto row = [&](const std::string& metric, double e, double s) {
    rows.push_back({{"metric", metric}, {"empirical", number(e)}, {"simulated", number(s)}});
  };
  const auto &e = c.empirical, &s = c.simulated;
  row("density", e.density, s.density);
  row("transitivity", e.transitivity, s.transitivity);
  row("leiden_modularity", e.leiden_modularity, s.leiden_modularity);
  row("pci_modularity", e.pci_modularity, s.pci_modularity);
  row("pci_centrality_r", e.pci_centrality_r, s.pci_centrality_r);
  row("dpci_proximity_r", e.dpci_proximity_r, s.dpci_proximity_r);
  row("weight_mean", e.weights.mean, s.weights.mean);
  row("weight_median", e.weights.median, s.weights.median);
  row("degree_mean", e.degrees.mean, s.degrees.mean);
  row("centrality_mean", e.centrality.mean, s.centrality.mean);
  return {{"empirical", report_json(e)},
          {"simulated", report_json(s)},
          {"weight_ks", ks_json(c.weight_ks)},
          {"degree_ks", ks_json(c.degree_ks)},
          {"centrality_ks", ks_json(c.centrality_ks)},
          {"dropped_fraction", c.dropped_fraction},
          {"table", rows}};
}

std::vector<double> vec_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// Reads a CSV with a header into column-name -> values (strings).
std::vector<std::map<std::string, std::string>> read_table(const fs::path& p) {
  std::istringstream in(read_file(p));
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = io::split_csv_line(line);
    if (header.empty()) {
      header = f;
      continue;
    }
    if (f.size() != header.size()) throw ParseError(lineno, p.string() + ": wrong number of fields");
    std::map<std::string, std::string> r;
    for (std::size_t i = 0; i < f.size(); ++i) r[header[i]] = f[i];
    rows.push_back(std::move(r));
  }
  return rows;
}

const std::string& col(const std::map<std::string, std::string>& row, const std::string& name, const fs::path& p) {
  auto it = row.find(name);
  if (it == row.end()) throw ValidationError(p.string() + ": missing column " + name);
  return it->second;
}

complexity::ComplexityResult complexity_of(const TradeData& d, Stage& st) {
  auto c = complexity::eci_pci(d.m);
  for (const auto& w : c.warnings) st.warnings.push_back(w);
  if (!c.converged) throw NumericalError("ECI/PCI eigen-solver did not converge");
  return c;
}

space::ProximityNetwork empirical_network(const TradeData& d, const Vector& pci) {
  auto net = space::proximity_matrix(d.m);
  net.pci = pci;
  return net;
}

// ---------------------------------------------------------------------------

struct Opts {
  std::string out = "out";
  std::string in;
  std::string indicators;
  int year = 0;
  std::uint64_t seed = 0;
  // gmm
  int n_max = 8;
  // model / calibrate / simulate
  int pop = 20, gens = 50;
  int n_products = 1000, cap_max = 100, block_size = 25;
  std::string mode = "constant";
  double kappa = 1000.0;
  int components = 8;  // 0: the AIC choice
  bool no_compare = false;
  std::string sweep_kappa, sweep_n;
  int n_total = 200;
  // infer
  std::string rho_grid = "1,0,-3,-9,-inf", nu_grid = "0.5,1,2,3,4";
  int restarts = 5, iters = 100;
  std::string countries;
  bool fixed_rho_nu = false;
  // regress
  std::string spec = "1,2,3,4,logit-rho,logit-nu";
  int start_year = 0, window = 18;
  std::string country_map;
};

void cmd_ingest(const Opts& o, Stage& st) {
  const auto d = load_trade(o.in, o.year);
  st.inputs.push_back(o.in);
  std::ostringstream ex, rca, spec;
  trade::write_trade_csv(ex, d.table);
  st.write("exports.csv", ex.str());
  io::write_matrix_csv(rca, {d.rca.countries, d.rca.products, d.rca.values});
  st.write("rca.csv", rca.str());
  io::write_matrix_csv(spec, {d.m.countries, d.m.products, d.m.m});
  st.write("specialization.csv", spec.str());
  std::ostringstream cache;
  io::write_matrix_cache(cache, d.m.m);
  st.write("specialization.cspc", cache.str());

  json j = {{"year", o.year},
            {"countries", d.table.countries.size()},
            {"products", d.table.products.size()},
            {"dropped_products", d.rca.dropped_products},
            {"pruned_countries", d.m.n_countries()},
            {"pruned_products", d.m.n_products()}};
  if (!o.indicators.empty()) {
    std::ifstream in(o.indicators);
    if (!in) throw ValidationError("cannot open indicator file " + o.indicators);
    auto t = trade::parse_indicators_csv(in);
    t.mark_joinable(d.table.countries);
    std::size_t joinable = 0;
    for (const auto& [code, rec] : t.records) joinable += rec.joinable;
    j["indicators"] = {{"countries", t.records.size()}, {"joinable", joinable}, {"skipped_unknown", t.skipped_unknown}};
    st.inputs.push_back(o.indicators);
  }
  st.write_json("ingest.json", j);
}

void cmd_complexity(const Opts& o, Stage& st) {
  const auto d = load_trade(o.in, o.year);
  st.inputs.push_back(o.in);
  const auto c = complexity_of(d, st);
  st.write("eci.csv", ranked_csv(d.m.countries, c.eci));
  st.write("pci.csv", ranked_csv(d.m.products, c.pci));
  st.write_json("complexity.json", {{"year", o.year},
                                    {"countries", d.m.n_countries()},
                                    {"products", d.m.n_products()},
                                    {"second_eigenvalue_countries", c.second_eigenvalue_c},
                                    {"second_eigenvalue_products", c.second_eigenvalue_p},
                                    {"third_eigenvalue_countries", c.third_eigenvalue_c},
                                    {"residual_countries", c.residual_c},
                                    {"residual_products", c.residual_p},
                                    {"iterations_countries", c.iterations_c},
                                    {"iterations_products", c.iterations_p},
                                    {"degenerate", c.degenerate},
                                    {"converged", c.converged},
                                    {"sign_orientation", "diversity_positive"},
                                    {"warnings", c.warnings}});
}

void cmd_product_space(const Opts& o, Stage& st) {
  const auto d = load_trade(o.in, o.year);
  st.inputs.push_back(o.in);
  const auto c = complexity_of(d, st);
  const auto net = empirical_network(d, c.pci);
  const std::uint64_t seed = derive_seed(o.seed, {kProductSpace});
  st.seeds["leiden"] = seed;
  const auto rep = space::network_report(net, c.pci, seed);
  const Vector cent = space::eigenvector_centrality(net);
  const Vector deg = space::degrees(net);

  std::string edges = "i,j,weight\n";
  for (Eigen::Index i = 0; i < net.size(); ++i)
    for (Eigen::Index j = i + 1; j < net.size(); ++j)
      if (net.phi(i, j) > 0)
        edges += d.m.products[static_cast<std::size_t>(i)] + "," + d.m.products[static_cast<std::size_t>(j)] + "," +
                 format_value(net.phi(i, j)) + "\n";
  st.write("network.csv", edges);
  std::string nodes = "code,pci,degree,centrality\n";
  for (Eigen::Index i = 0; i < net.size(); ++i)
    nodes += d.m.products[static_cast<std::size_t>(i)] + "," + format_value(c.pci(i)) + "," + format_value(deg(i)) +
             "," + format_value(cent(i)) + "\n";
  st.write("nodes.csv", nodes);
  json j = report_json(rep);
  j["year"] = o.year;
  st.write_json("report.json", j);
}

void cmd_gmm(const Opts& o, Stage& st) {
  if (o.n_max < 1) throw ValidationError("--n-max must be >= 1");
  const auto d = load_trade(o.in, o.year);
  st.inputs.push_back(o.in);
  const auto c = complexity_of(d, st);
  const std::uint64_t seed = derive_seed(o.seed, {kGmm});
  st.seeds["gmm"] = seed;
  const auto values = vec_std(c.pci);
  const auto sel = model::select_n_by_aic(values, o.n_max, seed);
  json fits = json::array();
  for (const auto& f : sel.fits) fits.push_back(to_json(f));
  const auto& best = sel.fits[static_cast<std::size_t>(sel.best_n - 1)];
  const auto ks = model::gmm_ks_test(best, values);
  st.write_json("gmm.json", {{"year", o.year},
                             {"n_values", values.size()},
                             {"n_max", o.n_max},
                             {"best_n", sel.best_n},
                             {"fits", fits},
                             {"ks", ks_json(ks)}});
}

model::GmmFit load_gmm(const fs::path& out, int components, int year, Stage& st) {
  const fs::path p = out / "gmm.json";
  require_artifact(p, "gmm");
  st.inputs.push_back(p);
  const json j = json::parse(read_file(p));
  if (year != 0 && j.at("year").get<int>() != year)
    throw ValidationError("gmm.json was fitted for year " + std::to_string(j.at("year").get<int>()) + ", not " +
                          std::to_string(year));
  const int n = components > 0 ? components : j.at("best_n").get<int>();
  for (const auto& f : j.at("fits"))
    if (f.at("n").get<int>() == n) return gmm_from_json(f);
  throw ValidationError("gmm.json has no " + std::to_string(n) + "-component fit");
}

calib::ModelConfig model_config(const Opts& o) {
  calib::ModelConfig mc;
  mc.n_products = o.n_products;
  mc.cap_max = o.cap_max;
  mc.block_size = o.block_size;
  mc.mode = parse_mode(o.mode);
  mc.kappa = o.kappa;
  return mc;
}

json model_json(const calib::ModelConfig& mc) {
  return {{"n_products", mc.n_products},
          {"cap_max", mc.cap_max},
          {"block_size", mc.block_size},
          {"mode", mode_name(mc.mode)},
          {"kappa", mc.kappa}};
}

json sweep_json(const std::vector<calib::SweepPoint>& pts) {
  json a = json::array();
  for (const auto& p : pts) {
    json e = {{"label", p.label}, {"params", to_json(p.params)}, {"ks_d", p.ks_d}};
    if (p.has_report) e["report"] = comparison_json(p.report);
    a.push_back(e);
  }
  return a;
}

void cmd_calibrate(const Opts& o, Stage& st) {
  const auto gmm = load_gmm(o.out, o.components, o.year, st);
  const auto d = load_trade(o.in, o.year);
  st.inputs.push_back(o.in);
  const auto c = complexity_of(d, st);
  const auto emp = empirical_network(d, c.pci);

  calib::CalibrationConfig cfg;
  cfg.cma.population = o.pop;
  cfg.cma.generations = o.gens;
  cfg.cma.seed = derive_seed(o.seed, {kCalibrate});
  cfg.model = model_config(o);
  cfg.compare = !o.no_compare;
  st.seeds["calibrate"] = cfg.cma.seed;
  const auto res = calib::calibrate_block_params(emp, gmm, cfg);

  json j = {{"year", o.year},
            {"model", model_json(cfg.model)},
            {"gmm_components", gmm.n},
            {"cma", {{"population", cfg.cma.population},
                     {"generations", cfg.cma.generations},
                     {"sigma0", res.sigma0},
                     {"seed", cfg.cma.seed},
                     {"evaluations", res.cma.evaluations},
                     {"best_generation", res.cma.best_generation},
                     {"best_index", res.cma.best_index},
                     {"final_sigma", res.cma.final_sigma}}},
            {"bounds", {{"lower", cfg.lower}, {"upper", cfg.upper}}},
            {"params", to_json(res.best)},
            {"weight_ks_d", res.best_d},
            {"trace", res.trace},
            {"repairs", res.repairs},
            {"log", res.log}};
  if (res.has_report) j["comparison"] = comparison_json(res.report);

  if (!o.sweep_kappa.empty()) {
    const std::uint64_t s = derive_seed(o.seed, {kCalibrate, 1});
    st.seeds["sweep_kappa"] = s;
    auto mc = cfg.model;
    mc.mode = model::SpaceMode::Beta;
    j["sweep_kappa"] = sweep_json(calib::sweep_kappa(emp, gmm, res.best, mc, parse_list(o.sweep_kappa), s, cfg.compare));
  }
  if (!o.sweep_n.empty()) {
    std::vector<int> ns;
    for (double v : parse_list(o.sweep_n)) {
      if (v < 1 || v != std::floor(v)) throw ValidationError("--sweep-n entries must be positive integers");
      ns.push_back(static_cast<int>(v));
    }
    auto cfg_n = cfg;
    cfg_n.initial = res.best;
    j["sweep_n"] = sweep_json(calib::sweep_components(emp, cfg_n, ns, o.n_total));
  }
  st.write_json("calibration.json", j);
}

void cmd_simulate(const Opts& o, Stage& st, const CLI::App& sub) {
  const auto gmm = load_gmm(o.out, o.components, 0, st);
  auto mc = model_config(o);
  model::BlockParams params;
  const fs::path cal = o.out / fs::path("calibration.json");
  if (fs::exists(cal)) {
    st.inputs.push_back(cal);
    const json j = json::parse(read_file(cal));
    params = params_from_json(j.at("params"));
    const json& m = j.at("model");
    // flags given on the command line win over the calibrated configuration
    if (sub.count("--n-products") == 0) mc.n_products = m.at("n_products").get<int>();
    if (sub.count("--cap-max") == 0) mc.cap_max = m.at("cap_max").get<int>();
    if (sub.count("--block-size") == 0) mc.block_size = m.at("block_size").get<int>();
    if (sub.count("--mode") == 0) mc.mode = parse_mode(m.at("mode").get<std::string>());
    if (sub.count("--kappa") == 0) mc.kappa = m.at("kappa").get<double>();
  } else {
    st.warnings.push_back("calibration.json not found; simulating at the default block parameters");
  }
  model::validate(params);
  const std::uint64_t seed = derive_seed(o.seed, {kSimulate});
  st.seeds["simulate"] = seed;
  // same derivation as the calibration objective
  const std::uint64_t s_space = derive_seed(seed, {0}), s_cat = derive_seed(seed, {1});
  const auto space =
      model::build_capability_space(gmm, gmm.data_mean, params, mc.block_size, mc.mode, mc.kappa, s_space);
  const auto cat = model::generate_catalog(space, gmm, mc.n_products, mc.cap_max, s_cat);

  json j = to_json(cat);
  j["model"] = model_json(mc);
  j["params"] = to_json(params);
  j["layout"] = to_json(space.layout);
  j["space_seed"] = s_space;
  j["catalog_seed"] = s_cat;
  st.write_json("catalog.json", j);

  std::vector<std::string> names;
  for (int a = 0; a < space.size(); ++a) names.push_back("a" + std::to_string(a));
  std::ostringstream sp;
  io::write_matrix_csv(sp, {names, names, space.phi});
  st.write("space.csv", sp.str());

  const auto net = model::simulated_product_space(cat, space);
  Vector pci(static_cast<Eigen::Index>(cat.size()));
  for (std::size_t i = 0; i < cat.size(); ++i) pci(static_cast<Eigen::Index>(i)) = cat.products[i].k_scaled;
  st.write_json("simulated_report.json", report_json(space::network_report(net, pci, derive_seed(seed, {2}))));
}

struct LoadedModel {
  model::CapabilitySpace space;
  model::ProductCatalog catalog;
};

LoadedModel load_model(const fs::path& out, Stage& st) {
  const fs::path cp = out / "catalog.json", sp = out / "space.csv";
  require_artifact(cp, "simulate");
  require_artifact(sp, "simulate");
  st.inputs.push_back(cp);
  st.inputs.push_back(sp);
  const json j = json::parse(read_file(cp));
  LoadedModel m;
  m.catalog = catalog_from_json(j);
  std::istringstream in(read_file(sp));
  m.space.phi = io::read_matrix_csv(in).values;
  m.space.layout = layout_from_json(j.at("layout"));
  m.space.params = params_from_json(j.at("params"));
  m.space.mode = parse_mode(j.at("model").at("mode").get<std::string>());
  m.space.kappa = j.at("model").at("kappa").get<double>();
  m.space.seed = j.value("space_seed", std::uint64_t{0});
  if (m.space.phi.rows() != m.space.layout.n_capabilities || m.space.phi.cols() != m.space.phi.rows())
    throw ValidationError("space.csv does not match the layout in catalog.json");
  return m;
}

void cmd_infer(const Opts& o, Stage& st) {
  const auto mdl = load_model(o.out, st);
  const auto d = load_trade(o.in, o.year);
  st.inputs.push_back(o.in);
  const auto c = complexity_of(d, st);

  infer::InferenceOptions opt;
  opt.rho_grid = parse_list(o.rho_grid);
  opt.nu_grid = parse_list(o.nu_grid);
  opt.schedule.restarts = o.restarts;
  opt.schedule.iterations = o.iters;
  opt.fit_rho_nu = !o.fixed_rho_nu;
  infer::validate(opt.schedule);
  const std::uint64_t root = derive_seed(o.seed, {kInfer});
  st.seeds["infer"] = root;
  st.seeds["per_country"] = "derive_seed(infer, {fnv1a(code)})";

  std::vector<std::size_t> rows;  // indices into d.m.countries
  if (o.countries.empty()) {
    rows.resize(d.m.countries.size());
    std::iota(rows.begin(), rows.end(), 0);
  } else {
    for (const auto& code : io::split_csv_line(o.countries)) {
      auto it = std::find(d.m.countries.begin(), d.m.countries.end(), code);
      if (it == d.m.countries.end()) throw ValidationError("country " + code + " has no specialization in " + std::to_string(o.year));
      rows.push_back(static_cast<std::size_t>(it - d.m.countries.begin()));
    }
  }
  std::vector<Eigen::Index> pcols;
  for (const auto& p : d.m.products) pcols.push_back(static_cast<Eigen::Index>(*d.table.product_index(p)));

  std::vector<infer::InferenceResult> res(rows.size());
  parallel_for(rows.size(), [&](std::size_t k) {
    const auto& code = d.m.countries[rows[k]];
    const auto ci = static_cast<Eigen::Index>(*d.table.country_index(code));
    Vector exports(static_cast<Eigen::Index>(pcols.size()));
    for (std::size_t p = 0; p < pcols.size(); ++p) exports(static_cast<Eigen::Index>(p)) = d.table.values(ci, pcols[p]);
    const Vector target = infer::target_vector(exports, c.pci, mdl.catalog);
    res[k] = infer::optimize_rho_nu(mdl.space, mdl.catalog, target, opt, derive_seed(root, {fnv1a(code)}));
  });

  std::string csv = "code,K0,K1,KL,clarity,rho,nu,warm_kl,kl_ratio,clarity_defined,k1_skipped\n";
  json caps = json::object();
  double sum_clarity = 0;
  int defined = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& code = d.m.countries[rows[k]];
    const auto& r = res[k];
    csv += code + "," + std::to_string(r.k0) + "," + format_value(r.k1) + "," + format_value(r.kl) + "," +
           format_value(r.clarity.clarity) + "," + format_value(r.rho) + "," + format_value(r.nu) + "," +
           format_value(r.warm_kl) + "," + format_value(r.clarity.ratio) + "," + (r.clarity.defined ? "1" : "0") +
           "," + std::to_string(r.k1_skipped) + "\n";
    caps[code] = r.set;
    if (r.clarity.defined) {
      sum_clarity += r.clarity.clarity;
      ++defined;
    }
  }
  st.write("inference.csv", csv);
  st.write_json("capabilities.json", caps);
  json grid = json::array();  // may hold -inf
  for (double r : opt.rho_grid) grid.push_back(number(r));
  st.write_json("inference.json", {{"year", o.year},
                                   {"countries", rows.size()},
                                   {"mean_clarity", defined ? sum_clarity / defined : 0.0},
                                   {"clarity_defined", defined},
                                   {"rho_grid", grid},
                                   {"nu_grid", opt.nu_grid},
                                   {"restarts", o.restarts},
                                   {"iterations", o.iters}});
}

json coef_rows(const std::vector<std::string>& names, const Vector& b, const Vector& se, const Vector& p) {
  json a = json::array();
  for (Eigen::Index i = 0; i < b.size(); ++i)
    a.push_back({{"term", names[static_cast<std::size_t>(i)]},
                 {"estimate", number(b(i))},
                 {"std_error", number(se(i))},
                 {"statistic", number(b(i) / se(i))},
                 {"p_value", number(p(i))},
                 {"stars", econ::stars(p(i))}});
  return a;
}

bool cmd_regress(const Opts& o, Stage& st) {
  if (o.window < 1) throw ValidationError("--window must be >= 1");
  std::vector<econ::Spec> specs;
  bool needs_inference = false;
  for (const auto& s : io::split_csv_line(o.spec)) {
    specs.push_back(econ::parse_spec(s));
    needs_inference = needs_inference || (specs.back() != econ::Spec::EciGdp && specs.back() != econ::Spec::EciAll);
  }
  const fs::path eci_p = o.out / fs::path("eci.csv"), inf_p = o.out / fs::path("inference.csv");
  require_artifact(eci_p, "complexity");
  if (needs_inference) require_artifact(inf_p, "infer");
  std::ifstream win(o.indicators);
  if (!win) throw ValidationError("cannot open indicator file " + o.indicators);
  const auto wdi = trade::parse_indicators_csv(win);
  st.inputs.push_back(o.indicators);
  st.inputs.push_back(eci_p);

  std::map<std::string, econ::PanelRow> panel;
  for (const auto& [code, v] : read_code_values(eci_p)) {
    panel[code].code = code;
    panel[code].eci = v;
  }
  if (needs_inference) {
    st.inputs.push_back(inf_p);
    for (const auto& r : read_table(inf_p)) {
      auto& row = panel[col(r, "code", inf_p)];
      row.code = col(r, "code", inf_p);
      row.k0 = parse_value(col(r, "K0", inf_p));
      row.k1 = parse_value(col(r, "K1", inf_p));
      row.rho = parse_value(col(r, "rho", inf_p));
      row.nu = parse_value(col(r, "nu", inf_p));
      if (std::isnan(*row.k1)) row.k1.reset();
    }
  }
  std::map<std::string, std::string> remap;
  if (!o.country_map.empty()) {
    remap = read_country_map(o.country_map);
    st.inputs.push_back(o.country_map);
  }
  using trade::Indicator;
  std::vector<econ::PanelRow> rows;
  for (auto& [trade_code, row] : panel) {
    const auto it = remap.find(trade_code);
    const std::string code = it == remap.end() ? trade_code : it->second;
    row.growth = wdi.growth_average(code, o.start_year, o.window);
    row.log_gdp = wdi.value(code, Indicator::LogGdpPerCapita, o.start_year);
    row.population = wdi.value(code, Indicator::Population, o.start_year);
    row.investment = wdi.value(code, Indicator::InvestmentGdp, o.start_year);
    row.exports = wdi.value(code, Indicator::ExportGdp, o.start_year);
    rows.push_back(row);
  }

  json out = json::array();
  std::string csv = "spec,term,estimate,std_error,statistic,p_value,stars\n";
  bool failed = false;
  for (auto s : specs) {
    json e = {{"spec", econ::spec_name(s)}};
    try {
      const auto rep = econ::growth_regression(rows, s);
      e["n"] = rep.ids.size();
      e["dropped"] = rep.dropped;
      e["countries"] = rep.ids;
      json v = json::object();
      for (Eigen::Index i = 0; i < rep.vif.size(); ++i) v[rep.vif_names[static_cast<std::size_t>(i)]] = number(rep.vif(i));
      e["vif"] = v;
      json coefs;
      if (rep.ols) {
        const auto& r = *rep.ols;
        coefs = coef_rows(r.names, r.beta, r.se, r.p);
        e["model"] = "ols_hc1";
        e["r2"] = r.r2;
        e["adj_r2"] = r.adj_r2;
        e["aic"] = number(r.aic);
      } else {
        const auto& r = *rep.logit;
        coefs = coef_rows(r.names, r.beta, r.beta_se, r.beta_p);
        for (Eigen::Index i = 0; i < r.thresholds.size(); ++i) {
          const double z = r.thresholds(i) / r.threshold_se(i);
          coefs.push_back({{"term", "cut" + std::to_string(i + 1)},
                           {"estimate", r.thresholds(i)},
                           {"std_error", number(r.threshold_se(i))},
                           {"statistic", number(z)},
                           {"p_value", number(econ::normal_p(z))},
                           {"stars", econ::stars(econ::normal_p(z))}});
        }
        e["model"] = "ordered_logit";
        e["pseudo_r2_mcfadden"] = r.pseudo_r2;
        e["lr_chi2"] = r.lr_chi2;
        e["lr_df"] = r.lr_df;
        e["lr_p"] = r.lr_p;
        e["aic"] = r.aic;
        e["log_likelihood"] = r.log_likelihood;
        e["iterations"] = r.iterations;
        e["category_codes"] = r.levels;
      }
      e["coefficients"] = coefs;
      for (const auto& c : coefs)
        csv += econ::spec_name(s) + "," + c["term"].get<std::string>() + "," + c["estimate"].dump() + "," +
               c["std_error"].dump() + "," + c["statistic"].dump() + "," + c["p_value"].dump() + "," +
               c["stars"].get<std::string>() + "\n";
    } catch (const NumericalError& ex) {
      e["error"] = ex.what();
      st.warnings.push_back("spec " + econ::spec_name(s) + ": " + ex.what());
      failed = true;
    }
    out.push_back(e);
  }
  st.write_json("regressions.json", {{"start_year", o.start_year}, {"window", o.window}, {"regressions", out}});
  st.write("regressions.csv", csv);
  return !failed;
}

void cmd_report(const Opts& o, Stage& st) {
  const fs::path nodes_p = o.out / fs::path("nodes.csv"), net_p = o.out / fs::path("network.csv");
  require_artifact(nodes_p, "product-space");
  require_artifact(net_p, "product-space");
  st.inputs.push_back(nodes_p);
  st.inputs.push_back(net_p);

  std::vector<std::string> codes;
  std::vector<double> pci, deg, cent;
  for (const auto& r : read_table(nodes_p)) {
    codes.push_back(col(r, "code", nodes_p));
    pci.push_back(parse_value(col(r, "pci", nodes_p)));
    deg.push_back(parse_value(col(r, "degree", nodes_p)));
    cent.push_back(parse_value(col(r, "centrality", nodes_p)));
  }
  std::map<std::string, Eigen::Index> idx;
  for (std::size_t i = 0; i < codes.size(); ++i) idx[codes[i]] = static_cast<Eigen::Index>(i);
  // order by PCI for the heatmap
  std::vector<Eigen::Index> order(codes.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pci[static_cast<std::size_t>(a)] < pci[static_cast<std::size_t>(b)]; });
  std::vector<Eigen::Index> pos(codes.size());
  for (std::size_t r = 0; r < order.size(); ++r) pos[static_cast<std::size_t>(order[r])] = static_cast<Eigen::Index>(r);

  const auto n = static_cast<Eigen::Index>(codes.size());
  Matrix phi = Matrix::Zero(n, n);
  std::vector<double> weights;
  {
    std::ifstream in(net_p);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      if (++lineno == 1 || line.empty()) continue;
      auto f = io::split_csv_line(line);
      if (f.size() != 3) throw ParseError(lineno, net_p.string() + ": expected i,j,weight");
      auto a = idx.find(f[0]), b = idx.find(f[1]);
      if (a == idx.end() || b == idx.end()) throw ParseError(lineno, net_p.string() + ": unknown node");
      const double w = parse_value(f[2]);
      weights.push_back(w);
      const auto pa = pos[static_cast<std::size_t>(a->second)], pb = pos[static_cast<std::size_t>(b->second)];
      phi(pa, pb) = phi(pb, pa) = w;
    }
  }
  std::string warn;
  auto emit = [&](const std::string& file, const std::string& svg) {
    st.write(file, svg);
    if (!warn.empty()) st.warnings.push_back(warn);
    warn.clear();
  };
  emit("weights_hist.svg", plots::histogram_svg(weights, "Proximity weights", "proximity", &warn));
  emit("degree_hist.svg", plots::histogram_svg(deg, "Degree", "degree", &warn));
  emit("centrality_hist.svg", plots::histogram_svg(cent, "Eigenvector centrality", "centrality", &warn));
  emit("heatmap.svg", plots::heatmap_svg(phi, "Product Space proximity, ordered by PCI", 200, &warn));

  const fs::path eci_p = o.out / fs::path("eci.csv"), inf_p = o.out / fs::path("inference.csv");
  if (fs::exists(eci_p) && fs::exists(inf_p)) {
    st.inputs.push_back(eci_p);
    st.inputs.push_back(inf_p);
    std::map<std::string, double> eci;
    for (const auto& [c, v] : read_code_values(eci_p)) eci[c] = v;
    std::vector<plots::Point> pts;
    for (const auto& r : read_table(inf_p)) {
      const auto it = eci.find(col(r, "code", inf_p));
      const double k1 = parse_value(col(r, "K1", inf_p));
      if (it != eci.end() && std::isfinite(k1)) pts.push_back({it->second, k1, ""});
    }
    emit("eci_k1_scatter.svg",
         plots::scatter_svg(pts, "ECI against average capability complexity", "ECI", "K1", &warn));
  } else {
    st.warnings.push_back("eci.csv or inference.csv missing; run 'complexity' and 'infer' for the ECI-K1 scatter");
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Opts o;
  CLI::App app{"capspace: capability-space economic complexity pipeline"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto add_out = [&](CLI::App* s) { s->add_option("--out", o.out, "output directory")->capture_default_str(); };
  auto add_trade = [&](CLI::App* s) {
    s->add_option("--in", o.in, "trade CSV (year,exporter,importer,product,value)")->required();
    s->add_option("--year", o.year, "trade year")->required();
  };
  auto add_seed = [&](CLI::App* s) { s->add_option("--seed", o.seed, "root seed")->required(); };
  auto add_model = [&](CLI::App* s) {
    s->add_option("--n-products", o.n_products)->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--cap-max", o.cap_max)->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--block-size", o.block_size)->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--mode", o.mode, "constant or beta")->capture_default_str()->check(CLI::IsMember({"constant", "beta"}));
    s->add_option("--kappa", o.kappa, "Beta concentration")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--components", o.components, "mixture size taken from gmm.json; 0 for the AIC choice")->capture_default_str();
  };

  auto* ingest = app.add_subcommand("ingest", "aggregate trade, RCA and the specialization matrix");
  add_trade(ingest);
  ingest->add_option("--indicators", o.indicators, "indicator CSV to validate and join");
  add_out(ingest);

  auto* cx = app.add_subcommand("complexity", "ECI and PCI");
  add_trade(cx);
  add_out(cx);

  auto* ps = app.add_subcommand("product-space", "proximity network and its statistics");
  add_trade(ps);
  add_seed(ps);
  add_out(ps);

  auto* gm = app.add_subcommand("gmm", "Gaussian mixture over PCI with AIC selection");
  add_trade(gm);
  add_seed(gm);
  gm->add_option("--n-max", o.n_max)->capture_default_str();
  add_out(gm);

  auto* cal = app.add_subcommand("calibrate", "CMA-ES fit of the block parameters");
  add_trade(cal);
  add_seed(cal);
  cal->add_option("--pop", o.pop)->capture_default_str()->check(CLI::Range(2, 100000));
  cal->add_option("--gens", o.gens)->capture_default_str()->check(CLI::Range(1, 100000));
  add_model(cal);
  cal->add_flag("--no-compare", o.no_compare, "skip the comparison report");
  cal->add_option("--sweep-kappa", o.sweep_kappa, "comma-separated kappas (Beta mode)");
  cal->add_option("--sweep-n", o.sweep_n, "comma-separated mixture sizes");
  cal->add_option("--n-total", o.n_total, "total capabilities kept fixed in the n sweep")->capture_default_str();
  add_out(cal);

  auto* sim = app.add_subcommand("simulate", "capability space and product catalog");
  add_seed(sim);
  add_model(sim);
  add_out(sim);

  auto* inf = app.add_subcommand("infer", "per-country capability sets, rho and nu");
  add_trade(inf);
  add_seed(inf);
  inf->add_option("--rho-grid", o.rho_grid)->capture_default_str();
  inf->add_option("--nu-grid", o.nu_grid)->capture_default_str();
  inf->add_option("--restarts", o.restarts)->capture_default_str()->check(CLI::PositiveNumber);
  inf->add_option("--iters", o.iters)->capture_default_str()->check(CLI::PositiveNumber);
  inf->add_option("--countries", o.countries, "comma-separated subset");
  inf->add_flag("--fixed-rho-nu", o.fixed_rho_nu, "rho = nu = 1, no grid");
  add_out(inf);

  auto* reg = app.add_subcommand("regress", "growth regressions and rho/nu ordered logits");
  reg->add_option("--indicators", o.indicators, "indicator CSV")->required();
  reg->add_option("--spec", o.spec, "1,2,3,4,logit-rho,logit-nu (comma-separated)")->capture_default_str();
  reg->add_option("--start-year", o.start_year)->required();
  reg->add_option("--window", o.window, "growth years after the start year")->capture_default_str();
  reg->add_option("--country-map", o.country_map, "CSV mapping trade country_code to indicator country_iso3");
  add_out(reg);

  auto* rep = app.add_subcommand("report", "SVG figures from stage outputs");
  add_out(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  Stage st;
  st.name = sub->get_name();
  st.out = o.out;
  for (const auto* opt : sub->get_options()) {
    if (opt->get_name() == "--help" || opt->count() == 0) continue;
    const auto r = opt->results();
    st.config[opt->get_name()] = r.size() == 1 ? json(r[0]) : json(r);
  }
  try {
    fs::create_directories(st.out);
    bool ok = true;
    if (st.name == "ingest") cmd_ingest(o, st);
    else if (st.name == "complexity") cmd_complexity(o, st);
    else if (st.name == "product-space") cmd_product_space(o, st);
    else if (st.name == "gmm") cmd_gmm(o, st);
    else if (st.name == "calibrate") cmd_calibrate(o, st);
    else if (st.name == "simulate") cmd_simulate(o, st, *sub);
    else if (st.name == "infer") cmd_infer(o, st);
    else if (st.name == "regress") ok = cmd_regress(o, st);
    else if (st.name == "report") cmd_report(o, st);
    st.finish(err);
    for (const auto& f : st.outputs) out << (st.out / f).string() << "\n";
    return ok ? 0 : 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    err << "error: malformed artifact: " << e.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace capspace::cli
