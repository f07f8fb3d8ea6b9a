#include "doctest.h"

#include "capspace/calibrate.hpp"

#include <algorithm>
#include <cmath>

using namespace capspace;
using namespace capspace::calib;

namespace {

model::GmmFit toy_gmm() {
  model::GmmFit g;
  g.n = 2;
  g.weights = {0.6, 0.4};
  g.means = {-1.0, 1.5};
  g.sds = {0.5, 0.5};
  g.data_min = -2.5;
  g.data_max = 3.0;
  g.data_mean = 0.0;
  return g;
}

Vector filled(double v) { return Vector::Constant(6, v); }

}  // namespace

TEST_CASE("CMA-ES on the 6-D sphere") {
  auto f = [](const Vector& x, int, int) { return (x.array() - 0.5).square().sum(); };
  auto r = cma_es(f, filled(0.0), filled(1.0), filled(0.15), {20, 50, 0.3, 7});
  CHECK((r.best_x.array() - 0.5).abs().maxCoeff() < 1e-3);
  CHECK(r.trace.size() == 51);
  CHECK(r.evaluations == 1 + 20 * 50);
  for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1]);
}

TEST_CASE("CMA-ES with a constant objective keeps the start") {
  auto f = [](const Vector&, int, int) { return 3.0; };
  const Vector x0 = filled(0.3);
  auto r = cma_es(f, filled(0.0), filled(1.0), x0, {20, 10, 0.3, 1});
  CHECK(r.best_x == x0);
  for (double t : r.trace) CHECK(t == 3.0);
  CHECK(r.best_generation == 0);
}

TEST_CASE("CMA-ES reaches a corner through clipping") {
  auto f = [](const Vector& x, int, int) { return (x.array() - 1.0).matrix().norm(); };
  auto r = cma_es(f, filled(0.0), filled(1.0), filled(0.5), {20, 50, 0.3, 3});
  CHECK((r.best_x.array() - 1.0).abs().maxCoeff() < 1e-2);
  CHECK(r.best_x.maxCoeff() <= 1.0);
}

TEST_CASE("CMA-ES ranks non-finite values last") {
  auto f = [](const Vector& x, int, int) {
    if (x(0) > 0.6) return std::nan("");
    return (x.array() - 0.5).square().sum();
  };
  auto r = cma_es(f, filled(0.0), filled(1.0), filled(0.2), {20, 30, 0.3, 5});
  CHECK(std::isfinite(r.best_f));
  CHECK(r.best_x(0) <= 0.6);
  CHECK(r.best_f < 1e-3);
}

TEST_CASE("CMA-ES is deterministic for a seed") {
  auto f = [](const Vector& x, int, int) { return (x.array() - 0.3).abs().sum(); };
  auto a = cma_es(f, filled(0.0), filled(1.0), filled(0.9), {20, 20, 0.3, 11});
  auto b = cma_es(f, filled(0.0), filled(1.0), filled(0.9), {20, 20, 0.3, 11});
  CHECK(a.best_x == b.best_x);
  CHECK(a.trace == b.trace);
  auto c = cma_es(f, filled(0.0), filled(1.0), filled(0.9), {20, 20, 0.3, 12});
  CHECK(c.best_x != a.best_x);
}

TEST_CASE("CMA-ES rejects bad bounds") {
  auto f = [](const Vector&, int, int) { return 0.0; };
  CHECK_THROWS_AS(cma_es(f, filled(1.0), filled(0.0), filled(0.5)), ValidationError);
  CHECK_THROWS_AS(cma_es(f, filled(0.0), filled(1.0), filled(1.5)), ValidationError);
  CHECK_THROWS_AS(cma_es(f, filled(0.0), filled(1.0), filled(0.5), {1, 5, 0.3, 1}), ValidationError);
}

TEST_CASE("repair swaps out-of-order pairs") {
  model::BlockParams p{0.9, 0.05, 0.05, 0.8, 0.1, 0.05};
  CHECK(repair(p) == 2);
  CHECK(p.pb == 0.05);
  CHECK(p.pw == 0.9);
  CHECK(p.cb == 0.1);
  CHECK(p.cw == 0.8);
  CHECK(repair(p) == 0);
}

TEST_CASE("calibration config validation") {
  CalibrationConfig c;
  CHECK_NOTHROW(validate(c));
  c.initial.pb = 0.5;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = {};
  c.lower[1] = 0.99;
  c.upper[1] = 0.8;
  CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("weight KS distance of a network against itself") {
  ModelConfig mc;
  mc.n_products = 60;
  mc.cap_max = 20;
  mc.block_size = 10;
  auto net = simulate_network(toy_gmm(), {}, mc, 4);
  auto w = space::edge_weights(net);
  std::sort(w.begin(), w.end());
  CHECK(weight_ks_distance(w, net) == 0.0);
  auto other = simulate_network(toy_gmm(), {0.01, 0.99, 0.01, 0.01, 0.99, 0.01}, mc, 4);
  CHECK(weight_ks_distance(w, other) > 0.0);
}

TEST_CASE("comparison report keeps the empirical zero share") {
  ModelConfig mc;
  mc.n_products = 80;
  mc.cap_max = 20;
  mc.block_size = 10;
  auto emp = simulate_network(toy_gmm(), {}, mc, 9);
  // knock out a quarter of the empirical pairs
  int removed = 0, pairs = 0;
  for (Eigen::Index i = 0; i < emp.size(); ++i)
    for (Eigen::Index j = i + 1; j < emp.size(); ++j, ++pairs)
      if ((i + j) % 4 == 0) {
        emp.phi(i, j) = emp.phi(j, i) = 0.0;
        ++removed;
      }
  auto sim = simulate_network(toy_gmm(), {}, mc, 10);
  auto r = compare_networks(emp, sim, 1);
  CHECK(r.dropped_fraction == doctest::Approx(static_cast<double>(removed) / pairs).epsilon(1e-3));
  CHECK(r.simulated.density == doctest::Approx(r.empirical.density).epsilon(1e-3));
  CHECK(r.weight_ks.d >= 0.0);
  CHECK(r.weight_ks.d <= 1.0);
}

TEST_CASE("small self-calibration improves on the start") {
  CalibrationConfig cfg;
  cfg.model.n_products = 80;
  cfg.model.cap_max = 20;
  cfg.model.block_size = 10;
  cfg.cma = {10, 6, 0.3, 21};
  cfg.compare = false;
  const model::BlockParams truth{0.09, 0.82, 0.02, 0.015, 0.97, 0.08};
  auto emp = simulate_network(toy_gmm(), truth, cfg.model, 99);
  auto a = calibrate_block_params(emp, toy_gmm(), cfg);
  CHECK(a.trace.size() == 7);
  CHECK(a.best_d <= a.trace.front());
  CHECK(a.best_d == a.trace.back());
  CHECK_NOTHROW(model::validate(a.best));
  auto b = calibrate_block_params(emp, toy_gmm(), cfg);
  CHECK(a.best.to_array() == b.best.to_array());
  CHECK(a.best_d == b.best_d);
}

TEST_CASE("kappa sweep") {
  ModelConfig mc;
  mc.n_products = 50;
  mc.cap_max = 20;
  mc.block_size = 10;
  auto emp = simulate_network(toy_gmm(), {}, mc, 2);
  auto pts = sweep_kappa(emp, toy_gmm(), {}, mc, {200, 1000}, 5, false);
  REQUIRE(pts.size() == 2);
  CHECK(pts[0].label.rfind("kappa=200", 0) == 0);
  CHECK(pts[1].ks_d >= 0.0);
  CHECK(pts[1].ks_d <= 1.0);
}
