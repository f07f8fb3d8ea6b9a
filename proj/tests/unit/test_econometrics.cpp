#include "doctest.h"

#include "capspace/econometrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace capspace;
using namespace capspace::econ;

namespace {

Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

double logit(double p) { return std::log(p / (1 - p)); }

}  // namespace

TEST_CASE("OLS exact fit") {
  Matrix x(5, 2);
  x << 0, 1, 1, 0, 2, 3, 3, 1, 4, 4;
  Vector y = 1.5 + 2.0 * x.col(0).array() - 0.5 * x.col(1).array();
  auto r = ols_hc1(make_design({}, {"a", "b"}, x, y));
  CHECK(r.beta(0) == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(r.beta(1) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(r.beta(2) == doctest::Approx(-0.5).epsilon(1e-10));
  CHECK(r.r2 == doctest::Approx(1.0));
  CHECK(r.se.maxCoeff() < 1e-6);
}

TEST_CASE("HC1 sandwich on three points matches the hand computation") {
  // X'X = [[3,3],[3,5]], e = (1/6, -1/3, 1/6), V = 3 (X'X)^-1 meat (X'X)^-1
  auto r = ols_hc1(make_design({}, {"x"}, col({0, 1, 2}), vec({0, 1, 3})));
  CHECK(std::abs(r.beta(0) + 1.0 / 6) < 1e-12);
  CHECK(std::abs(r.beta(1) - 1.5) < 1e-12);
  CHECK(std::abs(r.cov(0, 0) - 7.0 / 72) < 1e-10);
  CHECK(std::abs(r.cov(1, 1) - 1.0 / 24) < 1e-10);
  CHECK(std::abs(r.cov(0, 1) + 1.0 / 24) < 1e-10);
  CHECK(std::abs(r.se(1) - std::sqrt(1.0 / 24)) < 1e-10);
  // r2 = 1 - (1/6) / (14/3)
  CHECK(std::abs(r.r2 - (1 - 1.0 / 28)) < 1e-12);
}

TEST_CASE("OLS residuals are orthogonal to the design; AIC and adjusted R2 follow their formulas") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  const int n = 80;
  Matrix x(n, 3);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = nd(rng);
    y(i) = 0.3 + x(i, 0) - 0.5 * x(i, 2) + nd(rng) * (1 + std::abs(x(i, 1)));
  }
  auto d = make_design({}, {"a", "b", "c"}, x, y);
  auto r = ols_hc1(d);
  CHECK((d.x.transpose() * r.residuals).cwiseAbs().maxCoeff() < 1e-9);
  const double ssr = r.residuals.squaredNorm();
  const double ll = -n / 2.0 * (std::log(2 * M_PI) + std::log(ssr / n) + 1);
  CHECK(r.aic == doctest::Approx(2 * 4 - 2 * ll));
  CHECK(r.adj_r2 == doctest::Approx(1 - (1 - r.r2) * (n - 1) / (n - 4.0)));
  CHECK(std::isfinite(r.aic));
  for (int j = 0; j < 4; ++j) CHECK(r.se(j) > 0);
}

TEST_CASE("HC1 equals the classical variance for an intercept-only model") {
  Vector y = vec({1, 4, 2, 8, 5, 7});
  Matrix none(6, 0);
  auto r = ols_hc1(make_design({}, {}, none, y));
  const double s2 = (y.array() - y.mean()).square().sum() / 5;
  CHECK(r.cov(0, 0) == doctest::Approx(s2 / 6));
}

TEST_CASE("constant-magnitude residuals: HC1 SE is the ML-variance SE scaled by sqrt(n/(n-k))") {
  // x = (0,0,1,1), e = (1,-1,1,-1) is orthogonal to [1 x]
  Vector e = vec({1, -1, 1, -1});
  Matrix x = col({0, 0, 1, 1});
  Vector y = 2.0 + 3.0 * x.col(0).array() + e.array();
  auto d = make_design({}, {"x"}, x, y);
  auto r = ols_hc1(d);
  CHECK((r.residuals - e).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix inv = (d.x.transpose() * d.x).inverse();
  const double sigma2_ml = e.squaredNorm() / 4;
  for (int j = 0; j < 2; ++j)
    CHECK(r.se(j) == doctest::Approx(std::sqrt(sigma2_ml * inv(j, j)) * std::sqrt(4.0 / 2.0)).epsilon(1e-12));
}

TEST_CASE("rank deficient design names the collinear column") {
  Matrix x(6, 2);
  x << 1, 2, 2, 4, 3, 6, 4, 8, 5, 10, 6, 12;
  try {
    ols_hc1(make_design({}, {"alpha", "beta"}, x, vec({1, 2, 1, 3, 2, 4})));
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("collinear") != std::string::npos);
    CHECK((msg.find("alpha") != std::string::npos || msg.find("beta") != std::string::npos));
  }
}

TEST_CASE("VIF") {
  SUBCASE("orthogonal columns give 1") {
    Matrix x(4, 2);
    x << 1, 1, -1, 1, 1, -1, -1, -1;
    auto v = vif(make_design({}, {"a", "b"}, x, Vector::Zero(4)));
    CHECK(v(0) == doctest::Approx(1.0));
    CHECK(v(1) == doctest::Approx(1.0));
  }
  SUBCASE("two columns with correlation r give 1/(1-r^2)") {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> nd;
    Matrix x(200, 2);
    for (int i = 0; i < 200; ++i) {
      x(i, 0) = nd(rng);
      x(i, 1) = 0.7 * x(i, 0) + nd(rng);
    }
    const Vector a = x.col(0).array() - x.col(0).mean();
    const Vector b = x.col(1).array() - x.col(1).mean();
    const double r = a.dot(b) / (a.norm() * b.norm());
    auto v = vif(make_design({}, {"a", "b"}, x, Vector::Zero(200)));
    CHECK(v(0) == doctest::Approx(1 / (1 - r * r)));
    CHECK(v(1) == doctest::Approx(1 / (1 - r * r)));
  }
  SUBCASE("near duplicate column is far above 10") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    Matrix x(100, 2);
    for (int i = 0; i < 100; ++i) {
      x(i, 0) = nd(rng);
      x(i, 1) = x(i, 0) + 0.01 * nd(rng);
    }
    auto v = vif(make_design({}, {"a", "b"}, x, Vector::Zero(100)));
    CHECK(v(0) > 1000);
    CHECK(v(1) > 1000);
  }
  SUBCASE("perfect collinearity is infinite") {
    Matrix x(5, 3);
    x << 1, 0, 1, 2, 1, 3, 3, 0, 3, 4, 2, 6, 5, 1, 6;
    auto v = vif(make_design({}, {"a", "b", "c"}, x, Vector::Zero(5)));
    CHECK(std::isinf(v(2)));
  }
}

TEST_CASE("stars thresholds") {
  CHECK(stars(0.009) == "***");
  CHECK(stars(0.049) == "**");
  CHECK(stars(0.09) == "*");
  CHECK(stars(0.2) == "");
  CHECK(normal_p(1.959963984540054) == doctest::Approx(0.05));
}

TEST_CASE("ordered logit with one binary predictor and two categories has a closed form") {
  // x=0: 30 low, 10 high; x=1: 12 low, 28 high
  Matrix x(80, 1);
  std::vector<int> y;
  for (int i = 0; i < 80; ++i) {
    const bool x1 = i >= 40;
    x(i, 0) = x1;
    const int j = x1 ? i - 40 : i;
    y.push_back(x1 ? (j < 12 ? 0 : 1) : (j < 30 ? 0 : 1));
  }
  auto r = ordered_logit(x, {"x"}, y);
  const double tau = logit(30.0 / 40);
  const double beta = tau - logit(12.0 / 40);
  CHECK(std::abs(r.thresholds(0) - tau) < 1e-6);
  CHECK(std::abs(r.beta(0) - beta) < 1e-6);
  const double ll = 30 * std::log(0.75) + 10 * std::log(0.25) + 12 * std::log(0.3) + 28 * std::log(0.7);
  CHECK(std::abs(r.log_likelihood - ll) < 1e-8);
  CHECK(r.null_log_likelihood == doctest::Approx(42 * std::log(42.0 / 80) + 38 * std::log(38.0 / 80)));
  CHECK(r.pseudo_r2 == doctest::Approx(1 - ll / r.null_log_likelihood));
  CHECK(r.aic == doctest::Approx(4 - 2 * ll));
  for (std::size_t i = 1; i < r.ll_trace.size(); ++i) CHECK(r.ll_trace[i] >= r.ll_trace[i - 1]);
}

TEST_CASE("ordered logit recovers simulated parameters with ordered thresholds") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> u;
  const int n = 3000;
  Matrix x(n, 2);
  std::vector<int> y(n);
  const double cuts[] = {-1.0, 0.5, 2.0};
  for (int i = 0; i < n; ++i) {
    x(i, 0) = nd(rng);
    x(i, 1) = nd(rng);
    const double latent = 1.0 * x(i, 0) - 0.5 * x(i, 1) + std::log(1 / u(rng) - 1) * -1;
    int c = 0;
    while (c < 3 && latent > cuts[c]) ++c;
    y[i] = 10 * c;  // codes need not be contiguous
  }
  auto r = ordered_logit(x, {"a", "b"}, y);
  CHECK(r.levels.size() == 4);
  CHECK(r.beta(0) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(r.beta(1) == doctest::Approx(-0.5).epsilon(0.15));
  for (int j = 0; j < 3; ++j) CHECK(std::abs(r.thresholds(j) - cuts[j]) < 0.15);
  for (int j = 1; j < 3; ++j) CHECK(r.thresholds(j) > r.thresholds(j - 1));
  CHECK(r.beta_p(0) < 0.01);
  CHECK(r.lr_chi2 > 0);
  CHECK(r.lr_df == 2);
  CHECK(r.beta_se.minCoeff() > 0);
}

TEST_CASE("ordered logit on independent data has small pseudo-R2 and rarely a significant LR test") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> cat(0, 3);
  int insignificant = 0;
  double worst_r2 = 0;
  for (int s = 0; s < 100; ++s) {
    Matrix x(500, 2);
    std::vector<int> y(500);
    for (int i = 0; i < 500; ++i) {
      x(i, 0) = nd(rng);
      x(i, 1) = nd(rng);
      y[i] = cat(rng);
    }
    auto r = ordered_logit(x, {"a", "b"}, y);
    worst_r2 = std::max(worst_r2, r.pseudo_r2);
    insignificant += r.lr_p >= 0.05;
  }
  CHECK(worst_r2 < 0.02);
  CHECK(insignificant >= 90);
}

TEST_CASE("perfect separation is a non-convergence error") {
  Matrix x(20, 1);
  std::vector<int> y(20);
  for (int i = 0; i < 20; ++i) {
    x(i, 0) = i;
    y[i] = i >= 10;
  }
  CHECK_THROWS_AS(ordered_logit(x, {"x"}, y), NumericalError);
}

TEST_CASE("null OLS rejects at about the nominal rate") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd;
  int rejections = 0;
  const int sims = 400, n = 150;
  for (int s = 0; s < sims; ++s) {
    Matrix x(n, 1);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = nd(rng);
      y(i) = nd(rng);
    }
    rejections += ols_hc1(make_design({}, {"x"}, x, y)).p(1) < 0.05;
  }
  const double rate = static_cast<double>(rejections) / sims;
  CHECK(rate > 0.02);
  CHECK(rate < 0.09);
}

TEST_CASE("shuffled growth leaves the complexity coefficient insignificant") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  std::vector<PanelRow> panel(120);
  for (std::size_t i = 0; i < panel.size(); ++i) {
    auto& r = panel[i];
    r.code = "C" + std::to_string(i);
    r.eci = nd(rng);
    r.log_gdp = 8 + 0.8 * *r.eci + nd(rng);
    r.growth = 2.0 + 1.5 * *r.eci - 0.5 * (*r.log_gdp - 8) + nd(rng);
  }
  auto base = growth_regression(panel, Spec::EciGdp);
  CHECK(base.ols->p(1) < 0.01);

  std::vector<double> g;
  for (auto& r : panel) g.push_back(*r.growth);
  int insignificant = 0;
  for (int s = 0; s < 100; ++s) {
    std::shuffle(g.begin(), g.end(), rng);
    for (std::size_t i = 0; i < panel.size(); ++i) panel[i].growth = g[i];
    insignificant += growth_regression(panel, Spec::EciGdp).ols->p(1) >= 0.05;
  }
  CHECK(insignificant >= 90);
}

TEST_CASE("growth regression drops incomplete rows and runs each spec") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> nd;
  std::uniform_int_distribution<int> cat(0, 4);
  const double rhos[] = {-std::numeric_limits<double>::infinity(), -9, -3, 0, 1};
  const double nus[] = {0.5, 1, 2, 3, 4};
  std::vector<PanelRow> panel(150);
  for (std::size_t i = 0; i < panel.size(); ++i) {
    auto& r = panel[i];
    r.code = "C" + std::to_string(i);
    r.eci = nd(rng);
    r.k1 = nd(rng);
    r.log_gdp = 8 + nd(rng);
    r.population = std::exp(nd(rng));
    r.investment = 20 + 3 * nd(rng);
    r.exports = 30 + 5 * nd(rng);
    r.growth = nd(rng);
    r.rho = rhos[cat(rng)];
    r.nu = nus[cat(rng)];
  }
  panel[3].investment.reset();
  panel[7].growth.reset();

  auto s1 = growth_regression(panel, Spec::EciGdp);
  CHECK(s1.dropped == 1);
  CHECK(s1.ols->names == std::vector<std::string>{"const", "eci", "log_gdp_per_capita"});
  auto s4 = growth_regression(panel, Spec::K1All);
  CHECK(s4.dropped == 2);
  CHECK(s4.ols->k == 6);
  CHECK(s4.vif.size() == 5);
  CHECK(std::find(s4.ids.begin(), s4.ids.end(), "C3") == s4.ids.end());

  auto lr = growth_regression(panel, Spec::LogitRho);
  CHECK(lr.dropped == 1);
  CHECK(lr.logit->beta.size() == 7);
  CHECK(lr.logit->thresholds.size() == 4);
  auto ln = growth_regression(panel, Spec::LogitNu);
  CHECK(ln.logit->levels == std::vector<int>{0, 1, 2, 3, 4});

  CHECK(parse_spec("logit-nu") == Spec::LogitNu);
  CHECK_THROWS_AS(parse_spec("7"), ValidationError);
  panel[0].rho = 2.5;
  CHECK_THROWS_AS(growth_regression(panel, Spec::LogitRho), ValidationError);
}
