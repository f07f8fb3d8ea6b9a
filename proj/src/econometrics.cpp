#include "capspace/econometrics.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace capspace::econ {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

double logistic(double x) { return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

}  // namespace

bool DesignMatrix::has_intercept() const { return std::find(names.begin(), names.end(), "const") != names.end(); }

DesignMatrix make_design(std::vector<std::string> ids, std::vector<std::string> names, const Matrix& columns,
                         const Vector& y, bool intercept) {
  if (columns.rows() != y.size()) throw ValidationError("design rows and response length differ");
  if (static_cast<Eigen::Index>(names.size()) != columns.cols()) throw ValidationError("one name per column required");
  if (!ids.empty() && static_cast<Eigen::Index>(ids.size()) != y.size()) throw ValidationError("one id per row required");
  DesignMatrix d;
  d.ids = std::move(ids);
  d.y = y;
  if (intercept) {
    d.x.resize(columns.rows(), columns.cols() + 1);
    d.x.col(0).setOnes();
    d.x.rightCols(columns.cols()) = columns;
    d.names.push_back("const");
  } else {
    d.x = columns;
  }
  for (auto& n : names) d.names.push_back(std::move(n));
  return d;
}

double normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::string stars(double p) {
  if (p < 0.01) return "***";
  if (p < 0.05) return "**";
  if (p < 0.1) return "*";
  return "";
}

OlsResult ols_hc1(const DesignMatrix& d) {
  const Eigen::Index n = d.x.rows();
  const Eigen::Index k = d.x.cols();
  if (n <= k) throw ValidationError("OLS needs more observations than columns");
  if (!d.x.allFinite() || !d.y.allFinite()) throw ValidationError("OLS input contains missing or non-finite values");

  Eigen::ColPivHouseholderQR<Matrix> qr(d.x);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    // the pivots past the rank are the columns explained by the others
    std::string cols;
    for (Eigen::Index j = qr.rank(); j < k; ++j) {
      if (!cols.empty()) cols += ", ";
      cols += d.names[static_cast<std::size_t>(qr.colsPermutation().indices()(j))];
    }
    throw ValidationError("design matrix is rank deficient; collinear columns: " + cols);
  }
  OlsResult r;
  r.names = d.names;
  r.n = static_cast<int>(n);
  r.k = static_cast<int>(k);
  r.beta = qr.solve(d.y);
  r.residuals = d.y - d.x * r.beta;

  const Matrix xtx_inv = (d.x.transpose() * d.x).inverse();
  const Matrix meat = d.x.transpose() * r.residuals.array().square().matrix().asDiagonal() * d.x;
  r.cov = static_cast<double>(n) / static_cast<double>(n - k) * xtx_inv * meat * xtx_inv;
  r.se = r.cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.z = r.beta.cwiseQuotient(r.se);
  r.p.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) r.p(j) = r.se(j) > 0.0 ? normal_p(r.z(j)) : 0.0;

  const double ssr = r.residuals.squaredNorm();
  const double sst = d.has_intercept() ? (d.y.array() - d.y.mean()).matrix().squaredNorm() : d.y.squaredNorm();
  r.r2 = sst > 0.0 ? 1.0 - ssr / sst : 0.0;
  const double dfm = static_cast<double>(d.has_intercept() ? k - 1 : k);
  const double denom = static_cast<double>(n) - (d.has_intercept() ? 1.0 : 0.0);
  r.adj_r2 = 1.0 - (1.0 - r.r2) * denom / (static_cast<double>(n) - dfm - (d.has_intercept() ? 1.0 : 0.0));
  const double nn = static_cast<double>(n);
  r.log_likelihood = -0.5 * nn * (kLog2Pi + std::log(ssr / nn) + 1.0);
  r.aic = 2.0 * static_cast<double>(k) - 2.0 * r.log_likelihood;
  return r;
}

Vector vif(const DesignMatrix& d) {
  std::vector<Eigen::Index> pred;
  for (Eigen::Index j = 0; j < d.x.cols(); ++j)
    if (d.names[static_cast<std::size_t>(j)] != "const") pred.push_back(j);
  if (pred.size() < 2) throw ValidationError("VIF needs at least 2 predictors");
  const bool icpt = d.has_intercept();
  Vector out(static_cast<Eigen::Index>(pred.size()));
  for (std::size_t a = 0; a < pred.size(); ++a) {
    const Vector yj = d.x.col(pred[a]);
    Matrix others(d.x.rows(), static_cast<Eigen::Index>(pred.size()) - 1 + (icpt ? 1 : 0));
    Eigen::Index c = 0;
    if (icpt) others.col(c++).setOnes();
    for (std::size_t b = 0; b < pred.size(); ++b)
      if (b != a) others.col(c++) = d.x.col(pred[b]);
    Eigen::ColPivHouseholderQR<Matrix> qr(others);
    const Vector e = yj - others * qr.solve(yj);
    const double sst = icpt ? (yj.array() - yj.mean()).matrix().squaredNorm() : yj.squaredNorm();
    const double r2 = sst > 0.0 ? 1.0 - e.squaredNorm() / sst : 1.0;
    out(static_cast<Eigen::Index>(a)) =
        r2 >= 1.0 - 1e-12 ? std::numeric_limits<double>::infinity() : 1.0 / (1.0 - r2);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ordered logit

namespace {

struct LogitEval {
  double ll = 0.0;
  Vector grad;  // natural parameters (beta, tau)
  Matrix hess;
  Matrix scores;  // n x p per-observation gradients
  double min_p = 1.0;
};

// P(y = j) = F(tau_j - eta) - F(tau_{j-1} - eta), tau_0 = -inf, tau_J = +inf.
LogitEval evaluate(const Matrix& x, const std::vector<int>& y, const Vector& beta, const Vector& tau, bool want_scores) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  const Eigen::Index m = tau.size();
  const Eigen::Index p = k + m;
  LogitEval e;
  e.grad = Vector::Zero(p);
  e.hess = Matrix::Zero(p, p);
  if (want_scores) e.scores = Matrix::Zero(n, p);
  const Vector eta = x * beta;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int j = y[static_cast<std::size_t>(i)];
    const bool top = j < m;   // upper cut tau_j exists
    const bool bot = j > 0;   // lower cut tau_{j-1} exists
    const double a = top ? tau(j) - eta(i) : 0.0;
    const double b = bot ? tau(j - 1) - eta(i) : 0.0;
    const double fa_cdf = top ? logistic(a) : 1.0;
    const double fb_cdf = bot ? logistic(b) : 0.0;
    double prob;
    if (bot && b > 0.0) prob = (top ? logistic(-b) - logistic(-a) : logistic(-b));
    else prob = fa_cdf - fb_cdf;
    prob = std::max(prob, 1e-300);
    e.min_p = std::min(e.min_p, prob);
    const double fa = top ? fa_cdf * (1.0 - fa_cdf) : 0.0;
    const double fb = bot ? fb_cdf * (1.0 - fb_cdf) : 0.0;
    const double dfa = top ? fa * (1.0 - 2.0 * fa_cdf) : 0.0;
    const double dfb = bot ? fb * (1.0 - 2.0 * fb_cdf) : 0.0;
    e.ll += std::log(prob);

    // derivatives with respect to eta, tau_j, tau_{j-1}
    const double g_eta = -(fa - fb) / prob;
    const double g_a = fa / prob;
    const double g_b = -fb / prob;
    const double h_ee = (dfa - dfb) / prob - (fa - fb) * (fa - fb) / (prob * prob);
    const double h_aa = dfa / prob - fa * fa / (prob * prob);
    const double h_bb = -dfb / prob - fb * fb / (prob * prob);
    const double h_ab = fa * fb / (prob * prob);
    const double h_ea = -dfa / prob + fa * (fa - fb) / (prob * prob);
    const double h_eb = dfb / prob - fb * (fa - fb) / (prob * prob);

    const Vector xi = x.row(i).transpose();
    e.grad.head(k) += g_eta * xi;
    e.hess.topLeftCorner(k, k) += h_ee * xi * xi.transpose();
    if (top) {
      e.grad(k + j) += g_a;
      e.hess(k + j, k + j) += h_aa;
      e.hess.block(0, k + j, k, 1) += h_ea * xi;
      e.hess.block(k + j, 0, 1, k) += h_ea * xi.transpose();
    }
    if (bot) {
      e.grad(k + j - 1) += g_b;
      e.hess(k + j - 1, k + j - 1) += h_bb;
      e.hess.block(0, k + j - 1, k, 1) += h_eb * xi;
      e.hess.block(k + j - 1, 0, 1, k) += h_eb * xi.transpose();
    }
    if (top && bot) {
      e.hess(k + j, k + j - 1) += h_ab;
      e.hess(k + j - 1, k + j) += h_ab;
    }
    if (want_scores) {
      e.scores.row(i).head(k) = g_eta * xi.transpose();
      if (top) e.scores(i, k + j) = g_a;
      if (bot) e.scores(i, k + j - 1) = g_b;
    }
  }
  return e;
}

// theta = (beta, tau_1, log(tau_2 - tau_1), ...)
Vector to_tau(const Vector& th, Eigen::Index k, Eigen::Index m) {
  Vector tau(m);
  tau(0) = th(k);
  for (Eigen::Index j = 1; j < m; ++j) tau(j) = tau(j - 1) + std::exp(th(k + j));
  return tau;
}

}  // namespace

OrderedLogitResult ordered_logit(const Matrix& x, const std::vector<std::string>& names, const std::vector<int>& y_raw,
                                 const OrderedLogitOptions& opt) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  if (static_cast<Eigen::Index>(y_raw.size()) != n) throw ValidationError("response length differs from design rows");
  if (static_cast<Eigen::Index>(names.size()) != k) throw ValidationError("one name per column required");
  if (!x.allFinite()) throw ValidationError("ordered logit input contains missing or non-finite values");

  OrderedLogitResult r;
  r.levels = y_raw;
  std::sort(r.levels.begin(), r.levels.end());
  r.levels.erase(std::unique(r.levels.begin(), r.levels.end()), r.levels.end());
  const auto cats = static_cast<Eigen::Index>(r.levels.size());
  if (cats < 2) throw ValidationError("ordered logit needs at least 2 observed categories");
  if (n <= k + cats) throw ValidationError("ordered logit needs n > predictors + categories");
  std::vector<int> y(y_raw.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = static_cast<int>(std::lower_bound(r.levels.begin(), r.levels.end(), y_raw[i]) - r.levels.begin());
  const Eigen::Index m = cats - 1;
  const Eigen::Index p = k + m;

  // start: beta = 0, thresholds at the marginal cumulative log-odds
  std::vector<double> counts(static_cast<std::size_t>(cats), 0.0);
  for (int v : y) counts[static_cast<std::size_t>(v)] += 1.0;
  Vector th = Vector::Zero(p);
  {
    double cum = 0.0;
    Vector tau0(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      cum += counts[static_cast<std::size_t>(j)];
      const double q = cum / static_cast<double>(n);
      tau0(j) = std::log(q / (1.0 - q));
    }
    th(k) = tau0(0);
    for (Eigen::Index j = 1; j < m; ++j) th(k + j) = std::log(tau0(j) - tau0(j - 1));
  }
  r.null_log_likelihood = 0.0;
  for (double c : counts) r.null_log_likelihood += c * std::log(c / static_cast<double>(n));

  auto eval_theta = [&](const Vector& t, bool scores) {
    return evaluate(x, y, t.head(k), to_tau(t, k, m), scores);
  };
  // gradient and Hessian in theta from the natural ones via the chain rule
  auto chain = [&](const Vector& t, const LogitEval& e, Vector& g, Matrix& h) {
    Matrix jac = Matrix::Zero(p, p);  // d(beta, tau) / d theta
    jac.topLeftCorner(k, k).setIdentity();
    for (Eigen::Index j = 0; j < m; ++j) {
      jac(k + j, k) = 1.0;
      for (Eigen::Index l = 1; l <= j; ++l) jac(k + j, k + l) = std::exp(t(k + l));
    }
    g = jac.transpose() * e.grad;
    h = jac.transpose() * e.hess * jac;
    for (Eigen::Index l = 1; l < m; ++l) {
      double s = 0.0;
      for (Eigen::Index j = l; j < m; ++j) s += e.grad(k + j);
      h(k + l, k + l) += s * std::exp(t(k + l));
    }
  };

  LogitEval cur = eval_theta(th, false);
  r.ll_trace.push_back(cur.ll);
  bool converged = false;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    Vector g;
    Matrix h;
    chain(th, cur, g, h);
    Eigen::LDLT<Matrix> ldlt(-h);
    Vector step;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) step = ldlt.solve(g);
    if (step.size() != p || !step.allFinite() || g.dot(step) <= 0.0) step = g;  // fall back to ascent
    double scale = 1.0;
    bool improved = false;
    LogitEval next;
    for (int ls = 0; ls < 60; ++ls, scale *= 0.5) {
      const Vector cand = th + scale * step;
      next = eval_theta(cand, false);
      if (std::isfinite(next.ll) && next.ll >= cur.ll) {
        improved = true;
        th = cand;
        break;
      }
    }
    if (!improved) {
      // no ascent direction left at machine precision
      converged = g.cwiseAbs().maxCoeff() < 1e-6 * static_cast<double>(n);
      break;
    }
    cur = next;
    r.ll_trace.push_back(cur.ll);
    if ((scale * step).cwiseAbs().maxCoeff() < opt.tol) {
      converged = true;
      ++it;
      break;
    }
  }
  r.iterations = it;
  if (!converged)
    throw NumericalError("ordered logit did not converge after " + std::to_string(it) +
                         " iterations (log-likelihood " + std::to_string(cur.ll) +
                         "); the categories are likely perfectly separated by the predictors");
  if (cur.min_p > 1.0 - 1e-9)
    throw NumericalError("ordered logit did not converge after " + std::to_string(it) +
                         " iterations: every observation is fitted with probability 1 (perfect separation)");

  const Vector beta = th.head(k);
  const Vector tau = to_tau(th, k, m);
  const LogitEval fin = evaluate(x, y, beta, tau, true);
  // sandwich with the outer product of per-observation scores, small-sample n/(n-p)
  const Matrix bread = (-fin.hess).inverse();
  const Matrix meat = fin.scores.transpose() * fin.scores;
  const Matrix cov = static_cast<double>(n) / static_cast<double>(n - p) * bread * meat * bread;
  const Vector se = cov.diagonal().cwiseMax(0.0).cwiseSqrt();

  r.names = names;
  r.n = static_cast<int>(n);
  r.beta = beta;
  r.beta_se = se.head(k);
  r.beta_p.resize(k);
  for (Eigen::Index j = 0; j < k; ++j) r.beta_p(j) = normal_p(beta(j) / r.beta_se(j));
  r.thresholds = tau;
  r.threshold_se = se.tail(m);
  r.log_likelihood = fin.ll;
  r.pseudo_r2 = 1.0 - r.log_likelihood / r.null_log_likelihood;
  r.lr_chi2 = std::max(0.0, 2.0 * (r.log_likelihood - r.null_log_likelihood));
  r.lr_df = static_cast<int>(k);
  r.lr_p = k > 0 ? boost::math::cdf(boost::math::complement(boost::math::chi_squared(static_cast<double>(k)), r.lr_chi2))
                 : 1.0;
  r.aic = 2.0 * static_cast<double>(p) - 2.0 * r.log_likelihood;
  return r;
}

// ---------------------------------------------------------------------------

Spec parse_spec(const std::string& s) {
  if (s == "1") return Spec::EciGdp;
  if (s == "2") return Spec::EciAll;
  if (s == "3") return Spec::K1Gdp;
  if (s == "4") return Spec::K1All;
  if (s == "logit-rho") return Spec::LogitRho;
  if (s == "logit-nu") return Spec::LogitNu;
  throw ValidationError("unknown regression spec '" + s + "' (expected 1, 2, 3, 4, logit-rho or logit-nu)");
}

std::string spec_name(Spec s) {
  switch (s) {
    case Spec::EciGdp: return "1";
    case Spec::EciAll: return "2";
    case Spec::K1Gdp: return "3";
    case Spec::K1All: return "4";
    case Spec::LogitRho: return "logit-rho";
    case Spec::LogitNu: return "logit-nu";
  }
  return "?";
}

std::vector<std::string> spec_columns(Spec s) {
  switch (s) {
    case Spec::EciGdp: return {"eci", "log_gdp_per_capita"};
    case Spec::EciAll: return {"eci", "log_gdp_per_capita", "investment_gdp", "export_gdp"};
    case Spec::K1Gdp: return {"k1", "log_gdp_per_capita"};
    case Spec::K1All: return {"k1", "log_gdp_per_capita", "investment_gdp", "population", "export_gdp"};
    case Spec::LogitRho:
    case Spec::LogitNu:
      return {"log_gdp_per_capita", "log_gdp_per_capita_sq", "population", "investment_gdp", "export_gdp", "eci",
              "eci_sq"};
  }
  return {};
}

namespace {

std::optional<double> field(const PanelRow& r, const std::string& name) {
  if (name == "eci" || name == "eci_sq") return r.eci;
  if (name == "k1") return r.k1;
  if (name == "k0") return r.k0;
  if (name == "diversity") return r.diversity;
  if (name == "log_gdp_per_capita" || name == "log_gdp_per_capita_sq") return r.log_gdp;
  if (name == "population") return r.population;
  if (name == "investment_gdp") return r.investment;
  if (name == "export_gdp") return r.exports;
  throw ValidationError("unknown panel column " + name);
}

int rho_code(double rho) {
  static const double grid[] = {-std::numeric_limits<double>::infinity(), -9.0, -3.0, 0.0, 1.0};
  for (int i = 0; i < 5; ++i)
    if (rho == grid[i]) return i;
  throw ValidationError("rho " + std::to_string(rho) + " is not on the grid");
}

int nu_code(double nu) {
  static const double grid[] = {0.5, 1.0, 2.0, 3.0, 4.0};
  for (int i = 0; i < 5; ++i)
    if (nu == grid[i]) return i;
  throw ValidationError("nu " + std::to_string(nu) + " is not on the grid");
}

}  // namespace

RegressionReport growth_regression(const std::vector<PanelRow>& panel, Spec spec) {
  const auto cols = spec_columns(spec);
  const bool logit = spec == Spec::LogitRho || spec == Spec::LogitNu;
  RegressionReport rep;
  rep.spec = spec;
  std::vector<const PanelRow*> rows;
  for (const auto& r : panel) {
    bool ok = true;
    for (const auto& c : cols) ok = ok && field(r, c).has_value();
    if (logit) ok = ok && (spec == Spec::LogitRho ? r.rho.has_value() : r.nu.has_value());
    else ok = ok && r.growth.has_value();
    if (ok) rows.push_back(&r);
    else ++rep.dropped;
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix x(n, static_cast<Eigen::Index>(cols.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    rep.ids.push_back(rows[static_cast<std::size_t>(i)]->code);
    for (std::size_t c = 0; c < cols.size(); ++c) x(i, static_cast<Eigen::Index>(c)) = *field(*rows[static_cast<std::size_t>(i)], cols[c]);
  }
  // squares are taken about the sample mean
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (cols[c].size() < 3 || cols[c].compare(cols[c].size() - 3, 3, "_sq") != 0) continue;
    const auto j = static_cast<Eigen::Index>(c);
    const double mean = n > 0 ? x.col(j).mean() : 0.0;
    x.col(j) = (x.col(j).array() - mean).square();
  }

  if (logit) {
    std::vector<int> y;
    for (const auto* r : rows) y.push_back(spec == Spec::LogitRho ? rho_code(*r->rho) : nu_code(*r->nu));
    rep.logit = ordered_logit(x, cols, y);
    auto d = make_design(rep.ids, cols, x, Vector::Zero(n));
    rep.vif = vif(d);
  } else {
    Vector y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = *rows[static_cast<std::size_t>(i)]->growth;
    auto d = make_design(rep.ids, cols, x, y);
    rep.ols = ols_hc1(d);
    rep.vif = vif(d);
  }
  rep.vif_names = cols;
  return rep;
}

}  // namespace capspace::econ
