#pragma once

// OLS with HC1 errors, VIF, proportional-odds ordered logit, and the growth
// regression harness over complexity measures.

#include "capspace/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace capspace::econ {

struct DesignMatrix {
  std::vector<std::string> ids;    // one per row
  std::vector<std::string> names;  // one per column; "const" for the intercept
  Matrix x;
  Vector y;

  bool has_intercept() const;
};

/// Prepends an intercept column named "const".
DesignMatrix make_design(std::vector<std::string> ids, std::vector<std::string> names, const Matrix& columns,
                         const Vector& y, bool intercept = true);

struct OlsResult {
  std::vector<std::string> names;
  Vector beta, se, z, p;
  Matrix cov;  // HC1
  Vector residuals;
  double r2 = 0.0, adj_r2 = 0.0;
  double log_likelihood = 0.0;
  double aic = 0.0;
  int n = 0, k = 0;
};

OlsResult ols_hc1(const DesignMatrix& d);

/// VIF per non-intercept column; +inf marks perfect collinearity.
Vector vif(const DesignMatrix& d);

/// "***" p < 0.01, "**" p < 0.05, "*" p < 0.1.
std::string stars(double p);

/// Two-sided normal p-value for a z statistic.
double normal_p(double z);

struct OrderedLogitOptions {
  int max_iter = 200;
  double tol = 1e-9;  // on the largest Newton step
};

struct OrderedLogitResult {
  std::vector<std::string> names;  // predictors only
  Vector beta, beta_se, beta_p;
  Vector thresholds, threshold_se;  // ascending, J-1 entries
  std::vector<int> levels;          // observed category codes, ascending
  double log_likelihood = 0.0;
  double null_log_likelihood = 0.0;
  double pseudo_r2 = 0.0;  // McFadden
  double lr_chi2 = 0.0;
  double lr_p = 1.0;
  int lr_df = 0;
  double aic = 0.0;
  int iterations = 0;
  int n = 0;
  std::vector<double> ll_trace;
};

/// y holds ordered category codes (any integers; only their order matters).
/// X has no intercept column; thresholds play that role.
OrderedLogitResult ordered_logit(const Matrix& x, const std::vector<std::string>& names, const std::vector<int>& y,
                                 const OrderedLogitOptions& opt = {});

// ---------------------------------------------------------------------------
// Growth regressions

struct PanelRow {
  std::string code;
  std::optional<double> growth, eci, k0, k1, diversity, log_gdp, population, investment, exports;
  std::optional<double> rho, nu;
};

enum class Spec { EciGdp = 1, EciAll = 2, K1Gdp = 3, K1All = 4, LogitRho = 5, LogitNu = 6 };

Spec parse_spec(const std::string& s);
std::string spec_name(Spec s);

/// Predictor column names used by a spec, in table order.
std::vector<std::string> spec_columns(Spec s);

struct RegressionReport {
  Spec spec = Spec::EciGdp;
  std::vector<std::string> ids;
  int dropped = 0;  // rows with missing values
  std::optional<OlsResult> ols;
  std::optional<OrderedLogitResult> logit;
  Vector vif;
  std::vector<std::string> vif_names;
};

/// The rho grid order is -inf < -9 < -3 < 0 < 1; nu is ordered numerically.
RegressionReport growth_regression(const std::vector<PanelRow>& panel, Spec spec);

}  // namespace capspace::econ
