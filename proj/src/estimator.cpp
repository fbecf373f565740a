#include "voterbias/estimator.hpp"

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>

#include "voterbias/error.hpp"

namespace voterbias::est {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double log_modulus(double x) {
  if (!std::isfinite(x)) throw DataError("log_modulus: non-finite input");
  if (x == 0.0) return 0.0;
  return std::copysign(std::log1p(std::abs(x)), x);
}

const char* method_name(Method m) noexcept { return m == Method::OLS ? "OLS" : "IV"; }

void DesignMatrix::validate() const {
  const Index n = y.size();
  const auto check = [&](const MatrixXd& m, const std::vector<std::string>& names,
                         const char* what) {
    if (m.rows() != n && !(m.cols() == 0)) {
      throw UsageError(std::string(what) + " block has " + std::to_string(m.rows()) +
                       " rows, outcome has " + std::to_string(n));
    }
    if (static_cast<std::size_t>(m.cols()) != names.size()) {
      throw UsageError(std::string(what) + " block has mismatched column names");
    }
    if (m.size() > 0 && !m.allFinite()) throw UsageError(std::string(what) + " block has non-finite values");
  };
  check(exposures, exposure_names, "exposure");
  check(instruments, instrument_names, "instrument");
  check(controls, control_names, "control");
  if (!y.allFinite()) throw UsageError("outcome has non-finite values");
  if (exposures.cols() == 0) throw UsageError("design has no exposures");
}

namespace {

/// Regressor matrix with column names: [1 | blocks...].
struct Regressors {
  MatrixXd a;
  std::vector<std::string> names;
};

Regressors assemble(Index n, bool intercept,
                    std::initializer_list<std::pair<const MatrixXd*, const std::vector<std::string>*>> blocks) {
  Index cols = intercept ? 1 : 0;
  for (const auto& [m, names] : blocks) cols += m->cols();
  Regressors r;
  r.a.resize(n, cols);
  Index c = 0;
  if (intercept) {
    r.a.col(c++).setOnes();
    r.names.emplace_back("(intercept)");
  }
  for (const auto& [m, names] : blocks) {
    if (m->cols() == 0) continue;
    r.a.middleCols(c, m->cols()) = *m;
    c += m->cols();
    r.names.insert(r.names.end(), names->begin(), names->end());
  }
  return r;
}

/// Column-equilibrated, column-pivoted QR least squares.
struct LeastSquares {
  VectorXd beta;
  VectorXd fitted;
  /// (A^T A)^{-1} in original column units.
  MatrixXd gram_inverse;
  double condition_estimate = 0;
};

LeastSquares solve_least_squares(const Regressors& reg, const VectorXd& y, double condition_limit) {
  const Index n = reg.a.rows();
  const Index k = reg.a.cols();
  if (k == 0) {
    LeastSquares ls;
    ls.beta.resize(0);
    ls.fitted = VectorXd::Zero(n);
    ls.gram_inverse.resize(0, 0);
    return ls;
  }
  if (n <= k) {
    throw SingularDesignError("design has " + std::to_string(n) + " rows for " +
                                  std::to_string(k) + " coefficients",
                              {});
  }
  VectorXd scale = reg.a.colwise().norm().transpose();
  std::vector<std::string> zero_cols;
  for (Index j = 0; j < k; ++j) {
    if (!(scale(j) > 0)) zero_cols.push_back(reg.names[static_cast<std::size_t>(j)]);
  }
  if (!zero_cols.empty()) throw SingularDesignError("design has all-zero columns", zero_cols);

  const MatrixXd scaled = reg.a * scale.cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<MatrixXd> qr(scaled);
  const auto& qr_mat = qr.matrixQR();
  const double r0 = std::abs(qr_mat(0, 0));
  const auto perm = qr.colsPermutation().indices();
  std::vector<std::string> offending;
  for (Index i = 0; i < k; ++i) {
    if (!(std::abs(qr_mat(i, i)) * condition_limit > r0)) {
      offending.push_back(reg.names[static_cast<std::size_t>(perm(i))]);
    }
  }
  if (!offending.empty()) {
    throw SingularDesignError("design is rank deficient (condition estimate above " +
                                  std::to_string(condition_limit) + ")",
                              offending);
  }

  LeastSquares ls;
  ls.condition_estimate = r0 / std::abs(qr_mat(k - 1, k - 1));
  const VectorXd beta_scaled = qr.solve(y);
  ls.beta = beta_scaled.cwiseQuotient(scale);
  ls.fitted = scaled * beta_scaled;

  // (A_s^T A_s)^{-1} = P R^{-1} R^{-T} P^T
  const MatrixXd r = qr_mat.topRows(k).triangularView<Eigen::Upper>();
  const MatrixXd r_inv =
      r.triangularView<Eigen::Upper>().solve(MatrixXd::Identity(k, k));
  const MatrixXd inner = r_inv * r_inv.transpose();
  MatrixXd permuted(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) permuted(perm(i), perm(j)) = inner(i, j);
  }
  const VectorXd inv_scale = scale.cwiseInverse();
  ls.gram_inverse = inv_scale.asDiagonal() * permuted * inv_scale.asDiagonal();
  return ls;
}

double two_tailed_p(double t, long dof) {
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(static_cast<double>(dof));
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

Coefficient make_coefficient(std::string name, double estimate, double variance, long dof) {
  Coefficient c;
  c.name = std::move(name);
  c.estimate = estimate;
  c.std_error = std::sqrt(std::max(variance, 0.0));
  if (c.std_error > 0) {
    c.t_stat = estimate / c.std_error;
  } else {
    c.t_stat = estimate == 0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), estimate);
  }
  c.p_value = two_tailed_p(c.t_stat, dof);
  return c;
}

MatrixXd covariance(const MatrixXd& design, const MatrixXd& gram_inverse, const VectorXd& resid,
                    double sigma2, Covariance kind, long dof) {
  if (kind == Covariance::Classical) return sigma2 * gram_inverse;
  // HC1: (A'A)^{-1} A' diag(e^2) A (A'A)^{-1} * n / (n - k)
  const MatrixXd weighted = design.array().colwise() * resid.array();
  const MatrixXd meat = weighted.transpose() * weighted;
  const double n = static_cast<double>(design.rows());
  return gram_inverse * meat * gram_inverse * (n / static_cast<double>(dof));
}

void fill_result(EstimateResult& out, const Regressors& reg, const MatrixXd& cov_design,
                 const LeastSquares& ls, const VectorXd& residuals, const DesignMatrix& d,
                 const FitOptions& options) {
  const Index n = reg.a.rows();
  const Index k = reg.a.cols();
  out.stratum = d.stratum;
  out.covariance = options.covariance;
  out.n = static_cast<long>(n);
  out.dof = static_cast<long>(n - k);
  out.beta = ls.beta;
  out.residuals = residuals;
  out.sigma2 = residuals.squaredNorm() / static_cast<double>(out.dof);
  const MatrixXd cov =
      covariance(cov_design, ls.gram_inverse, residuals, out.sigma2, options.covariance, out.dof);
  const Index first_exposure = d.intercept ? 1 : 0;
  for (Index j = 0; j < k; ++j) {
    out.coefficients.push_back(
        make_coefficient(reg.names[static_cast<std::size_t>(j)], ls.beta(j), cov(j, j), out.dof));
    if (j >= first_exposure && j < first_exposure + d.exposures.cols()) {
      out.exposures.push_back(out.coefficients.back());
    }
  }
}

FirstStageDiag diagnose(const DesignMatrix& d, std::size_t e, const Regressors& unrestricted,
                        const LeastSquares& fit_u, const FitOptions& options) {
  const Index n = d.rows();
  const VectorXd x = d.exposures.col(static_cast<Index>(e));
  const Regressors restricted = assemble(n, d.intercept, {{&d.controls, &d.control_names}});
  const LeastSquares fit_r = solve_least_squares(restricted, x, options.condition_limit);

  const double rss_u = (x - fit_u.fitted).squaredNorm();
  const double rss_r = (x - fit_r.fitted).squaredNorm();
  const long q = static_cast<long>(d.instruments.cols());
  const long df_den = static_cast<long>(n - unrestricted.a.cols());

  FirstStageDiag diag;
  diag.exposure = d.exposure_names[e];
  diag.df_numerator = static_cast<int>(q);
  diag.df_denominator = static_cast<int>(df_den);
  const double gain = std::max(rss_r - rss_u, 0.0);
  double f = (gain / static_cast<double>(q)) / (rss_u / static_cast<double>(df_den));
  if (!std::isfinite(f)) f = std::numeric_limits<double>::max();
  diag.f_statistic = f;
  const boost::math::fisher_f dist(static_cast<double>(q), static_cast<double>(df_den));
  diag.f_p_value = f >= std::numeric_limits<double>::max()
                       ? 0.0
                       : boost::math::cdf(boost::math::complement(dist, f));
  diag.partial_r2 = rss_r > 0 ? gain / rss_r : 0.0;
  diag.weak = f < kWeakInstrumentF;

  const double sigma2 = rss_u / static_cast<double>(df_den);
  const Index first_instrument = d.intercept ? 1 : 0;
  for (Index j = 0; j < q; ++j) {
    const Index col = first_instrument + j;
    diag.instruments.push_back(make_coefficient(d.instrument_names[static_cast<std::size_t>(j)],
                                                fit_u.beta(col),
                                                sigma2 * fit_u.gram_inverse(col, col), df_den));
  }
  return diag;
}

void require_instruments(const DesignMatrix& d) {
  if (d.instruments.cols() < d.exposures.cols()) {
    throw UsageError("two-stage least squares needs at least as many instruments (" +
                     std::to_string(d.instruments.cols()) + ") as exposures (" +
                     std::to_string(d.exposures.cols()) + ")");
  }
}

}  // namespace

EstimateResult ols_fit(const DesignMatrix& d, const FitOptions& options) {
  d.validate();
  const Regressors reg = assemble(d.rows(), d.intercept,
                                  {{&d.exposures, &d.exposure_names}, {&d.controls, &d.control_names}});
  const LeastSquares ls = solve_least_squares(reg, d.y, options.condition_limit);
  EstimateResult out;
  out.method = Method::OLS;
  fill_result(out, reg, reg.a, ls, d.y - reg.a * ls.beta, d, options);
  return out;
}

EstimateResult tsls_fit(const DesignMatrix& d, const FitOptions& options) {
  d.validate();
  require_instruments(d);
  const Index n = d.rows();
  const Regressors first = assemble(n, d.intercept,
                                    {{&d.instruments, &d.instrument_names}, {&d.controls, &d.control_names}});

  MatrixXd predicted(n, d.exposures.cols());
  std::vector<FirstStageDiag> diags;
  for (Index e = 0; e < d.exposures.cols(); ++e) {
    const LeastSquares stage1 = solve_least_squares(first, d.exposures.col(e), options.condition_limit);
    predicted.col(e) = first.a * stage1.beta;
    diags.push_back(diagnose(d, static_cast<std::size_t>(e), first, stage1, options));
  }

  const Regressors second = assemble(n, d.intercept,
                                     {{&predicted, &d.exposure_names}, {&d.controls, &d.control_names}});
  const LeastSquares ls = solve_least_squares(second, d.y, options.condition_limit);
  const Regressors structural = assemble(n, d.intercept,
                                         {{&d.exposures, &d.exposure_names}, {&d.controls, &d.control_names}});

  EstimateResult out;
  out.method = Method::TSLS;
  fill_result(out, second, second.a, ls, d.y - structural.a * ls.beta, d, options);
  out.first_stage = std::move(diags);
  return out;
}

EstimateResult fit(const DesignMatrix& d, Method method, const FitOptions& options) {
  return method == Method::OLS ? ols_fit(d, options) : tsls_fit(d, options);
}

FirstStageDiag first_stage_diagnostics(const DesignMatrix& d, std::size_t exposure_index,
                                       const FitOptions& options) {
  d.validate();
  require_instruments(d);
  if (exposure_index >= static_cast<std::size_t>(d.exposures.cols())) {
    throw UsageError("exposure index out of range");
  }
  const Regressors first = assemble(d.rows(), d.intercept,
                                    {{&d.instruments, &d.instrument_names}, {&d.controls, &d.control_names}});
  const LeastSquares stage1 = solve_least_squares(
      first, d.exposures.col(static_cast<Index>(exposure_index)), options.condition_limit);
  return diagnose(d, exposure_index, first, stage1, options);
}

std::vector<StratumFit> fit_strata(const std::vector<DesignMatrix>& strata, Method method,
                                   const FitOptions& options) {
  std::vector<StratumFit> out(strata.size());
  const auto n = static_cast<std::int64_t>(strata.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& d = strata[static_cast<std::size_t>(i)];
    auto& slot = out[static_cast<std::size_t>(i)];
    slot.stratum = d.stratum;
    try {
      slot.result = fit(d, method, options);
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  }
  return out;
}

}  // namespace voterbias::est
