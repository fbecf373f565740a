#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace voterbias::est {

/// sign(x) * ln(|x| + 1). Throws DataError for non-finite input.
double log_modulus(double x);

/// Outcome, exposures, instruments and controls for one stratum. The
/// intercept column is implicit.
struct DesignMatrix {
  std::string stratum;
  std::string outcome_name;
  std::vector<std::string> exposure_names;
  std::vector<std::string> instrument_names;
  std::vector<std::string> control_names;

  Eigen::VectorXd y;
  Eigen::MatrixXd exposures;    // n x p
  Eigen::MatrixXd instruments;  // n x q, may have zero columns for OLS-only use
  Eigen::MatrixXd controls;     // n x c
  bool intercept = true;

  Eigen::Index rows() const noexcept { return y.size(); }
  /// Throws UsageError on shape mismatches or non-finite cells.
  void validate() const;
};

enum class Method { OLS, TSLS };
enum class Covariance { Classical, HC1 };

const char* method_name(Method m) noexcept;

struct FitOptions {
  Covariance covariance = Covariance::Classical;
  /// Designs whose column-equilibrated condition estimate exceeds this are
  /// rejected as singular.
  double condition_limit = 1e10;
};

inline constexpr double kCriticalValue95 = 1.96;
inline constexpr double kWeakInstrumentF = 10.0;

struct Coefficient {
  std::string name;
  double estimate = 0;
  double std_error = 0;
  double t_stat = 0;
  double p_value = 0;

  double ci_half_width() const noexcept { return kCriticalValue95 * std_error; }
  double ci_low() const noexcept { return estimate - ci_half_width(); }
  double ci_high() const noexcept { return estimate + ci_half_width(); }
};

struct FirstStageDiag {
  std::string exposure;
  /// Joint F test of the instrument block. Capped at the largest finite double.
  double f_statistic = 0;
  double f_p_value = 1;
  int df_numerator = 0;
  int df_denominator = 0;
  std::vector<Coefficient> instruments;
  double partial_r2 = 0;
  /// F < 10.
  bool weak = false;
};

struct EstimateResult {
  Method method = Method::OLS;
  Covariance covariance = Covariance::Classical;
  std::string stratum;
  long n = 0;
  /// Residual degrees of freedom, n minus the number of coefficients.
  long dof = 0;
  /// Every coefficient: intercept (if any), exposures, controls.
  std::vector<Coefficient> coefficients;
  /// The exposure subset of `coefficients`, in design order.
  std::vector<Coefficient> exposures;
  Eigen::VectorXd beta;
  Eigen::VectorXd residuals;
  double sigma2 = 0;
  std::vector<FirstStageDiag> first_stage;  // TSLS only
};

/// Least squares of y on [1|X|C] through column-pivoted Householder QR.
/// Throws SingularDesignError naming the offending columns.
EstimateResult ols_fit(const DesignMatrix& d, const FitOptions& options = {});

/// Two-stage least squares. Stage one regresses each exposure on [1|Z|C];
/// stage two regresses y on [1|X_hat|C]. Residuals for the error variance
/// use the original exposures. Weak instruments are flagged, not rejected.
EstimateResult tsls_fit(const DesignMatrix& d, const FitOptions& options = {});

EstimateResult fit(const DesignMatrix& d, Method method, const FitOptions& options = {});

/// F test of the instrument block in the first-stage regression of one
/// exposure, against the restricted regression on [1|C].
FirstStageDiag first_stage_diagnostics(const DesignMatrix& d, std::size_t exposure_index,
                                       const FitOptions& options = {});

/// Outcome of fitting one stratum; `error` is set when the fit threw.
struct StratumFit {
  std::string stratum;
  std::optional<EstimateResult> result;
  std::string error;
};

/// Fits every stratum (in parallel) and returns results in input order.
std::vector<StratumFit> fit_strata(const std::vector<DesignMatrix>& strata, Method method,
                                   const FitOptions& options = {});

}  // namespace voterbias::est
