#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>

#include "sdegp/dataset.hpp"
#include "sdegp/evaluation.hpp"
#include "sdegp/fit.hpp"
#include "sdegp/predict.hpp"

namespace sdegp {

/// Series CSV: header "t,x" (uniform spacing required, tolerance 1e-6
/// relative) or a single column "x" with the spacing supplied as dt_override.
/// Malformed rows, missing values and non-uniform spacing throw
/// IngestionError naming the offending index.
Dataset load_series(const std::string& path, std::optional<double> dt_override);

void write_series_csv(const std::string& path, const Dataset& data);

/// log(p[i+1]/p[i]); non-positive prices throw PreprocessError with the index.
Eigen::VectorXd log_returns(const Eigen::VectorXd& prices);

/// Reads the x column of a "t,x" or "x" CSV without any spacing checks
/// (price files are allowed irregular timestamps).
Eigen::VectorXd load_column(const std::string& path);

/// Single-column CSV with header "x".
void write_column_csv(const std::string& path, const Eigen::VectorXd& values);

/// Fitted-model persistence. JSON with format_version = 1; every double is a
/// C99 hex-float string so save/load round-trips are bit-exact. Unknown
/// versions and malformed documents throw ParseError.
struct ModelDocument {
  SgpState state;  // inducing factors rebuilt on load; A/B/P/Q caches empty
  double lower_bound_value = 0.0;
  double modified_lower_bound_value = 0.0;
  bool converged = false;
  int em_iterations = 0;
  int best_restart = -1;
  long exp_overflows = 0;
  int diffusion_nonconverged = 0;
  int rejected_m_steps = 0;
  std::string dataset_fingerprint;
  double data_min = 0.0;
  double data_max = 0.0;
  double dt = 0.0;
  Eigen::Index n_increments = 0;
};

void save_model(const std::string& path, const FitResult& fit, double dt,
                Eigen::Index n_increments);
ModelDocument load_model(const std::string& path);

/// Curve table CSV, one row per grid point:
/// x,f_mean,f_var,s_mean,s_var,g_median,g_lower,g_upper,g_mean.
void write_curves_csv(const std::string& path, const PosteriorCurve& curve);
PosteriorCurve read_curves_csv(const std::string& path);

/// Error table CSV with header model,estimator,coefficient,replicate,error
/// (failed replicates carry nan).
void write_error_table_csv(const std::string& path, const ErrorTable& table);

/// "key = value" per line, '#' comments, unknown keys rejected with
/// ConfigError. Keys mirror the FitConfig fields.
FitConfig parse_fit_config(const std::string& path);
FitConfig parse_fit_config_text(const std::string& text,
                                const std::string& origin);

}  // namespace sdegp
