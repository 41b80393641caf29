#pragma once

#include "mrtee/centering.hpp"
#include "mrtee/data.hpp"
#include "mrtee/variance.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace mrtee {

enum class Method {
  unadjusted_per_time,
  wcls_per_time,
  lin_per_time,
  wcls,
  a2wcls,
  a2wcls_lagged,
  a2wcls_lagged_naive,  // post-treatment auxiliaries entered uncentered
  emee,
  a2emee,
};

enum class VarianceMode { plain_sandwich, stacked, stacked_small_sample };

// How the auxiliary interaction is centered in the A2 linear fits.
enum class CenteringKind { orthogonal, global_mean, time_specific_mean };

struct EstimatorConfig {
  Method method = Method::wcls;
  int lag = 1;
  VarianceMode variance_mode = VarianceMode::plain_sandwich;
  double ci_level = 0.95;
  int max_iter = 100;
  double tol = 1e-10;
  CenteringKind centering = CenteringKind::orthogonal;
  int time_index = 1;  // decision point for the per-time methods
};

const char* method_name(Method m);
Method parse_method(const std::string& s);
const char* variance_mode_name(VarianceMode v);
VarianceMode parse_variance_mode(const std::string& s);
const char* centering_kind_name(CenteringKind c);
CenteringKind parse_centering_kind(const std::string& s);

struct LaggedNuisanceModel {
  Eigen::VectorXd alpha_u1;  // one intercept per future step u
  Eigen::MatrixXd alpha_u2;  // p_z x (lag - 1) slopes on the future auxiliaries
  Eigen::VectorXd alpha_03;  // control coefficients
};

struct FitResult {
  std::string method;
  std::string variance_mode;
  int n_subjects = 0;
  double ci_level = 0.95;
  bool small_sample = false;

  std::vector<std::string> beta0_names, beta1_names, alpha_names;
  Eigen::VectorXd beta0, beta1, alpha;
  Eigen::VectorXd coef;  // full parameter vector, ordered alpha, beta0, beta1
  std::vector<Eigen::Index> beta0_index;

  Eigen::MatrixXd vcov;        // asymptotic covariance of coef
  Eigen::MatrixXd vcov_beta0;  // beta0 block of vcov
  Eigen::VectorXd se, ci_lo, ci_hi, p_value;
  Eigen::MatrixXd per_subject_scores;  // scores entering the meat, after any correction
  Eigen::MatrixXd bread;

  bool converged = true;
  int n_iter = 0;
  double ee_residual = 0.0;          // max-abs P_N estimating equation at the solution
  std::vector<double> trace;         // estimating-equation norm per iteration (binary solvers)
  std::optional<Eigen::MatrixXd> theta;  // centering actually used by the A2 fits
  std::optional<LaggedNuisanceModel> lagged;

  Eigen::VectorXd beta0_avar() const { return vcov_beta0.diagonal(); }
};

FitResult fit_unadjusted_per_time(const MrtDataset& ds, int t, const EstimatorConfig& cfg = {});
FitResult fit_wcls_per_time(const MrtDataset& ds, int t, const EstimatorConfig& cfg = {});
FitResult fit_lin_per_time(const MrtDataset& ds, int t, const EstimatorConfig& cfg = {});

FitResult fit_wcls(const MrtDataset& ds, const EstimatorConfig& cfg = {});
FitResult fit_a2wcls(const MrtDataset& ds, const CenteringModel& cm, const EstimatorConfig& cfg = {});
// A2 fit with externally supplied per-row centering values, treated as known.
FitResult fit_a2wcls_known_centering(const MrtDataset& ds, const Eigen::MatrixXd& mu_rows, const EstimatorConfig& cfg = {});
FitResult fit_a2wcls_lagged(const MrtDataset& ds, const CenteringModel& cm, const EstimatorConfig& cfg = {});
FitResult fit_a2wcls_lagged_naive(const MrtDataset& ds, const CenteringModel& cm, const EstimatorConfig& cfg = {});

FitResult fit_emee(const MrtDataset& ds, const EstimatorConfig& cfg = {});
FitResult fit_a2emee(const MrtDataset& ds, const CenteringModel& initial, const EstimatorConfig& cfg = {});

// P_N estimating function of the binary fits at an arbitrary parameter (alpha, beta0[, beta1]).
Eigen::VectorXd emee_estimating_function(const MrtDataset& ds, const Eigen::VectorXd& coef,
                                         const Eigen::MatrixXd* mu_rows = nullptr);

// Dispatches on cfg.method; fits the centering on ds when the method needs one.
FitResult fit(const MrtDataset& ds, const EstimatorConfig& cfg);

struct ClosedFormGaps {
  double gap_wcls_vs_u;    // meat scale; negative means the adjustment helps
  double gap_lin_vs_u;     // variance reduction of Lin over unadjusted
  double gap_lin_vs_wcls;  // variance reduction of Lin over WCLS
};

ClosedFormGaps closed_form_gaps(double p, const Eigen::VectorXd& alpha1, const Eigen::VectorXd& beta1,
                                const Eigen::MatrixXd& sigma_g);

std::string fit_report_text(const FitResult& fit);
std::string fit_report_csv(const FitResult& fit);

}  // namespace mrtee
