#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace mrtee {

// Per-subject pieces kept from a linear fit so leverage can be recomputed.
struct LeverageInputs {
  Eigen::MatrixXd x;                  // stacked design rows of all subjects
  Eigen::VectorXd w, resid;
  std::vector<Eigen::Index> offsets;  // subject j owns rows [offsets[j], offsets[j+1])
};

struct SandwichParts {
  Eigen::MatrixXd bread;           // P_N-averaged negative derivative of the estimating function
  Eigen::MatrixXd meat;            // P_N-averaged outer product of subject scores
  Eigen::MatrixXd subject_scores;  // N x dim
  std::optional<LeverageInputs> hat_blocks;
};

struct StackedParts {
  Eigen::MatrixXd u_theta_scores;    // N x m, per-subject centering estimating function
  Eigen::MatrixXd cross_derivative;  // dim x m, P_N of d(score)/d(theta)
  Eigen::MatrixXd theta_bread;       // m x m, P_N of dU(theta)/d(theta)
};

SandwichParts make_sandwich_parts(Eigen::MatrixXd bread, Eigen::MatrixXd subject_scores);

Eigen::MatrixXd meat_from_scores(const Eigen::MatrixXd& scores);

// Asymptotic covariance Q^{-1} M Q^{-T}; standard errors are sqrt(diag / N).
Eigen::MatrixXd plain_sandwich(const SandwichParts& parts);

// Subject scores with the estimated-centering correction applied.
Eigen::MatrixXd stacked_scores(const Eigen::MatrixXd& scores, const StackedParts& sp);
Eigen::MatrixXd stacked_sandwich(const SandwichParts& parts, const StackedParts& sp);

// Scores rebuilt from leverage-adjusted residuals (I - H_j)^{-1} e_j.
Eigen::MatrixXd small_sample_scores(const SandwichParts& parts);
Eigen::MatrixXd small_sample_correct(const SandwichParts& parts);

struct IntervalSet {
  Eigen::VectorXd lo, hi, p_value;
};

// Normal reference by default; t with n - dim degrees of freedom when small_sample is set.
IntervalSet confidence_intervals(const Eigen::VectorXd& est, const Eigen::VectorXd& se, double level,
                                 bool small_sample, int n, int dim);

double reference_quantile(double level, bool small_sample, int n, int dim);

}  // namespace mrtee
