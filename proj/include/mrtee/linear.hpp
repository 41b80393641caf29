#pragma once

#include <Eigen/Dense>

#include <vector>

namespace mrtee {

inline constexpr double kMaxCondition = 1e12;

// Condition number of a symmetric PSD matrix (infinity when singular).
double condition_number(const Eigen::MatrixXd& sym);

// Throws SingularGram when the condition number exceeds kMaxCondition.
void require_well_conditioned(const Eigen::MatrixXd& gram, const char* what);

struct WlsSolution {
  Eigen::VectorXd coef;
  Eigen::MatrixXd bread;  // Gram / n_subjects
  Eigen::VectorXd resid;
};

// Minimizes sum_r w_r (y_r - x_r' b)^2.
WlsSolution wls_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, int n_subjects);

// Row r of the result is sum over subject r's rows of w x resid.
Eigen::MatrixXd subject_scores(const Eigen::MatrixXd& x, const Eigen::VectorXd& w, const Eigen::VectorXd& resid,
                               const std::vector<Eigen::Index>& offsets);

std::vector<Eigen::Index> uniform_offsets(int n_subjects, Eigen::Index rows_per_subject);

}  // namespace mrtee
