#include "mrtee/linear.hpp"

#include "mrtee/error.hpp"

#include <limits>
#include <string>

namespace mrtee {

double condition_number(const Eigen::MatrixXd& sym) {
  if (sym.rows() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || !(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

void require_well_conditioned(const Eigen::MatrixXd& gram, const char* what) {
  const double c = condition_number(gram);
  if (!(c <= kMaxCondition))
    throw Error(ErrorCode::SingularGram, std::string(what) + " is rank deficient (condition number " + std::to_string(c) + ")");
}

WlsSolution wls_solve(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, int n_subjects) {
  if (x.rows() != y.size() || x.rows() != w.size())
    throw Error(ErrorCode::DimensionMismatch, "design, response and weights differ in length");
  if (n_subjects < 1) throw Error(ErrorCode::InvalidArgument, "no subjects to fit");
  Eigen::MatrixXd xw = x.transpose() * w.asDiagonal();
  Eigen::MatrixXd gram = xw * x;
  require_well_conditioned(gram, "weighted Gram");
  WlsSolution sol;
  sol.coef = gram.ldlt().solve(xw * y);
  sol.resid = y - x * sol.coef;
  sol.bread = gram / static_cast<double>(n_subjects);
  return sol;
}

Eigen::MatrixXd subject_scores(const Eigen::MatrixXd& x, const Eigen::VectorXd& w, const Eigen::VectorXd& resid,
                               const std::vector<Eigen::Index>& offsets) {
  const Eigen::Index n = static_cast<Eigen::Index>(offsets.size()) - 1;
  Eigen::MatrixXd s(n, x.cols());
  const Eigen::VectorXd wr = w.cwiseProduct(resid);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index b = offsets[j], len = offsets[j + 1] - offsets[j];
    s.row(j) = (x.middleRows(b, len).transpose() * wr.segment(b, len)).transpose();
  }
  return s;
}

std::vector<Eigen::Index> uniform_offsets(int n_subjects, Eigen::Index rows_per_subject) {
  std::vector<Eigen::Index> off(n_subjects + 1);
  for (int j = 0; j <= n_subjects; ++j) off[j] = j * rows_per_subject;
  return off;
}

}  // namespace mrtee
