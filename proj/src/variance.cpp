#include "mrtee/variance.hpp"

#include "mrtee/error.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>

namespace mrtee {

namespace {

Eigen::FullPivLU<Eigen::MatrixXd> checked_lu(const Eigen::MatrixXd& m, ErrorCode code, const char* what) {
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  if (m.rows() == 0) return lu;
  if (!lu.isInvertible() || lu.rcond() < 1e-14) throw Error(code, std::string(what) + " is not invertible");
  return lu;
}

}  // namespace

Eigen::MatrixXd meat_from_scores(const Eigen::MatrixXd& scores) {
  const double n = static_cast<double>(scores.rows());
  if (n == 0) return Eigen::MatrixXd::Zero(scores.cols(), scores.cols());
  return (scores.transpose() * scores) / n;
}

SandwichParts make_sandwich_parts(Eigen::MatrixXd bread, Eigen::MatrixXd subject_scores) {
  SandwichParts parts;
  parts.meat = meat_from_scores(subject_scores);
  parts.bread = std::move(bread);
  parts.subject_scores = std::move(subject_scores);
  return parts;
}

Eigen::MatrixXd plain_sandwich(const SandwichParts& parts) {
  auto lu = checked_lu(parts.bread, ErrorCode::SingularBread, "bread");
  Eigen::MatrixXd left = lu.solve(parts.meat);
  Eigen::MatrixXd v = lu.solve(left.transpose()).transpose();
  return 0.5 * (v + v.transpose());
}

Eigen::MatrixXd stacked_scores(const Eigen::MatrixXd& scores, const StackedParts& sp) {
  if (sp.cross_derivative.rows() != scores.cols() || sp.u_theta_scores.rows() != scores.rows() ||
      sp.theta_bread.rows() != sp.u_theta_scores.cols() || sp.cross_derivative.cols() != sp.u_theta_scores.cols())
    throw Error(ErrorCode::DimensionMismatch, "stacked parts do not conform to the scores");
  auto lu = checked_lu(sp.theta_bread, ErrorCode::SingularThetaBread, "centering derivative");
  // s_j - D T^{-1} u_j for every subject at once.
  Eigen::MatrixXd tinv_u = lu.solve(sp.u_theta_scores.transpose());
  return scores - (sp.cross_derivative * tinv_u).transpose();
}

Eigen::MatrixXd stacked_sandwich(const SandwichParts& parts, const StackedParts& sp) {
  SandwichParts adj;
  adj.bread = parts.bread;
  adj.subject_scores = stacked_scores(parts.subject_scores, sp);
  adj.meat = meat_from_scores(adj.subject_scores);
  return plain_sandwich(adj);
}

Eigen::MatrixXd small_sample_scores(const SandwichParts& parts) {
  if (!parts.hat_blocks) throw Error(ErrorCode::InvalidArgument, "small-sample correction needs per-subject design blocks");
  const auto& hb = *parts.hat_blocks;
  const Eigen::Index n_sub = static_cast<Eigen::Index>(hb.offsets.size()) - 1;
  const Eigen::Index dim = hb.x.cols();
  Eigen::MatrixXd gram = hb.x.transpose() * hb.w.asDiagonal() * hb.x;
  auto glu = checked_lu(gram, ErrorCode::SingularGram, "pooled weighted Gram");
  Eigen::MatrixXd scores(n_sub, dim);
  for (Eigen::Index j = 0; j < n_sub; ++j) {
    const Eigen::Index b = hb.offsets[j], len = hb.offsets[j + 1] - hb.offsets[j];
    const auto xj = hb.x.middleRows(b, len);
    const auto wj = hb.w.segment(b, len);
    Eigen::MatrixXd h = xj * glu.solve(Eigen::MatrixXd(xj.transpose())) * wj.asDiagonal();
    Eigen::MatrixXd ih = Eigen::MatrixXd::Identity(len, len) - h;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(ih);
    if (!lu.isInvertible() || lu.rcond() < 1e-10)
      throw Error(ErrorCode::SingularLeverage, "I - H is singular for subject index " + std::to_string(j));
    Eigen::VectorXd e = lu.solve(hb.resid.segment(b, len));
    scores.row(j) = (xj.transpose() * (wj.array() * e.array()).matrix()).transpose();
  }
  return scores;
}

Eigen::MatrixXd small_sample_correct(const SandwichParts& parts) { return meat_from_scores(small_sample_scores(parts)); }

double reference_quantile(double level, bool small_sample, int n, int dim) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::DomainError, "confidence level must lie in (0,1)");
  const double upper = 0.5 + level / 2.0;
  if (small_sample) {
    if (n - dim < 1) throw Error(ErrorCode::DomainError, "t reference needs n > dim");
    return boost::math::quantile(boost::math::students_t(n - dim), upper);
  }
  return boost::math::quantile(boost::math::normal(), upper);
}

IntervalSet confidence_intervals(const Eigen::VectorXd& est, const Eigen::VectorXd& se, double level, bool small_sample,
                                 int n, int dim) {
  const double q = reference_quantile(level, small_sample, n, dim);
  IntervalSet out;
  out.lo = est - q * se;
  out.hi = est + q * se;
  out.p_value.resize(est.size());
  for (Eigen::Index i = 0; i < est.size(); ++i) {
    const double stat = std::abs(est[i]) / se[i];
    if (est[i] == 0.0) {
      out.p_value[i] = 1.0;
    } else if (!std::isfinite(stat)) {
      out.p_value[i] = 0.0;
    } else {
      out.p_value[i] = small_sample ? 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(n - dim), stat))
                                    : 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal(), stat));
    }
  }
  return out;
}

}  // namespace mrtee
