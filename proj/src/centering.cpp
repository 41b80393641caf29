#include "mrtee/centering.hpp"

#include "mrtee/error.hpp"
#include "mrtee/linear.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>

namespace mrtee {

namespace {

Eigen::VectorXd centering_weights(const MrtDataset& ds) {
  const auto& pt = ds.p_tilde();
  Eigen::VectorXd w(ds.n_rows());
  for (Eigen::Index r = 0; r < ds.n_rows(); ++r) w[r] = ds.usable(r) ? pt[r] * (1.0 - pt[r]) : 0.0;
  return w;
}

void require_dims(const MrtDataset& ds, const Eigen::MatrixXd& theta) {
  if (theta.rows() != ds.f().cols() || theta.cols() != ds.z().cols())
    throw Error(ErrorCode::DimensionMismatch, "centering is " + std::to_string(theta.rows()) + "x" +
                                                  std::to_string(theta.cols()) + " but data has q=" +
                                                  std::to_string(ds.f().cols()) + ", p_z=" + std::to_string(ds.z().cols()));
}

Eigen::MatrixXd scores_for(const MrtDataset& ds, const Eigen::MatrixXd& theta) {
  const Eigen::Index q = ds.f().cols(), pz = ds.z().cols();
  const Eigen::VectorXd w = centering_weights(ds);
  const Eigen::MatrixXd resid = ds.z() - ds.f() * theta;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(ds.n_subjects(), q * pz);
  for (int j = 0; j < ds.n_subjects(); ++j) {
    const Eigen::Index b = ds.row_begin(j), len = ds.horizon();
    for (Eigen::Index i = 0; i < pz; ++i) {
      Eigen::VectorXd wr = w.segment(b, len).cwiseProduct(resid.col(i).segment(b, len));
      s.block(j, i * q, 1, q) = (ds.f().middleRows(b, len).transpose() * wr).transpose();
    }
  }
  return s;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

Eigen::MatrixXd CenteringModel::mu(const MrtDataset& ds) const {
  require_dims(ds, theta);
  return ds.f() * theta;
}

Eigen::MatrixXd CenteringModel::theta_bread() const {
  const Eigen::Index q = theta.rows(), pz = theta.cols();
  Eigen::MatrixXd tb = Eigen::MatrixXd::Zero(q * pz, q * pz);
  for (Eigen::Index i = 0; i < pz; ++i) tb.block(i * q, i * q, q, q) = -gram;
  return tb;
}

CenteringModel centering_from_theta(const MrtDataset& ds, const Eigen::MatrixXd& theta) {
  require_dims(ds, theta);
  CenteringModel cm;
  cm.theta = theta;
  cm.f_names = ds.f_names();
  cm.z_names = ds.z_names();
  cm.fitted_on = ds.fingerprint();
  const Eigen::VectorXd w = centering_weights(ds);
  const double n = std::max(1, ds.n_subjects());
  cm.gram = ds.f().transpose() * w.asDiagonal() * ds.f() / n;
  cm.score_meta = scores_for(ds, theta);
  return cm;
}

CenteringModel fit_centering(const MrtDataset& ds) {
  const Eigen::Index q = ds.f().cols(), pz = ds.z().cols();
  if (q < 1) throw Error(ErrorCode::DimensionMismatch, "centering needs at least one moderator column");
  if (pz < 1) throw Error(ErrorCode::DimensionMismatch, "centering needs at least one auxiliary column");
  if (ds.n_subjects() < 1) throw Error(ErrorCode::InvalidArgument, "no subjects to fit");
  const Eigen::VectorXd w = centering_weights(ds);
  Eigen::MatrixXd fw = ds.f().transpose() * w.asDiagonal();
  Eigen::MatrixXd gram = fw * ds.f();
  require_well_conditioned(gram, "centering Gram");
  Eigen::MatrixXd theta = gram.ldlt().solve(fw * ds.z());
  // One refinement step keeps the normal-equation residual at rounding level for badly scaled f.
  theta += gram.ldlt().solve(fw * (ds.z() - ds.f() * theta));
  return centering_from_theta(ds, theta);
}

Eigen::MatrixXd orthogonality_matrix(const MrtDataset& ds, const CenteringModel& cm) {
  require_dims(ds, cm.theta);
  const Eigen::VectorXd w = centering_weights(ds);
  const double n = std::max(1, ds.n_subjects());
  return ds.f().transpose() * w.asDiagonal() * (ds.z() - ds.f() * cm.theta) / n;
}

double verify_orthogonality(const MrtDataset& ds, const CenteringModel& cm) {
  const Eigen::MatrixXd m = orthogonality_matrix(ds, cm);
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Eigen::MatrixXd naive_centerings(const MrtDataset& ds, NaiveCentering kind) {
  const Eigen::Index pz = ds.z().cols();
  const int horizon = ds.horizon();
  Eigen::MatrixXd out(ds.n_rows(), pz);
  if (ds.n_rows() == 0) return out;
  if (kind == NaiveCentering::global_mean) {
    Eigen::RowVectorXd total = Eigen::RowVectorXd::Zero(pz);
    Eigen::Index count = 0;
    for (Eigen::Index r = 0; r < ds.n_rows(); ++r)
      if (ds.usable(r)) {
        total += ds.z().row(r);
        ++count;
      }
    out.rowwise() = total / static_cast<double>(count);
    return out;
  }
  Eigen::MatrixXd by_t = Eigen::MatrixXd::Zero(horizon, pz);
  for (Eigen::Index r = 0; r < ds.n_rows(); ++r) by_t.row(ds.t(r) - 1) += ds.z().row(r);
  by_t /= static_cast<double>(ds.n_subjects());
  for (Eigen::Index r = 0; r < ds.n_rows(); ++r) out.row(r) = by_t.row(ds.t(r) - 1);
  return out;
}

std::string serialize_centering(const CenteringModel& cm) {
  nlohmann::ordered_json j;
  j["kind"] = "linear_centering";
  j["weighting"] = "p_tilde*(1-p_tilde)";
  j["fitted_on"] = hex64(cm.fitted_on);
  j["f_names"] = cm.f_names;
  j["z_names"] = cm.z_names;
  auto mat = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
      rows.push_back(row);
    }
    return rows;
  };
  j["theta"] = mat(cm.theta);
  j["gram"] = mat(cm.gram);
  return j.dump(2);
}

CenteringModel deserialize_centering(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  auto mat = [](const nlohmann::json& rows) {
    Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c].get<double>();
    return m;
  };
  CenteringModel cm;
  try {
    cm.theta = mat(j.at("theta"));
    cm.gram = mat(j.at("gram"));
    cm.f_names = j.at("f_names").get<std::vector<std::string>>();
    cm.z_names = j.at("z_names").get<std::vector<std::string>>();
    cm.fitted_on = std::stoull(j.at("fitted_on").get<std::string>(), nullptr, 16);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad centering artifact: ") + e.what());
  }
  return cm;
}

}  // namespace mrtee
