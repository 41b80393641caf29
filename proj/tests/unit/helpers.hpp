#pragma once

#include "mrtee/data.hpp"

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

namespace testutil {

// Balanced panel, rows listed subject-major; `cols` maps covariate name to per-row values.
inline mrtee::RawPanel make_raw(int n, int horizon, const std::vector<double>& a, const std::vector<double>& p,
                                const std::vector<double>& y, const std::map<std::string, std::vector<double>>& cols = {}) {
  mrtee::RawPanel rp;
  const Eigen::Index rows = static_cast<Eigen::Index>(n) * horizon;
  rp.a = Eigen::Map<const Eigen::VectorXd>(a.data(), rows);
  rp.p = Eigen::Map<const Eigen::VectorXd>(p.data(), rows);
  rp.y = Eigen::Map<const Eigen::VectorXd>(y.data(), rows);
  for (int j = 0; j < n; ++j)
    for (int t = 1; t <= horizon; ++t) {
      rp.subject_id.push_back(j + 1);
      rp.t.push_back(t);
    }
  rp.values.resize(rows, static_cast<Eigen::Index>(cols.size()));
  Eigen::Index c = 0;
  for (const auto& [name, v] : cols) {
    rp.columns.push_back(name);
    rp.values.col(c++) = Eigen::Map<const Eigen::VectorXd>(v.data(), rows);
  }
  return rp;
}

inline mrtee::MrtDataset make_ds(mrtee::RawPanel rp, const std::vector<mrtee::FeatureSpec>& schema = {}, int lag = 1) {
  return mrtee::MrtDataset::build(mrtee::validate_panel(std::move(rp)), schema, lag);
}

inline std::vector<mrtee::FeatureSpec> schema(std::vector<std::string> f, std::vector<std::string> g,
                                              std::vector<std::string> z) {
  std::vector<mrtee::FeatureSpec> out = {{mrtee::Role::moderator_f, std::move(f), true},
                                         {mrtee::Role::control_g, std::move(g), true}};
  if (!z.empty()) out.push_back({mrtee::Role::auxiliary_z, std::move(z), false});
  return out;
}

inline double max_abs(const Eigen::MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace testutil
