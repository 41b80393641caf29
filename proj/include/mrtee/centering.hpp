#pragma once

#include "mrtee/data.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace mrtee {

// Linear centering mu_i(S) = f(S)' theta_i, fitted with p~(1 - p~) weights.
struct CenteringModel {
  Eigen::MatrixXd theta;  // q x p_z; column i centers auxiliary column i
  std::vector<std::string> f_names, z_names;
  std::uint64_t fitted_on = 0;
  Eigen::MatrixXd score_meta;  // N x (q p_z), entry (j, i q + k) is subject j's U(theta) component
  Eigen::MatrixXd gram;        // P_N sum_t p~(1 - p~) f f'

  // Per-row centering values, rows x p_z.
  Eigen::MatrixXd mu(const MrtDataset& ds) const;
  // P_N dU/dtheta in the same vectorized order as score_meta.
  Eigen::MatrixXd theta_bread() const;
};

CenteringModel fit_centering(const MrtDataset& ds);

// Centering built from a given theta, with scores evaluated on ds.
CenteringModel centering_from_theta(const MrtDataset& ds, const Eigen::MatrixXd& theta);

// q x p_z matrix P_N sum_t p~(1 - p~)(Z_i - f' theta_i) f.
Eigen::MatrixXd orthogonality_matrix(const MrtDataset& ds, const CenteringModel& cm);
double verify_orthogonality(const MrtDataset& ds, const CenteringModel& cm);

enum class NaiveCentering { time_specific_mean, global_mean };

// Per-row centering values (rows x p_z) from unweighted sample means.
Eigen::MatrixXd naive_centerings(const MrtDataset& ds, NaiveCentering kind);

std::string serialize_centering(const CenteringModel& cm);
CenteringModel deserialize_centering(const std::string& text);

}  // namespace mrtee
