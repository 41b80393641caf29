#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mrtee {

enum class Role { moderator_f, auxiliary_z, control_g, numerator_ptilde };

struct FeatureSpec {
  Role role;
  std::vector<std::string> source_columns;
  bool intercept = false;
};

// Long-format panel as read from disk or produced by a generator. y holds the
// raw Y_{t+1} series; covariates are addressed by column name.
struct RawPanel {
  std::vector<std::int64_t> subject_id;
  std::vector<int> t;
  Eigen::VectorXd a, p, y;
  std::vector<std::string> columns;
  Eigen::MatrixXd values;  // rows x columns

  Eigen::Index rows() const { return a.size(); }
  int column_index(const std::string& name) const;  // -1 when absent
};

struct DesignBlocks {
  Eigen::MatrixXd f, z, g;
  Eigen::VectorXd centered_a, weight_w;
};

// Validated, immutable view of a panel with feature roles and lag applied.
// Rows are ordered by subject id and then by t.
class MrtDataset {
 public:
  static MrtDataset build(std::shared_ptr<const RawPanel> raw, const std::vector<FeatureSpec>& schema,
                          int lag = 1);

  MrtDataset with_features(const std::vector<FeatureSpec>& schema) const;
  MrtDataset with_lag(int lag) const;
  MrtDataset with_ptilde(const Eigen::VectorXd& p_tilde) const;
  MrtDataset with_ptilde(double p_tilde) const;

  int n_subjects() const { return n_subjects_; }
  int horizon() const { return horizon_; }
  int lag() const { return lag_; }
  Eigen::Index n_rows() const { return raw_->rows(); }
  // First row of subject j; rows of j are [row_begin(j), row_begin(j) + horizon()).
  Eigen::Index row_begin(int j) const { return static_cast<Eigen::Index>(j) * horizon_; }
  int last_usable_t() const { return horizon_ - lag_ + 1; }
  bool usable(Eigen::Index r) const { return raw_->t[r] <= last_usable_t(); }
  int usable_per_subject() const { return last_usable_t(); }

  std::int64_t subject_id(int j) const { return raw_->subject_id[row_begin(j)]; }
  int t(Eigen::Index r) const { return raw_->t[r]; }
  const Eigen::VectorXd& a() const { return raw_->a; }
  const Eigen::VectorXd& p() const { return raw_->p; }
  const Eigen::VectorXd& p_tilde() const { return p_tilde_; }
  const Eigen::VectorXd& y() const { return y_; }  // Y_{t+lag}; NaN on rows past last_usable_t()
  const Eigen::MatrixXd& f() const { return f_; }
  const Eigen::MatrixXd& z() const { return z_; }
  const Eigen::MatrixXd& g() const { return g_; }
  const std::vector<std::string>& f_names() const { return f_names_; }
  const std::vector<std::string>& z_names() const { return z_names_; }
  const std::vector<std::string>& g_names() const { return g_names_; }
  const std::vector<FeatureSpec>& schema() const { return schema_; }
  const RawPanel& raw() const { return *raw_; }
  std::shared_ptr<const RawPanel> raw_ptr() const { return raw_; }

  // Stable hash of the data, roles and lag.
  std::uint64_t fingerprint() const;

 private:
  MrtDataset() = default;
  void materialize();

  std::shared_ptr<const RawPanel> raw_;
  std::vector<FeatureSpec> schema_;
  int lag_ = 1;
  int n_subjects_ = 0;
  int horizon_ = 0;
  Eigen::VectorXd p_tilde_, y_;
  std::optional<Eigen::VectorXd> p_tilde_override_;
  Eigen::MatrixXd f_, z_, g_;
  std::vector<std::string> f_names_, z_names_, g_names_;
};

// Reorders rows canonically and checks every invariant of the long format.
std::shared_ptr<const RawPanel> validate_panel(RawPanel panel);

std::shared_ptr<const RawPanel> read_csv_panel(const std::string& path);
MrtDataset load_csv(const std::string& path, const std::vector<FeatureSpec>& schema, int lag = 1);
void write_csv(const RawPanel& panel, const std::string& path);
std::string to_csv(const RawPanel& panel);

DesignBlocks design_blocks(const MrtDataset& ds);

double pooled_treatment_mean(const RawPanel& panel);

}  // namespace mrtee
