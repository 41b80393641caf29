#pragma once

#include "mrtee/data.hpp"
#include "mrtee/estimators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace mrtee {

using Rng = std::mt19937_64;

// Independent stream for replicate `index` of experiment `base_seed`.
Rng substream(std::uint64_t base_seed, std::uint64_t index);

enum class DgmKind {
  lagged_eq12,          // lag-2 outcome with a moderated lagged effect
  proximal_j2,          // same panel, analysed at lag 1
  timevarying_j3,       // effect linear in t, uniform state around a treatment-dependent mean
  nonmoderator_robust,  // auxiliary predicts Y but does not moderate
  binary_demo,          // binary outcome with a log relative-risk effect
  centerby_mean_j1,     // state mean drifts with t; numerator p~_t is time specific
};

const char* dgm_kind_name(DgmKind k);
DgmKind parse_dgm_kind(const std::string& s);

struct DgmSpec {
  DgmKind kind = DgmKind::lagged_eq12;
  int n = 250;
  int horizon = 30;
  std::vector<double> beta0 = {-0.1};
  double beta1 = 0.5;
  double eta1 = -0.8, eta2 = 0.8;
  double rho = 0.5;  // corr(e_u, e_t) = rho^{|u-t|/2}
  std::uint64_t seed = 1;
  bool noise = true;  // false zeroes the outcome errors and effect perturbations
  // centerby_mean_j1: P(Z_t = 1) moves linearly from trend_lo at t = 1 to trend_hi at t = T.
  double trend_lo = 0.1, trend_hi = 0.9;
  // binary_demo: baseline P(Y = 1 | A = 0) = expit(logit(base_rate) + base_slope Z).
  double base_rate = 0.3, base_slope = 0.5;
};

// Every generator emits one covariate column, "z"; "t" as a feature is the decision index. p_tilde is attached
// per kind (pooled mean of A, or the time-specific mean for centerby_mean_j1).
std::vector<double> gen_ar_errors(int horizon, Rng& rng, double rho = 0.5);

MrtDataset gen_panel(const DgmSpec& spec);
MrtDataset gen_panel(const DgmSpec& spec, Rng& rng);

// Default analysis lag of a DGM kind.
int default_lag(DgmKind kind);
// True excursion effect(s) targeted at the default lag.
std::vector<double> dgm_truth(const DgmSpec& spec);

// One estimator applied in a Monte Carlo run.
struct MethodSpec {
  std::string label;
  EstimatorConfig cfg;
  std::vector<FeatureSpec> features;
  int baseline = -1;  // index of the comparison method for mRE, %RE gain and RSD
};

struct ReplicateRow {
  int replicate = 0;
  int method = 0;
  bool ok = false;
  std::string error;
  std::vector<double> est, se, avar;
  std::vector<int> covers;
};

struct MetricRow {
  std::string method, coefficient;
  double truth = 0.0;
  double est_mean = 0.0, se_mean = 0.0, sd = 0.0, cp = 0.0;
  bool has_baseline = false;
  double re_gain_pct = 0.0, mre = 1.0, rsd = 1.0;
  int n_ok = 0, n_failed = 0;
};

struct McReport {
  std::vector<MetricRow> rows;
  std::vector<ReplicateRow> replicate_rows;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> stream_ids;
};

struct ComparisonMetrics {
  double re_gain_pct, mre, rsd;
};

// Relative metrics of M against baseline B from per-replicate variances and estimates.
ComparisonMetrics compute_metrics(const std::vector<double>& var_m, const std::vector<double>& var_b,
                                  const std::vector<double>& est_m, const std::vector<double>& est_b);

McReport run_monte_carlo(const DgmSpec& spec, const std::vector<MethodSpec>& methods, int replicates, int threads = 1);

std::string report_table(const McReport& report);
std::string report_csv(const McReport& report);
std::string replicates_csv(const McReport& report, const std::vector<MethodSpec>& methods);

// key = value file, '#' comments. Keys mirror DgmSpec field names; beta0 takes a comma list.
DgmSpec parse_dgm_config(const std::string& text);
DgmSpec load_dgm_config(const std::string& path);
std::string dgm_config_text(const DgmSpec& spec);

}  // namespace mrtee
