#include "mrtee/estimators.hpp"

#include "mrtee/error.hpp"
#include "mrtee/linear.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace mrtee {

const char* method_name(Method m) {
  switch (m) {
    case Method::unadjusted_per_time: return "unadjusted_per_time";
    case Method::wcls_per_time: return "wcls_per_time";
    case Method::lin_per_time: return "lin_per_time";
    case Method::wcls: return "wcls";
    case Method::a2wcls: return "a2wcls";
    case Method::a2wcls_lagged: return "a2wcls_lagged";
    case Method::a2wcls_lagged_naive: return "a2wcls_lagged_naive";
    case Method::emee: return "emee";
    case Method::a2emee: return "a2emee";
  }
  return "?";
}

Method parse_method(const std::string& s) {
  for (Method m : {Method::unadjusted_per_time, Method::wcls_per_time, Method::lin_per_time, Method::wcls, Method::a2wcls,
                   Method::a2wcls_lagged, Method::a2wcls_lagged_naive, Method::emee, Method::a2emee})
    if (s == method_name(m)) return m;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + s + "'");
}

const char* variance_mode_name(VarianceMode v) {
  switch (v) {
    case VarianceMode::plain_sandwich: return "plain_sandwich";
    case VarianceMode::stacked: return "stacked";
    case VarianceMode::stacked_small_sample: return "stacked_small_sample";
  }
  return "?";
}

VarianceMode parse_variance_mode(const std::string& s) {
  if (s == "plain_sandwich" || s == "plain") return VarianceMode::plain_sandwich;
  if (s == "stacked") return VarianceMode::stacked;
  if (s == "stacked_small_sample" || s == "small_sample") return VarianceMode::stacked_small_sample;
  throw Error(ErrorCode::InvalidArgument, "unknown variance mode '" + s + "'");
}

const char* centering_kind_name(CenteringKind c) {
  switch (c) {
    case CenteringKind::orthogonal: return "orthogonal";
    case CenteringKind::global_mean: return "global_mean";
    case CenteringKind::time_specific_mean: return "time_specific_mean";
  }
  return "?";
}

CenteringKind parse_centering_kind(const std::string& s) {
  for (CenteringKind c : {CenteringKind::orthogonal, CenteringKind::global_mean, CenteringKind::time_specific_mean})
    if (s == centering_kind_name(c)) return c;
  throw Error(ErrorCode::InvalidArgument, "unknown centering '" + s + "'");
}

namespace {

struct LinearDesign {
  Eigen::MatrixXd x;
  Eigen::VectorXd y, w;
  std::vector<std::string> names;
  Eigen::Index n_alpha = 0, n_beta0 = 0, n_beta1 = 0;  // column layout alpha | beta0 | beta1
  int n_subjects = 0;
  std::vector<Eigen::Index> offsets;
  // Present when the centering was estimated and should be stacked.
  const CenteringModel* cm = nullptr;
  Eigen::VectorXd ca;     // A - p~ on the fitted rows
  Eigen::MatrixXd f_rows;
};

std::vector<Eigen::Index> usable_rows(const MrtDataset& ds) {
  std::vector<Eigen::Index> idx;
  idx.reserve(static_cast<std::size_t>(ds.n_subjects()) * ds.usable_per_subject());
  for (Eigen::Index r = 0; r < ds.n_rows(); ++r)
    if (ds.usable(r)) idx.push_back(r);
  return idx;
}

Eigen::MatrixXd take(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx, Eigen::Index shift = 0) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = m.row(idx[i] + shift);
  return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx, Eigen::Index shift = 0) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i] + shift];
  return out;
}

Eigen::VectorXd treatment_weights(const MrtDataset& ds, const std::vector<Eigen::Index>& idx) {
  const auto& a = ds.a();
  const auto& p = ds.p();
  const auto& pt = ds.p_tilde();
  Eigen::VectorXd w(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto r = idx[i];
    w[i] = a[r] == 1.0 ? pt[r] / p[r] : (1.0 - pt[r]) / (1.0 - p[r]);
  }
  return w;
}

void require_subjects(const MrtDataset& ds) {
  if (ds.n_subjects() < 1) throw Error(ErrorCode::InvalidArgument, "no subjects to fit");
}

bool uses_small_sample(const EstimatorConfig& cfg) { return cfg.variance_mode == VarianceMode::stacked_small_sample; }

void append_cols(Eigen::MatrixXd& x, Eigen::Index& col, const Eigen::MatrixXd& block) {
  x.middleCols(col, block.cols()) = block;
  col += block.cols();
}

void check_auxiliary(const Eigen::MatrixXd& zc, const Eigen::VectorXd& w, const std::vector<std::string>& names) {
  const double wsum = w.sum();
  for (Eigen::Index i = 0; i < zc.cols(); ++i) {
    const double ms = (w.array() * zc.col(i).array().square()).sum() / wsum;
    if (!(ms > 1e-20)) throw Error(ErrorCode::DegenerateAuxiliary, "auxiliary '" + names[i] + "' is constant after centering");
  }
}

// Derivative of the P_N regression score with respect to the vectorized centering parameters.
Eigen::MatrixXd centering_cross_derivative(const LinearDesign& d, const Eigen::VectorXd& coef, const Eigen::VectorXd& resid) {
  const Eigen::Index q = d.f_rows.cols(), pz = d.n_beta1, dim = d.x.cols();
  const double n = d.n_subjects;
  Eigen::VectorXd wca = d.w.cwiseProduct(d.ca);
  Eigen::MatrixXd m1 = d.x.transpose() * wca.asDiagonal() * d.f_rows;           // dim x q
  Eigen::RowVectorXd v = (wca.cwiseProduct(resid)).transpose() * d.f_rows;      // 1 x q
  Eigen::MatrixXd dmat = Eigen::MatrixXd::Zero(dim, q * pz);
  for (Eigen::Index i = 0; i < pz; ++i) {
    const Eigen::Index col = d.n_alpha + d.n_beta0 + i;
    Eigen::MatrixXd block = coef[col] * m1;
    block.row(col) -= v;
    dmat.middleCols(i * q, q) = block / n;
  }
  return dmat;
}

FitResult finish_linear(const LinearDesign& d, const EstimatorConfig& cfg, Method method) {
  FitResult res;
  res.method = method_name(method);
  res.n_subjects = d.n_subjects;
  res.ci_level = cfg.ci_level;
  res.small_sample = uses_small_sample(cfg);

  WlsSolution sol = wls_solve(d.x, d.y, d.w, d.n_subjects);
  res.coef = sol.coef;
  res.bread = sol.bread;
  res.alpha = sol.coef.head(d.n_alpha);
  res.beta0 = sol.coef.segment(d.n_alpha, d.n_beta0);
  res.beta1 = sol.coef.tail(d.n_beta1);
  res.alpha_names.assign(d.names.begin(), d.names.begin() + d.n_alpha);
  res.beta0_names.assign(d.names.begin() + d.n_alpha, d.names.begin() + d.n_alpha + d.n_beta0);
  res.beta1_names.assign(d.names.begin() + d.n_alpha + d.n_beta0, d.names.end());
  for (Eigen::Index k = 0; k < d.n_beta0; ++k) res.beta0_index.push_back(d.n_alpha + k);

  SandwichParts parts = make_sandwich_parts(sol.bread, subject_scores(d.x, d.w, sol.resid, d.offsets));
  Eigen::MatrixXd scores = parts.subject_scores;
  if (res.small_sample) {
    parts.hat_blocks = LeverageInputs{d.x, d.w, sol.resid, d.offsets};
    scores = small_sample_scores(parts);
  }
  std::string mode = "plain_sandwich";
  if (cfg.variance_mode != VarianceMode::plain_sandwich && d.cm != nullptr && d.n_beta1 > 0) {
    StackedParts sp;
    sp.u_theta_scores = d.cm->score_meta;
    sp.theta_bread = d.cm->theta_bread();
    sp.cross_derivative = centering_cross_derivative(d, sol.coef, sol.resid);
    scores = stacked_scores(scores, sp);
    mode = "stacked";
  }
  if (res.small_sample) mode += "+small_sample";
  res.variance_mode = mode;
  res.per_subject_scores = scores;
  parts.meat = meat_from_scores(scores);
  res.vcov = plain_sandwich(parts);
  res.vcov_beta0 = res.vcov.block(d.n_alpha, d.n_alpha, d.n_beta0, d.n_beta0);
  res.se = (res.vcov_beta0.diagonal().cwiseMax(0.0) / static_cast<double>(d.n_subjects)).cwiseSqrt();
  auto ci = confidence_intervals(res.beta0, res.se, cfg.ci_level, res.small_sample, d.n_subjects,
                                 static_cast<int>(d.x.cols()));
  res.ci_lo = ci.lo;
  res.ci_hi = ci.hi;
  res.p_value = ci.p_value;
  res.ee_residual = (d.x.transpose() * d.w.cwiseProduct(sol.resid)).cwiseAbs().maxCoeff() / d.n_subjects;
  return res;
}

enum class Block { base, a2, lagged, lagged_naive };

LinearDesign build_smoothed(const MrtDataset& ds, Block kind, const Eigen::MatrixXd* mu_rows, const CenteringModel* cm) {
  require_subjects(ds);
  const auto idx = usable_rows(ds);
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  const Eigen::Index q = ds.f().cols(), d = ds.g().cols(), pz = ds.z().cols();
  const int lag = ds.lag();
  const bool has_aux = kind != Block::base;
  const bool is_lagged = kind == Block::lagged || kind == Block::lagged_naive;
  if (has_aux && pz < 1) throw Error(ErrorCode::DimensionMismatch, "A2 fits need at least one auxiliary column");
  if (is_lagged && lag < 2) throw Error(ErrorCode::InvalidArgument, "lagged A2 fit needs lag >= 2");

  LinearDesign des;
  des.n_subjects = ds.n_subjects();
  des.offsets = uniform_offsets(ds.n_subjects(), ds.usable_per_subject());
  des.y = take(ds.y(), idx);
  des.w = treatment_weights(ds, idx);
  des.ca = take(Eigen::VectorXd(ds.a() - ds.p_tilde()), idx);
  des.f_rows = take(ds.f(), idx);

  // Future-step blocks: (A_{t+u} - p_{t+u}) [1, Z_{t+u}] or their uncentered counterparts.
  Eigen::Index n_lag_cols = 0;
  if (kind == Block::lagged) n_lag_cols = (lag - 1) * (1 + pz);
  if (kind == Block::lagged_naive) n_lag_cols = (lag - 1) * (1 + 2 * pz);

  des.n_alpha = d + n_lag_cols;
  des.n_beta0 = q;
  des.n_beta1 = has_aux ? pz : 0;
  des.x.resize(n, des.n_alpha + des.n_beta0 + des.n_beta1);
  Eigen::Index col = 0;
  append_cols(des.x, col, take(ds.g(), idx));
  for (const auto& s : ds.g_names()) des.names.push_back(s);

  for (int u = 1; u <= lag - 1 && n_lag_cols > 0; ++u) {
    const Eigen::VectorXd au = take(ds.a(), idx, u);
    const Eigen::VectorXd pu = take(ds.p(), idx, u);
    const Eigen::MatrixXd zu = take(ds.z(), idx, u);
    const std::string tag = "[t+" + std::to_string(u) + "]";
    if (kind == Block::lagged) {
      const Eigen::VectorXd cu = au - pu;
      des.x.col(col++) = cu;
      des.names.push_back("A" + tag + "-p");
      for (Eigen::Index i = 0; i < pz; ++i) {
        des.x.col(col++) = cu.cwiseProduct(zu.col(i));
        des.names.push_back("(A" + tag + "-p):" + ds.z_names()[i] + tag);
      }
    } else {
      des.x.col(col++) = au;
      des.names.push_back("A" + tag);
      for (Eigen::Index i = 0; i < pz; ++i) {
        des.x.col(col++) = au.cwiseProduct(zu.col(i));
        des.names.push_back("A" + tag + ":" + ds.z_names()[i] + tag);
      }
      for (Eigen::Index i = 0; i < pz; ++i) {
        des.x.col(col++) = zu.col(i);
        des.names.push_back(ds.z_names()[i] + tag);
      }
    }
  }

  append_cols(des.x, col, des.ca.asDiagonal() * des.f_rows);
  for (const auto& s : ds.f_names()) des.names.push_back(s);

  if (has_aux) {
    Eigen::MatrixXd zc = take(Eigen::MatrixXd(ds.z() - *mu_rows), idx);
    Eigen::VectorXd cw = take(Eigen::VectorXd(ds.p_tilde().array() * (1.0 - ds.p_tilde().array())), idx);
    check_auxiliary(zc, cw, ds.z_names());
    append_cols(des.x, col, des.ca.asDiagonal() * zc);
    for (const auto& s : ds.z_names()) des.names.push_back(s);
    des.cm = cm;
  }
  return des;
}

void attach_lagged(FitResult& res, const MrtDataset& ds) {
  const Eigen::Index d = ds.g().cols(), pz = ds.z().cols();
  const int steps = ds.lag() - 1;
  LaggedNuisanceModel m;
  m.alpha_03 = res.alpha.head(d);
  m.alpha_u1.resize(steps);
  m.alpha_u2.resize(pz, steps);
  for (int u = 0; u < steps; ++u) {
    const Eigen::Index base = d + u * (1 + pz);
    m.alpha_u1[u] = res.alpha[base];
    m.alpha_u2.col(u) = res.alpha.segment(base + 1, pz);
  }
  res.lagged = m;
}

Eigen::MatrixXd centered_per_time(const Eigen::MatrixXd& g, std::vector<Eigen::Index>& kept) {
  Eigen::MatrixXd gc = g.rowwise() - g.colwise().mean();
  kept.clear();
  for (Eigen::Index c = 0; c < gc.cols(); ++c) {
    const double scale = std::max(1.0, g.col(c).cwiseAbs().maxCoeff());
    if (gc.col(c).cwiseAbs().maxCoeff() > 1e-12 * scale) kept.push_back(c);
  }
  Eigen::MatrixXd out(gc.rows(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) out.col(k) = gc.col(kept[k]);
  return out;
}

FitResult per_time(const MrtDataset& ds, int t, const EstimatorConfig& cfg, Method method) {
  require_subjects(ds);
  if (t < 1 || t > ds.last_usable_t())
    throw Error(ErrorCode::InvalidArgument, "decision point " + std::to_string(t) + " outside 1.." + std::to_string(ds.last_usable_t()));
  std::vector<Eigen::Index> idx(ds.n_subjects());
  for (int j = 0; j < ds.n_subjects(); ++j) idx[j] = ds.row_begin(j) + (t - 1);
  const Eigen::Index n = ds.n_subjects();
  const Eigen::VectorXd cp = take(Eigen::VectorXd(ds.a() - ds.p()), idx);

  Eigen::MatrixXd gc;
  std::vector<Eigen::Index> kept;
  if (method != Method::unadjusted_per_time) gc = centered_per_time(take(ds.g(), idx), kept);
  const Eigen::Index k = static_cast<Eigen::Index>(kept.size());

  LinearDesign des;
  des.n_subjects = ds.n_subjects();
  des.offsets = uniform_offsets(ds.n_subjects(), 1);
  des.y = take(ds.y(), idx);
  des.w = Eigen::VectorXd::Ones(n);
  des.n_alpha = 1 + k;
  des.n_beta0 = 1;
  des.n_beta1 = method == Method::lin_per_time ? k : 0;
  des.x.resize(n, des.n_alpha + 1 + des.n_beta1);
  des.x.col(0).setOnes();
  des.names.push_back("(intercept)");
  for (Eigen::Index c = 0; c < k; ++c) {
    des.x.col(1 + c) = gc.col(c);
    des.names.push_back(ds.g_names()[kept[c]]);
  }
  des.x.col(1 + k) = cp;
  des.names.push_back("A-p");
  for (Eigen::Index c = 0; c < des.n_beta1; ++c) {
    des.x.col(2 + k + c) = cp.cwiseProduct(gc.col(c));
    des.names.push_back("(A-p):" + ds.g_names()[kept[c]]);
  }
  return finish_linear(des, cfg, method);
}

}  // namespace

FitResult fit_unadjusted_per_time(const MrtDataset& ds, int t, const EstimatorConfig& cfg) {
  return per_time(ds, t, cfg, Method::unadjusted_per_time);
}

FitResult fit_wcls_per_time(const MrtDataset& ds, int t, const EstimatorConfig& cfg) {
  return per_time(ds, t, cfg, Method::wcls_per_time);
}

FitResult fit_lin_per_time(const MrtDataset& ds, int t, const EstimatorConfig& cfg) {
  return per_time(ds, t, cfg, Method::lin_per_time);
}

FitResult fit_wcls(const MrtDataset& ds, const EstimatorConfig& cfg) {
  return finish_linear(build_smoothed(ds, Block::base, nullptr, nullptr), cfg, Method::wcls);
}

FitResult fit_a2wcls(const MrtDataset& ds, const CenteringModel& cm, const EstimatorConfig& cfg) {
  if (ds.lag() != 1) throw Error(ErrorCode::InvalidArgument, "a2wcls is the proximal fit; use a2wcls_lagged for lag > 1");
  CenteringModel local = centering_from_theta(ds, cm.theta);
  const Eigen::MatrixXd mu = local.mu(ds);
  FitResult res = finish_linear(build_smoothed(ds, Block::a2, &mu, &local), cfg, Method::a2wcls);
  res.theta = cm.theta;
  return res;
}

FitResult fit_a2wcls_known_centering(const MrtDataset& ds, const Eigen::MatrixXd& mu_rows, const EstimatorConfig& cfg) {
  if (mu_rows.rows() != ds.n_rows() || mu_rows.cols() != ds.z().cols())
    throw Error(ErrorCode::DimensionMismatch, "centering values must be rows x p_z");
  const Block kind = ds.lag() == 1 ? Block::a2 : Block::lagged;
  FitResult res = finish_linear(build_smoothed(ds, kind, &mu_rows, nullptr), cfg, Method::a2wcls);
  if (kind == Block::lagged) {
    res.method = method_name(Method::a2wcls_lagged);
    attach_lagged(res, ds);
  }
  return res;
}

FitResult fit_a2wcls_lagged(const MrtDataset& ds, const CenteringModel& cm, const EstimatorConfig& cfg) {
  CenteringModel local = centering_from_theta(ds, cm.theta);
  const Eigen::MatrixXd mu = local.mu(ds);
  FitResult res = finish_linear(build_smoothed(ds, Block::lagged, &mu, &local), cfg, Method::a2wcls_lagged);
  res.theta = cm.theta;
  attach_lagged(res, ds);
  return res;
}

FitResult fit_a2wcls_lagged_naive(const MrtDataset& ds, const CenteringModel& cm, const EstimatorConfig& cfg) {
  CenteringModel local = centering_from_theta(ds, cm.theta);
  const Eigen::MatrixXd mu = local.mu(ds);
  FitResult res = finish_linear(build_smoothed(ds, Block::lagged_naive, &mu, &local), cfg, Method::a2wcls_lagged_naive);
  res.theta = cm.theta;
  return res;
}

FitResult fit(const MrtDataset& ds, const EstimatorConfig& cfg) {
  const MrtDataset& data = ds;
  if (data.lag() != cfg.lag) return fit(ds.with_lag(cfg.lag), cfg);
  auto centered = [&](auto&& fn) {
    if (cfg.centering == CenteringKind::orthogonal) return fn(fit_centering(data));
    const auto kind = cfg.centering == CenteringKind::global_mean ? NaiveCentering::global_mean : NaiveCentering::time_specific_mean;
    FitResult res = fit_a2wcls_known_centering(data, naive_centerings(data, kind), cfg);
    res.variance_mode += " (centering treated as known)";
    return res;
  };
  switch (cfg.method) {
    case Method::unadjusted_per_time: return fit_unadjusted_per_time(data, cfg.time_index, cfg);
    case Method::wcls_per_time: return fit_wcls_per_time(data, cfg.time_index, cfg);
    case Method::lin_per_time: return fit_lin_per_time(data, cfg.time_index, cfg);
    case Method::wcls: return fit_wcls(data, cfg);
    case Method::a2wcls: return centered([&](const CenteringModel& cm) { return fit_a2wcls(data, cm, cfg); });
    case Method::a2wcls_lagged: return centered([&](const CenteringModel& cm) { return fit_a2wcls_lagged(data, cm, cfg); });
    case Method::a2wcls_lagged_naive: return fit_a2wcls_lagged_naive(data, fit_centering(data), cfg);
    case Method::emee: return fit_emee(data, cfg);
    case Method::a2emee: return fit_a2emee(data, fit_centering(data), cfg);
  }
  throw Error(ErrorCode::InvalidArgument, "unhandled method");
}

ClosedFormGaps closed_form_gaps(double p, const Eigen::VectorXd& alpha1, const Eigen::VectorXd& beta1,
                                const Eigen::MatrixXd& sigma_g) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::DomainError, "p must lie in (0,1)");
  const Eigen::Index d = sigma_g.rows();
  if (sigma_g.cols() != d || alpha1.size() != d || beta1.size() != d)
    throw Error(ErrorCode::DomainError, "alpha1, beta1 and sigma must share dimension");
  if ((sigma_g - sigma_g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, sigma_g.cwiseAbs().maxCoeff()))
    throw Error(ErrorCode::DomainError, "sigma must be symmetric");
  if (d > 0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma_g, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff()))
      throw Error(ErrorCode::DomainError, "sigma must be positive semi-definite");
  }
  const double pq = p * (1.0 - p);
  const double skew = 1.0 - 2.0 * p;
  ClosedFormGaps g;
  g.gap_wcls_vs_u = -pq * alpha1.dot(sigma_g * (alpha1 + 2.0 * skew * beta1));
  const Eigen::VectorXd shifted = alpha1 + skew * beta1;
  const double bsb = beta1.dot(sigma_g * beta1);
  g.gap_lin_vs_u = shifted.dot(sigma_g * shifted) / pq + bsb;
  g.gap_lin_vs_wcls = (1.0 - 3.0 * p + 3.0 * p * p) / pq * bsb;
  return g;
}

namespace {

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string fit_report_text(const FitResult& fit) {
  std::ostringstream out;
  out << "method: " << fit.method << "\n";
  out << "variance: " << fit.variance_mode << "\n";
  out << "subjects: " << fit.n_subjects << "\n";
  out << "converged: " << (fit.converged ? "true" : "false") << "  iterations: " << fit.n_iter << "\n";
  out << "estimating-equation residual: " << num(fit.ee_residual) << "\n\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-28s %14s %14s %14s %14s %12s\n", "beta0", "estimate", "se", "ci_lo", "ci_hi", "p_value");
  out << line;
  for (Eigen::Index k = 0; k < fit.beta0.size(); ++k) {
    std::snprintf(line, sizeof line, "%-28s %14.6g %14.6g %14.6g %14.6g %12.4g\n", fit.beta0_names[k].c_str(), fit.beta0[k],
                  fit.se[k], fit.ci_lo[k], fit.ci_hi[k], fit.p_value[k]);
    out << line;
  }
  if (fit.beta1.size() > 0) {
    out << "\nbeta1 (auxiliary interactions)\n";
    for (Eigen::Index k = 0; k < fit.beta1.size(); ++k) {
      std::snprintf(line, sizeof line, "%-28s %14.6g\n", fit.beta1_names[k].c_str(), fit.beta1[k]);
      out << line;
    }
  }
  if (fit.alpha.size() > 0) {
    out << "\nalpha (nuisance)\n";
    for (Eigen::Index k = 0; k < fit.alpha.size(); ++k) {
      std::snprintf(line, sizeof line, "%-28s %14.6g\n", fit.alpha_names[k].c_str(), fit.alpha[k]);
      out << line;
    }
  }
  if (fit.theta) {
    out << "\ncentering theta\n";
    for (Eigen::Index r = 0; r < fit.theta->rows(); ++r) {
      for (Eigen::Index c = 0; c < fit.theta->cols(); ++c) out << (c ? " " : "") << num((*fit.theta)(r, c));
      out << "\n";
    }
  }
  return out.str();
}

std::string fit_report_csv(const FitResult& fit) {
  std::ostringstream out;
  out << "block,name,estimate,se,ci_lo,ci_hi,p_value\n";
  for (Eigen::Index k = 0; k < fit.beta0.size(); ++k)
    out << "beta0," << fit.beta0_names[k] << ',' << num(fit.beta0[k]) << ',' << num(fit.se[k]) << ',' << num(fit.ci_lo[k])
        << ',' << num(fit.ci_hi[k]) << ',' << num(fit.p_value[k]) << '\n';
  for (Eigen::Index k = 0; k < fit.beta1.size(); ++k) out << "beta1," << fit.beta1_names[k] << ',' << num(fit.beta1[k]) << ",,,,\n";
  for (Eigen::Index k = 0; k < fit.alpha.size(); ++k) out << "alpha," << fit.alpha_names[k] << ',' << num(fit.alpha[k]) << ",,,,\n";
  return out.str();
}

}  // namespace mrtee
