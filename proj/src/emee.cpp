#include "mrtee/error.hpp"
#include "mrtee/estimators.hpp"
#include "mrtee/linear.hpp"

#include <cmath>
#include <deque>

namespace mrtee {

namespace {

struct BinaryDesign {
  Eigen::MatrixXd v;  // estimating-function multipliers [g, (A - p~) f, (A - p~)(Z - mu)]
  Eigen::MatrixXd g;  // baseline log-mean features
  Eigen::MatrixXd u;  // treatment log-ratio features [f, Z - mu]
  Eigen::VectorXd a, y, w, ca, pt;
  Eigen::MatrixXd f, z;
  std::vector<Eigen::Index> offsets;
  int n_subjects = 0;
  Eigen::Index n_alpha = 0, n_beta0 = 0, n_beta1 = 0;
};

BinaryDesign build_binary(const MrtDataset& ds, const Eigen::MatrixXd* mu_rows) {
  if (ds.n_subjects() < 1) throw Error(ErrorCode::InvalidArgument, "no subjects to fit");
  std::vector<Eigen::Index> idx;
  for (Eigen::Index r = 0; r < ds.n_rows(); ++r)
    if (ds.usable(r)) idx.push_back(r);
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  BinaryDesign b;
  b.n_subjects = ds.n_subjects();
  b.offsets = uniform_offsets(ds.n_subjects(), ds.usable_per_subject());
  b.n_alpha = ds.g().cols();
  b.n_beta0 = ds.f().cols();
  b.n_beta1 = mu_rows ? ds.z().cols() : 0;
  b.a.resize(n);
  b.y.resize(n);
  b.w.resize(n);
  b.pt.resize(n);
  b.g.resize(n, b.n_alpha);
  b.f.resize(n, b.n_beta0);
  b.z.resize(n, b.n_beta1);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = idx[i];
    b.a[i] = ds.a()[r];
    b.y[i] = ds.y()[r];
    if (b.y[i] != 0.0 && b.y[i] != 1.0) throw Error(ErrorCode::InvalidArgument, "binary fits need y in {0,1}");
    b.pt[i] = ds.p_tilde()[r];
    const double p = ds.p()[r];
    b.w[i] = b.a[i] == 1.0 ? b.pt[i] / p : (1.0 - b.pt[i]) / (1.0 - p);
    b.g.row(i) = ds.g().row(r);
    b.f.row(i) = ds.f().row(r);
    if (mu_rows) b.z.row(i) = ds.z().row(r) - mu_rows->row(r);
  }
  b.ca = b.a - b.pt;
  b.u.resize(n, b.n_beta0 + b.n_beta1);
  b.u << b.f, b.z;
  b.v.resize(n, b.n_alpha + b.u.cols());
  b.v << b.g, b.ca.asDiagonal() * b.u;
  return b;
}

// m_r = Y e^{-A u'beta} - e^{g'alpha}, the blipped-down residual.
Eigen::VectorXd residuals(const BinaryDesign& b, const Eigen::VectorXd& x, Eigen::VectorXd* base = nullptr,
                          Eigen::VectorXd* blip = nullptr) {
  const Eigen::VectorXd eg = (b.g * x.head(b.n_alpha)).array().exp();
  const Eigen::VectorXd ey = (b.y.array() * (-(b.a.array() * (b.u * x.tail(b.u.cols())).array())).exp()).matrix();
  if (base) *base = eg;
  if (blip) *blip = ey;
  return ey - eg;
}

Eigen::VectorXd ee(const BinaryDesign& b, const Eigen::VectorXd& x) {
  return b.v.transpose() * b.w.cwiseProduct(residuals(b, x)) / static_cast<double>(b.n_subjects);
}

Eigen::MatrixXd jacobian(const BinaryDesign& b, const Eigen::VectorXd& x) {
  Eigen::VectorXd eg, ey;
  residuals(b, x, &eg, &ey);
  Eigen::MatrixXd right(b.v.rows(), x.size());
  right << -(eg.asDiagonal() * b.g), -(b.a.cwiseProduct(ey).asDiagonal() * b.u);
  return b.v.transpose() * b.w.asDiagonal() * right / static_cast<double>(b.n_subjects);
}

struct NewtonOutcome {
  Eigen::VectorXd x;
  int iters = 0;
  std::vector<double> trace;
};

NewtonOutcome damped_newton(const BinaryDesign& b, Eigen::VectorXd x, const EstimatorConfig& cfg) {
  NewtonOutcome out;
  Eigen::VectorXd fx = ee(b, x);
  double norm = fx.norm();
  out.trace.push_back(norm);
  for (int it = 1; it <= cfg.max_iter; ++it) {
    out.iters = it;
    if (norm < 1e-15) break;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jacobian(b, x));
    if (!lu.isInvertible() || lu.rcond() < 1e-14) throw Error(ErrorCode::SingularJacobian, "estimating-equation Jacobian is singular");
    const Eigen::VectorXd step = lu.solve(-fx);
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h, lambda *= 0.5) {
      Eigen::VectorXd cand = x + lambda * step;
      Eigen::VectorXd fc = ee(b, cand);
      if (fc.allFinite() && fc.norm() < norm) {
        x = cand;
        fx = fc;
        norm = fc.norm();
        accepted = true;
        break;
      }
    }
    out.trace.push_back(norm);
    if (!accepted) {
      // No decrease available: already at the floating-point floor of the root.
      if (norm < 1e-12) break;
      throw Error(ErrorCode::NonConvergence, "step halving failed to reduce the estimating equation");
    }
    if ((lambda * step).cwiseAbs().maxCoeff() < cfg.tol) break;
    if (it == cfg.max_iter) throw Error(ErrorCode::NonConvergence, "Newton iteration hit max_iter");
  }
  out.x = x;
  return out;
}

Eigen::VectorXd initial_alpha(const BinaryDesign& b) {
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(b.n_alpha);
  const double ybar = b.y.mean();
  if (!(ybar > 0.0)) throw Error(ErrorCode::NonConvergence, "outcome is identically zero; log-mean model has no root");
  for (Eigen::Index c = 0; c < b.n_alpha; ++c)
    if ((b.g.col(c).array() == 1.0).all()) {
      alpha[c] = std::log(ybar);
      break;
    }
  return alpha;
}

FitResult finish_binary(const BinaryDesign& b, const Eigen::VectorXd& x, const EstimatorConfig& cfg, Method method,
                        const MrtDataset& ds) {
  FitResult res;
  res.method = method_name(method);
  res.n_subjects = b.n_subjects;
  res.ci_level = cfg.ci_level;
  res.coef = x;
  res.alpha = x.head(b.n_alpha);
  res.beta0 = x.segment(b.n_alpha, b.n_beta0);
  res.beta1 = x.tail(b.n_beta1);
  res.alpha_names = ds.g_names();
  res.beta0_names = ds.f_names();
  if (b.n_beta1 > 0) res.beta1_names = ds.z_names();
  for (Eigen::Index k = 0; k < b.n_beta0; ++k) res.beta0_index.push_back(b.n_alpha + k);

  const Eigen::VectorXd m = residuals(b, x);
  Eigen::MatrixXd scores = subject_scores(b.v, b.w, m, b.offsets);
  SandwichParts parts = make_sandwich_parts(-jacobian(b, x), scores);
  res.bread = parts.bread;
  res.per_subject_scores = scores;
  res.vcov = plain_sandwich(parts);
  res.variance_mode = "plain_sandwich";
  res.vcov_beta0 = res.vcov.block(b.n_alpha, b.n_alpha, b.n_beta0, b.n_beta0);
  res.se = (res.vcov_beta0.diagonal().cwiseMax(0.0) / static_cast<double>(b.n_subjects)).cwiseSqrt();
  auto ci = confidence_intervals(res.beta0, res.se, cfg.ci_level, false, b.n_subjects, static_cast<int>(x.size()));
  res.ci_lo = ci.lo;
  res.ci_hi = ci.hi;
  res.p_value = ci.p_value;
  res.ee_residual = ee(b, x).cwiseAbs().maxCoeff();
  return res;
}

void reject_small_sample(const EstimatorConfig& cfg) {
  if (cfg.variance_mode == VarianceMode::stacked_small_sample)
    throw Error(ErrorCode::InvalidArgument, "small-sample correction is available for the least-squares fits only");
}

// Solves the binary-outcome orthogonality condition for theta given (beta0, beta1), one auxiliary at a time.
Eigen::MatrixXd binary_centering(const MrtDataset& ds, const BinaryDesign& base, const Eigen::VectorXd& beta0,
                                 const Eigen::VectorXd& beta1, Eigen::MatrixXd theta, const EstimatorConfig& cfg) {
  const Eigen::Index q = base.f.cols();
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < base.a.size(); ++i)
    if (base.a[i] == 1.0 && base.y[i] != 0.0) rows.push_back(i);
  // Only treated rows with Y = 1 contribute; the factor e^{-f'beta0} and the weights fold into c.
  Eigen::VectorXd c(static_cast<Eigen::Index>(rows.size()));
  Eigen::MatrixXd fr(c.size(), q);
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    const auto i = rows[k];
    c[k] = base.w[i] * std::exp(-base.f.row(i).dot(beta0)) * base.y[i] * (1.0 - base.pt[i]);
    fr.row(k) = base.f.row(i);
  }
  if (c.size() == 0) return theta;
  const auto idx_usable = [&] {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index r = 0; r < ds.n_rows(); ++r)
      if (ds.usable(r)) idx.push_back(r);
    return idx;
  }();
  for (Eigen::Index i = 0; i < theta.cols(); ++i) {
    Eigen::VectorXd zr(c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k) zr[k] = ds.z()(idx_usable[rows[k]], i);
    const double bi = beta1[i];
    if (std::abs(bi) < 1e-8) {
      // Limit as beta1 -> 0: c-weighted projection of Z on f.
      Eigen::MatrixXd gram = fr.transpose() * c.asDiagonal() * fr;
      require_well_conditioned(gram, "binary centering Gram");
      theta.col(i) = gram.ldlt().solve(fr.transpose() * c.cwiseProduct(zr));
      continue;
    }
    Eigen::VectorXd th = theta.col(i);
    auto h = [&](const Eigen::VectorXd& t) {
      Eigen::VectorXd e = (-bi * (zr - fr * t).array()).exp();
      return Eigen::VectorXd(fr.transpose() * c.cwiseProduct(Eigen::VectorXd::Ones(c.size()) - e));
    };
    Eigen::VectorXd hv = h(th);
    for (int it = 0; it < cfg.max_iter && hv.norm() > 1e-15; ++it) {
      Eigen::VectorXd e = (-bi * (zr - fr * th).array()).exp();
      Eigen::MatrixXd jac = -bi * fr.transpose() * c.cwiseProduct(e).asDiagonal() * fr;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
      if (!lu.isInvertible()) throw Error(ErrorCode::SingularJacobian, "binary centering condition is singular");
      Eigen::VectorXd step = lu.solve(-hv);
      double lambda = 1.0;
      bool ok = false;
      for (int k = 0; k < 40; ++k, lambda *= 0.5) {
        Eigen::VectorXd cand = th + lambda * step;
        Eigen::VectorXd hc = h(cand);
        if (hc.allFinite() && hc.norm() < hv.norm()) {
          th = cand;
          hv = hc;
          ok = true;
          break;
        }
      }
      if (!ok || (lambda * step).cwiseAbs().maxCoeff() < cfg.tol) break;
    }
    theta.col(i) = th;
  }
  return theta;
}

}  // namespace

Eigen::VectorXd emee_estimating_function(const MrtDataset& ds, const Eigen::VectorXd& coef, const Eigen::MatrixXd* mu_rows) {
  BinaryDesign b = build_binary(ds, mu_rows);
  if (coef.size() != b.v.cols()) throw Error(ErrorCode::DimensionMismatch, "parameter vector has wrong length");
  return ee(b, coef);
}

FitResult fit_emee(const MrtDataset& ds, const EstimatorConfig& cfg) {
  reject_small_sample(cfg);
  BinaryDesign b = build_binary(ds, nullptr);
  Eigen::VectorXd x0(b.v.cols());
  x0 << initial_alpha(b), Eigen::VectorXd::Zero(b.n_beta0);
  NewtonOutcome nt = damped_newton(b, x0, cfg);
  FitResult res = finish_binary(b, nt.x, cfg, Method::emee, ds);
  res.n_iter = nt.iters;
  res.trace = nt.trace;
  return res;
}

FitResult fit_a2emee(const MrtDataset& ds, const CenteringModel& initial, const EstimatorConfig& cfg) {
  reject_small_sample(cfg);
  if (ds.z().cols() < 1) throw Error(ErrorCode::DimensionMismatch, "a2emee needs at least one auxiliary column");
  const FitResult start = fit_emee(ds, cfg);
  const BinaryDesign plain = build_binary(ds, nullptr);
  const Eigen::Index pz = ds.z().cols();

  Eigen::MatrixXd theta = initial.theta;
  if (theta.rows() != ds.f().cols() || theta.cols() != pz)
    throw Error(ErrorCode::DimensionMismatch, "initial centering does not match the data");
  Eigen::VectorXd x(start.coef.size() + pz);
  x << start.coef, Eigen::VectorXd::Zero(pz);

  std::deque<Eigen::VectorXd> history;
  std::vector<double> trace;
  int outer = 0;
  bool done = false;
  Eigen::MatrixXd mu;
  for (; outer < cfg.max_iter && !done; ++outer) {
    const Eigen::VectorXd beta0 = x.segment(plain.n_alpha, plain.n_beta0);
    const Eigen::VectorXd beta1 = x.tail(pz);
    if (outer > 0) theta = binary_centering(ds, plain, beta0, beta1, theta, cfg);
    mu = ds.f() * theta;
    BinaryDesign b = build_binary(ds, &mu);
    NewtonOutcome nt = damped_newton(b, x, cfg);
    Eigen::VectorXd state(nt.x.size() + theta.size());
    state << nt.x, Eigen::Map<const Eigen::VectorXd>(theta.data(), theta.size());
    trace.push_back(ee(b, nt.x).norm());
    if (!history.empty()) {
      const double last = (state - history.back()).cwiseAbs().maxCoeff();
      if (last < cfg.tol) done = true;
      for (std::size_t lag = 2; !done && lag <= 4 && lag <= history.size(); ++lag) {
        const double back = (state - history[history.size() - lag]).cwiseAbs().maxCoeff();
        if (back < 1e-2 * last && last > 1e3 * cfg.tol)
          throw Error(ErrorCode::OscillationDetected, "centering/parameter alternation cycles with period " + std::to_string(lag));
      }
    }
    history.push_back(state);
    if (history.size() > 5) history.pop_front();
    x = nt.x;
  }
  if (!done) throw Error(ErrorCode::NonConvergence, "alternating centering loop hit max_iter");

  BinaryDesign b = build_binary(ds, &mu);
  FitResult res = finish_binary(b, x, cfg, Method::a2emee, ds);
  res.n_iter = outer;
  res.trace = trace;
  res.theta = theta;
  return res;
}

}  // namespace mrtee
