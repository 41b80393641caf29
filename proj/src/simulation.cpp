#include "mrtee/simulation.hpp"

#include "mrtee/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace mrtee {

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

struct Draws {
  std::normal_distribution<double> normal{0.0, 1.0};
  std::uniform_real_distribution<double> unif{0.0, 1.0};
};

std::vector<FeatureSpec> default_schema(DgmKind kind) {
  if (kind == DgmKind::timevarying_j3)
    return {{Role::moderator_f, {"t"}, true}, {Role::control_g, {}, true}, {Role::auxiliary_z, {"z"}, false}};
  return {{Role::moderator_f, {}, true}, {Role::control_g, {"z"}, true}, {Role::auxiliary_z, {"z"}, false}};
}

}  // namespace

const char* dgm_kind_name(DgmKind k) {
  switch (k) {
    case DgmKind::lagged_eq12: return "lagged_eq12";
    case DgmKind::proximal_j2: return "proximal_j2";
    case DgmKind::timevarying_j3: return "timevarying_j3";
    case DgmKind::nonmoderator_robust: return "nonmoderator_robust";
    case DgmKind::binary_demo: return "binary_demo";
    case DgmKind::centerby_mean_j1: return "centerby_mean_j1";
  }
  return "?";
}

DgmKind parse_dgm_kind(const std::string& s) {
  for (DgmKind k : {DgmKind::lagged_eq12, DgmKind::proximal_j2, DgmKind::timevarying_j3, DgmKind::nonmoderator_robust,
                    DgmKind::binary_demo, DgmKind::centerby_mean_j1})
    if (s == dgm_kind_name(k)) return k;
  throw Error(ErrorCode::ConfigParse, "unknown DGM kind '" + s + "'");
}

Rng substream(std::uint64_t base_seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), 0x6d727465u};
  return Rng(seq);
}

std::vector<double> gen_ar_errors(int horizon, Rng& rng, double rho) {
  if (horizon < 1) throw Error(ErrorCode::InvalidArgument, "horizon must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw Error(ErrorCode::DomainError, "rho must lie in [0,1)");
  std::normal_distribution<double> normal(0.0, 1.0);
  const double phi = std::sqrt(rho);
  const double innov = std::sqrt(1.0 - rho);
  std::vector<double> e(horizon);
  e[0] = normal(rng);
  for (int t = 1; t < horizon; ++t) e[t] = phi * e[t - 1] + innov * normal(rng);
  return e;
}

int default_lag(DgmKind kind) { return kind == DgmKind::lagged_eq12 ? 2 : 1; }

std::vector<double> dgm_truth(const DgmSpec& spec) {
  if (spec.kind == DgmKind::timevarying_j3) {
    if (spec.beta0.size() != 2) throw Error(ErrorCode::ConfigParse, "timevarying_j3 needs beta0 = intercept, slope");
    return spec.beta0;
  }
  if (spec.beta0.size() != 1) throw Error(ErrorCode::ConfigParse, std::string(dgm_kind_name(spec.kind)) + " needs a scalar beta0");
  return spec.beta0;
}

MrtDataset gen_panel(const DgmSpec& spec) {
  Rng rng = substream(spec.seed, 0);
  return gen_panel(spec, rng);
}

MrtDataset gen_panel(const DgmSpec& spec, Rng& rng) {
  if (spec.n < 0 || spec.horizon < 1) throw Error(ErrorCode::InvalidArgument, "need n >= 0 and horizon >= 1");
  const std::vector<double> truth = dgm_truth(spec);
  const int T = spec.horizon;
  const Eigen::Index rows = static_cast<Eigen::Index>(spec.n) * T;
  RawPanel panel;
  panel.subject_id.resize(rows);
  panel.t.resize(rows);
  panel.a.resize(rows);
  panel.p.resize(rows);
  panel.y.resize(rows);
  panel.columns = {"z"};
  panel.values.resize(rows, 1);
  Draws draw;
  std::bernoulli_distribution coin(0.5);

  // Lag-2 panel: proximal effect (-0.2 + 0.8 Z_t), lagged effect (b + m Z_{t-1}).
  double prox_b = -0.2, lag_b = -0.1;
  if (spec.kind == DgmKind::lagged_eq12) lag_b = truth[0];
  if (spec.kind == DgmKind::proximal_j2) prox_b = truth[0];

  for (int j = 0; j < spec.n; ++j) {
    std::vector<double> err = gen_ar_errors(T, rng, spec.rho);
    double a_prev = 0.0, p_prev = 0.0, z_prev = 0.0;
    for (int t = 1; t <= T; ++t) {
      const Eigen::Index r = static_cast<Eigen::Index>(j) * T + (t - 1);
      double z = 0.0, ez = 0.0;
      switch (spec.kind) {
        case DgmKind::timevarying_j3: {
          ez = 0.05 * t + 0.1 * a_prev;
          const double half = 0.01 * t;
          z = ez - half + 2.0 * half * draw.unif(rng);
          break;
        }
        case DgmKind::centerby_mean_j1: {
          const double frac = T > 1 ? static_cast<double>(t - 1) / (T - 1) : 0.0;
          const double q = spec.trend_lo + (spec.trend_hi - spec.trend_lo) * frac;
          z = draw.unif(rng) < q ? 1.0 : -1.0;
          ez = 2.0 * q - 1.0;
          break;
        }
        default:
          z = coin(rng) ? 1.0 : -1.0;
          break;
      }
      const double p = expit(spec.eta1 * a_prev + spec.eta2 * z);
      const double a = draw.unif(rng) < p ? 1.0 : 0.0;
      const double eps = spec.noise ? err[t - 1] : 0.0;
      double y = 0.0;
      switch (spec.kind) {
        case DgmKind::lagged_eq12:
        case DgmKind::proximal_j2:
          y = 0.2 * z + (prox_b + 0.8 * z) * (a - p) + (lag_b + spec.beta1 * z_prev) * (a_prev - p_prev) + eps;
          break;
        case DgmKind::nonmoderator_robust:
          y = 0.2 * z + truth[0] * (a - p) + eps;
          break;
        case DgmKind::timevarying_j3: {
          const double delta = spec.noise ? draw.normal(rng) : 0.0;
          y = (truth[0] + truth[1] * t + delta + spec.beta1 * (z - ez)) * (a - p) + 0.8 * z + eps;
          break;
        }
        case DgmKind::centerby_mean_j1:
          y = 0.8 * (z - ez) + (truth[0] + spec.beta1 * (z - ez)) * (a - p) + eps;
          break;
        case DgmKind::binary_demo: {
          const double mean = expit(logit(spec.base_rate) + spec.base_slope * z) * std::exp(a * (truth[0] + spec.beta1 * z));
          if (!(mean < 1.0)) throw Error(ErrorCode::DomainError, "binary_demo success probability reaches 1");
          y = spec.noise ? (draw.unif(rng) < mean ? 1.0 : 0.0) : mean;
          break;
        }
      }
      panel.subject_id[r] = j + 1;
      panel.t[r] = t;
      panel.a[r] = a;
      panel.p[r] = p;
      panel.y[r] = y;
      panel.values(r, 0) = z;
      a_prev = a;
      p_prev = p;
      z_prev = z;
    }
  }

  MrtDataset ds = MrtDataset::build(validate_panel(std::move(panel)), default_schema(spec.kind), default_lag(spec.kind));
  if (spec.kind == DgmKind::centerby_mean_j1 && spec.n > 0) {
    // Numerator p~_t: share treated among subjects at each decision point.
    Eigen::VectorXd by_t = Eigen::VectorXd::Zero(T);
    for (Eigen::Index r = 0; r < ds.n_rows(); ++r) by_t[ds.t(r) - 1] += ds.a()[r];
    by_t /= static_cast<double>(spec.n);
    Eigen::VectorXd pt(ds.n_rows());
    for (Eigen::Index r = 0; r < ds.n_rows(); ++r) pt[r] = std::clamp(by_t[ds.t(r) - 1], 1e-3, 1.0 - 1e-3);
    ds = ds.with_ptilde(pt);
  }
  return ds;
}

ComparisonMetrics compute_metrics(const std::vector<double>& var_m, const std::vector<double>& var_b,
                                  const std::vector<double>& est_m, const std::vector<double>& est_b) {
  const std::size_t n = var_m.size();
  if (var_b.size() != n || est_m.size() != n || est_b.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "metric inputs must share the replicate count");
  if (n == 0) throw Error(ErrorCode::ZeroVariance, "no replicates to compare");
  ComparisonMetrics out{0.0, 0.0, 1.0};
  for (std::size_t i = 0; i < n; ++i) {
    if (!(var_m[i] > 0.0)) throw Error(ErrorCode::ZeroVariance, "method variance is not positive");
    out.re_gain_pct += var_b[i] > var_m[i] ? 1.0 : 0.0;
    out.mre += var_b[i] / var_m[i];
  }
  out.re_gain_pct /= static_cast<double>(n);
  out.mre /= static_cast<double>(n);
  if (n >= 2) {
    auto sd = [](const std::vector<double>& v) {
      double m = 0.0;
      for (double x : v) m += x;
      m /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - m) * (x - m);
      return std::sqrt(ss / static_cast<double>(v.size() - 1));
    };
    const double sm = sd(est_m), sb = sd(est_b);
    if (!(sm > 0.0)) throw Error(ErrorCode::ZeroVariance, "method estimates do not vary across replicates");
    out.rsd = sb / sm;
  }
  return out;
}

McReport run_monte_carlo(const DgmSpec& spec, const std::vector<MethodSpec>& methods, int replicates, int threads) {
  if (replicates < 1) throw Error(ErrorCode::InvalidArgument, "replicates must be >= 1");
  for (std::size_t m = 0; m < methods.size(); ++m)
    if (methods[m].baseline >= static_cast<int>(methods.size()) || methods[m].baseline == static_cast<int>(m))
      throw Error(ErrorCode::InvalidArgument, "method '" + methods[m].label + "' has an invalid baseline index");
  const std::vector<double> truth = dgm_truth(spec);
  const std::size_t nm = methods.size();
  std::vector<ReplicateRow> rows(static_cast<std::size_t>(replicates) * nm);

  auto run_one = [&](int r) {
    Rng rng = substream(spec.seed, static_cast<std::uint64_t>(r));
    std::optional<MrtDataset> panel;
    std::string gen_error;
    try {
      panel = gen_panel(spec, rng);
    } catch (const std::exception& e) {
      gen_error = e.what();
    }
    for (std::size_t m = 0; m < nm; ++m) {
      ReplicateRow& row = rows[static_cast<std::size_t>(r) * nm + m];
      row.replicate = r;
      row.method = static_cast<int>(m);
      if (!panel) {
        row.error = gen_error;
        continue;
      }
      try {
        const auto& ms = methods[m];
        MrtDataset ds = ms.features.empty() ? *panel : panel->with_features(ms.features);
        if (ds.lag() != ms.cfg.lag) ds = ds.with_lag(ms.cfg.lag);
        FitResult fr = fit(ds, ms.cfg);
        const Eigen::Index k = fr.beta0.size();
        if (k != static_cast<Eigen::Index>(truth.size()))
          throw Error(ErrorCode::DimensionMismatch, "fitted effect has " + std::to_string(k) + " components, truth has " +
                                                        std::to_string(truth.size()));
        for (Eigen::Index c = 0; c < k; ++c) {
          row.est.push_back(fr.beta0[c]);
          row.se.push_back(fr.se[c]);
          row.avar.push_back(fr.vcov_beta0(c, c));
          row.covers.push_back(fr.ci_lo[c] <= truth[c] && truth[c] <= fr.ci_hi[c] ? 1 : 0);
        }
        row.ok = true;
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };

  const int workers = std::max(1, std::min(threads, replicates));
  if (workers == 1) {
    for (int r = 0; r < replicates; ++r) run_one(r);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int r = next++; r < replicates; r = next++) run_one(r);
      });
    for (auto& th : pool) th.join();
  }

  McReport rep;
  rep.replicates = replicates;
  rep.seed = spec.seed;
  for (int r = 0; r < replicates; ++r) rep.stream_ids.push_back(static_cast<std::uint64_t>(r));
  auto at = [&](int r, std::size_t m) -> const ReplicateRow& { return rows[static_cast<std::size_t>(r) * nm + m]; };
  const std::vector<std::string> coef_names =
      truth.size() == 2 ? std::vector<std::string>{"beta00", "beta01"} : std::vector<std::string>{"beta0"};

  for (std::size_t m = 0; m < nm; ++m) {
    for (std::size_t c = 0; c < truth.size(); ++c) {
      MetricRow mr;
      mr.method = methods[m].label;
      mr.coefficient = coef_names[c];
      mr.truth = truth[c];
      std::vector<double> est;
      for (int r = 0; r < replicates; ++r) {
        const auto& row = at(r, m);
        if (!row.ok) {
          ++mr.n_failed;
          continue;
        }
        ++mr.n_ok;
        est.push_back(row.est[c]);
        mr.est_mean += row.est[c];
        mr.se_mean += row.se[c];
        mr.cp += row.covers[c];
      }
      if (mr.n_ok > 0) {
        mr.est_mean /= mr.n_ok;
        mr.se_mean /= mr.n_ok;
        mr.cp /= mr.n_ok;
        double ss = 0.0;
        for (double e : est) ss += (e - mr.est_mean) * (e - mr.est_mean);
        mr.sd = mr.n_ok > 1 ? std::sqrt(ss / (mr.n_ok - 1)) : 0.0;
      }
      const int b = methods[m].baseline;
      if (b >= 0) {
        std::vector<double> vm, vb, em, eb;
        for (int r = 0; r < replicates; ++r) {
          const auto& rm = at(r, m);
          const auto& rb = at(r, static_cast<std::size_t>(b));
          if (!rm.ok || !rb.ok) continue;
          vm.push_back(rm.avar[c]);
          vb.push_back(rb.avar[c]);
          em.push_back(rm.est[c]);
          eb.push_back(rb.est[c]);
        }
        if (!vm.empty()) {
          ComparisonMetrics cmp = compute_metrics(vm, vb, em, eb);
          mr.has_baseline = true;
          mr.re_gain_pct = cmp.re_gain_pct;
          mr.mre = cmp.mre;
          mr.rsd = cmp.rsd;
        }
      }
      rep.rows.push_back(mr);
    }
  }
  rep.replicate_rows = std::move(rows);
  return rep;
}

namespace {

std::string g6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string g17(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string report_table(const McReport& report) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-24s %-8s %9s %9s %9s %7s %8s %7s %7s %6s\n", "method", "coef", "truth", "est", "se",
                "cp", "re_gain", "mre", "rsd", "fail");
  out << line;
  for (const auto& r : report.rows) {
    if (r.has_baseline)
      std::snprintf(line, sizeof line, "%-24s %-8s %9.4f %9.4f %9.5f %7.3f %8.3f %7.3f %7.3f %6d\n", r.method.c_str(),
                    r.coefficient.c_str(), r.truth, r.est_mean, r.se_mean, r.cp, r.re_gain_pct, r.mre, r.rsd, r.n_failed);
    else
      std::snprintf(line, sizeof line, "%-24s %-8s %9.4f %9.4f %9.5f %7.3f %8s %7s %7s %6d\n", r.method.c_str(),
                    r.coefficient.c_str(), r.truth, r.est_mean, r.se_mean, r.cp, "-", "-", "-", r.n_failed);
    out << line;
  }
  out << "replicates: " << report.replicates << "  seed: " << report.seed << "\n";
  return out.str();
}

std::string report_csv(const McReport& report) {
  std::ostringstream out;
  out << "method,coefficient,truth,est_mean,se_mean,sd,cp,re_gain_pct,mre,rsd,n_ok,n_failed\n";
  for (const auto& r : report.rows) {
    out << r.method << ',' << r.coefficient << ',' << g6(r.truth) << ',' << g17(r.est_mean) << ',' << g17(r.se_mean) << ','
        << g17(r.sd) << ',' << g17(r.cp) << ',';
    if (r.has_baseline)
      out << g17(r.re_gain_pct) << ',' << g17(r.mre) << ',' << g17(r.rsd);
    else
      out << ",,";
    out << ',' << r.n_ok << ',' << r.n_failed << '\n';
  }
  return out.str();
}

std::string replicates_csv(const McReport& report, const std::vector<MethodSpec>& methods) {
  std::ostringstream out;
  out << "replicate,stream_seed,method,coefficient,ok,estimate,se,avar,covers,error\n";
  for (const auto& row : report.replicate_rows) {
    const std::string& label = methods.at(row.method).label;
    if (!row.ok) {
      std::string err = row.error;
      std::replace(err.begin(), err.end(), ',', ';');
      out << row.replicate << ',' << report.seed << ':' << row.replicate << ',' << label << ",,0,,,,," << err << '\n';
      continue;
    }
    for (std::size_t c = 0; c < row.est.size(); ++c)
      out << row.replicate << ',' << report.seed << ':' << row.replicate << ',' << label << ',' << c << ",1," << g17(row.est[c])
          << ',' << g17(row.se[c]) << ',' << g17(row.avar[c]) << ',' << row.covers[c] << ",\n";
  }
  return out.str();
}

DgmSpec parse_dgm_config(const std::string& text) {
  DgmSpec spec;
  bool beta0_set = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) { throw Error(ErrorCode::ConfigParse, "line " + std::to_string(line_no) + ": " + msg); };
  auto to_double = [&](const std::string& v) {
    std::size_t pos = 0;
    double d = 0.0;
    try {
      d = std::stod(v, &pos);
    } catch (const std::exception&) {
      fail("'" + v + "' is not a number");
    }
    if (pos != v.size() || !std::isfinite(d)) fail("'" + v + "' is not a finite number");
    return d;
  };
  auto to_int = [&](const std::string& v) {
    const double d = to_double(v);
    if (d != std::floor(d)) fail("'" + v + "' is not an integer");
    return static_cast<long long>(d);
  };
  auto strip = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected key = value");
    const std::string key = strip(line.substr(0, eq));
    const std::string val = strip(line.substr(eq + 1));
    if (key == "kind") spec.kind = parse_dgm_kind(val);
    else if (key == "n") spec.n = static_cast<int>(to_int(val));
    else if (key == "horizon" || key == "T") spec.horizon = static_cast<int>(to_int(val));
    else if (key == "beta0") {
      spec.beta0.clear();
      std::istringstream parts(val);
      std::string item;
      while (std::getline(parts, item, ',')) spec.beta0.push_back(to_double(strip(item)));
      beta0_set = true;
    } else if (key == "beta1") spec.beta1 = to_double(val);
    else if (key == "eta1") spec.eta1 = to_double(val);
    else if (key == "eta2") spec.eta2 = to_double(val);
    else if (key == "rho") spec.rho = to_double(val);
    else if (key == "seed") {
      std::size_t pos = 0;
      try {
        spec.seed = std::stoull(val, &pos);
      } catch (const std::exception&) {
        fail("seed must be a non-negative integer");
      }
      if (pos != val.size()) fail("seed must be a non-negative integer");
    }
    else if (key == "noise") {
      if (val == "true" || val == "1") spec.noise = true;
      else if (val == "false" || val == "0") spec.noise = false;
      else fail("noise must be true or false");
    } else if (key == "trend_lo") spec.trend_lo = to_double(val);
    else if (key == "trend_hi") spec.trend_hi = to_double(val);
    else if (key == "base_rate") spec.base_rate = to_double(val);
    else if (key == "base_slope") spec.base_slope = to_double(val);
    else fail("unknown key '" + key + "'");
  }
  if (!beta0_set) {
    switch (spec.kind) {
      case DgmKind::lagged_eq12: spec.beta0 = {-0.1}; break;
      case DgmKind::timevarying_j3: spec.beta0 = {-0.2, 0.02}; break;
      case DgmKind::binary_demo: spec.beta0 = {0.2}; break;
      default: spec.beta0 = {-0.2}; break;
    }
  }
  if (spec.n < 0 || spec.horizon < 1) throw Error(ErrorCode::ConfigParse, "need n >= 0 and horizon >= 1");
  dgm_truth(spec);
  return spec;
}

DgmSpec load_dgm_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_dgm_config(buf.str());
}

std::string dgm_config_text(const DgmSpec& spec) {
  std::ostringstream out;
  out << "kind = " << dgm_kind_name(spec.kind) << "\n";
  out << "n = " << spec.n << "\nhorizon = " << spec.horizon << "\nbeta0 = ";
  for (std::size_t i = 0; i < spec.beta0.size(); ++i) out << (i ? ", " : "") << g17(spec.beta0[i]);
  out << "\nbeta1 = " << g17(spec.beta1) << "\neta1 = " << g17(spec.eta1) << "\neta2 = " << g17(spec.eta2)
      << "\nrho = " << g17(spec.rho) << "\nseed = " << spec.seed << "\nnoise = " << (spec.noise ? "true" : "false") << "\n";
  if (spec.kind == DgmKind::centerby_mean_j1) out << "trend_lo = " << g17(spec.trend_lo) << "\ntrend_hi = " << g17(spec.trend_hi) << "\n";
  if (spec.kind == DgmKind::binary_demo) out << "base_rate = " << g17(spec.base_rate) << "\nbase_slope = " << g17(spec.base_slope) << "\n";
  return out.str();
}

}  // namespace mrtee
