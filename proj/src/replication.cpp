#include "mrtee/replication.hpp"

#include "mrtee/error.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mrtee {

const char* const kReplicationVersion = "v1";

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<FeatureSpec> feats(std::vector<std::string> f, std::vector<std::string> g, std::vector<std::string> z) {
  std::vector<FeatureSpec> out = {{Role::moderator_f, std::move(f), true}, {Role::control_g, std::move(g), true}};
  if (!z.empty()) out.push_back({Role::auxiliary_z, std::move(z), false});
  return out;
}

EstimatorConfig config(Method m, int lag, VarianceMode v, CenteringKind c = CenteringKind::orthogonal) {
  EstimatorConfig cfg;
  cfg.method = m;
  cfg.lag = lag;
  cfg.variance_mode = v;
  cfg.centering = c;
  return cfg;
}

std::string cfg_text(const char* kind, int n, int horizon, const char* beta0, double beta1, std::uint64_t seed,
                     const char* extra = "") {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "# replication %s\nkind = %s\nn = %d\nhorizon = %d\nbeta0 = %s\nbeta1 = %g\neta1 = -0.8\neta2 = 0.8\n"
                "rho = 0.5\nseed = %llu\n%s",
                kReplicationVersion, kind, n, horizon, beta0, beta1, static_cast<unsigned long long>(seed), extra);
  return buf;
}

const MetricRow& row(const McReport& rep, std::size_t method, std::size_t coef = 0, std::size_t n_coef = 1) {
  return rep.rows.at(method * n_coef + coef);
}

std::string tag(const char* name, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s=%g", name, v);
  return buf;
}

CellCheck cell(std::string label, double published, double lo, double hi, double reproduced, bool judged = true) {
  return {std::move(label), published, lo, hi, reproduced, judged};
}

CellCheck around(std::string label, double published, double tol, double reproduced, bool judged = true) {
  return cell(std::move(label), published, published - tol, published + tol, reproduced, judged);
}

CellCheck context(std::string label, double published, double reproduced) {
  return cell(std::move(label), published, -kInf, kInf, reproduced, false);
}

McReport run(const std::string& text, const std::vector<MethodSpec>& methods, const ReplicationOptions& opt) {
  DgmSpec spec = parse_dgm_config(text);
  spec.seed += opt.seed_offset;
  return run_monte_carlo(spec, methods, opt.replicates, opt.threads);
}

}  // namespace

bool TableRun::all_pass() const {
  for (const auto& c : cells)
    if (c.judged && !c.pass()) return false;
  return true;
}

std::vector<std::string> table_names() { return {"tab2", "tabfour", "timevarying", "robust", "centerby-mean", "moreTN"}; }

std::vector<std::string> embedded_configs(const std::string& table) {
  if (table == "tab2")
    return {cfg_text("lagged_eq12", 250, 30, "-0.1", 0.2, 2001), cfg_text("lagged_eq12", 250, 30, "-0.1", 0.5, 2002),
            cfg_text("lagged_eq12", 250, 30, "-0.1", 0.8, 2003)};
  if (table == "tabfour")
    return {cfg_text("proximal_j2", 250, 30, "-0.2", 0.2, 4001), cfg_text("proximal_j2", 250, 30, "-0.2", 0.5, 4002),
            cfg_text("proximal_j2", 250, 30, "-0.2", 0.8, 4003)};
  if (table == "timevarying") return {cfg_text("timevarying_j3", 250, 30, "-0.2, 0.02", 0.2, 5001)};
  if (table == "robust") return {cfg_text("nonmoderator_robust", 250, 30, "-0.2", 0.0, 6001)};
  if (table == "centerby-mean") {
    const char* trend = "trend_lo = 0.1\ntrend_hi = 0.9\n";
    return {cfg_text("centerby_mean_j1", 250, 30, "-0.2", 0.2, 7001, trend),
            cfg_text("centerby_mean_j1", 250, 30, "-0.2", 0.5, 7002, trend),
            cfg_text("centerby_mean_j1", 250, 30, "-0.2", 0.8, 7003, trend)};
  }
  if (table == "moreTN") {
    std::vector<std::string> out;
    std::uint64_t seed = 8001;
    for (int n : {100, 250, 500})
      for (int horizon : {30, 50, 100}) out.push_back(cfg_text("proximal_j2", n, horizon, "-0.2", 0.5, seed++));
    return out;
  }
  throw Error(ErrorCode::UnknownTable, "unknown table '" + table + "'");
}

std::vector<MethodSpec> lagged_methods() {
  return {{"WCLS", config(Method::wcls, 2, VarianceMode::plain_sandwich), feats({}, {}, {}), -1},
          {"A2-WCLS", config(Method::a2wcls_lagged, 2, VarianceMode::stacked), feats({}, {}, {"z"}), 0},
          {"uncentered-lag-adjust", config(Method::a2wcls_lagged_naive, 2, VarianceMode::stacked), feats({}, {}, {"z"}), 0}};
}

std::vector<MethodSpec> proximal_methods() {
  // Z is unaffected by past treatment here, so the centering adds no first-order uncertainty.
  return {{"WCLS", config(Method::wcls, 1, VarianceMode::plain_sandwich), feats({}, {"z"}, {}), -1},
          {"A2-WCLS", config(Method::a2wcls, 1, VarianceMode::plain_sandwich), feats({}, {"z"}, {"z"}), 0}};
}

std::vector<MethodSpec> timevarying_methods() {
  return {{"WCLS", config(Method::wcls, 1, VarianceMode::plain_sandwich), feats({"t"}, {}, {}), -1},
          {"A2-WCLS", config(Method::a2wcls, 1, VarianceMode::stacked), feats({"t"}, {"z"}, {"z"}), 0}};
}

std::vector<MethodSpec> centering_methods() {
  return {{"WCLS", config(Method::wcls, 1, VarianceMode::plain_sandwich), feats({}, {"z"}, {}), -1},
          {"A2-WCLS", config(Method::a2wcls, 1, VarianceMode::stacked), feats({}, {"z"}, {"z"}), 0},
          {"Mean-Centered", config(Method::a2wcls, 1, VarianceMode::plain_sandwich, CenteringKind::global_mean),
           feats({}, {"z"}, {"z"}), 0}};
}

TableRun replicate_table(const std::string& name, const ReplicationOptions& opt) {
  TableRun out;
  out.name = name;
  const auto configs = embedded_configs(name);

  if (name == "tab2") {
    const double wse[] = {0.030, 0.032, 0.033}, ase[] = {0.028, 0.029, 0.031}, mre[] = {1.141, 1.161, 1.168};
    const double gain[] = {0.996, 0.998, 1.000}, rsd[] = {1.054, 1.064, 1.070};
    const double b1[] = {0.2, 0.5, 0.8}, acp[] = {0.939, 0.937, 0.943};
    for (int i = 0; i < 3; ++i) {
      McReport rep = run(configs[i], lagged_methods(), opt);
      out.reports.push_back(report_table(rep));
      out.runs.push_back(rep);
      const auto& w = row(rep, 0);
      const auto& a = row(rep, 1);
      const std::string s = " (" + tag("beta1", b1[i]) + ")";
      out.cells.push_back(around("WCLS est" + s, -0.100, 0.005, w.est_mean));
      out.cells.push_back(around("WCLS se" + s, wse[i], 0.002, w.se_mean));
      out.cells.push_back(around("A2-WCLS est" + s, -0.100, 0.005, a.est_mean));
      out.cells.push_back(around("A2-WCLS se" + s, ase[i], 0.002, a.se_mean));
      out.cells.push_back(around("A2-WCLS mRE" + s, mre[i], 0.03, a.mre));
      out.cells.push_back(cell("A2-WCLS CP" + s, acp[i], 0.93, 0.96, a.cp));
      out.cells.push_back(context("A2-WCLS %RE gain" + s, gain[i], a.re_gain_pct));
      out.cells.push_back(context("A2-WCLS RSD" + s, rsd[i], a.rsd));
    }
  } else if (name == "tabfour") {
    const double mre[] = {1.195, 1.194, 1.195}, rsd[] = {1.189, 1.190, 1.201}, b1[] = {0.2, 0.5, 0.8};
    for (int i = 0; i < 3; ++i) {
      McReport rep = run(configs[i], proximal_methods(), opt);
      out.reports.push_back(report_table(rep));
      out.runs.push_back(rep);
      const auto& a = row(rep, 1);
      const std::string s = " (" + tag("beta11", b1[i]) + ")";
      // Criterion quotes 1.195 for every setting.
      out.cells.push_back(around("A2-WCLS mRE" + s, 1.195, 0.03, a.mre));
      out.cells.push_back(cell("A2-WCLS %RE gain" + s, 1.0, 1.0, 1.0, a.re_gain_pct));
      out.cells.push_back(around("A2-WCLS se" + s, 0.027, 0.002, a.se_mean));
      out.cells.push_back(context("A2-WCLS mRE as published" + s, mre[i], a.mre));
      out.cells.push_back(context("A2-WCLS est" + s, -0.200, a.est_mean));
      out.cells.push_back(context("A2-WCLS RSD" + s, rsd[i], a.rsd));
    }
  } else if (name == "timevarying") {
    McReport rep = run(configs[0], timevarying_methods(), opt);
    out.reports.push_back(report_table(rep));
    out.runs.push_back(rep);
    const auto& a0 = row(rep, 1, 0, 2);
    const auto& a1 = row(rep, 1, 1, 2);
    out.cells.push_back(around("A2-WCLS mRE beta00", 1.262, 0.04, a0.mre));
    out.cells.push_back(around("A2-WCLS mRE beta01", 1.254, 0.04, a1.mre));
    out.cells.push_back(cell("A2-WCLS CP beta00", 0.946, 0.93, 0.96, a0.cp));
    out.cells.push_back(cell("A2-WCLS CP beta01", 0.951, 0.93, 0.96, a1.cp));
    out.cells.push_back(context("WCLS se beta00", 0.063, row(rep, 0, 0, 2).se_mean));
    out.cells.push_back(context("WCLS se beta01", 3.45e-3, row(rep, 0, 1, 2).se_mean));
    out.cells.push_back(context("A2-WCLS se beta00", 0.056, a0.se_mean));
    out.cells.push_back(context("A2-WCLS se beta01", 3.08e-3, a1.se_mean));
  } else if (name == "robust") {
    McReport rep = run(configs[0], proximal_methods(), opt);
    out.reports.push_back(report_table(rep));
    out.runs.push_back(rep);
    const auto& a = row(rep, 1);
    out.cells.push_back(around("A2-WCLS mRE", 1.000, 0.01, a.mre));
    out.cells.push_back(around("A2-WCLS est", -0.200, 0.005, a.est_mean));
    out.cells.push_back(context("A2-WCLS %RE gain", 0.473, a.re_gain_pct));
    out.cells.push_back(context("A2-WCLS se", 0.024, a.se_mean));
  } else if (name == "centerby-mean") {
    const double est[] = {-0.205, -0.217, -0.227}, cp[] = {0.952, 0.900, 0.855}, b1[] = {0.2, 0.5, 0.8};
    for (int i = 0; i < 3; ++i) {
      McReport rep = run(configs[i], centering_methods(), opt);
      out.reports.push_back(report_table(rep));
      out.runs.push_back(rep);
      const auto& orth = row(rep, 1);
      const auto& mean = row(rep, 2);
      const std::string s = " (" + tag("beta11", b1[i]) + ")";
      const bool judged = i == 2;
      out.cells.push_back(cell("Mean-Centered est" + s, est[i], est[i] - 0.01, est[i] + 0.01, mean.est_mean, judged));
      out.cells.push_back(cell("Mean-Centered CP" + s, cp[i], judged ? 0.0 : -kInf, judged ? 0.90 : kInf, mean.cp, judged));
      const double z = std::abs(mean.est_mean - mean.truth) / (mean.sd / std::sqrt(static_cast<double>(mean.n_ok)));
      out.cells.push_back(cell("Mean-Centered |bias| / MC-SE" + s, 3.0, judged ? 3.0 : -kInf, kInf, z, judged));
      out.cells.push_back(cell("A2-WCLS (orthogonal) est" + s, -0.200, -0.205, -0.195, orth.est_mean, judged));
    }
  } else if (name == "moreTN") {
    const double mre[] = {1.171, 1.172, 1.168, 1.169, 1.164, 1.168, 1.167, 1.166, 1.171};
    const double gain[] = {0.983, 0.989, 0.991, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    int k = 0;
    for (int n : {100, 250, 500})
      for (int horizon : {30, 50, 100}) {
        McReport rep = run(configs[k], proximal_methods(), opt);
        out.reports.push_back("N=" + std::to_string(n) + " T=" + std::to_string(horizon) + "\n" + report_table(rep));
        out.runs.push_back(rep);
        const auto& a = row(rep, 1);
        const std::string s = " (N=" + std::to_string(n) + ", T=" + std::to_string(horizon) + ")";
        out.cells.push_back(cell("A2-WCLS mRE" + s, mre[k], 1.164 - 0.03, 1.172 + 0.03, a.mre));
        if (n >= 250)
          out.cells.push_back(cell("A2-WCLS %RE gain" + s, gain[k], 1.0, 1.0, a.re_gain_pct));
        else
          out.cells.push_back(cell("A2-WCLS %RE gain" + s, gain[k], 0.98, 1.0, a.re_gain_pct));
        ++k;
      }
  } else {
    throw Error(ErrorCode::UnknownTable, "unknown table '" + name + "'");
  }
  return out;
}

std::string format_table_run(const TableRun& run) {
  std::ostringstream out;
  out << "== " << run.name << " (replication " << kReplicationVersion << ") ==\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-46s %10s %10s %21s  %s\n", "cell", "published", "reproduced", "accepted", "status");
  out << line;
  for (const auto& c : run.cells) {
    char range[64];
    if (!c.judged)
      std::snprintf(range, sizeof range, "%21s", "-");
    else if (std::isinf(c.hi))
      std::snprintf(range, sizeof range, "[%8.4g, %8s]", c.lo, "inf");
    else
      std::snprintf(range, sizeof range, "[%8.4g, %8.4g]", c.lo, c.hi);
    std::snprintf(line, sizeof line, "%-46s %10.4g %10.4g %21s  %s\n", c.label.c_str(), c.published, c.reproduced, range,
                  c.judged ? (c.pass() ? "PASS" : "FAIL") : "info");
    out << line;
  }
  return out.str();
}

}  // namespace mrtee
