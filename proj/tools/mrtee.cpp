#include "mrtee/error.hpp"
#include "mrtee/estimators.hpp"
#include "mrtee/replication.hpp"
#include "mrtee/simulation.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace mrtee;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

Eigen::VectorXd parse_vector(const std::string& s) {
  auto items = split_list(s);
  Eigen::VectorXd v(static_cast<Eigen::Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    try {
      v[static_cast<Eigen::Index>(i)] = std::stod(items[i]);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, "not a number: '" + items[i] + "'");
    }
  }
  return v;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path + "'");
}

std::string invocation(int argc, char** argv) {
  std::string s = "mrtee";
  for (int i = 1; i < argc; ++i) s += std::string(" ") + argv[i];
  return s;
}

std::string exit_code_help() {
  std::string s = "Exit codes:\n  0  success\n  1  --strict replication with failing cells, or unexpected error\n  2  usage error\n";
  for (int c = 0; c <= static_cast<int>(ErrorCode::InvalidArgument); ++c) {
    auto code = static_cast<ErrorCode>(c);
    if (exit_code(code) == 2) continue;
    char line[80];
    std::snprintf(line, sizeof line, "  %d %s\n", exit_code(code), error_name(code));
    s += line;
  }
  return s;
}

std::vector<MethodSpec> default_lineup(DgmKind kind) {
  switch (kind) {
    case DgmKind::lagged_eq12: return lagged_methods();
    case DgmKind::timevarying_j3: return timevarying_methods();
    case DgmKind::centerby_mean_j1: return centering_methods();
    case DgmKind::binary_demo: {
      std::vector<FeatureSpec> base = {{Role::moderator_f, {}, true}, {Role::control_g, {"z"}, true}};
      std::vector<FeatureSpec> aux = base;
      aux.push_back({Role::auxiliary_z, {"z"}, false});
      EstimatorConfig e, a;
      e.method = Method::emee;
      a.method = Method::a2emee;
      return {{"EMEE", e, base, -1}, {"A2-EMEE", a, aux, 0}};
    }
    default: return proximal_methods();
  }
}

struct FitArgs {
  std::string data, method = "wcls", moderators, aux, controls, variance = "plain", centering = "orthogonal", out;
  int lag = 1, time_index = 1;
  double ci_level = 0.95;
};

int cmd_fit(const FitArgs& a) {
  std::vector<FeatureSpec> schema = {{Role::moderator_f, split_list(a.moderators), true},
                                     {Role::control_g, split_list(a.controls), true}};
  if (!a.aux.empty()) schema.push_back({Role::auxiliary_z, split_list(a.aux), false});
  EstimatorConfig cfg;
  cfg.method = parse_method(a.method);
  cfg.variance_mode = parse_variance_mode(a.variance);
  cfg.centering = parse_centering_kind(a.centering);
  cfg.lag = a.lag;
  cfg.ci_level = a.ci_level;
  cfg.time_index = a.time_index;
  MrtDataset ds = load_csv(a.data, schema, a.lag);
  FitResult r = fit(ds, cfg);
  const std::string text = fit_report_text(r);
  std::cout << text;
  if (!a.out.empty()) {
    write_file(a.out + ".txt", text);
    write_file(a.out + ".csv", fit_report_csv(r));
  }
  return 0;
}

struct SimulateArgs {
  std::string config, out, panel_out;
  int replicates = 100, threads = 1;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a) {
  DgmSpec spec = load_dgm_config(a.config);
  if (a.seed) spec.seed = *a.seed;
  if (!a.panel_out.empty()) write_csv(gen_panel(spec).raw(), a.panel_out);
  const auto methods = default_lineup(spec.kind);
  McReport rep = run_monte_carlo(spec, methods, a.replicates, a.threads);
  std::string text = "# config\n" + dgm_config_text(spec) + "# replicates = " + std::to_string(a.replicates) + "\n" +
                     report_table(rep);
  std::cout << text;
  if (!a.out.empty()) {
    write_file(a.out + "_report.txt", text);
    write_file(a.out + "_metrics.csv", report_csv(rep));
    write_file(a.out + "_replicates.csv", replicates_csv(rep, methods));
  }
  return 0;
}

struct ReplicateArgs {
  std::string table, out;
  int replicates = 1000, threads = 1;
  std::uint64_t seed_offset = 0;
  bool strict = false, show_config = false;
};

int cmd_replicate(const ReplicateArgs& a) {
  if (a.show_config) {
    for (const auto& c : embedded_configs(a.table)) std::cout << c << '\n';
    return 0;
  }
  ReplicationOptions opt;
  opt.replicates = a.replicates;
  opt.threads = a.threads;
  opt.seed_offset = a.seed_offset;
  TableRun run = replicate_table(a.table, opt);
  std::string text;
  for (const auto& r : run.reports) text += r + "\n";
  text += format_table_run(run);
  std::cout << text;
  if (!a.out.empty()) write_file(a.out, text);
  return a.strict && !run.all_pass() ? 1 : 0;
}

struct GapArgs {
  double p = 0.5;
  std::string alpha1 = "1", beta1 = "0", sigma = "1";
};

int cmd_gaps(const GapArgs& a) {
  Eigen::VectorXd alpha1 = parse_vector(a.alpha1), beta1 = parse_vector(a.beta1), s = parse_vector(a.sigma);
  const Eigen::Index d = alpha1.size();
  Eigen::MatrixXd sigma;
  if (s.size() == 1)
    sigma = s[0] * Eigen::MatrixXd::Identity(d, d);
  else if (s.size() == d * d)
    sigma = Eigen::Map<const Eigen::MatrixXd>(s.data(), d, d).transpose();
  else
    throw Error(ErrorCode::DimensionMismatch, "--sigma needs 1 or d*d values");
  ClosedFormGaps g = closed_form_gaps(a.p, alpha1, beta1, sigma);
  auto verdict = [](double reduction) { return reduction > 0 ? "gain" : reduction < 0 ? "loss" : "no change"; };
  std::printf("wcls_vs_unadjusted_meat_gap %.6g  (%s)\n", g.gap_wcls_vs_u,
              g.gap_wcls_vs_u < 0 ? "adjustment helps" : g.gap_wcls_vs_u > 0 ? "adjustment hurts" : "no change");
  std::printf("lin_vs_unadjusted_gain %.6g  (%s)\n", g.gap_lin_vs_u, verdict(g.gap_lin_vs_u));
  std::printf("lin_vs_wcls_gain %.6g  (%s)\n", g.gap_lin_vs_wcls, verdict(g.gap_lin_vs_wcls));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal excursion effect estimation for micro-randomized trials"};
  app.footer(exit_code_help());
  app.require_subcommand(1, 1);

  FitArgs fa;
  auto* fit_cmd = app.add_subcommand("fit", "Fit an estimator on a long-format CSV panel");
  fit_cmd->add_option("--data", fa.data, "CSV with columns subject_id,t,a,p,y and covariates")->required()->check(CLI::ExistingFile);
  std::vector<std::string> method_names;
  for (Method m : {Method::unadjusted_per_time, Method::wcls_per_time, Method::lin_per_time, Method::wcls, Method::a2wcls,
                   Method::a2wcls_lagged, Method::a2wcls_lagged_naive, Method::emee, Method::a2emee})
    method_names.push_back(method_name(m));
  fit_cmd->add_option("--method", fa.method, "Estimator")->check(CLI::IsMember(method_names));
  fit_cmd->add_option("--moderators", fa.moderators, "Comma-separated moderator columns (intercept always added)");
  fit_cmd->add_option("--aux", fa.aux, "Comma-separated auxiliary columns");
  fit_cmd->add_option("--controls", fa.controls, "Comma-separated control columns (intercept always added)");
  fit_cmd->add_option("--lag", fa.lag, "Outcome lag")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--variance", fa.variance, "plain | stacked | small_sample")
      ->check(CLI::IsMember({"plain", "plain_sandwich", "stacked", "small_sample", "stacked_small_sample"}));
  fit_cmd->add_option("--centering", fa.centering, "orthogonal | global_mean | time_specific_mean")
      ->check(CLI::IsMember({"orthogonal", "global_mean", "time_specific_mean"}));
  fit_cmd->add_option("--ci-level", fa.ci_level, "Confidence level")->check(CLI::Range(0.0, 1.0));
  fit_cmd->add_option("--time", fa.time_index, "Decision point for the per-time methods")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--out", fa.out, "Write <out>.txt and <out>.csv");

  SimulateArgs sa;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a seeded Monte Carlo study from a DGM config");
  sim_cmd->add_option("--config", sa.config, "key = value DGM config")->required()->check(CLI::ExistingFile);
  sim_cmd->add_option("--replicates", sa.replicates, "Monte Carlo replicates")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sa.seed, "Override the config seed");
  sim_cmd->add_option("--threads", sa.threads, "Worker threads")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--out", sa.out, "Write <out>_report.txt, <out>_metrics.csv, <out>_replicates.csv");
  sim_cmd->add_option("--panel-out", sa.panel_out, "Also write one generated panel as CSV");

  ReplicateArgs ra;
  auto* rep_cmd = app.add_subcommand("replicate", "Re-run a published simulation table and compare cell by cell");
  rep_cmd->add_option("--table", ra.table, "Table name")->required()->check(CLI::IsMember(table_names()));
  rep_cmd->add_option("--replicates", ra.replicates, "Monte Carlo replicates per setting")->check(CLI::PositiveNumber);
  rep_cmd->add_option("--threads", ra.threads, "Worker threads")->check(CLI::PositiveNumber);
  rep_cmd->add_option("--seed-offset", ra.seed_offset, "Added to every embedded seed");
  rep_cmd->add_option("--out", ra.out, "Write the comparison report to this file");
  rep_cmd->add_flag("--strict", ra.strict, "Exit 1 when any judged cell fails");
  rep_cmd->add_flag("--show-config", ra.show_config, "Print the embedded configs and exit");

  GapArgs ga;
  auto* gap_cmd = app.add_subcommand("gaps", "Closed-form asymptotic variance gaps at a single decision point");
  gap_cmd->add_option("--p", ga.p, "Randomization probability")->required();
  gap_cmd->add_option("--alpha1", ga.alpha1, "Comma-separated outcome slopes on g");
  gap_cmd->add_option("--beta1", ga.beta1, "Comma-separated effect slopes on g");
  gap_cmd->add_option("--sigma", ga.sigma, "Covariance of g: one value (times identity) or d*d row-major");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::cerr << "# " << invocation(argc, argv) << '\n';
  try {
    if (*fit_cmd) return cmd_fit(fa);
    if (*sim_cmd) return cmd_simulate(sa);
    if (*rep_cmd) return cmd_replicate(ra);
    if (*gap_cmd) return cmd_gaps(ga);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
