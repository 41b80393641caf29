#include "mrtee/centering.hpp"
#include "mrtee/data.hpp"
#include "mrtee/error.hpp"
#include "mrtee/estimators.hpp"
#include "mrtee/replication.hpp"
#include "mrtee/simulation.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>

namespace py = pybind11;
using namespace mrtee;

namespace {

std::vector<FeatureSpec> make_schema(const std::vector<std::string>& moderators, const std::vector<std::string>& controls,
                                     const std::vector<std::string>& aux) {
  std::vector<FeatureSpec> schema = {{Role::moderator_f, moderators, true}, {Role::control_g, controls, true}};
  if (!aux.empty()) schema.push_back({Role::auxiliary_z, aux, false});
  return schema;
}

MrtDataset from_arrays(const std::vector<std::int64_t>& subject_id, const std::vector<int>& t, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& p, const Eigen::VectorXd& y,
                       const std::map<std::string, Eigen::VectorXd>& covariates,
                       const std::vector<std::string>& moderators, const std::vector<std::string>& controls,
                       const std::vector<std::string>& aux, int lag) {
  const auto n = static_cast<Eigen::Index>(subject_id.size());
  if (static_cast<Eigen::Index>(t.size()) != n || a.size() != n || p.size() != n || y.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "subject_id, t, a, p and y must have equal length");
  RawPanel rp;
  rp.subject_id = subject_id;
  rp.t = t;
  rp.a = a;
  rp.p = p;
  rp.y = y;
  rp.values.resize(n, static_cast<Eigen::Index>(covariates.size()));
  Eigen::Index c = 0;
  for (const auto& [name, col] : covariates) {
    if (col.size() != n) throw Error(ErrorCode::DimensionMismatch, "covariate " + name + " has the wrong length");
    rp.columns.push_back(name);
    rp.values.col(c++) = col;
  }
  return MrtDataset::build(validate_panel(std::move(rp)), make_schema(moderators, controls, aux), lag);
}

std::vector<MethodSpec> lineup(const std::string& name) {
  if (name == "lagged") return lagged_methods();
  if (name == "proximal") return proximal_methods();
  if (name == "timevarying") return timevarying_methods();
  if (name == "centering") return centering_methods();
  throw Error(ErrorCode::InvalidArgument, "unknown line-up '" + name + "' (lagged, proximal, timevarying, centering)");
}

py::list metric_rows(const McReport& rep) {
  py::list out;
  for (const auto& r : rep.rows) {
    py::dict d;
    d["method"] = r.method;
    d["coefficient"] = r.coefficient;
    d["truth"] = r.truth;
    d["est_mean"] = r.est_mean;
    d["se_mean"] = r.se_mean;
    d["sd"] = r.sd;
    d["cp"] = r.cp;
    d["has_baseline"] = r.has_baseline;
    d["re_gain_pct"] = r.re_gain_pct;
    d["mre"] = r.mre;
    d["rsd"] = r.rsd;
    d["n_ok"] = r.n_ok;
    d["n_failed"] = r.n_failed;
    out.append(d);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Causal excursion effect estimators for micro-randomized trials";

  static py::handle exc = py::exception<Error>(m, "MrteeError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = exc(e.what());
      err.attr("code") = error_name(e.code());
      err.attr("exit_code") = exit_code(e.code());
      PyErr_SetObject(exc.ptr(), err.ptr());
    }
  });

  py::class_<MrtDataset>(m, "Dataset")
      .def_static("from_csv",
                  [](const std::string& path, const std::vector<std::string>& moderators,
                     const std::vector<std::string>& controls, const std::vector<std::string>& aux, int lag) {
                    return load_csv(path, make_schema(moderators, controls, aux), lag);
                  },
                  py::arg("path"), py::arg("moderators") = std::vector<std::string>{},
                  py::arg("controls") = std::vector<std::string>{}, py::arg("aux") = std::vector<std::string>{},
                  py::arg("lag") = 1)
      .def_static("from_arrays", &from_arrays, py::arg("subject_id"), py::arg("t"), py::arg("a"), py::arg("p"),
                  py::arg("y"), py::arg("covariates") = std::map<std::string, Eigen::VectorXd>{},
                  py::arg("moderators") = std::vector<std::string>{}, py::arg("controls") = std::vector<std::string>{},
                  py::arg("aux") = std::vector<std::string>{}, py::arg("lag") = 1)
      .def("with_roles",
           [](const MrtDataset& ds, const std::vector<std::string>& moderators, const std::vector<std::string>& controls,
              const std::vector<std::string>& aux) { return ds.with_features(make_schema(moderators, controls, aux)); },
           py::arg("moderators") = std::vector<std::string>{}, py::arg("controls") = std::vector<std::string>{},
           py::arg("aux") = std::vector<std::string>{})
      .def("with_lag", &MrtDataset::with_lag)
      .def("with_ptilde", py::overload_cast<double>(&MrtDataset::with_ptilde, py::const_))
      .def("with_ptilde", py::overload_cast<const Eigen::VectorXd&>(&MrtDataset::with_ptilde, py::const_))
      .def_property_readonly("n_subjects", &MrtDataset::n_subjects)
      .def_property_readonly("horizon", &MrtDataset::horizon)
      .def_property_readonly("lag", &MrtDataset::lag)
      .def_property_readonly("n_rows", &MrtDataset::n_rows)
      .def_property_readonly("a", &MrtDataset::a)
      .def_property_readonly("p", &MrtDataset::p)
      .def_property_readonly("p_tilde", &MrtDataset::p_tilde)
      .def_property_readonly("y", &MrtDataset::y)
      .def_property_readonly("f", &MrtDataset::f)
      .def_property_readonly("g", &MrtDataset::g)
      .def_property_readonly("z", &MrtDataset::z)
      .def_property_readonly("f_names", &MrtDataset::f_names)
      .def_property_readonly("g_names", &MrtDataset::g_names)
      .def_property_readonly("z_names", &MrtDataset::z_names)
      .def_property_readonly("subject_ids", [](const MrtDataset& ds) { return ds.raw().subject_id; })
      .def_property_readonly("t", [](const MrtDataset& ds) { return ds.raw().t; })
      .def("fingerprint", &MrtDataset::fingerprint)
      .def("to_csv", [](const MrtDataset& ds) { return to_csv(ds.raw()); })
      .def("write_csv", [](const MrtDataset& ds, const std::string& path) { write_csv(ds.raw(), path); });

  py::class_<CenteringModel>(m, "CenteringModel")
      .def_readonly("theta", &CenteringModel::theta)
      .def_readonly("f_names", &CenteringModel::f_names)
      .def_readonly("z_names", &CenteringModel::z_names)
      .def("mu", &CenteringModel::mu)
      .def("serialize", [](const CenteringModel& cm) { return serialize_centering(cm); })
      .def_static("deserialize", &deserialize_centering);
  m.def("fit_centering", &fit_centering, py::arg("ds"));
  m.def("verify_orthogonality", &verify_orthogonality, py::arg("ds"), py::arg("centering"));

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("method", &FitResult::method)
      .def_readonly("variance_mode", &FitResult::variance_mode)
      .def_readonly("n_subjects", &FitResult::n_subjects)
      .def_readonly("ci_level", &FitResult::ci_level)
      .def_readonly("small_sample", &FitResult::small_sample)
      .def_readonly("beta0_names", &FitResult::beta0_names)
      .def_readonly("beta1_names", &FitResult::beta1_names)
      .def_readonly("alpha_names", &FitResult::alpha_names)
      .def_readonly("beta0", &FitResult::beta0)
      .def_readonly("beta1", &FitResult::beta1)
      .def_readonly("alpha", &FitResult::alpha)
      .def_readonly("coef", &FitResult::coef)
      .def_readonly("vcov", &FitResult::vcov)
      .def_readonly("vcov_beta0", &FitResult::vcov_beta0)
      .def_readonly("se", &FitResult::se)
      .def_readonly("ci_lo", &FitResult::ci_lo)
      .def_readonly("ci_hi", &FitResult::ci_hi)
      .def_readonly("p_value", &FitResult::p_value)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("n_iter", &FitResult::n_iter)
      .def_readonly("ee_residual", &FitResult::ee_residual)
      .def_readonly("theta", &FitResult::theta)
      .def("report", [](const FitResult& r) { return fit_report_text(r); })
      .def("report_csv", [](const FitResult& r) { return fit_report_csv(r); });

  m.def(
      "fit",
      [](const MrtDataset& ds, const std::string& method, const std::string& variance, const std::string& centering,
         double ci_level, int time_index, int max_iter, double tol) {
        EstimatorConfig cfg;
        cfg.method = parse_method(method);
        cfg.variance_mode = parse_variance_mode(variance);
        cfg.centering = parse_centering_kind(centering);
        cfg.lag = ds.lag();
        cfg.ci_level = ci_level;
        cfg.time_index = time_index;
        cfg.max_iter = max_iter;
        cfg.tol = tol;
        return fit(ds, cfg);
      },
      py::arg("ds"), py::arg("method") = "wcls", py::arg("variance") = "plain_sandwich",
      py::arg("centering") = "orthogonal", py::arg("ci_level") = 0.95, py::arg("time_index") = 1,
      py::arg("max_iter") = 100, py::arg("tol") = 1e-10);

  m.def(
      "closed_form_gaps",
      [](double p, const Eigen::VectorXd& alpha1, const Eigen::VectorXd& beta1, const Eigen::MatrixXd& sigma) {
        const ClosedFormGaps g = closed_form_gaps(p, alpha1, beta1, sigma);
        py::dict d;
        d["wcls_vs_unadjusted_meat_gap"] = g.gap_wcls_vs_u;
        d["lin_vs_unadjusted_gain"] = g.gap_lin_vs_u;
        d["lin_vs_wcls_gain"] = g.gap_lin_vs_wcls;
        return d;
      },
      py::arg("p"), py::arg("alpha1"), py::arg("beta1"), py::arg("sigma"));

  m.def(
      "simulate_panel", [](const std::string& config) { return gen_panel(parse_dgm_config(config)); },
      py::arg("config"), "Generate one panel from key = value generator text");
  m.def(
      "truth", [](const std::string& config) { return dgm_truth(parse_dgm_config(config)); }, py::arg("config"));
  m.def(
      "run_monte_carlo",
      [](const std::string& config, const std::string& methods, int replicates, int threads) {
        const DgmSpec spec = parse_dgm_config(config);
        McReport rep;
        {
          py::gil_scoped_release release;
          rep = run_monte_carlo(spec, lineup(methods), replicates, threads);
        }
        return py::make_tuple(metric_rows(rep), report_table(rep));
      },
      py::arg("config"), py::arg("methods") = "proximal", py::arg("replicates") = 100, py::arg("threads") = 1);

  m.def("table_names", &table_names);
  m.def("embedded_configs", &embedded_configs, py::arg("table"));
  m.def(
      "replicate_table",
      [](const std::string& name, int replicates, int threads) {
        ReplicationOptions opt;
        opt.replicates = replicates;
        opt.threads = threads;
        TableRun run;
        {
          py::gil_scoped_release release;
          run = replicate_table(name, opt);
        }
        py::list cells;
        for (const auto& c : run.cells) {
          py::dict d;
          d["label"] = c.label;
          d["published"] = c.published;
          d["reproduced"] = c.reproduced;
          d["lo"] = c.lo;
          d["hi"] = c.hi;
          d["judged"] = c.judged;
          d["pass"] = c.pass();
          cells.append(d);
        }
        return py::make_tuple(cells, format_table_run(run));
      },
      py::arg("table"), py::arg("replicates") = 1000, py::arg("threads") = 1);
}
