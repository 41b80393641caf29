#include "helpers.hpp"

#include "mrtee/error.hpp"
#include "mrtee/estimators.hpp"
#include "mrtee/simulation.hpp"
#include "mrtee/variance.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mrtee;
using testutil::make_ds;
using testutil::make_raw;

namespace {

MrtDataset eq12(int n, int horizon, std::uint64_t seed, double beta1 = 0.5) {
  DgmSpec spec;
  spec.n = n;
  spec.horizon = horizon;
  spec.seed = seed;
  spec.beta1 = beta1;
  return gen_panel(spec);
}

EstimatorConfig lagged_cfg(VarianceMode v) {
  EstimatorConfig cfg;
  cfg.method = Method::a2wcls_lagged;
  cfg.lag = 2;
  cfg.variance_mode = v;
  return cfg;
}

}  // namespace

TEST_SUITE("variance") {
  TEST_CASE("matches the textbook heteroskedasticity-robust OLS variance") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    std::bernoulli_distribution coin(0.5);
    const int n = 300;
    std::vector<double> a(n), y(n), g(n);
    for (int i = 0; i < n; ++i) {
      a[i] = coin(rng);
      g[i] = nd(rng);
      y[i] = 0.5 + 0.8 * g[i] + 0.3 * (a[i] - 0.5) + (1 + 0.5 * std::abs(g[i])) * nd(rng);
    }
    auto ds = make_ds(make_raw(n, 1, a, std::vector<double>(n, 0.5), y, {{"g", g}}), testutil::schema({}, {"g"}, {}))
                  .with_ptilde(0.5);
    FitResult r = fit_wcls(ds);

    // HC0: (X'X)^{-1} X' diag(e^2) X (X'X)^{-1}, unit weights since p~ = p
    Eigen::MatrixXd x(n, 3);
    Eigen::VectorXd yv(n);
    for (int i = 0; i < n; ++i) {
      x.row(i) << 1.0, g[i], a[i] - 0.5;
      yv[i] = y[i];
    }
    Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
    Eigen::VectorXd b = xtx_inv * x.transpose() * yv;
    Eigen::VectorXd e = yv - x * b;
    Eigen::MatrixXd meat = x.transpose() * e.array().square().matrix().asDiagonal() * x;
    Eigen::MatrixXd hc0 = xtx_inv * meat * xtx_inv;
    CHECK((r.vcov / n - hc0).norm() / hc0.norm() <= 1e-10);
    CHECK(r.se[0] == doctest::Approx(std::sqrt(hc0(2, 2))).epsilon(1e-10));
  }

  TEST_CASE("duplicating every subject halves the sampling variance") {
    MrtDataset ds = eq12(50, 10, 3).with_lag(1).with_features(testutil::schema({}, {"z"}, {}));
    RawPanel twice = ds.raw();
    const auto rows = twice.rows();
    RawPanel big;
    big.columns = twice.columns;
    big.a.resize(2 * rows);
    big.p.resize(2 * rows);
    big.y.resize(2 * rows);
    big.values.resize(2 * rows, twice.values.cols());
    for (int copy = 0; copy < 2; ++copy)
      for (Eigen::Index r = 0; r < rows; ++r) {
        big.subject_id.push_back(twice.subject_id[r] + copy * 1000);
        big.t.push_back(twice.t[r]);
        big.a[copy * rows + r] = twice.a[r];
        big.p[copy * rows + r] = twice.p[r];
        big.y[copy * rows + r] = twice.y[r];
        big.values.row(copy * rows + r) = twice.values.row(r);
      }
    auto ds2 = MrtDataset::build(validate_panel(big), ds.schema(), 1);
    FitResult a = fit_wcls(ds), b = fit_wcls(ds2);
    CHECK(testutil::max_abs(a.coef - b.coef) < 1e-12);
    for (Eigen::Index k = 0; k < a.se.size(); ++k)
      CHECK(b.se[k] * b.se[k] == doctest::Approx(0.5 * a.se[k] * a.se[k]).epsilon(1e-10));
  }

  TEST_CASE("zero cross derivative leaves the plain sandwich") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd scores(40, 3), u(40, 2);
    for (int i = 0; i < 40; ++i) {
      for (int k = 0; k < 3; ++k) scores(i, k) = nd(rng);
      for (int k = 0; k < 2; ++k) u(i, k) = nd(rng);
    }
    Eigen::MatrixXd bread = Eigen::MatrixXd::Identity(3, 3) * 2.0;
    bread(0, 1) = bread(1, 0) = 0.3;
    SandwichParts parts = make_sandwich_parts(bread, scores);
    StackedParts sp{u, Eigen::MatrixXd::Zero(3, 2), Eigen::MatrixXd::Identity(2, 2)};
    CHECK(testutil::max_abs(stacked_sandwich(parts, sp) - plain_sandwich(parts)) < 1e-14);
    // the plain sandwich is Q^{-1} M Q^{-T}
    Eigen::MatrixXd qi = bread.inverse();
    Eigen::MatrixXd oracle = qi * (scores.transpose() * scores / 40.0) * qi.transpose();
    CHECK(testutil::max_abs(plain_sandwich(parts) - oracle) < 1e-12);
  }

  TEST_CASE("singular bread is reported") {
    Eigen::MatrixXd scores = Eigen::MatrixXd::Ones(5, 2);
    SandwichParts parts = make_sandwich_parts(Eigen::MatrixXd::Zero(2, 2), scores);
    try {
      plain_sandwich(parts);
      FAIL("expected SingularBread");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SingularBread);
    }
  }

  TEST_CASE("stacked variance accounts for the estimated centering when Z is fixed") {
    DgmSpec spec;
    spec.kind = DgmKind::proximal_j2;
    spec.beta0 = {-0.2};
    spec.n = 250;
    spec.horizon = 30;
    double stacked = 0, plain = 0;
    const int reps = 100;
    for (int rep = 0; rep < reps; ++rep) {
      Rng rng = substream(77, static_cast<std::uint64_t>(rep));
      MrtDataset ds = gen_panel(spec, rng).with_features(testutil::schema({}, {"z"}, {"z"}));
      CenteringModel cm = fit_centering(ds);
      EstimatorConfig cfg;
      cfg.variance_mode = VarianceMode::stacked;
      stacked += fit_a2wcls(ds, cm, cfg).se[0];
      plain += fit_a2wcls_known_centering(ds, cm.mu(ds), cfg).se[0];
    }
    CHECK(stacked >= plain);
  }

  TEST_CASE("small-sample correction inflates at small N and vanishes at large N") {
    int inflated = 0;
    const int reps = 30;
    for (int rep = 0; rep < reps; ++rep) {
      MrtDataset ds = eq12(30, 30, 100 + rep);
      FitResult plain = fit_a2wcls_lagged(ds, fit_centering(ds), lagged_cfg(VarianceMode::stacked));
      FitResult small = fit_a2wcls_lagged(ds, fit_centering(ds), lagged_cfg(VarianceMode::stacked_small_sample));
      inflated += small.se[0] >= plain.se[0] ? 1 : 0;
      CHECK(small.small_sample);
    }
    CHECK(inflated == reps);

    MrtDataset big = eq12(2000, 30, 1);
    FitResult plain = fit_a2wcls_lagged(big, fit_centering(big), lagged_cfg(VarianceMode::stacked));
    FitResult small = fit_a2wcls_lagged(big, fit_centering(big), lagged_cfg(VarianceMode::stacked_small_sample));
    CHECK(std::abs(small.se[0] / plain.se[0] - 1.0) < 0.01);
  }

  TEST_CASE("single subject never yields a silent NaN") {
    MrtDataset one = eq12(1, 30, 4);
    bool ok = true;
    try {
      FitResult r = fit_a2wcls_lagged(one, fit_centering(one), lagged_cfg(VarianceMode::stacked_small_sample));
      ok = r.se.allFinite();
    } catch (const Error& e) {
      ok = true;
    }
    CHECK(ok);
  }

  TEST_CASE("confidence intervals") {
    Eigen::VectorXd est(1), se(1);
    est << -0.1;
    se << 0.03;
    IntervalSet ci = confidence_intervals(est, se, 0.95, false, 250, 1);
    CHECK(ci.lo[0] == doctest::Approx(-0.1588).epsilon(1e-3));
    CHECK(ci.hi[0] == doctest::Approx(-0.0412).epsilon(1e-3));
    CHECK(ci.lo[0] == doctest::Approx(-0.1 - 1.959964 * 0.03).epsilon(1e-9));
    double width = 0;
    for (double level : {0.5, 0.8, 0.9, 0.95, 0.99, 0.999}) {
      IntervalSet c = confidence_intervals(est, se, level, false, 250, 1);
      CHECK(c.hi[0] - c.lo[0] > width);
      width = c.hi[0] - c.lo[0];
    }
    est << 0.0;
    CHECK(confidence_intervals(est, se, 0.95, false, 250, 1).p_value[0] == 1.0);
    CHECK(reference_quantile(0.95, true, 10, 3) > reference_quantile(0.95, false, 10, 3));
    CHECK(reference_quantile(0.95, true, 10, 3) == doctest::Approx(2.364624).epsilon(1e-6));
  }
}
