#include "helpers.hpp"

#include "mrtee/centering.hpp"
#include "mrtee/error.hpp"
#include "mrtee/simulation.hpp"

#include <doctest.h>

using namespace mrtee;
using testutil::make_ds;
using testutil::make_raw;

TEST_SUITE("centering") {
  TEST_CASE("equal weights give the arithmetic mean") {
    auto ds = make_ds(make_raw(1, 2, {1, 0}, {0.5, 0.5}, {0, 0}, {{"z", {1, 3}}}), testutil::schema({}, {}, {"z"}))
                  .with_ptilde(0.5);
    CenteringModel cm = fit_centering(ds);
    CHECK(cm.theta(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  }

  TEST_CASE("numerator-weighted mean") {
    auto ds = make_ds(make_raw(1, 2, {1, 0}, {0.5, 0.5}, {0, 0}, {{"z", {1, 3}}}), testutil::schema({}, {}, {"z"}))
                  .with_ptilde((Eigen::VectorXd(2) << 0.5, 0.2).finished());
    CenteringModel cm = fit_centering(ds);
    const double oracle = (0.25 * 1 + 0.16 * 3) / (0.25 + 0.16);
    CHECK(cm.theta(0, 0) == doctest::Approx(oracle).epsilon(1e-14));
    CHECK(cm.theta(0, 0) == doctest::Approx(1.78049).epsilon(1e-5));
  }

  TEST_CASE("auxiliary in the span of f is reproduced exactly") {
    std::vector<double> s = {0.5, 1.0, 2.0, -1.0, 3.0, 0.2};
    std::vector<double> z;
    for (double v : s) z.push_back(2.5 * v);
    auto ds = make_ds(make_raw(2, 3, {1, 0, 1, 0, 1, 1}, std::vector<double>(6, 0.4), std::vector<double>(6, 0),
                               {{"s", s}, {"z", z}}),
                      {{Role::moderator_f, {"s"}, false}, {Role::auxiliary_z, {"z"}, false}});
    CenteringModel cm = fit_centering(ds);
    CHECK(cm.theta(0, 0) == doctest::Approx(2.5).epsilon(1e-13));
    CHECK(testutil::max_abs(ds.z() - cm.mu(ds)) < 1e-12);
  }

  TEST_CASE("orthogonality residual after fitting and after perturbation") {
    DgmSpec spec;
    spec.kind = DgmKind::timevarying_j3;
    spec.beta0 = {-0.2, 0.02};
    spec.n = 60;
    spec.horizon = 12;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      spec.seed = seed;
      MrtDataset ds = gen_panel(spec);
      CenteringModel cm = fit_centering(ds);
      CHECK(verify_orthogonality(ds, cm) <= 1e-8);
      Eigen::MatrixXd th = cm.theta;
      th(1, 0) += 1.0;
      CHECK(verify_orthogonality(ds, centering_from_theta(ds, th)) > 1e-3);
    }
  }

  TEST_CASE("unweighted mean fails the weighted orthogonality condition") {
    // four rows: p~ high where Z is high, so weighted and unweighted means differ
    std::vector<double> z = {0.0, 1.0, 2.0, 3.0};
    Eigen::VectorXd pt(4);
    pt << 0.5, 0.4, 0.3, 0.2;
    auto ds = make_ds(make_raw(1, 4, {1, 0, 1, 0}, std::vector<double>(4, 0.5), std::vector<double>(4, 0), {{"z", z}}),
                      testutil::schema({}, {}, {"z"}))
                  .with_ptilde(pt);
    Eigen::MatrixXd theta(1, 1);
    theta << 1.5;
    // hand value: sum w (z - 1.5) / N with w = (.25,.24,.21,.16)
    const double hand = 0.25 * -1.5 + 0.24 * -0.5 + 0.21 * 0.5 + 0.16 * 1.5;
    CHECK(verify_orthogonality(ds, centering_from_theta(ds, theta)) == doctest::Approx(std::abs(hand)).epsilon(1e-12));
    CHECK(std::abs(hand) > 0.1);
  }

  TEST_CASE("naive centerings") {
    auto ds = make_ds(make_raw(2, 2, {1, 0, 0, 1}, std::vector<double>(4, 0.5), std::vector<double>(4, 0),
                               {{"z", {1, 3, 3, 5}}}),
                      testutil::schema({}, {}, {"z"}));
    Eigen::MatrixXd tm = naive_centerings(ds, NaiveCentering::time_specific_mean);
    Eigen::MatrixXd gm = naive_centerings(ds, NaiveCentering::global_mean);
    CHECK(tm(0, 0) == 2.0);
    CHECK(tm(1, 0) == 4.0);
    CHECK(tm(2, 0) == 2.0);
    CHECK(tm(3, 0) == 4.0);
    for (int r = 0; r < 4; ++r) CHECK(gm(r, 0) == 3.0);

    auto flat = make_ds(make_raw(2, 2, {1, 0, 0, 1}, std::vector<double>(4, 0.5), std::vector<double>(4, 0),
                                 {{"z", {7, 7, 7, 7}}}),
                        testutil::schema({}, {}, {"z"}));
    for (auto kind : {NaiveCentering::time_specific_mean, NaiveCentering::global_mean})
      CHECK(testutil::max_abs(naive_centerings(flat, kind).array() - 7.0) == 0.0);
  }

  TEST_CASE("global mean violates orthogonality on the drifting-state design") {
    DgmSpec spec;
    spec.kind = DgmKind::centerby_mean_j1;
    spec.beta0 = {-0.2};
    spec.beta1 = 0.8;
    spec.n = 250;
    spec.horizon = 30;
    spec.seed = 5;
    MrtDataset ds = gen_panel(spec);
    const Eigen::MatrixXd mu = naive_centerings(ds, NaiveCentering::global_mean);
    CenteringModel cm = fit_centering(ds);
    // the residual of the global-mean centering under the fitted numerator
    const Eigen::MatrixXd f = ds.f();
    double s = 0;
    for (Eigen::Index r = 0; r < ds.n_rows(); ++r)
      if (ds.usable(r)) s += ds.p_tilde()[r] * (1 - ds.p_tilde()[r]) * (ds.z()(r, 0) - mu(r, 0));
    CHECK(std::abs(s / ds.n_subjects()) > 0.05);
    CHECK(verify_orthogonality(ds, cm) <= 1e-8);
  }

  TEST_CASE("serialization round trip") {
    DgmSpec spec;
    spec.n = 30;
    spec.horizon = 8;
    MrtDataset ds = gen_panel(spec);
    CenteringModel cm = fit_centering(ds);
    CenteringModel back = deserialize_centering(serialize_centering(cm));
    CHECK(back.theta == cm.theta);
    CHECK(back.fitted_on == cm.fitted_on);
    CHECK(back.f_names == cm.f_names);
    CHECK(back.z_names == cm.z_names);
    CHECK(testutil::max_abs(back.mu(ds) - cm.mu(ds)) == 0.0);
  }

  TEST_CASE("dimension checks") {
    auto ds = make_ds(make_raw(1, 2, {1, 0}, {0.5, 0.5}, {0, 0}, {{"z", {1, 3}}}), testutil::schema({}, {}, {"z"}));
    CHECK_THROWS_AS(centering_from_theta(ds, Eigen::MatrixXd::Zero(2, 1)), Error);
    auto no_aux = make_ds(make_raw(1, 2, {1, 0}, {0.5, 0.5}, {0, 0}));
    CHECK_THROWS_AS(fit_centering(no_aux), Error);
  }
}
