#include "helpers.hpp"

#include "mrtee/error.hpp"
#include "mrtee/replication.hpp"
#include "mrtee/simulation.hpp"

#include <doctest.h>

#include <cmath>

using namespace mrtee;

namespace {

double expit(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<MethodSpec> two_methods() { return proximal_methods(); }

}  // namespace

TEST_SUITE("simulation") {
  TEST_CASE("AR errors: unit variance and lag-2 correlation") {
    Rng rng = substream(1, 0);
    const int T = 50, series = 20000;
    double s0 = 0, s2 = 0, m = 0;
    long n0 = 0, n2 = 0;
    for (int i = 0; i < series; ++i) {
      auto e = gen_ar_errors(T, rng, 0.5);
      for (int t = 0; t < T; ++t) {
        m += e[t];
        s0 += e[t] * e[t];
        ++n0;
        if (t >= 2) s2 += e[t] * e[t - 2], ++n2;
      }
    }
    CHECK(n0 == 1000000);
    CHECK(std::abs(m / n0) < 0.01);
    CHECK(std::abs(s0 / n0 - 1.0) < 0.01);
    CHECK(std::abs(s2 / n2 - 0.5) < 0.01);

    Rng a = substream(9, 3), b = substream(9, 3);
    CHECK(gen_ar_errors(30, a) == gen_ar_errors(30, b));
    Rng c = substream(9, 4);
    Rng d = substream(9, 3);
    CHECK(gen_ar_errors(30, c) != gen_ar_errors(30, d));
  }

  TEST_CASE("noiseless lagged panel follows the structural formula") {
    DgmSpec spec;
    spec.n = 3;
    spec.horizon = 6;
    spec.noise = false;
    spec.beta0 = {-0.1};
    spec.beta1 = 0.5;
    MrtDataset ds = gen_panel(spec);
    REQUIRE(ds.lag() == 2);
    const auto& raw = ds.raw();
    const int zc = raw.column_index("z");
    for (int j = 0; j < 3; ++j) {
      double a_prev = 0, z_prev = 0, p_prev = 0;
      for (int t = 1; t <= 3; ++t) {
        const auto r = ds.row_begin(j) + t - 1;
        const double z = raw.values(r, zc), a = raw.a[r], p = raw.p[r];
        CHECK(p == doctest::Approx(expit(-0.8 * a_prev + 0.8 * z)).epsilon(1e-15));
        // row t of the raw series is Y_{t+1}
        const double hand = 0.2 * z + (-0.2 + 0.8 * z) * (a - p) + (-0.1 + 0.5 * z_prev) * (a_prev - p_prev);
        CHECK(raw.y[r] == doctest::Approx(hand).epsilon(1e-14));
        if (t >= 2) CHECK(ds.y()[r - 1] == raw.y[r]);
        a_prev = a, z_prev = z, p_prev = p;
      }
    }
  }

  TEST_CASE("mean randomization probability matches the stationary chain") {
    DgmSpec spec;
    spec.n = 1000;
    spec.horizon = 1000;
    spec.noise = false;
    MrtDataset ds = gen_panel(spec);
    // P(A_t = 1 | A_{t-1} = a) averaged over Rademacher Z; iterate to the fixed point
    auto m = [](double a) { return 0.5 * (expit(-0.8 * a + 0.8) + expit(-0.8 * a - 0.8)); };
    double pi = 0.5;
    for (int i = 0; i < 200; ++i) pi = (1 - pi) * m(0) + pi * m(1);
    CHECK(std::abs(ds.p().mean() - pi) < 0.01);
  }

  TEST_CASE("empty panel") {
    DgmSpec spec;
    spec.n = 0;
    MrtDataset ds = gen_panel(spec);
    CHECK(ds.n_subjects() == 0);
    CHECK(ds.n_rows() == 0);
  }

  TEST_CASE("metric arithmetic") {
    auto self = compute_metrics({1, 2, 3}, {1, 2, 3}, {0.1, 0.2, 0.4}, {0.1, 0.2, 0.4});
    CHECK(self.re_gain_pct == 0.0);
    CHECK(self.mre == 1.0);
    CHECK(self.rsd == doctest::Approx(1.0));
    // hand values: ratios 2, 1, 0.5; sd(b)/sd(m) with sd over (0,1,2) vs (0,0.5,1)
    auto toy = compute_metrics({1, 2, 4}, {2, 2, 2}, {0, 0.5, 1}, {0, 1, 2});
    CHECK(toy.re_gain_pct == doctest::Approx(1.0 / 3));
    CHECK(toy.mre == doctest::Approx(3.5 / 3));
    CHECK(toy.rsd == doctest::Approx(2.0));
    CHECK_THROWS_AS(compute_metrics({0}, {1}, {0}, {0}), Error);
    CHECK_THROWS_AS(compute_metrics({}, {}, {}, {}), Error);
  }

  TEST_CASE("single replicate aggregates") {
    DgmSpec spec;
    spec.kind = DgmKind::proximal_j2;
    spec.beta0 = {-0.2};
    spec.n = 50;
    spec.horizon = 10;
    McReport rep = run_monte_carlo(spec, two_methods(), 1);
    for (const auto& row : rep.rows) {
      CHECK((row.cp == 0.0 || row.cp == 1.0));
      CHECK(row.n_ok == 1);
    }
  }

  TEST_CASE("replicate streams are prefix stable and thread independent") {
    DgmSpec spec;
    spec.kind = DgmKind::proximal_j2;
    spec.beta0 = {-0.2};
    spec.n = 40;
    spec.horizon = 10;
    spec.seed = 99;
    McReport small = run_monte_carlo(spec, two_methods(), 6, 1);
    McReport big = run_monte_carlo(spec, two_methods(), 12, 1);
    McReport threaded = run_monte_carlo(spec, two_methods(), 12, 4);
    for (std::size_t i = 0; i < small.replicate_rows.size(); ++i) {
      CHECK(small.replicate_rows[i].est == big.replicate_rows[i].est);
      CHECK(small.replicate_rows[i].se == big.replicate_rows[i].se);
    }
    CHECK(report_csv(big) == report_csv(threaded));
    CHECK(replicates_csv(big, two_methods()) == replicates_csv(threaded, two_methods()));
  }

  TEST_CASE("failed replicates are counted, not fatal") {
    DgmSpec spec;
    spec.kind = DgmKind::proximal_j2;
    spec.beta0 = {-0.2};
    spec.n = 30;
    spec.horizon = 5;
    auto methods = two_methods();
    methods[1].features = testutil::schema({}, {"z"}, {"missing"});
    McReport rep = run_monte_carlo(spec, methods, 4);
    CHECK(rep.rows[0].n_ok == 4);
    CHECK(rep.rows[1].n_failed == 4);
    for (const auto& row : rep.replicate_rows)
      if (row.method == 1) CHECK(row.error.find("MissingColumn") != std::string::npos);
  }

  TEST_CASE("config text round trip") {
    DgmSpec spec;
    spec.kind = DgmKind::timevarying_j3;
    spec.beta0 = {-0.2, 0.02};
    spec.seed = 18446744073709551557ULL;
    spec.rho = 0.25;
    DgmSpec back = parse_dgm_config(dgm_config_text(spec));
    CHECK(back.kind == spec.kind);
    CHECK(back.beta0 == spec.beta0);
    CHECK(back.seed == spec.seed);
    CHECK(back.rho == spec.rho);
    CHECK(dgm_config_text(back) == dgm_config_text(spec));
    CHECK_THROWS_AS(parse_dgm_config("kind = nope\n"), Error);
    CHECK_THROWS_AS(parse_dgm_config("n = abc\n"), Error);
    CHECK_THROWS_AS(parse_dgm_config("colour = red\n"), Error);
  }

  TEST_CASE("embedded replication configs parse") {
    for (const auto& name : table_names())
      for (const auto& text : embedded_configs(name)) CHECK_NOTHROW(parse_dgm_config(text));
    CHECK_THROWS_AS(embedded_configs("tab9"), Error);
    CHECK(embedded_configs("moreTN").size() == 9);
  }

  TEST_CASE("binary generator guards the probability bound") {
    DgmSpec spec;
    spec.kind = DgmKind::binary_demo;
    spec.beta0 = {2.0};
    spec.beta1 = 0.0;
    spec.base_rate = 0.5;
    spec.n = 10;
    CHECK_THROWS_AS(gen_panel(spec), Error);
  }
}
