#include "helpers.hpp"

#include "mrtee/error.hpp"
#include "mrtee/simulation.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

using namespace mrtee;
using testutil::make_ds;
using testutil::make_raw;

namespace {

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("mrtee_test_" + name)).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

ErrorCode load_error(const std::string& csv) {
  const auto path = tmp_path("bad.csv");
  write_text(path, csv);
  try {
    load_csv(path, {});
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("load_csv accepted an invalid file");
  return ErrorCode::InvalidArgument;
}

const char* kHeader = "subject_id,t,a,p,y,z\n";

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("two subjects by three rows load") {
    const auto path = tmp_path("ok.csv");
    write_text(path, std::string(kHeader) +
                         "1,1,1,0.5,1.0,0.1\n1,2,0,0.5,2.0,0.2\n1,3,1,0.5,3.0,0.3\n"
                         "2,1,0,0.5,4.0,0.4\n2,2,1,0.5,5.0,0.5\n2,3,0,0.5,6.0,0.6\n");
    MrtDataset ds = load_csv(path, testutil::schema({}, {"z"}, {"z"}));
    CHECK(ds.n_subjects() == 2);
    CHECK(ds.horizon() == 3);
    CHECK(ds.n_rows() == 6);
    CHECK(ds.g().cols() == 2);
    CHECK(ds.z()(4, 0) == doctest::Approx(0.5));
    // default numerator: pooled mean of A
    CHECK(ds.p_tilde()[0] == doctest::Approx(0.5));
    CHECK(ds.f_names() == std::vector<std::string>{"(intercept)"});
  }

  TEST_CASE("validation errors name the first violation") {
    const std::string ok_tail = "1,2,0,0.5,1,0\n";
    CHECK(load_error(std::string(kHeader) + "1,1,1,1.0,1,0\n" + ok_tail) == ErrorCode::ProbabilityOutOfRange);
    CHECK(load_error(std::string(kHeader) + "1,1,1,0.0,1,0\n" + ok_tail) == ErrorCode::ProbabilityOutOfRange);
    CHECK(load_error(std::string(kHeader) + "1,1,1,0.5,1,0\n1,3,0,0.5,1,0\n") == ErrorCode::NonContiguousTime);
    CHECK(load_error(std::string(kHeader) + "1,1,2,0.5,1,0\n" + ok_tail) == ErrorCode::NonBinaryTreatment);
    CHECK(load_error(std::string(kHeader) + "1,1,1,0.5,nan,0\n" + ok_tail) == ErrorCode::MissingValue);
    CHECK(load_error(std::string(kHeader) + "1,1,1,0.5,inf,0\n" + ok_tail) == ErrorCode::MissingValue);
    CHECK(load_error(std::string(kHeader) + "1,1,1,0.5,,0\n" + ok_tail) == ErrorCode::MissingValue);
    CHECK(load_error("subject_id,t,a,y\n1,1,1,1\n") == ErrorCode::MissingColumn);
    CHECK(load_error(std::string(kHeader) + "1,1,1,0.5,1\n") == ErrorCode::ParseError);
    CHECK(load_error(std::string(kHeader) + "1,1,1,0.5,1,0\n" + ok_tail + "2,1,1,0.5,1,0\n") == ErrorCode::UnbalancedPanel);
    CHECK_THROWS_AS(load_csv(tmp_path("does_not_exist.csv"), {}), Error);
    CHECK(load_error("subject_id,t,a,p,y,z,z\n1,1,1,0.5,1,0,0\n") == ErrorCode::ParseError);
    CHECK(load_error("subject_id,t,a,p,y,t\n1,1,1,0.5,1,1\n") == ErrorCode::ParseError);
    RawPanel reserved = make_raw(1, 2, {1, 0}, {0.5, 0.5}, {0, 0}, {{"y", {1, 2}}});
    CHECK_THROWS_AS(validate_panel(reserved), Error);
  }

  TEST_CASE("missing schema column") {
    const auto path = tmp_path("ok2.csv");
    write_text(path, std::string(kHeader) + "1,1,1,0.5,1,0\n1,2,0,0.5,1,0\n");
    try {
      load_csv(path, testutil::schema({"s"}, {}, {}));
      FAIL("expected MissingColumn");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MissingColumn);
    }
  }

  TEST_CASE("design blocks weights") {
    // rows: (a=1, p=.25), (a=0, p=.25) with p~ = .5
    auto ds = make_ds(make_raw(1, 2, {1, 0}, {0.25, 0.25}, {0, 0})).with_ptilde(0.5);
    DesignBlocks b = design_blocks(ds);
    CHECK(b.weight_w[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(b.centered_a[0] == doctest::Approx(0.5));
    CHECK(b.weight_w[1] == doctest::Approx(0.5 / 0.75).epsilon(1e-15));
    CHECK(b.centered_a[1] == doctest::Approx(-0.5));

    auto same = make_ds(make_raw(1, 3, {1, 0, 1}, {0.3, 0.6, 0.2}, {0, 0, 0}))
                    .with_ptilde((Eigen::VectorXd(3) << 0.3, 0.6, 0.2).finished());
    DesignBlocks one = design_blocks(same);
    for (Eigen::Index r = 0; r < 3; ++r) CHECK(one.weight_w[r] == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("weights positive and finite on generated data") {
    DgmSpec spec;
    spec.n = 20;
    spec.horizon = 10;
    DesignBlocks b = design_blocks(gen_panel(spec));
    CHECK((b.weight_w.array() > 0).all());
    CHECK(b.weight_w.allFinite());
  }

  TEST_CASE("ptilde bounds") {
    auto ds = make_ds(make_raw(1, 2, {1, 0}, {0.5, 0.5}, {0, 0}));
    CHECK_THROWS_AS(ds.with_ptilde(1.0), Error);
    CHECK_THROWS_AS(ds.with_ptilde(Eigen::VectorXd::Constant(3, 0.5)), Error);
  }

  TEST_CASE("lag realignment") {
    auto raw = make_raw(2, 4, {1, 0, 1, 0, 0, 1, 1, 0}, std::vector<double>(8, 0.5), {1, 2, 3, 4, 5, 6, 7, 8});
    auto ds1 = make_ds(raw, {}, 1);
    auto ds2 = ds1.with_lag(2);
    CHECK(ds2.last_usable_t() == 3);
    CHECK(ds2.usable_per_subject() == 3);
    // row t stores Y_{t+2} which is the raw Y_{t+1} series one row later
    CHECK(ds2.y()[0] == 2.0);
    CHECK(ds2.y()[2] == 4.0);
    CHECK(std::isnan(ds2.y()[3]));
    CHECK(ds2.y()[4] == 6.0);
    CHECK_FALSE(ds2.usable(3));
    CHECK(ds1.y()[3] == 4.0);
    CHECK_THROWS_AS(ds1.with_lag(5), Error);
  }

  TEST_CASE("canonical row order") {
    auto in_order = make_raw(2, 2, {1, 0, 0, 1}, {0.5, 0.4, 0.3, 0.6}, {1, 2, 3, 4}, {{"z", {0.1, 0.2, 0.3, 0.4}}});
    RawPanel shuffled = in_order;
    const int perm[] = {3, 0, 2, 1};
    for (int r = 0; r < 4; ++r) {
      shuffled.subject_id[r] = in_order.subject_id[perm[r]];
      shuffled.t[r] = in_order.t[perm[r]];
      shuffled.a[r] = in_order.a[perm[r]];
      shuffled.p[r] = in_order.p[perm[r]];
      shuffled.y[r] = in_order.y[perm[r]];
      shuffled.values.row(r) = in_order.values.row(perm[r]);
    }
    auto a = make_ds(in_order, testutil::schema({}, {"z"}, {}));
    auto b = make_ds(shuffled, testutil::schema({}, {"z"}, {}));
    CHECK(a.fingerprint() == b.fingerprint());
    CHECK(to_csv(a.raw()) == to_csv(b.raw()));
  }

  TEST_CASE("csv round trip is bit exact") {
    DgmSpec spec;
    spec.n = 7;
    spec.horizon = 6;
    spec.seed = 11;
    MrtDataset ds = gen_panel(spec);
    const auto path = tmp_path("roundtrip.csv");
    write_csv(ds.raw(), path);
    auto back = read_csv_panel(path);
    const auto& a = ds.raw();
    CHECK(back->subject_id == a.subject_id);
    CHECK(back->t == a.t);
    CHECK(back->a == a.a);
    CHECK(back->p == a.p);
    CHECK(back->y == a.y);
    CHECK(back->values == a.values);
    CHECK(to_csv(*back) == to_csv(a));
  }

  TEST_CASE("decision index usable as a feature") {
    auto ds = make_ds(make_raw(1, 3, {1, 0, 1}, {0.5, 0.5, 0.5}, {0, 0, 0}), testutil::schema({"t"}, {}, {}));
    CHECK(ds.f()(2, 1) == 3.0);
  }

  TEST_CASE("fingerprint tracks roles and lag") {
    auto raw = make_raw(1, 3, {1, 0, 1}, {0.5, 0.5, 0.5}, {1, 2, 3}, {{"z", {1, 2, 3}}});
    auto ds = make_ds(raw);
    CHECK(ds.fingerprint() != ds.with_features(testutil::schema({}, {"z"}, {})).fingerprint());
    CHECK(ds.fingerprint() != ds.with_lag(2).fingerprint());
    CHECK(ds.fingerprint() == make_ds(raw).fingerprint());
  }
}
