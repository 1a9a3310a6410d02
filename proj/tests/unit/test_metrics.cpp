#include <doctest.h>

#include <cmath>

#include "uavtraj/metrics.hpp"

using namespace uavtraj;
using namespace uavtraj::metrics;

TEST_CASE("metrics: closed-form example") {
  const Matrix y{{1}, {2}, {3}}, yhat{{2}, {2}, {2}};
  const auto r = evaluate(std::vector<Matrix>{yhat}, std::vector<Matrix>{y});
  CHECK(r.mse == 2.0 / 3.0);
  CHECK(r.rmse == std::sqrt(2.0 / 3.0));
  CHECK(r.mae == 2.0 / 3.0);
  REQUIRE(r.r2);
  CHECK(*r.r2 == 0.0);
  CHECK(r.n_samples == 1);
}

TEST_CASE("metrics: perfect prediction, constant target, shape errors") {
  Rng rng(1);
  std::vector<Matrix> ys;
  for (int i = 0; i < 5; ++i) {
    Matrix m(10, 3);
    for (double& v : m.values()) v = rng.normal();
    ys.push_back(m);
  }
  const auto perfect = evaluate(ys, ys);
  CHECK(perfect.mse == 0.0);
  CHECK(*perfect.r2 == 1.0);
  for (double a : perfect.axis_rmse) CHECK(a == 0.0);

  const std::vector<Matrix> flat{Matrix(2, 3, 4.0)}, guess{Matrix(2, 3, 3.0)};
  const auto f = evaluate(guess, flat);
  CHECK_FALSE(f.r2.has_value());
  CHECK(f.mse == 1.0);

  CHECK_THROWS_AS(evaluate(std::vector<Matrix>{}, std::vector<Matrix>{}), Error);
  CHECK_THROWS_AS(evaluate(std::vector<Matrix>{Matrix(2, 3)}, std::vector<Matrix>{Matrix(3, 3)}), Error);
}

TEST_CASE("metrics: properties over random cases") {
  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<Matrix> p, t;
    const std::size_t n = 1 + rng.below(4);
    for (std::size_t i = 0; i < n; ++i) {
      Matrix a(1 + rng.below(5), 3), b(a.rows(), 3);
      for (double& v : a.values()) v = rng.uniform(-10, 10);
      for (double& v : b.values()) v = rng.uniform(-10, 10);
      p.push_back(a);
      t.push_back(b);
    }
    const auto r = evaluate(p, t);
    CHECK(r.rmse * r.rmse == doctest::Approx(r.mse).epsilon(1e-12));
    CHECK(r.mae <= r.rmse * (1 + 1e-12));
    if (r.r2) CHECK(*r.r2 <= 1.0);
  }
}

TEST_CASE("adjusted r2 and annotation") {
  CHECK(adjusted_r2(1.0, 2) == 1.0 / 130.0);
  CHECK(adjusted_r2(0.5, 5) == 0.5 / 133.0);
  CHECK_THROWS_AS(adjusted_r2(1.0, 0), Error);
  MetricsReport r;
  r.r2 = 0.9;
  annotate(r, "GRU_1", "velocity", "max_norm", 64, 2);
  CHECK(*r.adjusted_r2 == 0.9 / 130.0);
  CHECK(r.model_id == "GRU_1");
}

TEST_CASE("scientific formatting") {
  CHECK(format_sci(2.2e-8) == "2.2E-08");
  CHECK(format_sci(0.0) == "0.0E+00");
  CHECK(format_sci(-0.0153) == "-1.5E-02");
  CHECK(format_sci(123456.0) == "1.2E+05");
}

TEST_CASE("report tables: natural order, identical text and csv cells") {
  std::vector<MetricsReport> rs(3);
  rs[0].model_id = "GRU_10";
  rs[1].model_id = "GRU_2";
  rs[2].model_id = "GRU_1";
  for (std::size_t i = 0; i < rs.size(); ++i) {
    rs[i].mse = 2.2e-8 * static_cast<double>(i + 1);
    rs[i].r2 = 0.99;
  }
  const auto grid = report_table(rs, Layout::Grid);
  const auto p1 = grid.csv.find("GRU_1,");
  const auto p2 = grid.csv.find("GRU_2,");
  const auto p10 = grid.csv.find("GRU_10,");
  CHECK(p1 < p2);
  CHECK(p2 < p10);
  CHECK(grid.csv.find("2.2E-08") != std::string::npos);
  CHECK(grid.text.find("2.2E-08") != std::string::npos);
  CHECK(grid.csv.find("null") != std::string::npos);  // adjusted_r2 unset

  const auto cmp = report_table(rs, Layout::Comparison);
  CHECK(cmp.csv.rfind("metric,GRU_1,GRU_2,GRU_10\n", 0) == 0);
  CHECK_THROWS_AS(report_table({}, Layout::Grid), Error);
}

TEST_CASE("metrics csv round-trip") {
  MetricsReport r;
  r.model_id = "m";
  r.channel = "position";
  r.norm_method = "whitening";
  r.hidden_dim = 128;
  r.num_layers = 3;
  r.mse = 1.0 / 3.0;
  r.rmse = std::sqrt(r.mse);
  r.mae = 0.1;
  r.r2 = 0.75;
  r.n_samples = 99;
  MetricsReport q = r;
  q.model_id = "q";
  q.r2.reset();
  const std::vector<MetricsReport> in{r, q};
  const auto back = reports_from_csv(reports_to_csv(in));
  REQUIRE(back.size() == 2);
  CHECK(back[0].mse == r.mse);
  CHECK(back[0].rmse == r.rmse);
  CHECK(*back[0].r2 == 0.75);
  CHECK_FALSE(back[1].r2.has_value());
  CHECK(back[1].hidden_dim == 128);
  CHECK_THROWS_AS(reports_from_csv("nope\n1,2\n"), Error);
}
