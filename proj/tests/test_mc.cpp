#include <cmath>
#include <random>
#include <sstream>

#include <doctest.h>

#include "mehaz/error.hpp"
#include "mehaz/mc.hpp"

using namespace mehaz;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

StudyPlan smoke_plan() {
  StudyPlan plan;
  plan.config.n = 300;
  plan.config.tau = 1.0;
  plan.config.theta0 = {vec({1.0}), vec({1.0})};
  plan.config.risk = RelativeRisk::exponential();
  plan.config.weight = WeightFunction::one();
  plan.config.error = ErrorDensity::gaussian(0.3);
  plan.n_list = {300};
  plan.replicates = 2;
  plan.estimators = {EstimatorKind::Oracle, EstimatorKind::Theta2};
  plan.estimate.box = Box{vec({0.0, 0.01}), vec({2.0, 10.0})};
  plan.master_seed = 99;
  plan.threads = 2;
  return plan;
}

std::vector<Vec> normal_draws(std::size_t R, std::uint64_t seed, double scale) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> nd;
  std::vector<Vec> out;
  for (std::size_t r = 0; r < R; ++r) out.push_back(vec({scale * nd(g), scale * nd(g)}));
  return out;
}

}  // namespace

TEST_CASE("rate regression of an exact power law") {
  const std::vector<double> n{500, 1000, 2000, 4000};
  std::vector<double> mse;
  for (double x : n) mse.push_back(3.0 / x);
  const auto r = rate_regression(n, mse);
  CHECK(r.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(r.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(r.slope_stderr == doctest::Approx(0.0).epsilon(1e-12));
  const std::vector<double> two{500, 500, 1000};
  CHECK_THROWS_AS(rate_regression(two, std::vector<double>{1.0, 1.0, 0.5}), DomainError);
}

TEST_CASE("a flat MSE floor gives a zero slope") {
  const std::vector<double> n{500, 1000, 2000, 4000};
  const std::vector<double> mse{0.16, 0.16, 0.16, 0.16};
  CHECK(rate_regression(n, mse).slope == doctest::Approx(0.0));
}

TEST_CASE("summary satisfies the MSE decomposition") {
  std::vector<ReplicateRecord> recs;
  std::mt19937_64 g(4);
  std::normal_distribution<double> nd(1.1, 0.2);
  for (std::size_t r = 0; r < 50; ++r) {
    ReplicateRecord rec;
    rec.n = 100;
    rec.r = r;
    rec.estimator = EstimatorKind::Theta2;
    rec.theta_hat = vec({nd(g), nd(g)});
    rec.converged = true;
    rec.se = vec({0.2, 0.2});
    recs.push_back(rec);
  }
  const auto s = summarize(recs, vec({1.0, 1.0}));
  REQUIRE(s.cells.size() == 1);
  for (const auto& c : s.cells[0].components) {
    CHECK(c.mse == doctest::Approx(c.bias * c.bias + c.variance).epsilon(1e-12));
    CHECK(c.coverage >= 0.0);
    CHECK(c.coverage <= 1.0);
  }
  CHECK_THROWS_AS(s.cell(200, EstimatorKind::Theta2), DomainError);
}

TEST_CASE("null calibration of the normality statistics") {
  const auto est = normal_draws(500, 1, 1.0);
  const std::vector<Mat> cov{Mat::Identity(2, 2)};
  const auto rep = normality_check(est, vec({0.0, 0.0}), cov, 1.0);
  CHECK(rep.within(null_bands(500)));
  CHECK(rep.within(NormalityBands{}));
}

TEST_CASE("a mis-scaled covariance fails the KS band") {
  const auto est = normal_draws(500, 2, 1.0);
  const std::vector<Mat> cov{4.0 * Mat::Identity(2, 2)};
  const auto rep = normality_check(est, vec({0.0, 0.0}), cov, 1.0);
  CHECK_FALSE(rep.within(NormalityBands{}));
  CHECK(rep.ks[0] >= 0.08);
}

TEST_CASE("normality check preconditions") {
  const auto est = normal_draws(100, 3, 1.0);
  const std::vector<Mat> cov{Mat::Identity(2, 2)};
  CHECK_THROWS_AS(normality_check(est, vec({0.0, 0.0}), cov, 1.0), DomainError);
}

TEST_CASE("deconvolution identity check with a zero function") {
  StudyConfig cfg;
  cfg.theta0 = {vec({1.0}), vec({1.0})};
  cfg.error = ErrorDensity::laplace(0.4);
  cfg.seed = 6;
  DeconvKernelSpec k;
  k.cn = 3.0;
  const auto r = identity_check([](const Observation&) { return 1.0; }, ZeroFunction{}, cfg, 10000, k);
  CHECK(r.lhs == 0.0);
  CHECK(r.rhs == 0.0);
}

TEST_CASE("deconvolution identity check with phi = 1 and a gaussian psi") {
  StudyConfig cfg;
  cfg.theta0 = {vec({1.0}), vec({1.0})};
  cfg.error = ErrorDensity::laplace(0.4);
  cfg.seed = 7;
  DeconvKernelSpec k;
  k.cn = 3.0;
  const auto r = identity_check([](const Observation&) { return 1.0; }, GaussianFunction{}, cfg, 100000, k);
  CHECK(std::abs(r.lhs - r.rhs) <= 3.0 * r.paired_stderr);
}

TEST_CASE("smoke study is deterministic and round-trips through JSONL and CSV") {
  const auto plan = smoke_plan();
  const auto a = run_study(plan);
  auto single = plan;
  single.threads = 1;
  const auto b = run_study(single);
  REQUIRE(a.records.size() == 4);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].r == b.records[i].r);
    CHECK(a.records[i].theta_hat == b.records[i].theta_hat);
  }
  CHECK(a.records[0].estimator == EstimatorKind::Oracle);
  CHECK(a.records[1].estimator == EstimatorKind::Theta2);

  std::stringstream js;
  write_jsonl(js, a.records);
  const auto back = read_jsonl(js);
  REQUIRE(back.size() == a.records.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].theta_hat == a.records[i].theta_hat);
    CHECK(back[i].estimator == a.records[i].estimator);
    CHECK(back[i].se.has_value() == a.records[i].se.has_value());
  }

  std::stringstream csv;
  write_summary_csv(csv, a);
  const auto cells = read_summary_csv(csv);
  REQUIRE(cells.size() == a.cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CHECK(cells[c].estimator == a.cells[c].estimator);
    CHECK(cells[c].replicates == 2);
    CHECK(cells[c].components[0].mean == a.cells[c].components[0].mean);
  }
}

TEST_CASE("replicate seeds depend on n and r") {
  CHECK(replicate_seed(1, 100, 0) != replicate_seed(1, 100, 1));
  CHECK(replicate_seed(1, 100, 0) != replicate_seed(1, 200, 0));
  CHECK(replicate_seed(1, 100, 0) == replicate_seed(1, 100, 0));
}

TEST_CASE("studies abort when too many replicates fail") {
  auto plan = smoke_plan();
  plan.estimators = {EstimatorKind::Theta2};
  plan.config.error = ErrorDensity::cauchy(0.3);
  CHECK_THROWS_AS(run_study(plan), NumericalError);
}
