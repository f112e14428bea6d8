#include <algorithm>
#include <cmath>
#include <sstream>

#include <doctest.h>

#include "mehaz/error.hpp"
#include "mehaz/simulate.hpp"

using namespace mehaz;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

StudyConfig unit_exponential(std::size_t n) {
  StudyConfig cfg;
  cfg.n = n;
  cfg.tau = 50.0;
  cfg.theta0 = {vec({0.0}), vec({1.0})};
  cfg.risk = RelativeRisk::exponential();
  cfg.baseline = Baseline::constant();
  cfg.error = ErrorDensity::gaussian(0.5);
  cfg.seed = 11;
  return cfg;
}

double mean_x(const Dataset& d) {
  double s = 0.0;
  for (const auto& o : d.obs) s += o.x;
  return s / static_cast<double>(d.size());
}

}  // namespace

TEST_CASE("unit hazard gives exponential event times") {
  const auto d = sample_dataset(unit_exponential(100000));
  CHECK(std::abs(mean_x(d) - 1.0) <= 0.02);
}

TEST_CASE("degenerate covariate fixes the event rate") {
  auto cfg = unit_exponential(100000);
  cfg.risk = RelativeRisk::polynomial1(1);
  cfg.theta0.beta = vec({0.5});
  cfg.covariate = covariate::TwoPoint{2.0, 2.0, 0.5};
  const auto d = sample_dataset(cfg);
  CHECK(std::abs(mean_x(d) - 0.5) <= 0.01);
}

TEST_CASE("exponential censoring at the event rate gives half events") {
  auto cfg = unit_exponential(100000);
  cfg.censoring = censoring::Exponential{1.0};
  const auto d = sample_dataset(cfg);
  const auto events = std::count_if(d.obs.begin(), d.obs.end(), [](const Observation& o) { return o.d; });
  CHECK(std::abs(static_cast<double>(events) / 1e5 - 0.5) <= 0.01);
}

TEST_CASE("event times given Z follow the model survival function") {
  auto cfg = unit_exponential(10000);
  cfg.risk = RelativeRisk::exponential();
  cfg.theta0 = {vec({0.8}), vec({0.5, 1.5})};
  cfg.baseline = Baseline::affine_positive();
  cfg.covariate = covariate::TwoPoint{0.7, 0.7, 0.5};
  const auto d = sample_dataset(cfg);
  std::vector<double> t;
  for (const auto& o : d.obs) t.push_back(o.x);
  std::sort(t.begin(), t.end());
  const double f = std::exp(0.8 * 0.7);
  double ks = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double h = 0.5 * t[i] + 0.75 * t[i] * t[i];
    const double cdf = 1.0 - std::exp(-f * h);
    const double n = static_cast<double>(t.size());
    ks = std::max({ks, std::abs(cdf - static_cast<double>(i) / n), std::abs(cdf - static_cast<double>(i + 1) / n)});
  }
  // 1% critical value of the one-sample Kolmogorov-Smirnov statistic.
  CHECK(ks < 1.628 / std::sqrt(static_cast<double>(t.size())));
}

TEST_CASE("noise is uncorrelated with the covariate") {
  const auto d = sample_dataset(unit_exponential(20000));
  double sz = 0, se = 0, szz = 0, see = 0, sze = 0;
  const double n = static_cast<double>(d.size());
  for (const auto& o : d.obs) {
    const double z = *o.z, e = o.u - *o.z;
    sz += z;
    se += e;
    szz += z * z;
    see += e * e;
    sze += z * e;
  }
  const double cov = sze / n - sz / n * se / n;
  const double corr = cov / std::sqrt((szz / n - sz * sz / n / n) * (see / n - se * se / n / n));
  CHECK(std::abs(corr) <= 3.0 / std::sqrt(n));
}

TEST_CASE("same seed gives identical data and another seed differs") {
  const auto cfg = unit_exponential(500);
  const auto a = sample_dataset(cfg);
  const auto b = sample_dataset(cfg);
  auto other = cfg;
  other.seed = 12;
  const auto c = sample_dataset(other);
  bool same = true, differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a.obs[i].x == b.obs[i].x && a.obs[i].u == b.obs[i].u && a.obs[i].d == b.obs[i].d;
    differs = differs || a.obs[i].x != c.obs[i].x;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("CSV round trip is exact") {
  auto cfg = unit_exponential(200);
  cfg.censoring = censoring::Uniform{1.5};
  const auto a = sample_dataset(cfg);
  std::stringstream ss;
  write_csv(ss, a);
  CHECK(ss.str().rfind("x,d,u,z\n", 0) == 0);
  const auto b = read_csv(ss, a.tau);
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b.obs[i].x == a.obs[i].x);
    CHECK(b.obs[i].d == a.obs[i].d);
    CHECK(b.obs[i].u == a.obs[i].u);
    CHECK(b.obs[i].z == a.obs[i].z);
  }
  std::stringstream hidden;
  write_csv(hidden, a, false);
  const auto c = read_csv(hidden, a.tau);
  CHECK_FALSE(c.has_z());
}

TEST_CASE("invalid configurations are rejected") {
  auto cfg = unit_exponential(10);
  cfg.covariate = covariate::Uniform{1.0, -1.0};
  CHECK_THROWS_AS(sample_dataset(cfg), DomainError);
  auto neg = unit_exponential(10);
  neg.tau = -1.0;
  CHECK_THROWS_AS(sample_dataset(neg), DomainError);
}
