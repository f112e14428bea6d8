#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include "mehaz/error.hpp"
#include "mehaz/fourier.hpp"
#include "mehaz/model.hpp"

using namespace mehaz;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

}  // namespace

TEST_CASE("risk_eval closed forms") {
  CHECK(risk_eval(RelativeRisk::exponential(), vec({0.0}), 7.0) == 1.0);
  CHECK(risk_eval(RelativeRisk::polynomial1(1), vec({0.5}), 2.0) == doctest::Approx(2.0));
  CHECK(risk_eval(RelativeRisk::cauchy1(), vec({1.0}), 1.0) == doctest::Approx(0.5));
  CHECK(risk_eval(RelativeRisk::exponential(), vec({0.7}), 1.3) == doctest::Approx(std::exp(0.91)));
}

TEST_CASE("risk_eval rejects dimension mismatch and non-positive values") {
  CHECK_THROWS_AS(risk_eval(RelativeRisk::exponential(), vec({0.1, 0.2}), 1.0), DomainError);
  CHECK_THROWS_AS(risk_eval(RelativeRisk::polynomial1(1), vec({1.0}), -2.0), DomainError);
}

TEST_CASE("risk_grad closed forms") {
  CHECK(risk_grad(RelativeRisk::exponential(), vec({0.0}), 3.0)[0] == doctest::Approx(3.0));
  const Vec g = risk_grad(RelativeRisk::polynomial1(2), vec({0.3, -0.1}), 2.0);
  CHECK(g[0] == doctest::Approx(2.0));
  CHECK(g[1] == doctest::Approx(4.0));
  CHECK(risk_grad(RelativeRisk::cauchy1(), vec({0.3}), 0.0)[0] == doctest::Approx(0.0));
}

TEST_CASE("every family equals one at z = 0") {
  const std::vector<std::pair<RelativeRisk, Vec>> cases{
      {RelativeRisk::exponential(), vec({0.8})},
      {RelativeRisk::polynomial1(2), vec({0.3, 0.2})},
      {RelativeRisk::cosine1(3), vec({0.2, 0.1})},
      {RelativeRisk::cauchy1(), vec({0.6})},
      {RelativeRisk::laplace_kink(), vec({0.4})},
      {RelativeRisk::polynomial2({0.5, 0.1}), vec({0.7})},
      {RelativeRisk::cosine2({0.6, 0.4}), vec({0.9})},
      {RelativeRisk::cauchy2(), vec({1.5})},
  };
  for (const auto& [risk, beta] : cases) CHECK(risk.value(beta, 0.0) == 1.0);
}

TEST_CASE("risk_grad matches central differences on a grid") {
  const std::vector<std::pair<RelativeRisk, Vec>> cases{
      {RelativeRisk::exponential(), vec({0.8})},
      {RelativeRisk::polynomial1(2), vec({0.3, 0.2})},
      {RelativeRisk::cosine1(3), vec({0.2, 0.1})},
      {RelativeRisk::cauchy1(), vec({0.6})},
      {RelativeRisk::polynomial2({0.5, 0.1}), vec({0.7})},
      {RelativeRisk::cosine2({0.6, 0.4}), vec({0.9})},
      {RelativeRisk::cauchy2(), vec({1.5})},
  };
  for (const auto& [risk, beta0] : cases)
    for (double z : {-0.9, -0.45, 0.3, 0.75}) {
      const Vec beta = beta0;
      const Vec g = risk_grad(risk, beta, z);
      for (Eigen::Index k = 0; k < beta.size(); ++k) {
        Vec p = beta, m = beta;
        p[k] += 1e-6;
        m[k] -= 1e-6;
        const double fd = (risk.value(p, z) - risk.value(m, z)) / 2e-6;
        CHECK(std::abs(g[k] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
}

TEST_CASE("baseline_integrals closed forms") {
  auto [h1, s1] = baseline_integrals(Baseline::constant(), vec({2.0}), 3.0);
  CHECK(h1 == doctest::Approx(6.0));
  CHECK(s1 == doctest::Approx(12.0));
  auto [h2, s2] = baseline_integrals(Baseline::affine_positive(), vec({1.0, 0.0}), 5.0);
  CHECK(h2 == doctest::Approx(5.0));
  CHECK(s2 == doctest::Approx(5.0));
  auto [h3, s3] = baseline_integrals(Baseline::affine_positive(), vec({1.0, 1.0}), 2.0);
  CHECK(h3 == doctest::Approx(4.0));
  CHECK(s3 == doctest::Approx(26.0 / 3.0));
}

TEST_CASE("baseline_integrals match adaptive quadrature") {
  const std::vector<std::pair<Baseline, Vec>> cases{
      {Baseline::constant(), vec({1.7})},
      {Baseline::affine_positive(), vec({0.4, 1.3})},
      {Baseline::exp_poly(), vec({0.3, -0.6})},
  };
  for (const auto& [b, g] : cases)
    for (double t : {0.25, 1.0, 2.5}) {
      const auto [h, s] = baseline_integrals(b, g, t);
      const double hq = integrate([&](double x) { return b.value(g, x); }, 0.0, t);
      const double sq = integrate([&](double x) { return b.value(g, x) * b.value(g, x); }, 0.0, t);
      CHECK(std::abs(h - hq) <= 1e-10);
      CHECK(std::abs(s - sq) <= 1e-10);
    }
}

TEST_CASE("affine baseline with a negative slope fails the positivity check") {
  CHECK_THROWS_AS(Baseline::affine_positive().check_positive(vec({1.0, -1.0}), 2.0), DomainError);
}

TEST_CASE("error_fourier values and symmetry") {
  CHECK(error_fourier(ErrorDensity::laplace(1.0), 1.0).real() == doctest::Approx(0.5));
  CHECK(error_fourier(ErrorDensity::gaussian(1.0), 0.0).real() == doctest::Approx(1.0));
  CHECK(error_fourier(ErrorDensity::gaussian(2.0), 1.0).real() == doctest::Approx(std::exp(-2.0)));
  for (const auto& e : {ErrorDensity::gaussian(0.7), ErrorDensity::laplace(0.4), ErrorDensity::cauchy(0.3)})
    for (double t : {0.3, 1.0, 4.0}) {
      const auto a = error_fourier(e, t);
      const auto b = error_fourier(e, -t);
      CHECK(a.imag() == 0.0);
      CHECK(b == std::conj(a));
      CHECK(std::abs(a) > 0.0);
    }
}

TEST_CASE("error_fourier matches quadrature of the density") {
  for (const auto& e : {ErrorDensity::gaussian(0.7), ErrorDensity::laplace(0.4)})
    for (double t : {0.5, 2.0}) {
      const double q = integrate([&](double x) { return std::cos(t * x) * e.density(x); }, -12.0, 12.0);
      CHECK(error_fourier(e, t).real() == doctest::Approx(q).epsilon(1e-9));
    }
}

TEST_CASE("weighted_risk_fourier examples") {
  const auto damp = WeightFunction::gaussian_damp(1.0);
  const auto v = weighted_risk_fourier(RelativeRisk::exponential(), vec({0.0}), damp, 1, std::nullopt, 0.0);
  CHECK(v.real() == doctest::Approx(2.0 * std::sqrt(std::numbers::pi)).epsilon(1e-12));
  for (double t : {0.0, 1.0, 2.0}) {
    const auto w = weighted_risk_fourier(RelativeRisk::polynomial1(1), vec({0.0}), damp, 1, std::nullopt, t);
    CHECK(w.real() == doctest::Approx(2.0 * std::sqrt(std::numbers::pi) * std::exp(-t * t)).epsilon(1e-10));
    CHECK(std::abs(w.imag()) < 1e-12);
  }
}

TEST_CASE("bump weight transform at zero equals the integral of W f^power") {
  const auto bump = WeightFunction::bump_sum({{-1.0, 1.0, 1.0}});
  const auto risk = RelativeRisk::polynomial1(1);
  CHECK(weighted_risk_fourier(risk, vec({0.5}), bump, 1, std::nullopt, 0.0).real() ==
        doctest::Approx(0.4439938161680794).epsilon(1e-8));
  CHECK(weighted_risk_fourier(risk, vec({0.5}), bump, 2, std::nullopt, 0.0).real() ==
        doctest::Approx(0.4615441853563233).epsilon(1e-8));
}

TEST_CASE("analytic and numeric transforms agree") {
  const auto damp = WeightFunction::gaussian_damp(0.4);
  const std::vector<std::pair<RelativeRisk, Vec>> cases{
      {RelativeRisk::exponential(), vec({0.8})},
      {RelativeRisk::polynomial1(2), vec({0.3, 0.2})},
      {RelativeRisk::cosine1(2), vec({0.4})},
  };
  for (const auto& [risk, beta] : cases)
    for (int power : {1, 2})
      for (auto d : {Derivative::none(), Derivative::first(0)}) {
        const WeightedRisk analytic(risk, beta, damp, power, d);
        const WeightedRisk numeric(risk, beta, damp, power, d, FourierRoute::Numeric);
        CHECK(analytic.method() == WeightedRisk::Method::Series);
        CHECK(numeric.method() == WeightedRisk::Method::Numeric);
        const std::vector<double> ts{0.0, 0.7, 1.9, 3.5};
        double scale = 0.0;
        for (double t : ts) scale = std::max(scale, std::abs(analytic.transform(t)));
        for (double t : ts) CHECK(std::abs(analytic.transform(t) - numeric.transform(t)) <= 1e-8 * scale);
      }
}

TEST_CASE("non-integrable products are rejected") {
  CHECK_THROWS_AS(WeightedRisk(RelativeRisk::exponential(), vec({0.5}), WeightFunction::one(), 1), DomainError);
}

TEST_CASE("smoothness classes") {
  const auto cls = smoothness_class(RelativeRisk::exponential(), vec({0.5}), WeightFunction::gaussian_damp(0.25));
  CHECK(cls.r == 2.0);
  CHECK(cls.d == doctest::Approx(0.25));
  const auto bump = smoothness_class(RelativeRisk::polynomial1(1), vec({0.5}),
                                     WeightFunction::bump_sum({{-1.0, 1.0, 2.0}}));
  CHECK(bump.r == doctest::Approx(2.0 / 3.0));
  const auto cauchy =
      smoothness_class(RelativeRisk::cauchy1(), vec({0.5}), WeightFunction::poly_gaussian_damp(0.25));
  CHECK(cauchy.r == 2.0);
  CHECK(cauchy.d > 0.125);
}

TEST_CASE("default weight follows the noise smoothness") {
  const auto w = default_weight(ErrorDensity::gaussian(0.5));
  REQUIRE(w.gaussian_delta());
  CHECK(*w.gaussian_delta() == doctest::Approx(0.25));
  CHECK(w.value(1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(default_weight(ErrorDensity::laplace(0.4)).is_one());
}
