#include <cmath>
#include <numbers>

#include <doctest.h>

#include "mehaz/deconv.hpp"
#include "mehaz/error.hpp"

using namespace mehaz;

namespace {

// sin(z) / (pi z), whose transform is the indicator of [-1, 1].
class BandLimited final : public FourierFunction {
 public:
  double value(double z) const override { return z == 0.0 ? 1.0 / std::numbers::pi : std::sin(z) / (std::numbers::pi * z); }
  std::complex<double> transform(double t) const override { return std::abs(t) <= 1.0 ? 1.0 : 0.0; }
  using FourierFunction::transform;
  double extent() const override { return 50.0; }
};

DeconvKernelSpec cut(double cn) {
  DeconvKernelSpec k;
  k.cn = cn;
  return k;
}

}  // namespace

TEST_CASE("deconvolving the zero function gives zero") {
  const ZeroFunction zero;
  for (double u : {-3.0, 0.0, 2.5}) {
    CHECK(deconv_smooth(zero, u, cut(5.0), ErrorDensity::laplace(1.0)) == 0.0);
    CHECK(kernel_smooth(zero, u, cut(5.0)) == 0.0);
  }
}

TEST_CASE("gaussian psi under laplace noise") {
  const GaussianFunction psi;
  const auto err = ErrorDensity::laplace(1.0);
  CHECK(deconv_smooth(psi, 0.0, cut(40.0), err) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(deconv_smooth(psi, 1.0, cut(40.0), err) == doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
}

TEST_CASE("kernel smoother of a gaussian") {
  const GaussianFunction psi;
  CHECK(kernel_smooth(psi, 0.0, cut(40.0)) == doctest::Approx(1.0).epsilon(1e-12));
  // (1/2pi) int_{-1}^{1} sqrt(2 pi) exp(-t^2/2) dt = erf(1/sqrt 2).
  CHECK(kernel_smooth(psi, 0.0, cut(1.0)) == doctest::Approx(0.6826894921370859).epsilon(1e-12));
}

TEST_CASE("nearly flat noise reproduces the kernel smoother") {
  const GaussianFunction psi(0.7, 1.3);
  const auto flat = ErrorDensity::laplace(1e-6);
  for (double u : {-1.5, 0.0, 0.4, 2.0}) {
    const double a = deconv_smooth(psi, u, cut(6.0), flat);
    const double b = kernel_smooth(psi, u, cut(6.0));
    CHECK(std::abs(a - b) <= 1e-4 * std::abs(b));
  }
}

TEST_CASE("halving the frequency step leaves the result unchanged") {
  const GaussianFunction psi;
  const auto err = ErrorDensity::gaussian(0.4);
  for (double u : {-2.0, 0.3, 1.7}) {
    auto k = cut(4.0);
    const double a = deconv_smooth(psi, u, k, err);
    k.quadrature.step *= 0.5;
    const double b = deconv_smooth(psi, u, k, err);
    CHECK(std::abs(a - b) <= 1e-8 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("imaginary residual is negligible for symmetric noise") {
  const GaussianFunction psi;
  const auto err = ErrorDensity::gaussian(0.5);
  const auto r = deconv_smooth_detailed(psi, 0.8, cut(3.0), &err);
  CHECK(std::abs(r.imag_residual) <= 1e-8 * std::max(1.0, std::abs(r.value)));
  CHECK(r.points > 0);
}

TEST_CASE("batched plan agrees with pointwise evaluation") {
  const GaussianFunction g1;
  const GaussianFunction g2(0.5, 2.0);
  const auto err = ErrorDensity::laplace(0.5);
  const std::vector<double> pts{-2.0, -0.3, 0.0, 1.1, 3.0};
  const DeconvolutionPlan plan(pts, 5.0, &err, 6.0);
  const FourierFunction* fs[] = {&g1, &g2};
  const Mat vals = plan.apply(fs);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(vals(static_cast<Eigen::Index>(i), 0) == doctest::Approx(deconv_smooth(g1, pts[i], cut(5.0), err)).epsilon(1e-9));
    CHECK(vals(static_cast<Eigen::Index>(i), 1) == doctest::Approx(deconv_smooth(g2, pts[i], cut(5.0), err)).epsilon(1e-9));
  }
}

TEST_CASE("bias and variance norms") {
  const GaussianFunction psi;
  const auto laplace = ErrorDensity::laplace(1.0);
  const auto [bias0, var0] = bias_variance_norms(BandLimited{}, cut(2.0), laplace, 2);
  CHECK(bias0 == 0.0);
  CHECK(var0 > 0.0);
  const auto [bias, var] = bias_variance_norms(psi, cut(5.0), laplace, 2);
  // Oracles: int_{-5}^{5} 2pi e^{-t^2}(1+t^2)^2 dt/(2pi)^2 and 2pi sqrt(pi) erfc(5)/(2pi)^2.
  CHECK(var == doctest::Approx(0.7757606770619991).epsilon(1e-9));
  CHECK(bias == doctest::Approx(4.3370940056988593e-13).epsilon(1e-6));
}

TEST_CASE("norms are monotone in the cut") {
  const GaussianFunction psi(0.8);
  for (const auto& err : {ErrorDensity::laplace(0.5), ErrorDensity::gaussian(0.3)})
    for (int q : {1, 2}) {
      double prev_bias = std::numeric_limits<double>::infinity(), prev_var = 0.0;
      for (double cn : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const auto [b, v] = bias_variance_norms(psi, cut(cn), err, q);
        CHECK(b <= prev_bias);
        CHECK(v >= prev_var);
        prev_bias = b;
        prev_var = v;
      }
    }
}

TEST_CASE("default bandwidth rules") {
  CHECK(default_bandwidth({1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, 1024.0) == doctest::Approx(4.0));
  CHECK(default_bandwidth({0.0, 1.0, 2.0}, {0.0, 0.5, 2.0}, std::exp(4.0)) == doctest::Approx(2.0).epsilon(1e-8));
  // Slower regime: [log n/(2 delta) - (2 alpha + (1 - rho)_-)/(2 delta rho) log(log n/(2 delta))]^(1/rho).
  const double n = std::exp(8.0);
  const double x = 8.0 / 1.0;
  const double expected = std::sqrt(x - (0.0 - 1.0) / 2.0 * std::log(x));
  CHECK(default_bandwidth({1.0, 0.0, 0.0}, {0.0, 0.5, 2.0}, n) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(default_bandwidth({1.0, 0.0, 0.0}, {0.0, 0.5, 2.0}, 3.0) >= 1.0);
  CHECK_THROWS_AS(default_bandwidth({0.0, 1.0, 3.0}, {0.0, 0.5, 2.0}, 100.0), DomainError);
}
