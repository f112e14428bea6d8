#include "mehaz/deconv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mehaz/error.hpp"

namespace mehaz {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr unsigned kOrder = 20;

double negative_part(double a) { return a <= 0.0 ? a : 0.0; }

std::complex<double> inverse_conj_noise(const ErrorDensity* err, double t) {
  if (err == nullptr) return 1.0;
  const auto f = std::conj(err->fourier(t));
  if (f == std::complex<double>(0.0, 0.0)) return std::numeric_limits<double>::infinity();
  return 1.0 / f;
}

std::complex<double> safe_ratio(std::complex<double> psi, std::complex<double> inv) {
  if (psi == std::complex<double>(0.0, 0.0)) return 0.0;
  const auto q = psi * inv;
  if (!std::isfinite(q.real()) || !std::isfinite(q.imag()))
    throw NumericalError("deconvolution: psi* / f_eps* is not finite; cut too large for this noise");
  return q;
}

void check_spec(const DeconvKernelSpec& k) {
  if (!(k.cn > 0.0) || !std::isfinite(k.cn)) throw DomainError("deconvolution kernel: cn must be positive and finite");
  if (!(k.quadrature.step > 0.0)) throw DomainError("deconvolution kernel: quadrature step must be positive");
}

}  // namespace

double frequency_step(const QuadratureOptions& opt, double u_max, double extent) {
  return std::min({opt.step, 0.5, kPi / (4.0 * (1.0 + std::abs(u_max) + extent))});
}

QuadratureRule frequency_rule(double cut, double step, std::size_t max_points) {
  const auto panels = static_cast<std::size_t>(std::ceil(cut / (kOrder * step)));
  if (panels * kOrder > max_points) {
    std::ostringstream msg;
    msg << "frequency quadrature needs " << panels * kOrder << " nodes on [0, " << cut << "], above max_points "
        << max_points << "; the integrand oscillates too fast for the configured budget";
    throw NumericalError(msg.str());
  }
  return composite_gauss<kOrder>(0.0, cut, std::max<std::size_t>(1, panels));
}

SmoothResult deconv_smooth_detailed(const FourierFunction& psi, double u, const DeconvKernelSpec& k,
                                    const ErrorDensity* err) {
  check_spec(k);
  if (!std::isfinite(u)) throw DomainError("deconvolution: evaluation point must be finite");
  const double step = frequency_step(k.quadrature, u, psi.extent());
  const auto half = frequency_rule(k.cn, step, k.quadrature.max_points / 2);
  std::complex<double> sum = 0.0;
  for (std::size_t q = 0; q < half.size(); ++q) {
    for (double t : {half.nodes[q], -half.nodes[q]}) {
      const auto term = safe_ratio(psi.transform(t), inverse_conj_noise(err, t));
      sum += half.weights[q] * term * std::exp(std::complex<double>(0.0, -t * u));
    }
  }
  sum /= 2.0 * kPi;
  return {sum.real(), std::abs(sum.imag()), 2 * half.size()};
}

double deconv_smooth(const FourierFunction& psi, double u, const DeconvKernelSpec& k, const ErrorDensity& err) {
  return deconv_smooth_detailed(psi, u, k, &err).value;
}

double kernel_smooth(const FourierFunction& psi, double z, const DeconvKernelSpec& k) {
  return deconv_smooth_detailed(psi, z, k, nullptr).value;
}

// ------------------------------------------------------ DeconvolutionPlan

DeconvolutionPlan::DeconvolutionPlan(std::span<const double> points, double cut, const ErrorDensity* err,
                                     double extent, QuadratureOptions opt)
    : cut_(cut) {
  if (!(cut > 0.0) || !std::isfinite(cut)) throw DomainError("DeconvolutionPlan: cut must be positive and finite");
  double u_max = 0.0;
  for (double u : points) {
    if (!std::isfinite(u)) throw DomainError("DeconvolutionPlan: points must be finite");
    u_max = std::max(u_max, std::abs(u));
  }
  rule_ = frequency_rule(cut, frequency_step(opt, u_max, extent), opt.max_points);
  const auto K = static_cast<Eigen::Index>(rule_.size());
  inverse_noise_.resize(rule_.size());
  for (std::size_t k = 0; k < rule_.size(); ++k) inverse_noise_[k] = inverse_conj_noise(err, rule_.nodes[k]);
  basis_.resize(static_cast<Eigen::Index>(points.size()), 2 * K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double t = rule_.nodes[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < basis_.rows(); ++i) {
      const double ph = t * points[static_cast<std::size_t>(i)];
      basis_(i, k) = std::cos(ph);
      basis_(i, K + k) = std::sin(ph);
    }
  }
}

Mat DeconvolutionPlan::coefficients(std::span<const FourierFunction* const> psis) const {
  const auto K = static_cast<Eigen::Index>(rule_.size());
  Mat c(2 * K, static_cast<Eigen::Index>(psis.size()));
  std::vector<std::complex<double>> ft(rule_.size());
  for (std::size_t j = 0; j < psis.size(); ++j) {
    psis[j]->transform(rule_.nodes, ft);
    for (Eigen::Index k = 0; k < K; ++k) {
      const auto q = safe_ratio(ft[static_cast<std::size_t>(k)], inverse_noise_[static_cast<std::size_t>(k)]);
      const double w = rule_.weights[static_cast<std::size_t>(k)] / kPi;
      c(k, static_cast<Eigen::Index>(j)) = w * q.real();
      c(K + k, static_cast<Eigen::Index>(j)) = w * q.imag();
    }
  }
  return c;
}

// --------------------------------------------------------- norms, bandwidth

std::pair<double, double> bias_variance_norms(const FourierFunction& psi, const DeconvKernelSpec& k,
                                              const ErrorDensity& err, int q) {
  check_spec(k);
  if (q != 1 && q != 2) throw DomainError("bias_variance_norms: q must be 1 or 2");
  const double step = frequency_step(k.quadrature, 0.0, psi.extent());
  auto integrand = [&](double t, bool deconvolve) {
    auto v = psi.transform(t) / (2.0 * kPi);
    if (deconvolve) v = safe_ratio(v, inverse_conj_noise(&err, t));
    const double a = std::abs(v);
    return q == 1 ? a : a * a;
  };

  // |psi*| is even, so both integrals fold onto t >= 0. Panels sit on a grid
  // that does not depend on cn, so a larger cut only appends terms.
  const double width = kOrder * step;
  const auto full = static_cast<std::size_t>(std::floor(k.cn / width));
  if ((full + 1) * kOrder > k.quadrature.max_points)
    throw NumericalError("bias_variance_norms: frequency quadrature exceeds max_points");
  double variance = 0.0;
  for (std::size_t j = 0; j <= full; ++j) {
    const double a = static_cast<double>(j) * width;
    const double b = std::min(a + width, k.cn);
    if (!(b > a)) break;
    variance += 2.0 * composite_gauss<kOrder>(a, b, 1).integrate([&](double t) { return integrand(t, true); });
  }

  double bias = 0.0;
  double lo = k.cn;
  int quiet = 0;
  while (quiet < 3) {
    if (lo > 1e6) throw NumericalError("bias_variance_norms: tail integral of psi* does not converge");
    const double width = std::max(kOrder * step, 0.25 * lo);
    const auto panel = composite_gauss<kOrder>(lo, lo + width, 1);
    const double piece = 2.0 * panel.integrate([&](double t) { return integrand(t, false); });
    bias += piece;
    quiet = piece <= 1e-17 * std::max(bias, 1e-300) || piece == 0.0 ? quiet + 1 : 0;
    lo += width;
  }
  const auto squared = [q](double v) { return q == 1 ? v * v : v; };
  return {squared(bias), squared(variance)};
}

double default_bandwidth(const SmoothnessClass& cls, const NoiseSmoothness& err, double n) {
  if (!(n >= 2.0)) throw DomainError("default_bandwidth: n must be at least 2");
  if (cls.r < 0.0 || cls.r > 2.0 || err.rho < 0.0 || err.rho > 2.0)
    throw DomainError("default_bandwidth: smoothness exponents must lie in [0, 2]");
  const double logn = std::log(n);
  if (err.rho == 0.0) return std::pow(n, 1.0 / (2.0 * err.alpha + 1.0));
  if (!(err.delta > 0.0)) throw DomainError("default_bandwidth: super smooth noise needs delta > 0");
  if (cls.r < err.rho || (cls.r == err.rho && cls.d <= err.delta)) {
    const double x = logn / (2.0 * err.delta);
    const double corr = (2.0 * err.alpha + negative_part(1.0 - err.rho)) / (2.0 * err.delta * err.rho);
    const double base = x - corr * std::log(x);
    return std::max(1.0, std::pow(std::max(base, 0.0), 1.0 / err.rho));
  }
  // 2 d c^r - 2 delta c^rho = log n; the left side eventually increases.
  auto g = [&](double c) { return 2.0 * cls.d * std::pow(c, cls.r) - 2.0 * err.delta * std::pow(c, err.rho) - logn; };
  double lo = 0.0, hi = 1.0;
  while (g(hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw NumericalError("default_bandwidth: bisection bracket not found");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return std::max(1.0, 0.5 * (lo + hi));
}

}  // namespace mehaz
