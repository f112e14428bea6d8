#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mehaz/fourier.hpp"
#include "mehaz/model.hpp"

namespace mehaz {

struct QuadratureOptions {
  /// Upper bound on the spacing of frequency nodes.
  double step = 0.5;
  std::size_t max_points = 65536;
};

/// K*(t) = 1{|t| <= 1}.
enum class KernelShape { SincBand };

struct DeconvKernelSpec {
  double cn = 1.0;
  KernelShape kernel = KernelShape::SincBand;
  QuadratureOptions quadrature{};
};

/// Node spacing for an integrand psi*(t) exp(-i t u) with |u| <= u_max and
/// psi concentrated on |z| <= extent.
double frequency_step(const QuadratureOptions& opt, double u_max, double extent);

/// Composite 20-point Gauss rule on [0, cut] with spacing at most `step`.
QuadratureRule frequency_rule(double cut, double step, std::size_t max_points);

struct SmoothResult {
  double value = 0.0;
  double imag_residual = 0.0;
  std::size_t points = 0;
};

/// (1/2pi) int_{-cn}^{cn} psi*(t) exp(-i t u) / conj(f_eps*(t)) dt. A null
/// `err` gives the plain kernel smoother.
SmoothResult deconv_smooth_detailed(const FourierFunction& psi, double u, const DeconvKernelSpec& k,
                                    const ErrorDensity* err);
double deconv_smooth(const FourierFunction& psi, double u, const DeconvKernelSpec& k, const ErrorDensity& err);
double kernel_smooth(const FourierFunction& psi, double z, const DeconvKernelSpec& k);

/// Batched deconvolution at a fixed set of points. The integral over
/// [-cut, cut] folds to (1/pi) int_0^cut Re(q(t) exp(-i t u)) dt with
/// q = psi* / conj(f_eps*), so values = B * C where B = [cos(t_k u_i),
/// sin(t_k u_i)] depends only on the points and C on psi.
class DeconvolutionPlan {
 public:
  DeconvolutionPlan(std::span<const double> points, double cut, const ErrorDensity* err, double extent,
                    QuadratureOptions opt = {});

  std::size_t size() const noexcept { return static_cast<std::size_t>(basis_.rows()); }
  std::size_t frequencies() const noexcept { return rule_.size(); }
  double cut() const noexcept { return cut_; }
  const QuadratureRule& rule() const noexcept { return rule_; }

  /// n x 2K matrix [cos(t_k u_i) | sin(t_k u_i)].
  const Mat& basis() const noexcept { return basis_; }
  /// 2K x J coefficients, one column per function.
  Mat coefficients(std::span<const FourierFunction* const> psis) const;
  /// n x J smoothed values.
  Mat apply(std::span<const FourierFunction* const> psis) const { return basis_ * coefficients(psis); }

 private:
  double cut_;
  QuadratureRule rule_;
  std::vector<std::complex<double>> inverse_noise_;
  Mat basis_;
};

/// (||(1/2pi) psi* (K*_{cn} - 1)||_q^2, ||(1/2pi) psi* K*_{cn} / conj f_eps*||_q^2).
std::pair<double, double> bias_variance_norms(const FourierFunction& psi, const DeconvKernelSpec& k,
                                              const ErrorDensity& err, int q);

/// Rate-motivated bandwidth C_n for a psi of class `cls` and noise `err`.
double default_bandwidth(const SmoothnessClass& cls, const NoiseSmoothness& err, double n);

}  // namespace mehaz
