#pragma once

#include <complex>
#include <vector>

namespace mehaz {

/// One term coef * z^power * exp(rate * z).
struct ExpPolyTerm {
  std::complex<double> coef;
  int power = 0;
  std::complex<double> rate{0.0, 0.0};
};

/// Finite sums of exponential-polynomial terms. Closed under products, which
/// covers the exponential, polynomial and trigonometric relative risks, their
/// squares and their parameter derivatives. Multiplied by a Gaussian damping
/// exp(-z^2/(4 delta)) every term has a closed-form Fourier transform.
class ExpPolySeries {
 public:
  ExpPolySeries() = default;

  static ExpPolySeries constant(double c);
  static ExpPolySeries term(std::complex<double> coef, int power, std::complex<double> rate = {});

  const std::vector<ExpPolyTerm>& terms() const noexcept { return terms_; }
  bool empty() const noexcept { return terms_.empty(); }

  ExpPolySeries& operator+=(const ExpPolySeries& other);
  ExpPolySeries& operator*=(std::complex<double> s);
  friend ExpPolySeries operator+(ExpPolySeries a, const ExpPolySeries& b) { return a += b; }
  friend ExpPolySeries operator*(ExpPolySeries a, std::complex<double> s) { return a *= s; }
  friend ExpPolySeries operator*(const ExpPolySeries& a, const ExpPolySeries& b);

  /// Merges terms with equal (power, rate) and drops zero coefficients.
  void simplify();

  std::complex<double> value(double z) const;

  /// Integral of exp(i t z) * s(z) * exp(-z^2 / (4 delta)) over the real line.
  std::complex<double> gaussian_transform(double delta, double t) const;

 private:
  std::vector<ExpPolyTerm> terms_;
};

}  // namespace mehaz
