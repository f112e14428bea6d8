#include "mehaz/series.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mehaz {

ExpPolySeries ExpPolySeries::constant(double c) { return term(c, 0); }

ExpPolySeries ExpPolySeries::term(std::complex<double> coef, int power, std::complex<double> rate) {
  ExpPolySeries s;
  s.terms_.push_back({coef, power, rate});
  return s;
}

ExpPolySeries& ExpPolySeries::operator+=(const ExpPolySeries& other) {
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  return *this;
}

ExpPolySeries& ExpPolySeries::operator*=(std::complex<double> s) {
  for (auto& t : terms_) t.coef *= s;
  return *this;
}

ExpPolySeries operator*(const ExpPolySeries& a, const ExpPolySeries& b) {
  ExpPolySeries out;
  out.terms_.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& x : a.terms_)
    for (const auto& y : b.terms_) out.terms_.push_back({x.coef * y.coef, x.power + y.power, x.rate + y.rate});
  out.simplify();
  return out;
}

void ExpPolySeries::simplify() {
  std::vector<ExpPolyTerm> merged;
  merged.reserve(terms_.size());
  for (const auto& t : terms_) {
    auto it = std::find_if(merged.begin(), merged.end(),
                           [&](const ExpPolyTerm& m) { return m.power == t.power && m.rate == t.rate; });
    if (it == merged.end())
      merged.push_back(t);
    else
      it->coef += t.coef;
  }
  std::erase_if(merged, [](const ExpPolyTerm& t) { return t.coef == std::complex<double>(0.0, 0.0); });
  terms_ = std::move(merged);
}

std::complex<double> ExpPolySeries::value(double z) const {
  std::complex<double> sum = 0.0;
  for (const auto& t : terms_) sum += t.coef * std::pow(z, t.power) * std::exp(t.rate * z);
  return sum;
}

namespace {

std::complex<double> ipow(std::complex<double> x, int n) {
  std::complex<double> r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

// Moments of a Gaussian with complex mean mu and variance 2*delta:
// sum_{j even} C(k, j) mu^{k-j} (2 delta)^{j/2} (j-1)!!.
std::complex<double> shifted_moment(int k, std::complex<double> mu, double delta) {
  if (k == 0) return 1.0;
  std::complex<double> sum = 0.0;
  double binom = 1.0;  // C(k, j)
  double var_pow = 1.0;  // (2 delta)^{j/2}
  double dfact = 1.0;  // (j-1)!!
  for (int j = 0; j <= k; j += 2) {
    sum += binom * ipow(mu, k - j) * var_pow * dfact;
    // advance j -> j + 2
    binom *= static_cast<double>(k - j) * static_cast<double>(k - j - 1) /
             (static_cast<double>(j + 1) * static_cast<double>(j + 2));
    var_pow *= 2.0 * delta;
    dfact *= static_cast<double>(j + 1);
  }
  return sum;
}

}  // namespace

std::complex<double> ExpPolySeries::gaussian_transform(double delta, double t) const {
  const double norm = std::sqrt(4.0 * std::numbers::pi * delta);
  std::complex<double> sum = 0.0;
  for (const auto& term : terms_) {
    const std::complex<double> s = term.rate + std::complex<double>(0.0, t);
    const std::complex<double> envelope = std::exp(delta * s * s);
    if (envelope == std::complex<double>(0.0, 0.0)) continue;
    sum += term.coef * envelope * shifted_moment(term.power, 2.0 * delta * s, delta);
  }
  return norm * sum;
}

}  // namespace mehaz
