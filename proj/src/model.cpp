#include "mehaz/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "mehaz/error.hpp"

namespace mehaz {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kPi = std::numbers::pi;

double negative_part(double a) { return a <= 0.0 ? a : 0.0; }

// Full cosine coefficient vector b_1..b_m from the free parameters b_2..b_m.
std::vector<double> cosine_coefficients(int m, const Vec& beta) {
  std::vector<double> b(static_cast<std::size_t>(m), 0.0);
  double rest = 0.0;
  for (int j = 2; j <= m; ++j) {
    b[j - 1] = beta[j - 2];
    rest += beta[j - 2];
  }
  b[0] = 1.0 - rest;
  return b;
}

ExpPolySeries cosine_series(int freq, double scale) {
  // scale * cos(freq z)
  auto s = ExpPolySeries::term(0.5 * scale, 0, {0.0, static_cast<double>(freq)});
  s += ExpPolySeries::term(0.5 * scale, 0, {0.0, -static_cast<double>(freq)});
  return s;
}

}  // namespace

// ---------------------------------------------------------------- Theta

Vec Theta::flat() const {
  Vec out(dim());
  out << beta, gamma;
  return out;
}

Theta Theta::split(const Vec& flat, Eigen::Index m) {
  if (m < 0 || m > flat.size()) throw DomainError("Theta::split: beta length exceeds parameter vector");
  return Theta{flat.head(m), flat.tail(flat.size() - m)};
}

// ---------------------------------------------------------- RelativeRisk

RelativeRisk::RelativeRisk(Family family) : family_(std::move(family)) {
  std::visit(overloaded{
                 [](const risk::Polynomial1& f) {
                   if (f.m < 1) throw DomainError("Polynomial1: degree m must be >= 1");
                 },
                 [](const risk::Cosine1& f) {
                   if (f.m < 1) throw DomainError("Cosine1: m must be >= 1");
                 },
                 [](const risk::Polygonal& f) {
                   if (!std::isfinite(f.a) || !std::isfinite(f.b)) throw DomainError("Polygonal: knots must be finite");
                 },
                 [](const risk::Polynomial2& f) {
                   if (f.coeffs.empty()) throw DomainError("Polynomial2: needs at least one coefficient");
                 },
                 [](const risk::Cosine2& f) {
                   if (f.coeffs.empty()) throw DomainError("Cosine2: needs at least one coefficient");
                   double s = 0.0;
                   for (double a : f.coeffs) s += a;
                   if (std::abs(s - 1.0) > 1e-12) throw DomainError("Cosine2: coefficients must sum to 1");
                 },
                 [](const auto&) {},
             },
             family_);
}

std::string RelativeRisk::name() const {
  return std::visit(overloaded{
                        [](const risk::Exponential&) -> std::string { return "exponential"; },
                        [](const risk::Polynomial1&) -> std::string { return "polynomial1"; },
                        [](const risk::Cosine1&) -> std::string { return "cosine1"; },
                        [](const risk::Cauchy1&) -> std::string { return "cauchy1"; },
                        [](const risk::LaplaceKink&) -> std::string { return "laplace_kink"; },
                        [](const risk::Indicator&) -> std::string { return "indicator"; },
                        [](const risk::Polygonal&) -> std::string { return "polygonal"; },
                        [](const risk::Polynomial2&) -> std::string { return "polynomial2"; },
                        [](const risk::Cosine2&) -> std::string { return "cosine2"; },
                        [](const risk::Cauchy2&) -> std::string { return "cauchy2"; },
                    },
                    family_);
}

int RelativeRisk::arity() const {
  return std::visit(overloaded{
                        [](const risk::Polynomial1& f) { return f.m; },
                        [](const risk::Cosine1& f) { return f.m - 1; },
                        [](const risk::Polygonal&) { return 3; },
                        [](const auto&) { return 1; },
                    },
                    family_);
}

void RelativeRisk::check_beta(const Vec& beta) const {
  if (beta.size() != arity()) {
    std::ostringstream msg;
    msg << name() << ": expected " << arity() << " beta parameters, got " << beta.size();
    throw DomainError(msg.str());
  }
  if (!beta.allFinite()) throw DomainError(name() + ": beta must be finite");
}

double RelativeRisk::value(const Vec& beta, double z) const {
  return std::visit(
      overloaded{
          [&](const risk::Exponential&) { return std::exp(beta[0] * z); },
          [&](const risk::Polynomial1& f) {
            double v = 0.0;
            for (int k = f.m; k >= 1; --k) v = (v + beta[k - 1]) * z;
            return 1.0 + v;
          },
          [&](const risk::Cosine1& f) {
            // cos z + sum_{j >= 2} b_j (cos jz - cos z), exact at z = 0.
            const double c1 = std::cos(z);
            double v = 0.0;
            for (int j = 2; j <= f.m; ++j) v += beta[j - 2] * (std::cos(j * z) - c1);
            return c1 + v;
          },
          [&](const risk::Cauchy1&) { return 1.0 - beta[0] + beta[0] / (1.0 + z * z); },
          [&](const risk::LaplaceKink&) { return 1.0 + beta[0] * (std::exp(-std::abs(z) / 2.0) - 1.0); },
          [&](const risk::Indicator&) { return 1.0 - beta[0] + (std::abs(z) <= 1.0 ? beta[0] : 0.0); },
          [&](const risk::Polygonal& f) {
            const double b3 = std::pow(std::abs(f.b), 3);
            return 1.0 - beta[1] * negative_part(f.a) - beta[2] * b3 + beta[0] * z +
                   (z >= f.a ? beta[1] * (z - f.a) : 0.0) + beta[2] * std::pow(std::abs(z - f.b), 3);
          },
          [&](const risk::Polynomial2& f) {
            const double x = beta[0] * z;
            double v = 0.0;
            for (std::size_t k = f.coeffs.size(); k >= 1; --k) v = (v + f.coeffs[k - 1]) * x;
            return 1.0 + v;
          },
          [&](const risk::Cosine2& f) {
            double v = 0.0;
            for (std::size_t j = 1; j <= f.coeffs.size(); ++j) v += f.coeffs[j - 1] * std::cos(j * beta[0] * z);
            return v;
          },
          [&](const risk::Cauchy2&) {
            const double x = beta[0] * z;
            return 1.0 / (1.0 + x * x);
          },
      },
      family_);
}

void RelativeRisk::gradient(const Vec& beta, double z, std::span<double> out) const {
  std::visit(overloaded{
                 [&](const risk::Exponential&) { out[0] = z * std::exp(beta[0] * z); },
                 [&](const risk::Polynomial1& f) {
                   double p = 1.0;
                   for (int k = 1; k <= f.m; ++k) {
                     p *= z;
                     out[k - 1] = p;
                   }
                 },
                 [&](const risk::Cosine1& f) {
                   const double c1 = std::cos(z);
                   for (int j = 2; j <= f.m; ++j) out[j - 2] = std::cos(j * z) - c1;
                 },
                 [&](const risk::Cauchy1&) { out[0] = -z * z / (1.0 + z * z); },
                 [&](const risk::LaplaceKink&) { out[0] = std::exp(-std::abs(z) / 2.0) - 1.0; },
                 [&](const risk::Indicator&) { out[0] = std::abs(z) <= 1.0 ? 0.0 : -1.0; },
                 [&](const risk::Polygonal& f) {
                   out[0] = z;
                   out[1] = -negative_part(f.a) + (z >= f.a ? z - f.a : 0.0);
                   out[2] = -std::pow(std::abs(f.b), 3) + std::pow(std::abs(z - f.b), 3);
                 },
                 [&](const risk::Polynomial2& f) {
                   double g = 0.0;
                   for (std::size_t k = 1; k <= f.coeffs.size(); ++k)
                     g += f.coeffs[k - 1] * static_cast<double>(k) * std::pow(beta[0], static_cast<double>(k - 1)) *
                          std::pow(z, static_cast<double>(k));
                   out[0] = g;
                 },
                 [&](const risk::Cosine2& f) {
                   double g = 0.0;
                   for (std::size_t j = 1; j <= f.coeffs.size(); ++j)
                     g -= f.coeffs[j - 1] * static_cast<double>(j) * z * std::sin(j * beta[0] * z);
                   out[0] = g;
                 },
                 [&](const risk::Cauchy2&) {
                   const double q = 1.0 + beta[0] * beta[0] * z * z;
                   out[0] = -2.0 * beta[0] * z * z / (q * q);
                 },
             },
             family_);
}

void RelativeRisk::hessian(const Vec& beta, double z, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  std::visit(overloaded{
                 [&](const risk::Exponential&) { out[0] = z * z * std::exp(beta[0] * z); },
                 [&](const risk::Polynomial2& f) {
                   double h = 0.0;
                   for (std::size_t k = 2; k <= f.coeffs.size(); ++k)
                     h += f.coeffs[k - 1] * static_cast<double>(k * (k - 1)) *
                          std::pow(beta[0], static_cast<double>(k - 2)) * std::pow(z, static_cast<double>(k));
                   out[0] = h;
                 },
                 [&](const risk::Cosine2& f) {
                   double h = 0.0;
                   for (std::size_t j = 1; j <= f.coeffs.size(); ++j)
                     h -= f.coeffs[j - 1] * static_cast<double>(j * j) * z * z * std::cos(j * beta[0] * z);
                   out[0] = h;
                 },
                 [&](const risk::Cauchy2&) {
                   const double x2 = beta[0] * beta[0] * z * z;
                   const double q = 1.0 + x2;
                   out[0] = (6.0 * x2 * z * z - 2.0 * z * z) / (q * q * q);
                 },
                 // Remaining families are linear in beta.
                 [&](const auto&) {},
             },
             family_);
}

double RelativeRisk::derivative(const Vec& beta, double z, Derivative d) const {
  const int m = arity();
  if (d.order == 0) return value(beta, z);
  if (d.i < 0 || d.i >= m || (d.order == 2 && (d.j < 0 || d.j >= m)))
    throw DomainError(name() + ": derivative index out of range");
  if (d.order == 1) {
    std::vector<double> g(static_cast<std::size_t>(m));
    gradient(beta, z, g);
    return g[d.i];
  }
  std::vector<double> h(static_cast<std::size_t>(m * m));
  hessian(beta, z, h);
  return h[d.i * m + d.j];
}

bool RelativeRisk::has_series() const {
  return std::holds_alternative<risk::Exponential>(family_) || std::holds_alternative<risk::Polynomial1>(family_) ||
         std::holds_alternative<risk::Cosine1>(family_) || std::holds_alternative<risk::Polynomial2>(family_) ||
         std::holds_alternative<risk::Cosine2>(family_);
}

std::optional<ExpPolySeries> RelativeRisk::series(const Vec& beta, Derivative d) const {
  using S = ExpPolySeries;
  return std::visit(
      overloaded{
          [&](const risk::Exponential&) -> std::optional<S> {
            // d^k/dbeta^k exp(beta z) = z^k exp(beta z)
            return S::term(1.0, d.order, beta[0]);
          },
          [&](const risk::Polynomial1& f) -> std::optional<S> {
            if (d.order == 0) {
              S s = S::constant(1.0);
              for (int k = 1; k <= f.m; ++k) s += S::term(beta[k - 1], k);
              s.simplify();
              return s;
            }
            if (d.order == 1) return S::term(1.0, d.i + 1);
            return S{};
          },
          [&](const risk::Cosine1& f) -> std::optional<S> {
            if (d.order == 0) {
              const auto b = cosine_coefficients(f.m, beta);
              S s;
              for (int j = 1; j <= f.m; ++j) s += cosine_series(j, b[j - 1]);
              s.simplify();
              return s;
            }
            if (d.order == 1) return cosine_series(d.i + 2, 1.0) + cosine_series(1, -1.0);
            return S{};
          },
          [&](const risk::Polynomial2& f) -> std::optional<S> {
            S s = d.order == 0 ? S::constant(1.0) : S{};
            for (std::size_t k = 1; k <= f.coeffs.size(); ++k) {
              const auto kk = static_cast<int>(k);
              if (kk < d.order) continue;
              double falling = 1.0;
              for (int q = 0; q < d.order; ++q) falling *= static_cast<double>(kk - q);
              s += S::term(f.coeffs[k - 1] * falling * std::pow(beta[0], kk - d.order), kk);
            }
            s.simplify();
            return s;
          },
          [&](const risk::Cosine2& f) -> std::optional<S> {
            // d^k/dbeta^k cos(j beta z) = Re[(i j z)^k exp(i j beta z)]
            S s;
            for (std::size_t j = 1; j <= f.coeffs.size(); ++j) {
              const std::complex<double> w(0.0, static_cast<double>(j));
              std::complex<double> wk = 1.0, mwk = 1.0;
              for (int q = 0; q < d.order; ++q) {
                wk *= w;
                mwk *= -w;
              }
              s += S::term(0.5 * f.coeffs[j - 1] * wk, d.order, w * beta[0]);
              s += S::term(0.5 * f.coeffs[j - 1] * mwk, d.order, -w * beta[0]);
            }
            s.simplify();
            return s;
          },
          [&](const auto&) -> std::optional<S> { return std::nullopt; },
      },
      family_);
}

std::vector<double> RelativeRisk::breakpoints() const {
  return std::visit(overloaded{
                        [](const risk::LaplaceKink&) { return std::vector<double>{0.0}; },
                        [](const risk::Indicator&) { return std::vector<double>{-1.0, 1.0}; },
                        [](const risk::Polygonal& f) { return std::vector<double>{f.a, f.b}; },
                        [](const auto&) { return std::vector<double>{}; },
                    },
                    family_);
}

double risk_eval(const RelativeRisk& family, const Vec& beta, double z) {
  family.check_beta(beta);
  if (!std::isfinite(z)) throw DomainError("risk_eval: z must be finite");
  const double v = family.value(beta, z);
  if (!(v > 0.0)) {
    std::ostringstream msg;
    msg << family.name() << ": non-positive relative risk " << v << " at z=" << z;
    throw DomainError(msg.str());
  }
  return v;
}

Vec risk_grad(const RelativeRisk& family, const Vec& beta, double z) {
  risk_eval(family, beta, z);
  Vec g(family.arity());
  family.gradient(beta, z, {g.data(), static_cast<std::size_t>(g.size())});
  return g;
}

Mat risk_hess(const RelativeRisk& family, const Vec& beta, double z) {
  risk_eval(family, beta, z);
  const int m = family.arity();
  Mat h(m, m);
  std::vector<double> buf(static_cast<std::size_t>(m * m));
  family.hessian(beta, z, buf);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) h(i, j) = buf[i * m + j];
  return h;
}

// -------------------------------------------------------------- Baseline

namespace {

// int_0^1 s^n exp(k s) ds for n = 0, 1, 2.
double unit_moment(int n, double k) {
  if (std::abs(k) < 1.0) {
    // sum_j k^j / (j! (n + j + 1))
    double sum = 0.0, term = 1.0;
    for (int j = 0; j < 40; ++j) {
      sum += term / static_cast<double>(n + j + 1);
      term *= k / static_cast<double>(j + 1);
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  const double ek = std::exp(k);
  double e = std::expm1(k) / k;
  for (int q = 1; q <= n; ++q) e = (ek - q * e) / k;
  return e;
}

}  // namespace

std::string Baseline::name() const {
  return std::visit(overloaded{
                        [](const baseline::Constant&) -> std::string { return "constant"; },
                        [](const baseline::AffinePositive&) -> std::string { return "affine_positive"; },
                        [](const baseline::ExpPoly&) -> std::string { return "exp_poly"; },
                    },
                    family_);
}

int Baseline::arity() const { return std::holds_alternative<baseline::Constant>(family_) ? 1 : 2; }

void Baseline::check_gamma(const Vec& gamma) const {
  if (gamma.size() != arity()) {
    std::ostringstream msg;
    msg << name() << ": expected " << arity() << " gamma parameters, got " << gamma.size();
    throw DomainError(msg.str());
  }
  if (!gamma.allFinite()) throw DomainError(name() + ": gamma must be finite");
}

void Baseline::check_positive(const Vec& gamma, double t) const {
  check_gamma(gamma);
  const bool ok = std::visit(overloaded{
                                 [&](const baseline::Constant&) { return gamma[0] > 0.0; },
                                 [&](const baseline::AffinePositive&) {
                                   return gamma[0] > 0.0 && gamma[0] + gamma[1] * t > 0.0;
                                 },
                                 [&](const baseline::ExpPoly&) { return true; },
                             },
                             family_);
  if (!ok) {
    std::ostringstream msg;
    msg << name() << ": baseline hazard not positive on [0, " << t << "]";
    throw DomainError(msg.str());
  }
}

double Baseline::value(const Vec& gamma, double t) const {
  return std::visit(overloaded{
                        [&](const baseline::Constant&) { return gamma[0]; },
                        [&](const baseline::AffinePositive&) { return gamma[0] + gamma[1] * t; },
                        [&](const baseline::ExpPoly&) { return std::exp(gamma[0] + gamma[1] * t); },
                    },
                    family_);
}

void Baseline::gradient(const Vec& gamma, double t, std::span<double> out) const {
  std::visit(overloaded{
                 [&](const baseline::Constant&) { out[0] = 1.0; },
                 [&](const baseline::AffinePositive&) {
                   out[0] = 1.0;
                   out[1] = t;
                 },
                 [&](const baseline::ExpPoly&) {
                   const double e = std::exp(gamma[0] + gamma[1] * t);
                   out[0] = e;
                   out[1] = t * e;
                 },
             },
             family_);
}

void Baseline::hessian(const Vec& gamma, double t, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  if (std::holds_alternative<baseline::ExpPoly>(family_)) {
    const double e = std::exp(gamma[0] + gamma[1] * t);
    out[0] = e;
    out[1] = out[2] = t * e;
    out[3] = t * t * e;
  }
}

double Baseline::cumulative(const Vec& gamma, double t) const {
  return std::visit(overloaded{
                        [&](const baseline::Constant&) { return gamma[0] * t; },
                        [&](const baseline::AffinePositive&) { return gamma[0] * t + 0.5 * gamma[1] * t * t; },
                        [&](const baseline::ExpPoly&) {
                          return std::exp(gamma[0]) * t * unit_moment(0, gamma[1] * t);
                        },
                    },
                    family_);
}

double Baseline::squared_integral(const Vec& gamma, double t) const {
  return std::visit(overloaded{
                        [&](const baseline::Constant&) { return gamma[0] * gamma[0] * t; },
                        [&](const baseline::AffinePositive&) {
                          const double g1 = gamma[0], g2 = gamma[1];
                          return g1 * g1 * t + g1 * g2 * t * t + g2 * g2 * t * t * t / 3.0;
                        },
                        [&](const baseline::ExpPoly&) {
                          return std::exp(2.0 * gamma[0]) * t * unit_moment(0, 2.0 * gamma[1] * t);
                        },
                    },
                    family_);
}

void Baseline::squared_integral_gradient(const Vec& gamma, double t, std::span<double> out) const {
  std::visit(overloaded{
                 [&](const baseline::Constant&) { out[0] = 2.0 * gamma[0] * t; },
                 [&](const baseline::AffinePositive&) {
                   out[0] = 2.0 * gamma[0] * t + gamma[1] * t * t;
                   out[1] = gamma[0] * t * t + 2.0 * gamma[1] * t * t * t / 3.0;
                 },
                 [&](const baseline::ExpPoly&) {
                   const double e = std::exp(2.0 * gamma[0]);
                   const double k = 2.0 * gamma[1] * t;
                   out[0] = 2.0 * e * t * unit_moment(0, k);
                   out[1] = 2.0 * e * t * t * unit_moment(1, k);
                 },
             },
             family_);
}

void Baseline::squared_integral_hessian(const Vec& gamma, double t, std::span<double> out) const {
  std::visit(overloaded{
                 [&](const baseline::Constant&) { out[0] = 2.0 * t; },
                 [&](const baseline::AffinePositive&) {
                   out[0] = 2.0 * t;
                   out[1] = out[2] = t * t;
                   out[3] = 2.0 * t * t * t / 3.0;
                 },
                 [&](const baseline::ExpPoly&) {
                   const double e = std::exp(2.0 * gamma[0]);
                   const double k = 2.0 * gamma[1] * t;
                   out[0] = 4.0 * e * t * unit_moment(0, k);
                   out[1] = out[2] = 4.0 * e * t * t * unit_moment(1, k);
                   out[3] = 4.0 * e * t * t * t * unit_moment(2, k);
                 },
             },
             family_);
}

double Baseline::inverse_cumulative(const Vec& gamma, double x) const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (x <= 0.0) return 0.0;
  return std::visit(overloaded{
                        [&](const baseline::Constant&) { return x / gamma[0]; },
                        [&](const baseline::AffinePositive&) {
                          const double g1 = gamma[0], g2 = gamma[1];
                          if (g2 == 0.0) return x / g1;
                          const double disc = g1 * g1 + 2.0 * g2 * x;
                          // With a negative slope the hazard is truncated at zero
                          // from t = -g1/g2 on, so H is capped at -g1^2/(2 g2).
                          if (disc < 0.0) return inf;
                          return 2.0 * x / (g1 + std::sqrt(disc));
                        },
                        [&](const baseline::ExpPoly&) {
                          const double y = gamma[1] * x * std::exp(-gamma[0]);
                          if (gamma[1] == 0.0) return x * std::exp(-gamma[0]);
                          if (y <= -1.0) return inf;
                          return std::log1p(y) / gamma[1];
                        },
                    },
                    family_);
}

std::pair<double, double> baseline_integrals(const Baseline& family, const Vec& gamma, double t) {
  if (!(t >= 0.0)) throw DomainError("baseline_integrals: t must be non-negative");
  family.check_positive(gamma, t);
  return {family.cumulative(gamma, t), family.squared_integral(gamma, t)};
}

// --------------------------------------------------------------- Weights

double bump(const BumpSegment& s, double z) {
  if (!(z > s.a && z < s.b)) return 0.0;
  const double p = std::pow((z - s.a) * (s.b - z), s.r);
  return std::exp(-1.0 / p);
}

WeightFunction::WeightFunction(Family family) : family_(std::move(family)) {
  std::visit(overloaded{
                 [](const weight::GaussianDamp& w) {
                   if (!(w.delta > 0.0)) throw DomainError("GaussianDamp: delta must be positive");
                 },
                 [](const weight::PolyGaussianDamp& w) {
                   if (!(w.delta > 0.0)) throw DomainError("PolyGaussianDamp: delta must be positive");
                 },
                 [](const weight::BumpSum& w) {
                   if (w.segments.empty()) throw DomainError("BumpSum: needs at least one segment");
                   for (const auto& s : w.segments)
                     if (!(s.a < s.b) || !(s.r > 0.0)) throw DomainError("BumpSum: need A < B and R > 0");
                 },
                 [](const weight::One&) {},
             },
             family_);
}

std::string WeightFunction::name() const {
  return std::visit(overloaded{
                        [](const weight::One&) -> std::string { return "one"; },
                        [](const weight::GaussianDamp&) -> std::string { return "gaussian_damp"; },
                        [](const weight::PolyGaussianDamp&) -> std::string { return "poly_gaussian_damp"; },
                        [](const weight::BumpSum&) -> std::string { return "bump_sum"; },
                    },
                    family_);
}

double WeightFunction::value(double z) const {
  return std::visit(overloaded{
                        [](const weight::One&) { return 1.0; },
                        [&](const weight::GaussianDamp& w) { return std::exp(-z * z / (4.0 * w.delta)); },
                        [&](const weight::PolyGaussianDamp& w) {
                          const double p = 1.0 + z * z;
                          const double p2 = p * p;
                          return p2 * p2 * std::exp(-z * z / (4.0 * w.delta));
                        },
                        [&](const weight::BumpSum& w) {
                          double v = 0.0;
                          for (const auto& s : w.segments) v += bump(s, z);
                          return v;
                        },
                    },
                    family_);
}

std::optional<double> WeightFunction::gaussian_delta() const {
  if (auto* g = std::get_if<weight::GaussianDamp>(&family_)) return g->delta;
  if (auto* g = std::get_if<weight::PolyGaussianDamp>(&family_)) return g->delta;
  return std::nullopt;
}

std::optional<ExpPolySeries> WeightFunction::polynomial_factor() const {
  if (std::holds_alternative<weight::GaussianDamp>(family_)) return ExpPolySeries::constant(1.0);
  if (std::holds_alternative<weight::PolyGaussianDamp>(family_)) {
    // (1 + z^2)^4
    const double c[] = {1.0, 4.0, 6.0, 4.0, 1.0};
    ExpPolySeries s;
    for (int i = 0; i <= 4; ++i) s += ExpPolySeries::term(c[i], 2 * i);
    return s;
  }
  return std::nullopt;
}

std::optional<std::pair<double, double>> WeightFunction::support() const {
  if (auto* b = std::get_if<weight::BumpSum>(&family_)) {
    double lo = b->segments.front().a, hi = b->segments.front().b;
    for (const auto& s : b->segments) {
      lo = std::min(lo, s.a);
      hi = std::max(hi, s.b);
    }
    return std::make_pair(lo, hi);
  }
  return std::nullopt;
}

std::vector<double> WeightFunction::breakpoints() const {
  std::vector<double> out;
  if (auto* b = std::get_if<weight::BumpSum>(&family_))
    for (const auto& s : b->segments) {
      out.push_back(s.a);
      out.push_back(s.b);
    }
  return out;
}

// ---------------------------------------------------------- ErrorDensity

ErrorDensity::ErrorDensity(Family family) : family_(family) {
  std::visit(overloaded{
                 [](const noise::Gaussian& g) {
                   if (!(g.sigma > 0.0)) throw DomainError("Gaussian noise: sigma must be positive");
                 },
                 [](const noise::Laplace& l) {
                   if (!(l.b > 0.0)) throw DomainError("Laplace noise: b must be positive");
                 },
                 [](const noise::Cauchy& c) {
                   if (!(c.s > 0.0)) throw DomainError("Cauchy noise: s must be positive");
                 },
             },
             family_);
}

std::string ErrorDensity::name() const {
  return std::visit(overloaded{
                        [](const noise::Gaussian&) -> std::string { return "gaussian"; },
                        [](const noise::Laplace&) -> std::string { return "laplace"; },
                        [](const noise::Cauchy&) -> std::string { return "cauchy"; },
                    },
                    family_);
}

double ErrorDensity::density(double x) const {
  return std::visit(overloaded{
                        [&](const noise::Gaussian& g) {
                          return std::exp(-0.5 * x * x / (g.sigma * g.sigma)) / (g.sigma * std::sqrt(2.0 * kPi));
                        },
                        [&](const noise::Laplace& l) { return std::exp(-std::abs(x) / l.b) / (2.0 * l.b); },
                        [&](const noise::Cauchy& c) { return c.s / (kPi * (c.s * c.s + x * x)); },
                    },
                    family_);
}

double ErrorDensity::quantile(double u) const {
  return std::visit(overloaded{
                        [&](const noise::Gaussian& g) {
                          return g.sigma * boost::math::quantile(boost::math::normal_distribution<double>(), u);
                        },
                        [&](const noise::Laplace& l) {
                          return u < 0.5 ? l.b * std::log(2.0 * u) : -l.b * std::log(2.0 * (1.0 - u));
                        },
                        [&](const noise::Cauchy& c) { return c.s * std::tan(kPi * (u - 0.5)); },
                    },
                    family_);
}

std::complex<double> ErrorDensity::fourier(double t) const {
  return std::visit(overloaded{
                        [&](const noise::Gaussian& g) { return std::complex<double>(std::exp(-0.5 * g.sigma * g.sigma * t * t)); },
                        [&](const noise::Laplace& l) { return std::complex<double>(1.0 / (1.0 + l.b * l.b * t * t)); },
                        [&](const noise::Cauchy& c) { return std::complex<double>(std::exp(-c.s * std::abs(t))); },
                    },
                    family_);
}

NoiseSmoothness ErrorDensity::smoothness() const {
  return std::visit(overloaded{
                        [](const noise::Gaussian& g) { return NoiseSmoothness{0.0, 0.5 * g.sigma * g.sigma, 2.0}; },
                        [](const noise::Laplace&) { return NoiseSmoothness{2.0, 0.0, 0.0}; },
                        [](const noise::Cauchy& c) { return NoiseSmoothness{0.0, c.s, 1.0}; },
                    },
                    family_);
}

bool ErrorDensity::centered() const { return !std::holds_alternative<noise::Cauchy>(family_); }

std::optional<std::array<double, 3>> ErrorDensity::log_mgf(double c) const {
  return std::visit(overloaded{
                        [&](const noise::Gaussian& g) -> std::optional<std::array<double, 3>> {
                          const double s2 = g.sigma * g.sigma;
                          return std::array<double, 3>{0.5 * s2 * c * c, s2 * c, s2};
                        },
                        [&](const noise::Laplace& l) -> std::optional<std::array<double, 3>> {
                          const double q = l.b * l.b * c * c;
                          if (q >= 1.0) return std::nullopt;
                          const double b2 = l.b * l.b;
                          return std::array<double, 3>{-std::log1p(-q), 2.0 * b2 * c / (1.0 - q),
                                                       2.0 * b2 * (1.0 + q) / ((1.0 - q) * (1.0 - q))};
                        },
                        [&](const noise::Cauchy&) -> std::optional<std::array<double, 3>> {
                          if (c == 0.0) return std::array<double, 3>{0.0, 0.0, 0.0};
                          return std::nullopt;
                        },
                    },
                    family_);
}

std::optional<double> ErrorDensity::moment(int k) const {
  if (k < 0 || k > 8) return std::nullopt;
  if (k == 0) return 1.0;
  if (k % 2 == 1) return centered() ? std::optional<double>(0.0) : std::nullopt;
  return std::visit(overloaded{
                        [&](const noise::Gaussian& g) -> std::optional<double> {
                          double df = 1.0;
                          for (int j = k - 1; j > 0; j -= 2) df *= j;
                          return df * std::pow(g.sigma, k);
                        },
                        [&](const noise::Laplace& l) -> std::optional<double> {
                          double f = 1.0;
                          for (int j = 2; j <= k; ++j) f *= j;
                          return f * std::pow(l.b, k);
                        },
                        [&](const noise::Cauchy&) -> std::optional<double> { return std::nullopt; },
                    },
                    family_);
}

std::complex<double> error_fourier(const ErrorDensity& err, double t) { return err.fourier(t); }

WeightFunction default_weight(const ErrorDensity& err) {
  const auto s = err.smoothness();
  if (s.rho > 0.0 && s.delta > 0.0) return WeightFunction::gaussian_damp(2.0 * s.delta);
  return WeightFunction::one();
}

SmoothnessClass smoothness_class(const RelativeRisk& family, const Vec& beta, const WeightFunction& w) {
  family.check_beta(beta);
  const bool kinked = !family.breakpoints().empty();
  if (auto d = w.gaussian_delta()) {
    if (!kinked) return {0.0, *d, 2.0};
    // Jump (indicator) decays like 1/|u|, a kink like 1/|u|^2.
    if (std::holds_alternative<risk::Indicator>(family.family())) return {1.0, 0.0, 0.0};
    return {2.0, 0.0, 0.0};
  }
  if (auto* b = std::get_if<weight::BumpSum>(&w.family())) {
    double r = 1.0;
    for (const auto& s : b->segments) r = std::min(r, s.r / (s.r + 1.0));
    // The decay constant of the bump transform is not explicit; unit scale.
    return {0.0, 1.0, r};
  }
  if (std::holds_alternative<risk::Cauchy2>(family.family()) && beta[0] != 0.0)
    return {0.0, 1.0 / std::abs(beta[0]), 1.0};
  throw DomainError("smoothness_class: f_beta W is not integrable for " + family.name() + " with weight " + w.name());
}

}  // namespace mehaz
