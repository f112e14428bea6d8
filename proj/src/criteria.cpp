#include "mehaz/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mehaz/error.hpp"

namespace mehaz {

namespace {

// Path integrals without positivity checks; callers check once on [0, tau].
PathIntegrals compute_paths(const Observation& o, const Baseline& baseline, const Vec& gamma, double tau,
                            bool derivatives) {
  const int p = baseline.arity();
  const double xt = std::min(o.x, tau);
  const bool event = o.d && o.x <= tau;
  PathIntegrals out;
  out.a = event ? baseline.value(gamma, o.x) : 0.0;
  out.b = baseline.squared_integral(gamma, xt);
  if (!derivatives) return out;
  out.grad_a = Vec::Zero(p);
  out.grad_b = Vec(p);
  out.hess_a = Mat::Zero(p, p);
  out.hess_b = Mat(p, p);
  std::vector<double> h(static_cast<std::size_t>(p * p));
  if (event) {
    baseline.gradient(gamma, o.x, {out.grad_a.data(), static_cast<std::size_t>(p)});
    baseline.hessian(gamma, o.x, h);
    out.hess_a = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(h.data(), p, p);
  }
  baseline.squared_integral_gradient(gamma, xt, {out.grad_b.data(), static_cast<std::size_t>(p)});
  baseline.squared_integral_hessian(gamma, xt, h);
  out.hess_b = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(h.data(), p, p);
  return out;
}

constexpr double kAdaptiveLadder[] = {4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256};

}  // namespace

PathIntegrals path_integrals(const Observation& obs, const Baseline& baseline, const Vec& gamma, double tau) {
  if (!(tau > 0.0)) throw DomainError("path_integrals: tau must be positive");
  if (!(obs.x >= 0.0)) throw DomainError("path_integrals: x must be non-negative");
  baseline.check_positive(gamma, std::min(obs.x, tau));
  return compute_paths(obs, baseline, gamma, tau, true);
}

std::vector<double> covariate_points(const Dataset& data, bool use_z) {
  std::vector<double> pts;
  pts.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& o = data.obs[i];
    if (use_z) {
      if (!o.z) {
        std::ostringstream msg;
        msg << "observation " << i << " has no true covariate z";
        throw DomainError(msg.str());
      }
      pts.push_back(*o.z);
    } else {
      pts.push_back(o.u);
    }
  }
  return pts;
}

// ------------------------------------------------------------ DirectSide

DirectSide::DirectSide(std::vector<double> points, RelativeRisk risk, WeightFunction weight)
    : points_(std::move(points)), risk_(std::move(risk)), weight_(std::move(weight)) {}

CovariateTerms DirectSide::evaluate(const Vec& beta, int order) const {
  risk_.check_beta(beta);
  const int m = risk_.arity();
  const auto n = static_cast<Eigen::Index>(points_.size());
  CovariateTerms t;
  t.phi1.resize(n);
  t.phi2.resize(n);
  if (order >= 1) {
    t.dphi1.resize(n, m);
    t.dphi2.resize(n, m);
  }
  if (order >= 2) {
    t.d2phi1.resize(n, m * m);
    t.d2phi2.resize(n, m * m);
  }
  std::vector<double> g(static_cast<std::size_t>(m)), h(static_cast<std::size_t>(m * m));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = points_[static_cast<std::size_t>(i)];
    const double w = weight_.value(z);
    const double f = risk_.value(beta, z);
    t.phi1[i] = f * w;
    t.phi2[i] = f * f * w;
    if (order < 1) continue;
    risk_.gradient(beta, z, g);
    for (int k = 0; k < m; ++k) {
      t.dphi1(i, k) = g[k] * w;
      t.dphi2(i, k) = 2.0 * f * g[k] * w;
    }
    if (order < 2) continue;
    risk_.hessian(beta, z, h);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) {
        const double hab = h[static_cast<std::size_t>(a * m + b)];
        t.d2phi1(i, a * m + b) = hab * w;
        t.d2phi2(i, a * m + b) = 2.0 * (g[a] * g[b] + f * hab) * w;
      }
  }
  return t;
}

// -------------------------------------------------------- DeconvolvedSide

DeconvolvedSide::DeconvolvedSide(std::vector<double> points, RelativeRisk risk, WeightFunction weight,
                                 ErrorDensity err, CutRule cut, QuadratureOptions opt)
    : points_(std::move(points)),
      risk_(std::move(risk)),
      weight_(std::move(weight)),
      err_(err),
      cut_(cut),
      opt_(opt) {
  if (auto* f = std::get_if<FixedCut>(&cut_); f && !(f->cn > 0.0 && std::isfinite(f->cn)))
    throw DomainError("DeconvolvedSide: cn must be positive and finite");
}

std::vector<std::unique_ptr<WeightedRisk>> DeconvolvedSide::specs(const Vec& beta, int order) const {
  std::vector<std::unique_ptr<WeightedRisk>> out;
  const int m = risk_.arity();
  for (int power : {1, 2}) out.push_back(std::make_unique<WeightedRisk>(risk_, beta, weight_, power));
  if (order >= 1)
    for (int i = 0; i < m; ++i)
      for (int power : {1, 2})
        out.push_back(std::make_unique<WeightedRisk>(risk_, beta, weight_, power, Derivative::first(i)));
  if (order >= 2)
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j)
        for (int power : {1, 2})
          out.push_back(std::make_unique<WeightedRisk>(risk_, beta, weight_, power, Derivative::second(i, j)));
  return out;
}

double DeconvolvedSide::extent_rung(std::span<const std::unique_ptr<WeightedRisk>> specs) const {
  double e = 0.0;
  for (const auto& s : specs) e = std::max(e, s->extent());
  double rung = 1.0;
  while (rung < e) rung *= 2.0;
  return rung;
}

double DeconvolvedSide::choose_cut(std::span<const std::unique_ptr<WeightedRisk>> specs) const {
  if (auto* f = std::get_if<FixedCut>(&cut_)) return f->cn;
  const double step = frequency_step(opt_, 0.0, extent_rung(specs));
  auto q_abs = [&](double t) {
    const double inv = 1.0 / std::abs(err_.fourier(t));
    double s = 0.0;
    for (const auto& spec : specs) {
      const double a = std::abs(spec->transform(t));
      if (a == 0.0) continue;
      const double v = a * inv;
      if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
      s += v;
    }
    return s;
  };
  double head = 0.0, lo = 0.0;
  for (double T : kAdaptiveLadder) {
    head += frequency_rule(T - lo, step, opt_.max_points).integrate([&](double t) { return q_abs(lo + t); });
    lo = T;
    const double tail = frequency_rule(T, step, opt_.max_points).integrate([&](double t) { return q_abs(T + t); });
    if (!std::isfinite(head) || !std::isfinite(tail)) break;
    if (tail <= 1e-12 * std::max(1.0, head)) return T;
  }
  throw NumericalError("deconvolution over the full line: |psi* / f_eps*| is not integrable for " + risk_.name() +
                       " with weight " + weight_.name() + " and " + err_.name() + " noise");
}

const DeconvolutionPlan& DeconvolvedSide::plan(double cut, double extent) const {
  auto& slot = plans_[{cut, extent}];
  if (!slot) slot = std::make_unique<DeconvolutionPlan>(points_, cut, &err_, extent, opt_);
  return *slot;
}

double DeconvolvedSide::cut_at(const Vec& beta) const {
  const auto s = specs(beta, 0);
  return choose_cut(s);
}

CovariateTerms DeconvolvedSide::evaluate(const Vec& beta, int order) const {
  risk_.check_beta(beta);
  const int m = risk_.arity();
  const auto s = specs(beta, order);
  const double cut = choose_cut(std::span<const std::unique_ptr<WeightedRisk>>(s).first(2));
  const auto& p = plan(cut, extent_rung(s));
  std::vector<const FourierFunction*> ptrs;
  for (const auto& x : s) ptrs.push_back(x.get());
  const Mat values = p.apply(ptrs);

  CovariateTerms t;
  const auto n = values.rows();
  t.phi1 = values.col(0);
  t.phi2 = values.col(1);
  Eigen::Index col = 2;
  if (order >= 1) {
    t.dphi1.resize(n, m);
    t.dphi2.resize(n, m);
    for (int i = 0; i < m; ++i) {
      t.dphi1.col(i) = values.col(col++);
      t.dphi2.col(i) = values.col(col++);
    }
  }
  if (order >= 2) {
    t.d2phi1.resize(n, m * m);
    t.d2phi2.resize(n, m * m);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) {
        t.d2phi1.col(i * m + j) = values.col(col);
        t.d2phi1.col(j * m + i) = values.col(col++);
        t.d2phi2.col(i * m + j) = values.col(col);
        t.d2phi2.col(j * m + i) = values.col(col++);
      }
  }
  return t;
}

std::optional<SpectralForm> DeconvolvedSide::spectral(const Vec& beta) const {
  risk_.check_beta(beta);
  const auto s = specs(beta, 0);
  const auto& p = plan(choose_cut(s), extent_rung(s));
  const FourierFunction* ptrs[] = {s[0].get(), s[1].get()};
  return SpectralForm{&p, p.coefficients(ptrs)};
}

// -------------------------------------------------------------- Criterion

Criterion::Criterion(std::shared_ptr<const CovariateSide> side, const Dataset& data, Baseline baseline)
    : side_(std::move(side)), obs_(data.obs), tau_(data.tau), baseline_(std::move(baseline)) {
  if (obs_.empty()) throw DomainError("criterion: dataset is empty");
  if (!(tau_ > 0.0)) throw DomainError("criterion: tau must be positive");
  if (side_->size() != obs_.size()) throw DomainError("criterion: covariate side and dataset sizes differ");
  const auto n = static_cast<Eigen::Index>(obs_.size());
  const bool constant = std::holds_alternative<baseline::Constant>(baseline_.family());
  const bool affine = std::holds_alternative<baseline::AffinePositive>(baseline_.family());
  if (!constant && !affine) return;
  ea_.resize(n, constant ? 1 : 2);
  eb_.resize(n, constant ? 1 : 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = obs_[static_cast<std::size_t>(i)];
    const double ev = (o.d && o.x <= tau_) ? 1.0 : 0.0;
    const double xt = std::min(o.x, tau_);
    ea_(i, 0) = ev;
    eb_(i, 0) = xt;
    if (affine) {
      ea_(i, 1) = ev * o.x;
      eb_(i, 1) = xt * xt;
      eb_(i, 2) = xt * xt * xt / 3.0;
    }
  }
}

void Criterion::check(const Theta& theta) const {
  if (theta.beta.size() != side_->arity()) throw DomainError("criterion: beta has the wrong length");
  baseline_.check_gamma(theta.gamma);
  baseline_.check_positive(theta.gamma, tau_);
}

std::vector<PathIntegrals> Criterion::paths(const Vec& gamma, bool derivatives) const {
  std::vector<PathIntegrals> out;
  out.reserve(obs_.size());
  for (const auto& o : obs_) out.push_back(compute_paths(o, baseline_, gamma, tau_, derivatives));
  return out;
}

double Criterion::value(const Theta& theta) const {
  check(theta);
  const auto n = static_cast<double>(obs_.size());
  if (ea_.size() > 0) {
    const auto& g = theta.gamma;
    Vec ca(ea_.cols()), cb(eb_.cols());
    if (ea_.cols() == 1) {
      ca << g[0];
      cb << g[0] * g[0];
    } else {
      ca << g[0], g[1];
      cb << g[0] * g[0], g[0] * g[1], g[1] * g[1];
    }
    if (auto sp = side_->spectral(theta.beta)) {
      auto& proj = projections_[sp->plan];
      if (proj.first.size() == 0) {
        proj.first = sp->plan->basis().transpose() * ea_ / n;
        proj.second = sp->plan->basis().transpose() * eb_ / n;
      }
      return -2.0 * sp->coeffs.col(0).dot(proj.first * ca) + sp->coeffs.col(1).dot(proj.second * cb);
    }
    const auto t = side_->evaluate(theta.beta, 0);
    return (-2.0 * t.phi1.dot(ea_ * ca) + t.phi2.dot(eb_ * cb)) / n;
  }
  const auto t = side_->evaluate(theta.beta, 0);
  const auto ps = paths(theta.gamma, false);
  double s = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto e = static_cast<Eigen::Index>(i);
    s += -2.0 * t.phi1[e] * ps[i].a + t.phi2[e] * ps[i].b;
  }
  return s / n;
}

Criterion::PerObservation Criterion::per_observation(const Theta& theta, bool with_hessian) const {
  check(theta);
  const int m = beta_arity();
  const int p = gamma_arity();
  const auto n = static_cast<Eigen::Index>(obs_.size());
  const auto t = side_->evaluate(theta.beta, with_hessian ? 2 : 1);
  const auto ps = paths(theta.gamma, true);

  PerObservation out;
  out.scores.resize(n, m + p);
  out.hessian = Mat::Zero(m + p, m + p);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pi = ps[static_cast<std::size_t>(i)];
    total += -2.0 * t.phi1[i] * pi.a + t.phi2[i] * pi.b;
    for (int k = 0; k < m; ++k) out.scores(i, k) = -2.0 * t.dphi1(i, k) * pi.a + t.dphi2(i, k) * pi.b;
    for (int k = 0; k < p; ++k) out.scores(i, m + k) = -2.0 * t.phi1[i] * pi.grad_a[k] + t.phi2[i] * pi.grad_b[k];
    if (!with_hessian) continue;
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b)
        out.hessian(a, b) += -2.0 * t.d2phi1(i, a * m + b) * pi.a + t.d2phi2(i, a * m + b) * pi.b;
      for (int c = 0; c < p; ++c) {
        const double v = -2.0 * t.dphi1(i, a) * pi.grad_a[c] + t.dphi2(i, a) * pi.grad_b[c];
        out.hessian(a, m + c) += v;
        out.hessian(m + c, a) += v;
      }
    }
    for (int c = 0; c < p; ++c)
      for (int d = 0; d < p; ++d)
        out.hessian(m + c, m + d) += -2.0 * t.phi1[i] * pi.hess_a(c, d) + t.phi2[i] * pi.hess_b(c, d);
  }
  out.value = total / static_cast<double>(n);
  out.hessian /= static_cast<double>(n);
  return out;
}

Vec Criterion::gradient(const Theta& theta) const {
  return per_observation(theta, false).scores.colwise().mean().transpose();
}

// ------------------------------------------------------- free functions

double oracle_criterion(const Theta& theta, const Dataset& data, const ModelBundle& model) {
  auto side = std::make_shared<DirectSide>(covariate_points(data, true), model.risk, model.weight);
  return Criterion(side, data, model.baseline).value(theta);
}

double naive_criterion(const Theta& theta, const Dataset& data, const ModelBundle& model) {
  auto side = std::make_shared<DirectSide>(covariate_points(data, false), model.risk, model.weight);
  return Criterion(side, data, model.baseline).value(theta);
}

double s1_criterion(const Theta& theta, const Dataset& data, const ModelBundle& model, const DeconvKernelSpec& k,
                    const ErrorDensity& err) {
  auto side = std::make_shared<DeconvolvedSide>(covariate_points(data, false), model.risk, model.weight, err,
                                                DeconvolvedSide::FixedCut{k.cn}, k.quadrature);
  return Criterion(side, data, model.baseline).value(theta);
}

}  // namespace mehaz
