#include "mehaz/population.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>

#include "mehaz/error.hpp"
#include "mehaz/quadrature.hpp"

namespace mehaz {

namespace {

std::vector<double> sorted_breaks(double lo, double hi, std::vector<double> inner) {
  std::vector<double> b{lo, hi};
  for (double x : inner)
    if (x > lo && x < hi) b.push_back(x);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

QuadratureRule covariate_rule(const StudyConfig& cfg, std::size_t panels) {
  std::vector<double> kinks = cfg.risk.breakpoints();
  for (double w : cfg.weight.breakpoints()) kinks.push_back(w);
  if (auto* u = std::get_if<covariate::Uniform>(&cfg.covariate)) {
    auto rule = composite_gauss<20>(sorted_breaks(u->lo, u->hi, kinks), panels);
    for (auto& w : rule.weights) w /= (u->hi - u->lo);
    return rule;
  }
  if (auto* g = std::get_if<covariate::GaussianTrunc>(&cfg.covariate)) {
    const boost::math::normal_distribution<double> nd(g->mu, g->sigma);
    const double mass = boost::math::cdf(nd, g->hi) - boost::math::cdf(nd, g->lo);
    auto rule = composite_gauss<20>(sorted_breaks(g->lo, g->hi, kinks), panels);
    for (std::size_t k = 0; k < rule.size(); ++k) rule.weights[k] *= boost::math::pdf(nd, rule.nodes[k]) / mass;
    return rule;
  }
  const auto& tp = std::get<covariate::TwoPoint>(cfg.covariate);
  return QuadratureRule{{tp.z1, tp.z2}, {tp.p, 1.0 - tp.p}};
}

QuadratureRule time_rule(const StudyConfig& cfg, std::size_t panels) {
  return composite_gauss<20>(sorted_breaks(0.0, cfg.tau, censor_breakpoints(cfg.censoring)), panels);
}

// Calls fn(z, f0(z), wz, t, wt, y) with y = W(z) E[Y(t) | Z = z] over the product rule.
template <class F>
void for_each_node(const StudyConfig& cfg, const PopulationOptions& opt, F&& fn) {
  cfg.validate();
  const auto zr = covariate_rule(cfg, opt.z_panels);
  const auto tr = time_rule(cfg, opt.t_panels);
  std::vector<double> h0(tr.size()), sc(tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) {
    h0[k] = cfg.baseline.cumulative(cfg.theta0.gamma, tr.nodes[k]);
    sc[k] = censor_survival(cfg.censoring, tr.nodes[k]);
  }
  for (std::size_t i = 0; i < zr.size(); ++i) {
    const double z = zr.nodes[i];
    const double w = cfg.weight.value(z);
    if (w == 0.0 || zr.weights[i] == 0.0) continue;
    const double f0 = risk_eval(cfg.risk, cfg.theta0.beta, z);
    for (std::size_t k = 0; k < tr.size(); ++k) {
      const double y = w * std::exp(-f0 * h0[k]) * sc[k];
      fn(z, f0, zr.weights[i], tr.nodes[k], tr.weights[k], y);
    }
  }
}

void check_theta(const Theta& theta, const StudyConfig& cfg) {
  cfg.risk.check_beta(theta.beta);
  cfg.baseline.check_gamma(theta.gamma);
}

}  // namespace

double population_criterion(const Theta& theta, const StudyConfig& cfg, const PopulationOptions& opt) {
  check_theta(theta, cfg);
  double s = 0.0;
  for_each_node(cfg, opt, [&](double z, double f0, double wz, double t, double wt, double y) {
    const double e0 = cfg.baseline.value(cfg.theta0.gamma, t) * f0;
    const double e = cfg.baseline.value(theta.gamma, t) * cfg.risk.value(theta.beta, z);
    s += wz * wt * ((e - e0) * (e - e0) - e0 * e0) * y;
  });
  return s;
}

double population_excess(const Theta& theta, const StudyConfig& cfg, const PopulationOptions& opt) {
  check_theta(theta, cfg);
  double s = 0.0;
  for_each_node(cfg, opt, [&](double z, double f0, double wz, double t, double wt, double y) {
    const double e0 = cfg.baseline.value(cfg.theta0.gamma, t) * f0;
    const double e = cfg.baseline.value(theta.gamma, t) * cfg.risk.value(theta.beta, z);
    s += wz * wt * (e - e0) * (e - e0) * y;
  });
  return s;
}

Mat population_hessian(const StudyConfig& cfg, const PopulationOptions& opt) {
  const int m = cfg.risk.arity();
  const int p = cfg.baseline.arity();
  Mat H = Mat::Zero(m + p, m + p);
  std::vector<double> fg(static_cast<std::size_t>(m)), eg(static_cast<std::size_t>(p));
  for_each_node(cfg, opt, [&](double z, double f0, double wz, double t, double wt, double y) {
    const double eta = cfg.baseline.value(cfg.theta0.gamma, t);
    cfg.risk.gradient(cfg.theta0.beta, z, fg);
    cfg.baseline.gradient(cfg.theta0.gamma, t, eg);
    const double c = 2.0 * wz * wt * y;
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) H(a, b) += c * fg[a] * fg[b] * eta * eta;
      for (int k = 0; k < p; ++k) {
        const double v = c * f0 * eta * fg[a] * eg[k];
        H(a, m + k) += v;
        H(m + k, a) += v;
      }
    }
    for (int k = 0; k < p; ++k)
      for (int l = 0; l < p; ++l) H(m + k, m + l) += c * eg[k] * eg[l] * f0 * f0;
  });
  return H;
}

}  // namespace mehaz
