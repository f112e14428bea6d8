#include "mehaz/simulate.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "mehaz/error.hpp"
#include "mehaz/rng.hpp"

namespace mehaz {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

double draw_covariate(const CovariateLaw& law, Stream& rng) {
  const double v = rng.uniform();
  return std::visit(overloaded{
                        [&](const covariate::Uniform& c) { return c.lo + (c.hi - c.lo) * v; },
                        [&](const covariate::GaussianTrunc& c) {
                          const boost::math::normal_distribution<double> nd(c.mu, c.sigma);
                          const double plo = boost::math::cdf(nd, c.lo);
                          const double phi = boost::math::cdf(nd, c.hi);
                          const double z = boost::math::quantile(nd, plo + (phi - plo) * v);
                          return std::clamp(z, c.lo, c.hi);
                        },
                        [&](const covariate::TwoPoint& c) { return v < c.p ? c.z1 : c.z2; },
                    },
                    law);
}

double draw_censoring(const CensorLaw& law, Stream& rng) {
  return std::visit(overloaded{
                        [](const censoring::None&) { return std::numeric_limits<double>::infinity(); },
                        [&](const censoring::Uniform& c) { return c.c_max * rng.uniform(); },
                        [&](const censoring::Exponential& c) { return rng.exponential() / c.rate; },
                    },
                    law);
}

double parse_double(const std::string& s, std::size_t line, const char* column) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    std::ostringstream msg;
    msg << "csv line " << line << ": bad value '" << s << "' in column " << column;
    throw DomainError(msg.str());
  }
  return v;
}

}  // namespace

void StudyConfig::validate() const {
  if (n == 0) throw DomainError("study: n must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw DomainError("study: tau must be positive");
  risk.check_beta(theta0.beta);
  baseline.check_gamma(theta0.gamma);
  baseline.check_positive(theta0.gamma, tau);
  std::visit(overloaded{
                 [](const covariate::Uniform& c) {
                   if (!(c.lo < c.hi)) throw DomainError("covariate uniform: need lo < hi");
                 },
                 [](const covariate::GaussianTrunc& c) {
                   if (!(c.sigma > 0.0) || !(c.lo < c.hi)) throw DomainError("covariate gaussian_trunc: need sigma > 0, lo < hi");
                 },
                 [](const covariate::TwoPoint& c) {
                   if (!(c.p >= 0.0 && c.p <= 1.0)) throw DomainError("covariate two_point: p must lie in [0, 1]");
                 },
             },
             covariate);
  std::visit(overloaded{
                 [](const censoring::None&) {},
                 [](const censoring::Uniform& c) {
                   if (!(c.c_max > 0.0)) throw DomainError("censoring uniform: c_max must be positive");
                 },
                 [](const censoring::Exponential& c) {
                   if (!(c.rate > 0.0)) throw DomainError("censoring exponential: rate must be positive");
                 },
             },
             censoring);
}

bool Dataset::has_z() const {
  for (const auto& o : obs)
    if (!o.z) return false;
  return true;
}

Dataset sample_dataset(const StudyConfig& cfg) {
  cfg.validate();
  Dataset data;
  data.tau = cfg.tau;
  data.obs.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    Stream rng(cfg.seed, i);
    const double z = draw_covariate(cfg.covariate, rng);
    const double eps = cfg.error.quantile(rng.uniform());
    const double e = rng.exponential();
    const double c = draw_censoring(cfg.censoring, rng);
    const double f = risk_eval(cfg.risk, cfg.theta0.beta, z);
    const double t = cfg.baseline.inverse_cumulative(cfg.theta0.gamma, e / f);
    if (!std::isfinite(t) && !std::isfinite(c)) {
      std::ostringstream msg;
      msg << "sample_dataset: cumulative hazard never reaches " << e / f << " for z = " << z
          << " and there is no censoring";
      throw NumericalError(msg.str());
    }
    Observation o;
    o.x = std::min(t, c);
    o.d = t <= c;
    o.u = z + eps;
    o.z = z;
    data.obs.push_back(o);
  }
  return data;
}

double censor_survival(const CensorLaw& law, double t) {
  return std::visit(overloaded{
                        [](const censoring::None&) { return 1.0; },
                        [&](const censoring::Uniform& c) { return std::clamp(1.0 - t / c.c_max, 0.0, 1.0); },
                        [&](const censoring::Exponential& c) { return std::exp(-c.rate * t); },
                    },
                    law);
}

std::vector<double> censor_breakpoints(const CensorLaw& law) {
  if (auto* u = std::get_if<censoring::Uniform>(&law)) return {u->c_max};
  return {};
}

void write_csv(std::ostream& os, const Dataset& data, bool with_z) {
  os << "x,d,u,z\n";
  char buf[128];
  for (const auto& o : data.obs) {
    int len = std::snprintf(buf, sizeof buf, "%.17g,%d,%.17g,", o.x, o.d ? 1 : 0, o.u);
    os.write(buf, len);
    if (with_z && o.z) {
      len = std::snprintf(buf, sizeof buf, "%.17g", *o.z);
      os.write(buf, len);
    }
    os << '\n';
  }
}

Dataset read_csv(std::istream& is, double tau) {
  std::string line;
  if (!std::getline(is, line) || line != "x,d,u,z") throw DomainError("csv: expected header 'x,d,u,z'");
  Dataset data;
  data.tau = tau;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      cols.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cols.size() != 4) {
      std::ostringstream msg;
      msg << "csv line " << lineno << ": expected 4 columns, got " << cols.size();
      throw DomainError(msg.str());
    }
    Observation o;
    o.x = parse_double(cols[0], lineno, "x");
    if (cols[1] != "0" && cols[1] != "1") {
      std::ostringstream msg;
      msg << "csv line " << lineno << ": d must be 0 or 1";
      throw DomainError(msg.str());
    }
    o.d = cols[1] == "1";
    o.u = parse_double(cols[2], lineno, "u");
    if (!cols[3].empty()) o.z = parse_double(cols[3], lineno, "z");
    if (!(o.x >= 0.0)) {
      std::ostringstream msg;
      msg << "csv line " << lineno << ": x must be non-negative";
      throw DomainError(msg.str());
    }
    data.obs.push_back(o);
  }
  return data;
}

void write_csv_file(const std::string& path, const Dataset& data, bool with_z) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DomainError("cannot open '" + path + "' for writing");
  write_csv(os, data, with_z);
}

Dataset read_csv_file(const std::string& path, double tau) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DomainError("cannot open '" + path + "'");
  return read_csv(is, tau);
}

}  // namespace mehaz
