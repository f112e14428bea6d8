#include "mehaz/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/normal.hpp>
#include <json.hpp>

#include "mehaz/deconv.hpp"
#include "mehaz/error.hpp"
#include "mehaz/rng.hpp"

namespace mehaz {

namespace {

constexpr double kZ975 = 1.959963984540054;
constexpr double kZ995 = 2.5758293035489004;

using nlohmann::json;

json to_json(const Vec& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vec vec_from(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ReplicateRecord run_one(const StudyConfig& cfg, const ModelBundle& model, const Dataset* data, EstimatorKind kind,
                        EstimateOptions opt, std::size_t n, std::size_t r, const std::string& data_error) {
  ReplicateRecord rec;
  rec.n = n;
  rec.r = r;
  rec.estimator = kind;
  if (!data) {
    rec.failed = true;
    rec.error = data_error;
    return rec;
  }
  opt.minimize.seed = derive_seed(cfg.seed, {static_cast<std::uint64_t>(kind)});
  try {
    auto res = estimate(kind, *data, model, cfg.error, opt);
    rec.theta_hat = res.theta_hat.flat();
    rec.converged = res.converged;
    rec.se = std::move(res.standard_errors);
    rec.covariance = std::move(res.covariance);
    rec.bandwidth = res.bandwidth;
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

std::uint64_t replicate_seed(std::uint64_t master, std::size_t n, std::size_t r) {
  return derive_seed(master, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(r)});
}

const CellSummary& StudySummary::cell(std::size_t n, EstimatorKind estimator) const {
  for (const auto& c : cells)
    if (c.n == n && c.estimator == estimator) return c;
  throw DomainError("study summary has no cell for n=" + std::to_string(n) + ", estimator " + to_string(estimator));
}

StudySummary run_study(const StudyPlan& plan) {
  if (plan.replicates < 2) throw DomainError("run_study: at least 2 replicates are required");
  if (plan.n_list.empty()) throw DomainError("run_study: n_list is empty");
  if (plan.estimators.empty()) throw DomainError("run_study: no estimators requested");
  plan.config.validate();
  const ModelBundle model{plan.config.risk, plan.config.baseline, plan.config.weight};
  const std::size_t per_task = plan.estimators.size();
  const std::size_t tasks = plan.n_list.size() * plan.replicates;
  std::vector<ReplicateRecord> records(tasks * per_task);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks; t = next++) {
      const std::size_t n = plan.n_list[t / plan.replicates];
      const std::size_t r = t % plan.replicates;
      StudyConfig cfg = plan.config;
      cfg.n = n;
      cfg.seed = replicate_seed(plan.master_seed, n, r);
      std::optional<Dataset> data;
      std::string data_error;
      try {
        data = sample_dataset(cfg);
      } catch (const std::exception& e) {
        data_error = std::string("simulation failed: ") + e.what();
      }
      for (std::size_t k = 0; k < per_task; ++k)
        records[t * per_task + k] =
            run_one(cfg, model, data ? &*data : nullptr, plan.estimators[k], plan.estimate, n, r, data_error);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(plan.threads, static_cast<unsigned>(tasks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  auto summary = summarize(std::move(records), plan.config.theta0.flat());
  for (const auto& c : summary.cells) {
    if (static_cast<double>(c.failures) <= plan.max_failure_rate * static_cast<double>(c.replicates)) continue;
    std::ostringstream msg;
    msg << "run_study: estimator " << to_string(c.estimator) << " failed on " << c.failures << " of " << c.replicates
        << " replicates at n=" << c.n;
    for (const auto& rec : summary.records)
      if (rec.failed && rec.n == c.n && rec.estimator == c.estimator) {
        msg << "; first failure (r=" << rec.r << "): " << rec.error;
        break;
      }
    throw NumericalError(msg.str());
  }
  return summary;
}

StudySummary summarize(std::vector<ReplicateRecord> records, const Vec& theta0) {
  StudySummary out;
  out.theta0 = theta0;
  std::vector<std::pair<std::size_t, EstimatorKind>> keys;
  for (const auto& rec : records)
    if (std::find(keys.begin(), keys.end(), std::pair{rec.n, rec.estimator}) == keys.end())
      keys.emplace_back(rec.n, rec.estimator);

  const auto dim = theta0.size();
  for (const auto& [n, est] : keys) {
    CellSummary c;
    c.n = n;
    c.estimator = est;
    std::vector<const ReplicateRecord*> ok;
    for (const auto& rec : records) {
      if (rec.n != n || rec.estimator != est) continue;
      ++c.replicates;
      if (rec.failed) {
        ++c.failures;
        continue;
      }
      if (rec.theta_hat.size() != dim) throw DomainError("summarize: estimate dimension does not match theta0");
      if (!rec.converged) ++c.nonconverged;
      ok.push_back(&rec);
    }
    const auto R = static_cast<double>(ok.size());
    for (Eigen::Index j = 0; j < dim; ++j) {
      ComponentSummary s;
      if (ok.empty()) {
        s.mean = s.bias = s.variance = s.mse = s.mean_stderr = s.coverage = std::numeric_limits<double>::quiet_NaN();
        c.components.push_back(s);
        continue;
      }
      for (const auto* rec : ok) s.mean += rec->theta_hat[j];
      s.mean /= R;
      std::size_t with_se = 0, covered = 0;
      for (const auto* rec : ok) {
        const double dev = rec->theta_hat[j] - s.mean;
        s.variance += dev * dev;
        if (rec->se && rec->se->size() == dim) {
          ++with_se;
          if (std::abs(rec->theta_hat[j] - theta0[j]) <= kZ975 * (*rec->se)[j]) ++covered;
        }
      }
      s.variance /= R;
      s.bias = s.mean - theta0[j];
      s.mse = s.bias * s.bias + s.variance;
      s.mean_stderr = ok.size() > 1 ? std::sqrt(s.variance / (R - 1.0)) : std::numeric_limits<double>::quiet_NaN();
      s.coverage = with_se ? static_cast<double>(covered) / static_cast<double>(with_se)
                           : std::numeric_limits<double>::quiet_NaN();
      c.components.push_back(s);
    }
    out.cells.push_back(std::move(c));
  }
  out.records = std::move(records);
  return out;
}

void write_jsonl(std::ostream& os, std::span<const ReplicateRecord> records) {
  for (const auto& rec : records) {
    json j{{"n", rec.n}, {"r", rec.r}, {"estimator", to_string(rec.estimator)}, {"converged", rec.converged},
           {"failed", rec.failed}};
    j["theta_hat"] = to_json(rec.theta_hat);
    j["se"] = rec.se ? to_json(*rec.se) : json(nullptr);
    if (rec.covariance) {
      json rows = json::array();
      for (Eigen::Index i = 0; i < rec.covariance->rows(); ++i) rows.push_back(to_json(rec.covariance->row(i)));
      j["covariance"] = rows;
    } else {
      j["covariance"] = nullptr;
    }
    j["bandwidth"] = rec.bandwidth;
    if (rec.failed) j["error"] = rec.error;
    os << j.dump() << '\n';
  }
}

std::vector<ReplicateRecord> read_jsonl(std::istream& is) {
  std::vector<ReplicateRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      ReplicateRecord rec;
      rec.n = j.at("n").get<std::size_t>();
      rec.r = j.at("r").get<std::size_t>();
      rec.estimator = parse_estimator(j.at("estimator").get<std::string>());
      rec.converged = j.at("converged").get<bool>();
      rec.failed = j.value("failed", false);
      rec.theta_hat = vec_from(j.at("theta_hat"));
      if (!j.at("se").is_null()) rec.se = vec_from(j.at("se"));
      if (j.contains("covariance") && !j["covariance"].is_null()) {
        const auto& rows = j["covariance"];
        Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = vec_from(rows[i]).transpose();
        rec.covariance = std::move(m);
      }
      rec.bandwidth = j.value("bandwidth", 0.0);
      rec.error = j.value("error", std::string{});
      out.push_back(std::move(rec));
    } catch (const json::exception& e) {
      throw DomainError("read_jsonl: line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_summary_csv(std::ostream& os, const StudySummary& summary) {
  os << "n,estimator,component,mean,bias,variance,mse,mean_stderr,coverage,replicates,failures,nonconverged\n";
  for (const auto& c : summary.cells)
    for (std::size_t j = 0; j < c.components.size(); ++j) {
      const auto& s = c.components[j];
      os << c.n << ',' << to_string(c.estimator) << ',' << j << ',' << fmt(s.mean) << ',' << fmt(s.bias) << ','
         << fmt(s.variance) << ',' << fmt(s.mse) << ',' << fmt(s.mean_stderr) << ',' << fmt(s.coverage) << ','
         << c.replicates << ',' << c.failures << ',' << c.nonconverged << '\n';
    }
}

std::vector<CellSummary> read_summary_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("n,estimator,component", 0) != 0)
    throw DomainError("read_summary_csv: missing header");
  std::vector<CellSummary> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 12) throw DomainError("read_summary_csv: line " + std::to_string(lineno) + ": expected 12 fields");
    const std::size_t n = std::stoul(f[0]);
    const auto est = parse_estimator(f[1]);
    if (out.empty() || out.back().n != n || out.back().estimator != est) {
      CellSummary c;
      c.n = n;
      c.estimator = est;
      c.replicates = std::stoul(f[9]);
      c.failures = std::stoul(f[10]);
      c.nonconverged = std::stoul(f[11]);
      out.push_back(std::move(c));
    }
    ComponentSummary s;
    s.mean = std::strtod(f[3].c_str(), nullptr);
    s.bias = std::strtod(f[4].c_str(), nullptr);
    s.variance = std::strtod(f[5].c_str(), nullptr);
    s.mse = std::strtod(f[6].c_str(), nullptr);
    s.mean_stderr = std::strtod(f[7].c_str(), nullptr);
    s.coverage = std::strtod(f[8].c_str(), nullptr);
    out.back().components.push_back(s);
  }
  return out;
}

RegressionResult rate_regression(std::span<const double> n, std::span<const double> mse) {
  if (n.size() != mse.size()) throw DomainError("rate_regression: n and mse differ in length");
  std::vector<double> distinct(n.begin(), n.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw DomainError("rate_regression: needs at least three distinct n values");
  const auto k = static_cast<Eigen::Index>(n.size());
  Vec x(k), y(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    if (!(n[ui] > 0.0) || !(mse[ui] > 0.0)) throw DomainError("rate_regression: n and mse must be positive");
    x[i] = std::log(n[ui]);
    y[i] = std::log(mse[ui]);
  }
  const double xm = x.mean(), ym = y.mean();
  const double sxx = (x.array() - xm).square().sum();
  RegressionResult out;
  out.slope = ((x.array() - xm) * (y.array() - ym)).sum() / sxx;
  out.intercept = ym - out.slope * xm;
  const double rss = (y.array() - out.intercept - out.slope * x.array()).square().sum();
  out.slope_stderr = k > 2 ? std::sqrt(rss / static_cast<double>(k - 2) / sxx) : 0.0;
  return out;
}

RegressionResult rate_regression(const StudySummary& summary, EstimatorKind estimator, int component) {
  std::vector<double> n, mse;
  for (const auto& c : summary.cells) {
    if (c.estimator != estimator) continue;
    if (component < 0 || static_cast<std::size_t>(component) >= c.components.size())
      throw DomainError("rate_regression: component index out of range");
    n.push_back(static_cast<double>(c.n));
    mse.push_back(c.components[static_cast<std::size_t>(component)].mse);
  }
  return rate_regression(n, mse);
}

NormalityBands null_bands(std::size_t replicates) {
  const double R = static_cast<double>(replicates);
  return {kZ995 * std::sqrt(6.0 / R), kZ995 * std::sqrt(24.0 / R), 1.628 / std::sqrt(R)};
}

bool NormalityReport::within(const NormalityBands& bands) const {
  for (std::size_t j = 0; j < ks.size(); ++j)
    if (!(std::abs(skewness[j]) < bands.skewness) || !(std::abs(excess_kurtosis[j]) < bands.excess_kurtosis) ||
        !(ks[j] < bands.ks))
      return false;
  return true;
}

NormalityReport normality_check(std::span<const Vec> estimates, const Vec& theta0, std::span<const Mat> covariances,
                                double n) {
  const std::size_t R = estimates.size();
  if (R < 200) throw DomainError("normality_check: needs at least 200 replicates");
  if (covariances.size() != 1 && covariances.size() != R)
    throw DomainError("normality_check: give one covariance or one per replicate");
  const auto dim = theta0.size();
  std::vector<Mat> roots;
  for (const auto& S : covariances) {
    if (S.rows() != dim || S.cols() != dim) throw DomainError("normality_check: covariance has the wrong shape");
    const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
    if (!(es.eigenvalues().minCoeff() > 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff())))
      throw NumericalError("normality_check: covariance is singular");
    roots.push_back(es.operatorInverseSqrt());
  }
  Mat z(static_cast<Eigen::Index>(R), dim);
  for (std::size_t r = 0; r < R; ++r) {
    if (estimates[r].size() != dim) throw DomainError("normality_check: estimate has the wrong dimension");
    const Mat& root = roots[roots.size() == 1 ? 0 : r];
    z.row(static_cast<Eigen::Index>(r)) = (root * (std::sqrt(n) * (estimates[r] - theta0))).transpose();
  }
  const boost::math::normal_distribution<double> nd;
  NormalityReport rep;
  rep.replicates = R;
  const double Rd = static_cast<double>(R);
  for (Eigen::Index j = 0; j < dim; ++j) {
    Vec col = z.col(j);
    const double m = col.mean();
    const Eigen::ArrayXd c = col.array() - m;
    const double m2 = c.square().mean();
    rep.skewness.push_back(c.cube().mean() / std::pow(m2, 1.5));
    rep.excess_kurtosis.push_back(c.square().square().mean() / (m2 * m2) - 3.0);
    std::sort(col.data(), col.data() + col.size());
    double d = 0.0;
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      const double F = boost::math::cdf(nd, col[i]);
      d = std::max({d, static_cast<double>(i + 1) / Rd - F, F - static_cast<double>(i) / Rd});
    }
    rep.ks.push_back(d);
  }
  return rep;
}

IdentityCheck identity_check(const ObservationWeight& phi, const FourierFunction& psi, StudyConfig cfg, std::size_t n,
                          const DeconvKernelSpec& kernel) {
  if (n < 2) throw DomainError("identity_check: n must be at least 2");
  cfg.n = n;
  const auto data = sample_dataset(cfg);
  const std::size_t chunk = 8192;
  const double extent = psi.extent();
  const FourierFunction* psis[] = {&psi};
  double sl = 0.0, sr = 0.0, sd = 0.0, sdd = 0.0;
  std::vector<double> u, z;
  for (std::size_t lo = 0; lo < n; lo += chunk) {
    const std::size_t hi = std::min(n, lo + chunk);
    u.clear();
    z.clear();
    for (std::size_t i = lo; i < hi; ++i) {
      u.push_back(data.obs[i].u);
      z.push_back(*data.obs[i].z);
    }
    const Vec left = DeconvolutionPlan(u, kernel.cn, &cfg.error, extent, kernel.quadrature).apply(psis).col(0);
    const Vec right = DeconvolutionPlan(z, kernel.cn, nullptr, extent, kernel.quadrature).apply(psis).col(0);
    for (std::size_t i = lo; i < hi; ++i) {
      const double w = phi(data.obs[i]);
      const auto k = static_cast<Eigen::Index>(i - lo);
      const double a = w * left[k], b = w * right[k];
      sl += a;
      sr += b;
      sd += a - b;
      sdd += (a - b) * (a - b);
    }
  }
  const double nd = static_cast<double>(n);
  const double md = sd / nd;
  const double var = std::max(0.0, (sdd - nd * md * md) / (nd - 1.0));
  return {sl / nd, sr / nd, std::sqrt(var / nd)};
}

}  // namespace mehaz
