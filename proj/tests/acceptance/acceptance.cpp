#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mehaz/corrections.hpp"
#include "mehaz/criteria.hpp"
#include "mehaz/deconv.hpp"
#include "mehaz/error.hpp"
#include "mehaz/estimate.hpp"
#include "mehaz/mc.hpp"
#include "mehaz/population.hpp"
#include "mehaz/rates.hpp"
#include "mehaz/rng.hpp"

using namespace mehaz;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

Vec vec(std::initializer_list<double> v) {
  Vec out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) out[k++] = x;
  return out;
}

Box make_box(std::initializer_list<double> lo, std::initializer_list<double> hi) { return {vec(lo), vec(hi)}; }

// Cox model, constant baseline, Z ~ U[-1, 1], no censoring.
StudyConfig cox_config(double sigma, WeightFunction weight) {
  StudyConfig cfg;
  cfg.n = 2000;
  cfg.tau = 1.0;
  cfg.theta0 = {vec({1.0}), vec({1.0})};
  cfg.risk = RelativeRisk::exponential();
  cfg.baseline = Baseline::constant();
  cfg.weight = std::move(weight);
  cfg.covariate = covariate::Uniform{-1.0, 1.0};
  cfg.censoring = censoring::None{};
  cfg.error = ErrorDensity::gaussian(sigma);
  cfg.seed = 2024;
  return cfg;
}

// Excess-risk model 1 + beta z with a Gaussian-damped weight and Laplace noise.
StudyConfig excess_config() {
  StudyConfig cfg;
  cfg.n = 1000;
  cfg.tau = 1.0;
  cfg.theta0 = {vec({0.5}), vec({1.0})};
  cfg.risk = RelativeRisk::polynomial1(1);
  cfg.baseline = Baseline::constant();
  cfg.weight = WeightFunction::gaussian_damp(1.0);
  cfg.covariate = covariate::Uniform{-1.0, 1.0};
  cfg.censoring = censoring::None{};
  cfg.error = ErrorDensity::laplace(0.4);
  cfg.seed = 2024;
  return cfg;
}

// ---------------------------------------------------------------- C1

struct GoldenRow {
  SmoothnessClass psi;
  NoiseSmoothness noise;
  const char* regime;
  double at_1e3;
  double at_1e6;
};

Outcome c1_rate_table() {
  // Values frozen from an independent 30-digit evaluation of each cell formula.
  const std::vector<GoldenRow> rows{
      {{1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, "sobolev-ordinary-slow", 0.17782794100389228, 0.031622776601683793},
      {{3.0, 0.0, 0.0}, {2.0, 0.0, 0.0}, "sobolev-ordinary-parametric", 1e-3, 1e-6},
      {{2.0, 0.0, 0.0}, {0.0, 0.125, 2.0}, "sobolev-super", 0.055080082854019283, 0.019473750047196961},
      {{0.0, 1.0, 2.0}, {2.0, 0.0, 0.0}, "smooth-ordinary", 1e-3, 1e-6},
      {{0.0, 1.0, 0.5}, {0.0, 0.125, 2.0}, "smooth-super-r<rho", 0.016535264079414442, 0.0082580444195552628},
      {{0.0, 0.1, 2.0}, {0.0, 0.125, 2.0}, "smooth-super-r=rho-d<delta", 0.000576319157925002, 1.1471839464864834e-6},
      {{0.0, 0.125, 2.0}, {1.0, 0.125, 2.0}, "smooth-super-r=rho-d=delta-slow", 0.018155383002061486,
       5.1351177743186623e-5},
      {{1.0, 0.125, 2.0}, {0.0, 0.125, 2.0}, "smooth-super-r=rho-d=delta-parametric", 1e-3, 1e-6},
      {{0.0, 0.5, 2.0}, {0.0, 0.125, 2.0}, "smooth-super-r=rho-d>delta", 1e-3, 1e-6},
      {{0.0, 1.0, 2.0}, {0.0, 1.0, 1.0}, "smooth-super-r>rho", 1e-3, 1e-6},
      {{2.5, 0.0, 0.0}, {2.0, 0.0, 0.0}, "sobolev-ordinary-parametric", 1e-3, 1e-6},
      {{1.5, 0.125, 2.0}, {1.0, 0.125, 2.0}, "smooth-super-r=rho-d=delta-parametric", 1e-3, 1e-6},
  };
  int ok = 0;
  double worst = 0.0;
  for (const auto& row : rows) {
    const auto lo = rate_lookup(row.psi, row.noise, 1e3);
    const auto hi = rate_lookup(row.psi, row.noise, 1e6);
    const double e = std::max(std::abs(lo.value / row.at_1e3 - 1.0), std::abs(hi.value / row.at_1e6 - 1.0));
    worst = std::max(worst, e);
    if (to_string(lo.regime) == row.regime && lo.regime == hi.regime && e <= 1e-12) ++ok;
  }
  return {ok == static_cast<int>(rows.size()),
          std::to_string(ok) + "/12 cells match, worst relative error " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------- C2

struct ScanResult {
  double margin = 0.0;
  int evaluated = 0;
  int expected = 0;
  double min_eig = 0.0;
};

ScanResult population_scan(const StudyConfig& cfg) {
  ScanResult out;
  out.margin = std::numeric_limits<double>::infinity();
  const Vec t0 = cfg.theta0.flat();
  const auto m = static_cast<Eigen::Index>(cfg.risk.arity());
  for (int i = -5; i <= 5; ++i)
    for (int j = -5; j <= 5; ++j) {
      if (i == 0 && j == 0) continue;
      ++out.expected;
      Vec t = t0;
      t[0] += 0.1 * i;
      t[1] += 0.1 * j;
      const double excess =
          population_criterion(Theta::split(t, m), cfg) - population_criterion(Theta::split(t0, m), cfg);
      ++out.evaluated;
      out.margin = std::min(out.margin, excess);
    }
  const Mat H = population_hessian(cfg);
  out.min_eig = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (H + H.transpose())).eigenvalues().minCoeff();
  return out;
}

Outcome c2_population_argmin() {
  const auto cox = population_scan(cox_config(0.5, WeightFunction::one()));
  const auto ex = population_scan(excess_config());
  auto good = [](const ScanResult& s) { return s.evaluated == s.expected && s.margin >= 1e-6 && s.min_eig > 0.0; };
  return {good(cox) && good(ex), "cox margin " + fmt("%.3e", cox.margin) + " min eig " + fmt("%.3e", cox.min_eig) +
                                     "; excess margin " + fmt("%.3e", ex.margin) + " min eig " +
                                     fmt("%.3e", ex.min_eig)};
}

// ---------------------------------------------------------------- C3

Outcome c3_deconvolution_identity() {
  struct Case {
    const char* name;
    ObservationWeight phi;
    std::unique_ptr<FourierFunction> psi;
    StudyConfig cfg;
  };
  std::vector<Case> cases;
  {
    auto cfg = cox_config(0.5, WeightFunction::one());
    cfg.error = ErrorDensity::laplace(0.4);
    cases.push_back({"phi=1, gaussian psi, laplace noise", [](const Observation&) { return 1.0; },
                     std::make_unique<GaussianFunction>(), cfg});
  }
  {
    auto cfg = cox_config(0.5, WeightFunction::gaussian_damp(0.25));
    cases.push_back({"phi=1{X>=0.5}, cox f W, gaussian noise",
                     [](const Observation& o) { return o.x >= 0.5 ? 1.0 : 0.0; },
                     std::make_unique<WeightedRisk>(cfg.risk, cfg.theta0.beta, cfg.weight, 1), cfg});
  }
  {
    auto cfg = cox_config(0.3, WeightFunction::one());
    cases.push_back({"phi=D 1{X<=1}, gaussian psi, gaussian noise",
                     [](const Observation& o) { return o.d && o.x <= 1.0 ? 1.0 : 0.0; },
                     std::make_unique<GaussianFunction>(0.8), cfg});
  }
  {
    auto cfg = excess_config();
    cases.push_back({"phi=exp(-X), excess f^2 W, laplace noise",
                     [](const Observation& o) { return std::exp(-o.x); },
                     std::make_unique<WeightedRisk>(cfg.risk, cfg.theta0.beta, cfg.weight, 2), cfg});
  }
  DeconvKernelSpec kernel;
  kernel.cn = 3.0;
  bool pass = true;
  std::string detail;
  for (std::size_t k = 0; k < cases.size(); ++k) {
    auto cfg = cases[k].cfg;
    cfg.seed = derive_seed(2024, {0x4c41ULL, k});
    const auto r = identity_check(cases[k].phi, *cases[k].psi, cfg, 100000, kernel);
    const double z = std::abs(r.lhs - r.rhs) / r.paired_stderr;
    pass = pass && z <= 3.0;
    detail += (k ? "; " : "") + std::string(cases[k].name) + " |diff|/se=" + fmt("%.2f", z);
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- C4

StudyPlan cox_plan(const StudyConfig& cfg, std::vector<std::size_t> ns, std::size_t R,
                   std::vector<EstimatorKind> est) {
  StudyPlan plan;
  plan.config = cfg;
  plan.n_list = std::move(ns);
  plan.replicates = R;
  plan.estimators = std::move(est);
  plan.estimate.box = make_box({0.0, 0.01}, {2.0, 10.0});
  plan.master_seed = 2024;
  plan.threads = workers();
  return plan;
}

Outcome c4_naive_bias() {
  const auto cfg = cox_config(0.5, default_weight(ErrorDensity::gaussian(0.5)));
  const auto s = run_study(
      cox_plan(cfg, {2000}, 200, {EstimatorKind::Naive, EstimatorKind::Theta2, EstimatorKind::Oracle}));
  auto ratio = [&](EstimatorKind k) {
    const auto& c = s.cell(2000, k).components[0];
    return std::abs(c.bias) / c.mean_stderr;
  };
  const double naive = ratio(EstimatorKind::Naive);
  const double corrected = ratio(EstimatorKind::Theta2);
  const double oracle = ratio(EstimatorKind::Oracle);
  return {naive > 5.0 && corrected <= 3.0 && oracle <= 3.0,
          "beta |bias|/stderr naive " + fmt("%.2f", naive) + " (bias " +
              fmt("%.3f", s.cell(2000, EstimatorKind::Naive).components[0].bias) + "), theta2 " +
              fmt("%.2f", corrected) + " (bias " +
              fmt("%.3f", s.cell(2000, EstimatorKind::Theta2).components[0].bias) + "), oracle " +
              fmt("%.2f", oracle)};
}

// ---------------------------------------------------------------- C5

Outcome c5_root_n_rate() {
  StudyPlan plan;
  plan.config = excess_config();
  plan.n_list = {500, 1000, 2000, 4000};
  plan.replicates = 200;
  plan.estimators = {EstimatorKind::Theta1, EstimatorKind::Theta2};
  plan.estimate.box = make_box({-0.9, 0.01}, {0.9, 10.0});
  plan.master_seed = 2024;
  plan.threads = workers();
  const auto s = run_study(plan);
  bool pass = true;
  std::string detail;
  for (auto kind : plan.estimators) {
    std::vector<double> ns, mse;
    for (auto n : plan.n_list) {
      const auto& c = s.cell(n, kind);
      double total = 0.0;
      for (const auto& comp : c.components) total += comp.mse;
      ns.push_back(static_cast<double>(n));
      mse.push_back(total);
    }
    const auto reg = rate_regression(ns, mse);
    pass = pass && reg.slope >= -1.3 && reg.slope <= -0.7;
    detail += (detail.empty() ? "" : "; ") + to_string(kind) + " slope " + fmt("%.3f", reg.slope) + " (se " +
              fmt("%.3f", reg.slope_stderr) + ")";
  }
  return {pass, detail};
}

// ---------------------------------------------------------------- C6

Outcome c6_normality() {
  const auto cfg = cox_config(0.3, WeightFunction::one());
  const auto s = run_study(cox_plan(cfg, {2000}, 500, {EstimatorKind::Theta2}));
  std::vector<Vec> est;
  std::vector<Mat> cov;
  for (const auto& r : s.records)
    if (!r.failed && r.covariance) {
      est.push_back(r.theta_hat);
      cov.push_back(*r.covariance);
    }
  const auto report = normality_check(est, cfg.theta0.flat(), cov, 2000.0);
  const auto& cell = s.cell(2000, EstimatorKind::Theta2);
  bool coverage_ok = true;
  std::string detail;
  for (std::size_t k = 0; k < cell.components.size(); ++k) {
    const double cv = cell.components[k].coverage;
    coverage_ok = coverage_ok && cv >= 0.90 && cv <= 0.98;
    detail += std::string(k ? "; " : "") + (k ? "gamma" : "beta") + " skew " + fmt("%.3f", report.skewness[k]) +
              " exkurt " + fmt("%.3f", report.excess_kurtosis[k]) + " KS " + fmt("%.3f", report.ks[k]) +
              " coverage " + fmt("%.3f", cv);
  }
  const bool pass = est.size() == 500 && report.within(NormalityBands{}) && coverage_ok;
  return {pass, "R=" + std::to_string(est.size()) + " " + detail};
}

// ---------------------------------------------------------------- C7

Outcome c7_paired_agreement() {
  const auto cfg = cox_config(0.5, default_weight(ErrorDensity::gaussian(0.5)));
  const std::vector<std::size_t> ns{1000, 2000, 4000};
  const auto s = run_study(cox_plan(cfg, ns, 100, {EstimatorKind::Theta1, EstimatorKind::Theta2}));
  const Vec t0 = cfg.theta0.flat();
  std::vector<double> diff, err2;
  for (auto n : ns) {
    double d2 = 0.0, e2 = 0.0;
    int count = 0;
    for (std::size_t i = 0; i + 1 < s.records.size(); ++i) {
      const auto& a = s.records[i];
      const auto& b = s.records[i + 1];
      if (a.n != n || a.estimator != EstimatorKind::Theta1 || b.estimator != EstimatorKind::Theta2 || a.r != b.r)
        continue;
      if (a.failed || b.failed) continue;
      d2 += (a.theta_hat - b.theta_hat).squaredNorm();
      e2 += (b.theta_hat - t0).squaredNorm();
      ++count;
    }
    diff.push_back(std::sqrt(d2 / count));
    err2.push_back(std::sqrt(e2 / count));
  }
  const bool decreasing = diff[0] > diff[1] && diff[1] > diff[2];
  const bool small = diff[2] < 0.5 * err2[2];
  std::string detail;
  for (std::size_t k = 0; k < ns.size(); ++k)
    detail += (k ? "; " : "") + std::string("n=") + std::to_string(ns[k]) + " rms|t1-t2| " + fmt("%.4f", diff[k]) +
              " rms(t2-t0) " + fmt("%.4f", err2[k]);
  return {decreasing && small, detail};
}

// ---------------------------------------------------------------- C8

Outcome c8_deconvolution_kernel() {
  const GaussianFunction psi;
  int checked = 0, ok = 0;
  double worst = 0.0;
  bool monotone = true;
  for (double b : {0.25, 0.5, 1.0}) {
    const auto err = ErrorDensity::laplace(b);
    for (double cn : {10.0, 20.0, 40.0})
      for (double u : {-2.0, -1.0, 0.0, 0.5, 1.0, 3.0}) {
        DeconvKernelSpec k;
        k.cn = cn;
        const double expected = std::exp(-0.5 * u * u) * (1.0 + b * b * (1.0 - u * u));
        const double got = deconv_smooth(psi, u, k, err);
        const double rel = std::abs(got - expected) / std::abs(expected);
        worst = std::max(worst, rel);
        ++checked;
        if (rel <= 1e-6) ++ok;
      }
    double prev_bias = std::numeric_limits<double>::infinity(), prev_var = 0.0;
    for (double cn : {0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 40.0}) {
      DeconvKernelSpec k;
      k.cn = cn;
      const auto [bias, var] = bias_variance_norms(psi, k, err, 2);
      monotone = monotone && bias <= prev_bias && var >= prev_var;
      prev_bias = bias;
      prev_var = var;
    }
  }
  return {ok == checked && monotone, std::to_string(ok) + "/" + std::to_string(checked) +
                                         " closed-form matches, worst relative error " + fmt("%.2e", worst) +
                                         ", norm monotonicity " + (monotone ? "holds" : "fails")};
}

// ---------------------------------------------------------------- C9

Vec central_difference(const std::function<double(const Vec&)>& f, const Vec& x) {
  Vec g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    auto d = [&](double h) {
      Vec p = x, m = x;
      p[k] += h;
      m[k] -= h;
      return (f(p) - f(m)) / (2.0 * h);
    };
    const double h = 1e-4 * std::max(1.0, std::abs(x[k]));
    g[k] = (4.0 * d(0.5 * h) - d(h)) / 3.0;
  }
  return g;
}

Outcome c9_gradients() {
  struct Family {
    const char* name;
    RelativeRisk risk;
    Vec beta0;
    double beta_lo, beta_hi;
    WeightFunction corr_weight;
  };
  const std::vector<Family> families{
      {"exponential", RelativeRisk::exponential(), vec({0.5}), -1.0, 1.0, WeightFunction::one()},
      {"polynomial1", RelativeRisk::polynomial1(1), vec({0.3}), -0.4, 0.4, WeightFunction::gaussian_damp(0.5)},
      {"cosine1", RelativeRisk::cosine1(2), vec({0.3}), 0.0, 0.5, WeightFunction::one()},
  };
  const auto err = ErrorDensity::gaussian(0.2);
  const auto weight = WeightFunction::gaussian_damp(0.5);
  int checked = 0, ok = 0;
  double worst = 0.0;
  std::string worst_at;
  for (std::size_t fi = 0; fi < families.size(); ++fi) {
    const auto& fam = families[fi];
    StudyConfig cfg;
    cfg.n = 300;
    cfg.tau = 2.0;
    cfg.theta0 = {fam.beta0, vec({1.0, 0.5})};
    cfg.risk = fam.risk;
    cfg.baseline = Baseline::affine_positive();
    cfg.weight = weight;
    cfg.censoring = censoring::Uniform{2.5};
    cfg.error = err;
    cfg.seed = derive_seed(2024, {0x4744ULL, fi});
    const auto data = sample_dataset(cfg);
    const auto corr = build_corrections(fam.risk, err, fam.corr_weight, fam.beta0);

    std::vector<std::pair<std::string, Criterion>> crits;
    crits.emplace_back("oracle", Criterion(std::make_shared<DirectSide>(covariate_points(data, true), fam.risk, weight),
                                           data, cfg.baseline));
    crits.emplace_back("naive", Criterion(std::make_shared<DirectSide>(covariate_points(data, false), fam.risk, weight),
                                          data, cfg.baseline));
    crits.emplace_back("s1", Criterion(std::make_shared<DeconvolvedSide>(covariate_points(data, false), fam.risk, weight,
                                                                         err, DeconvolvedSide::FixedCut{4.0}),
                                       data, cfg.baseline));
    crits.emplace_back("s2", Criterion(corrected_side(covariate_points(data, false), corr), data, cfg.baseline));

    Stream rng(derive_seed(2024, {0x7468ULL, fi}));
    for (int t = 0; t < 10; ++t) {
      Vec x(3);
      x[0] = fam.beta_lo + (fam.beta_hi - fam.beta_lo) * rng.uniform();
      x[1] = 0.5 + 1.5 * rng.uniform();
      x[2] = rng.uniform();
      for (auto& [name, c] : crits) {
        const Vec analytic = c.gradient(Theta::split(x, 1));
        const Vec numeric = central_difference([&](const Vec& y) { return c.value(y); }, x);
        const double rel = (analytic - numeric).lpNorm<Eigen::Infinity>() /
                           std::max(numeric.lpNorm<Eigen::Infinity>(), 1e-12);
        ++checked;
        if (rel <= 1e-5) ++ok;
        if (rel > worst) {
          worst = rel;
          worst_at = std::string(fam.name) + "/" + name;
        }
      }
    }
  }
  return {ok == checked, std::to_string(ok) + "/" + std::to_string(checked) + " gradients match, worst relative " +
                             fmt("%.2e", worst) + " (" + worst_at + ")"};
}

}  // namespace

int main() {
  struct Item {
    const char* id;
    const char* title;
    Outcome (*run)();
  };
  const Item items[] = {
      {"C1", "rate table golden cells", c1_rate_table},
      {"C2", "population criterion argmin and Hessian", c2_population_argmin},
      {"C3", "deconvolution identity at n=1e5", c3_deconvolution_identity},
      {"C4", "naive bias versus corrected consistency", c4_naive_bias},
      {"C5", "root-n MSE slope", c5_root_n_rate},
      {"C6", "normality and sandwich coverage", c6_normality},
      {"C7", "theta1 and theta2 paired agreement", c7_paired_agreement},
      {"C8", "deconvolution kernel closed forms", c8_deconvolution_kernel},
      {"C9", "criterion gradient checks", c9_gradients},
  };
  int failures = 0;
  for (const auto& item : items) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = item.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!out.pass) ++failures;
    std::printf("%s %s: %s [%s] (%.1fs)\n", out.pass ? "PASS" : "FAIL", item.id, item.title, out.detail.c_str(),
                secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
