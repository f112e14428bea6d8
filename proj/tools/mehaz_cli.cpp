// mehaz: simulate, estimate, study, rates and check from a JSON run config.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include "mehaz/config.hpp"
#include "mehaz/error.hpp"
#include "mehaz/estimate.hpp"
#include "mehaz/fourier.hpp"
#include "mehaz/mc.hpp"
#include "mehaz/population.hpp"
#include "mehaz/rates.hpp"
#include "mehaz/rng.hpp"
#include "mehaz/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mehaz;

namespace {

constexpr const char* kVersion = "mehaz 0.1.0";

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i)));
  return rows;
}

// Outputs are buffered and written only once the command has succeeded.
class Outputs {
 public:
  void add(std::string name, std::string content) { files_.emplace_back(std::move(name), std::move(content)); }

  void commit(const fs::path& dir, const json& manifest) {
    fs::create_directories(dir);
    json m = manifest;
    m["outputs"] = json::array();
    for (const auto& [name, content] : files_) {
      write(dir / name, content);
      m["outputs"].push_back(name);
    }
    write(dir / "manifest.json", m.dump(2) + "\n");
  }

 private:
  static void write(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    out << content;
    if (!out) throw std::runtime_error("cannot write " + p.string());
  }

  std::vector<std::pair<std::string, std::string>> files_;
};

struct Overrides {
  std::string config;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  std::optional<unsigned> threads;
  std::optional<double> bandwidth;
  std::optional<std::string> out_dir;
  std::vector<std::string> estimators;

  void attach(CLI::App* sub, bool with_config = true) {
    if (with_config) sub->add_option("-c,--config", config, "JSON run configuration")->required();
    sub->add_option("--n", n, "Override study.n");
    sub->add_option("--seed", seed, "Override study.seed");
    sub->add_option("--R", replicates, "Override study.R");
    sub->add_option("--threads", threads, "Cap worker threads");
    sub->add_option("--bandwidth", bandwidth, "Fixed theta1 bandwidth");
    sub->add_option("--out-dir", out_dir, "Override output.dir");
    sub->add_option("--estimator", estimators, "Override the estimator list");
  }

  std::string describe() const {
    std::ostringstream os;
    if (n) os << " n=" << *n;
    if (seed) os << " seed=" << *seed;
    if (replicates) os << " R=" << *replicates;
    if (threads) os << " threads=" << *threads;
    if (bandwidth) os << " bandwidth=" << *bandwidth;
    if (out_dir) os << " out_dir=" << *out_dir;
    for (const auto& e : estimators) os << " estimator=" << e;
    return os.str();
  }

  RunConfig load(std::string& text) const {
    text = read_file(config);
    RunConfig cfg = parse_run_config(text);
    if (n) {
      if (*n == 0) throw ConfigError("--n", "must be positive");
      cfg.n_list = {*n};
      cfg.study.n = *n;
    }
    if (seed) cfg.study.seed = *seed;
    if (replicates) {
      if (*replicates < 2) throw ConfigError("--R", "must be at least 2");
      cfg.replicates = *replicates;
    }
    if (threads) cfg.threads = std::max(1u, *threads);
    if (bandwidth) {
      if (!(*bandwidth > 0.0)) throw ConfigError("--bandwidth", "must be positive");
      cfg.bandwidth = *bandwidth;
    }
    if (out_dir) cfg.output.dir = *out_dir;
    if (!estimators.empty()) {
      cfg.estimators.clear();
      for (const auto& e : estimators) {
        try {
          cfg.estimators.push_back(parse_estimator(e));
        } catch (const DomainError& err) {
          throw ConfigError("--estimator", err.what());
        }
      }
    }
    return cfg;
  }

  json manifest(const std::string& command, const std::string& text, const RunConfig& cfg) const {
    return {{"command", command},
            {"config_hash", hex(fnv1a(text + "\n" + command + describe()))},
            {"seed", cfg.study.seed},
            {"version", kVersion}};
  }
};

bool wants(const RunConfig& cfg, const std::string& format) {
  return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), format) != cfg.output.formats.end();
}

json result_json(EstimatorKind kind, const EstimateResult& r) {
  json j{{"estimator", to_string(kind)},
         {"beta", vec_json(r.theta_hat.beta)},
         {"gamma", vec_json(r.theta_hat.gamma)},
         {"theta_hat", vec_json(r.theta_hat.flat())},
         {"criterion_value", r.criterion_value},
         {"iterations", r.iterations},
         {"restarts_used", r.restarts_used},
         {"converged", r.converged},
         {"bandwidth", r.bandwidth}};
  j["covariance"] = r.covariance ? mat_json(*r.covariance) : json(nullptr);
  j["se"] = r.standard_errors ? vec_json(*r.standard_errors) : json(nullptr);
  if (!r.covariance_error.empty()) j["covariance_error"] = r.covariance_error;
  return j;
}

int cmd_simulate(const Overrides& ov, bool hide_z) {
  std::string text;
  const auto cfg = ov.load(text);
  const auto data = sample_dataset(cfg.study);
  std::ostringstream csv;
  write_csv(csv, data, !hide_z);
  Outputs out;
  out.add("data.csv", csv.str());
  out.commit(cfg.output.dir, ov.manifest("simulate", text, cfg));
  std::cout << "wrote " << data.size() << " observations to " << (fs::path(cfg.output.dir) / "data.csv").string()
            << "\n";
  return 0;
}

int cmd_estimate(const Overrides& ov, const std::string& data_path) {
  std::string text;
  const auto cfg = ov.load(text);
  Dataset data;
  if (data_path.empty()) {
    data = sample_dataset(cfg.study);
  } else {
    try {
      data = read_csv_file(data_path, cfg.study.tau);
    } catch (const DomainError& e) {
      throw ConfigError("--data", e.what());
    }
  }
  json results = json::array();
  for (auto kind : cfg.estimators) {
    if (kind == EstimatorKind::Oracle && !data.has_z())
      throw ConfigError("estimators", "the oracle estimator needs the z column");
    results.push_back(result_json(kind, estimate(kind, data, cfg.model(), cfg.study.error, cfg.estimate_options())));
  }
  json doc{{"n", data.size()}, {"results", results}};
  Outputs out;
  out.add("estimate.json", doc.dump(2) + "\n");
  auto manifest = ov.manifest("estimate", text, cfg);
  if (!data_path.empty()) manifest["data_hash"] = hex(fnv1a(read_file(data_path)));
  out.commit(cfg.output.dir, manifest);
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int cmd_study(const Overrides& ov) {
  std::string text;
  const auto cfg = ov.load(text);
  const auto summary = run_study(cfg.study_plan());
  Outputs out;
  if (wants(cfg, "jsonl")) {
    std::ostringstream os;
    write_jsonl(os, summary.records);
    out.add("raw.jsonl", os.str());
  }
  std::ostringstream csv;
  write_summary_csv(csv, summary);
  if (wants(cfg, "csv")) out.add("summary.csv", csv.str());
  out.commit(cfg.output.dir, ov.manifest("study", text, cfg));
  std::cout << csv.str();
  return 0;
}

struct RateRow {
  SmoothnessClass psi;
  NoiseSmoothness noise;
};

// One input per cell of the rate table plus the two a = alpha + 1/2 boundaries.
std::vector<RateRow> table_grid() {
  return {
      {{1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}},     {{3.0, 0.0, 0.0}, {2.0, 0.0, 0.0}},
      {{2.0, 0.0, 0.0}, {0.0, 0.125, 2.0}},   {{0.0, 1.0, 2.0}, {2.0, 0.0, 0.0}},
      {{0.0, 1.0, 0.5}, {0.0, 0.125, 2.0}},   {{0.0, 0.1, 2.0}, {0.0, 0.125, 2.0}},
      {{0.0, 0.125, 2.0}, {1.0, 0.125, 2.0}}, {{1.0, 0.125, 2.0}, {0.0, 0.125, 2.0}},
      {{0.0, 0.5, 2.0}, {0.0, 0.125, 2.0}},   {{0.0, 1.0, 2.0}, {0.0, 1.0, 1.0}},
      {{2.5, 0.0, 0.0}, {2.0, 0.0, 0.0}},     {{1.5, 0.125, 2.0}, {1.0, 0.125, 2.0}},
  };
}

std::vector<RateRow> read_grid(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("--grid", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ConfigError("--grid", "expected an array of {a, d, r, alpha, delta, rho}");
  std::vector<RateRow> rows;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& e = doc[i];
    const auto path_i = "--grid[" + std::to_string(i) + "]";
    for (auto it = e.begin(); it != e.end(); ++it)
      if (it.key() != "a" && it.key() != "d" && it.key() != "r" && it.key() != "alpha" && it.key() != "delta" &&
          it.key() != "rho")
        throw ConfigError(path_i + "." + it.key(), "unknown key");
    try {
      rows.push_back({{e.value("a", 0.0), e.value("d", 0.0), e.value("r", 0.0)},
                      {e.value("alpha", 0.0), e.value("delta", 0.0), e.value("rho", 0.0)}});
    } catch (const json::exception&) {
      throw ConfigError(path_i, "entries must be numbers");
    }
  }
  return rows;
}

int cmd_rates(const std::string& grid_path, std::vector<double> ns, const std::string& out_path) {
  const auto rows = grid_path.empty() ? table_grid() : read_grid(grid_path);
  if (ns.empty()) ns = {1e3, 1e6};
  std::ostringstream csv;
  csv << "a,d,r,alpha,delta,rho,regime,parametric,n,value\n";
  for (const auto& row : rows) {
    RateSpec spec;
    try {
      spec = rate_spec(row.psi, row.noise);
    } catch (const DomainError& e) {
      throw ConfigError("--grid", e.what());
    }
    for (double n : ns) {
      if (!(n >= 3.0)) throw ConfigError("--n", "must be at least 3");
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", spec.value(n));
      csv << row.psi.a << ',' << row.psi.d << ',' << row.psi.r << ',' << row.noise.alpha << ',' << row.noise.delta
          << ',' << row.noise.rho << ',' << to_string(spec.regime) << ',' << (spec.parametric() ? 1 : 0) << ',' << n
          << ',' << buf << '\n';
    }
  }
  if (out_path.empty()) {
    std::cout << csv.str();
  } else {
    std::ofstream out(out_path, std::ios::binary);
    out << csv.str();
    if (!out) throw std::runtime_error("cannot write " + out_path);
  }
  return 0;
}

json population_scan(const RunConfig& cfg) {
  const auto& st = cfg.study;
  const Vec theta0 = st.theta0.flat();
  const auto dim = theta0.size();
  const int h = cfg.check.scan_half_width;
  const int side = 2 * h + 1;
  double total = 1.0;
  for (Eigen::Index k = 0; k < dim; ++k) total *= side;
  if (total > 20000.0) throw ConfigError("check.scan_half_width", "scan grid exceeds 20000 points");
  const auto m = static_cast<Eigen::Index>(st.risk.arity());
  double margin = std::numeric_limits<double>::infinity();
  Vec worst = theta0;
  std::size_t evaluated = 0;
  std::vector<int> idx(static_cast<std::size_t>(dim), -h);
  for (std::size_t count = 0; count < static_cast<std::size_t>(total); ++count) {
    Vec theta = theta0;
    bool centre = true;
    for (Eigen::Index k = 0; k < dim; ++k) {
      theta[k] += idx[static_cast<std::size_t>(k)] * cfg.check.scan_step;
      centre = centre && idx[static_cast<std::size_t>(k)] == 0;
    }
    if (!centre) {
      try {
        const double e = population_excess(Theta::split(theta, m), st);
        ++evaluated;
        if (e < margin) {
          margin = e;
          worst = theta;
        }
      } catch (const DomainError&) {
      }
    }
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (++idx[k] <= h) break;
      idx[k] = -h;
    }
  }
  const Mat H = population_hessian(st);
  const double min_eig = Eigen::SelfAdjointEigenSolver<Mat>(0.5 * (H + H.transpose())).eigenvalues().minCoeff();
  const bool pass = evaluated > 0 && margin >= 1e-6 && min_eig > 0.0;
  return {{"grid_points", evaluated},       {"margin", margin},  {"closest_theta", vec_json(worst)},
          {"hessian", mat_json(H)},         {"hessian_min_eigenvalue", min_eig},
          {"pass", pass}};
}

json identity_check_summary(const RunConfig& cfg) {
  const auto& st = cfg.study;
  DeconvKernelSpec kernel;
  kernel.cn = cfg.check.identity_cut;
  std::unique_ptr<FourierFunction> psi;
  std::string psi_name;
  try {
    psi = std::make_unique<WeightedRisk>(st.risk, st.theta0.beta, st.weight, 1);
    psi_name = "weighted_risk";
  } catch (const DomainError&) {
    psi = std::make_unique<GaussianFunction>();
    psi_name = "gaussian";
  }
  auto identity_cfg = st;
  identity_cfg.seed = derive_seed(st.seed, {0x4c656d6d61ULL});
  json cases = json::array();
  bool pass = true;
  const std::pair<const char*, ObservationWeight> phis[] = {
      {"one", [](const Observation&) { return 1.0; }},
      {"x_at_least_half", [](const Observation& o) { return o.x >= 0.5 ? 1.0 : 0.0; }},
  };
  for (const auto& [name, phi] : phis) {
    const auto r = identity_check(phi, *psi, identity_cfg, cfg.check.identity_n, kernel);
    const bool ok = std::abs(r.lhs - r.rhs) <= 3.0 * r.paired_stderr;
    pass = pass && ok;
    cases.push_back({{"phi", name}, {"psi", psi_name}, {"lhs", r.lhs}, {"rhs", r.rhs},
                     {"paired_stderr", r.paired_stderr}, {"pass", ok}});
  }
  return {{"cases", cases}, {"pass", pass}};
}

int cmd_check(const Overrides& ov) {
  std::string text;
  const auto cfg = ov.load(text);
  json doc{{"population_scan", population_scan(cfg)}, {"identity", identity_check_summary(cfg)}};
  const bool pass = doc["population_scan"]["pass"].get<bool>() && doc["identity"]["pass"].get<bool>();
  doc["pass"] = pass;
  Outputs out;
  out.add("check.json", doc.dump(2) + "\n");
  out.commit(cfg.output.dir, ov.manifest("check", text, cfg));
  std::cout << doc.dump(2) << "\n";
  if (!pass) {
    std::cerr << "mehaz: check failed\n";
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proportional hazards estimation with mismeasured covariates"};
  app.set_version_flag("--version", kVersion);
  app.footer("Run configuration (all keys, defaults shown):\n" + config_reference());
  app.require_subcommand(1);

  Overrides sim_ov, est_ov, study_ov, check_ov;
  bool hide_z = false;
  std::string data_path, grid_path, rates_out;
  std::vector<double> rate_ns;

  auto* sim = app.add_subcommand("simulate", "Write a simulated dataset as CSV");
  sim_ov.attach(sim);
  sim->add_flag("--hide-z", hide_z, "Leave the z column empty");

  auto* est = app.add_subcommand("estimate", "Estimate theta on one dataset");
  est_ov.attach(est);
  est->add_option("--data", data_path, "Dataset CSV (simulated from the config when omitted)");

  auto* study = app.add_subcommand("study", "Monte-Carlo study: raw JSONL plus summary CSV");
  study_ov.attach(study);

  auto* rates = app.add_subcommand("rates", "Rate table for a grid of smoothness classes as CSV");
  rates->add_option("--grid", grid_path, "JSON array of {a, d, r, alpha, delta, rho}");
  rates->add_option("--n", rate_ns, "Sample sizes (default 1e3 and 1e6)");
  rates->add_option("-o,--out", rates_out, "Output CSV (stdout when omitted)");

  auto* check = app.add_subcommand("check", "Deconvolution identity and population argmin scan");
  check_ov.attach(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_ov, hide_z);
    if (est->parsed()) return cmd_estimate(est_ov, data_path);
    if (study->parsed()) return cmd_study(study_ov);
    if (rates->parsed()) return cmd_rates(grid_path, rate_ns, rates_out);
    if (check->parsed()) return cmd_check(check_ov);
  } catch (const ConfigError& e) {
    std::cerr << "mehaz: config error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "mehaz: invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mehaz: numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
