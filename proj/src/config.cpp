#include "mehaz/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mehaz/error.hpp"

namespace mehaz {

namespace {

using nlohmann::json;

// Object view that records the keys it was asked for so the rest can be
// reported as unknown.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& at(const std::string& key) {
    if (!has(key)) throw ConfigError(path(key), "missing required key");
    return j_.at(key);
  }

  Node child(const std::string& key) { return Node(at(key), path(key)); }

  template <class T>
  T get(const std::string& key) {
    const json& v = at(key);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(key), "has the wrong type");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    return has(key) ? get<T>(key) : fallback;
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double v = fallback && !has(key) ? *fallback : get<double>(key);
    if (!(v > 0.0)) throw ConfigError(path(key), "must be positive");
    return v;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(path(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

Vec vec_at(Node& node, const std::string& key) {
  const auto v = node.get<std::vector<double>>(key);
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Runs `make`, re-raising DomainError as a ConfigError at `path`.
template <class F>
auto at_path(const std::string& path, F&& make) {
  try {
    return make();
  } catch (const DomainError& e) {
    throw ConfigError(path, e.what());
  }
}

std::string family_of(Node& node) { return node.get<std::string>("family"); }

RelativeRisk parse_risk(Node node) {
  const auto fam = family_of(node);
  const bool has_params = node.has("params");
  const json empty = json::object();
  Node p(has_params ? node.at("params") : empty, node.path("params"));
  auto risk = at_path(node.path("family"), [&]() -> RelativeRisk {
    if (fam == "exponential") return RelativeRisk::exponential();
    if (fam == "polynomial1") return RelativeRisk::polynomial1(p.get<int>("m", 1));
    if (fam == "cosine1") return RelativeRisk::cosine1(p.get<int>("m", 1));
    if (fam == "cauchy1") return RelativeRisk::cauchy1();
    if (fam == "laplace_kink") return RelativeRisk::laplace_kink();
    if (fam == "indicator") return RelativeRisk::indicator();
    if (fam == "polygonal") return RelativeRisk::polygonal(p.get<double>("a"), p.get<double>("b"));
    if (fam == "polynomial2") return RelativeRisk::polynomial2(p.get<std::vector<double>>("coeffs"));
    if (fam == "cosine2") return RelativeRisk::cosine2(p.get<std::vector<double>>("coeffs"));
    if (fam == "cauchy2") return RelativeRisk::cauchy2();
    throw ConfigError(node.path("family"), "unknown relative risk '" + fam + "'");
  });
  p.finish();
  node.finish();
  return risk;
}

Baseline parse_baseline(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path, "expected one of constant, affine_positive, exp_poly");
  const auto name = j.get<std::string>();
  if (name == "constant") return Baseline::constant();
  if (name == "affine_positive") return Baseline::affine_positive();
  if (name == "exp_poly") return Baseline::exp_poly();
  throw ConfigError(path, "unknown baseline '" + name + "'");
}

ErrorDensity parse_noise(Node node) {
  const auto fam = family_of(node);
  Node p = node.child("params");
  auto err = at_path(node.path("params"), [&]() -> ErrorDensity {
    if (fam == "gaussian") return ErrorDensity::gaussian(p.positive("sigma"));
    if (fam == "laplace") return ErrorDensity::laplace(p.positive("b"));
    if (fam == "cauchy") return ErrorDensity::cauchy(p.positive("scale"));
    throw ConfigError(node.path("family"), "unknown noise family '" + fam + "'");
  });
  p.finish();
  node.finish();
  return err;
}

WeightFunction parse_weight(Node node, const ErrorDensity& err) {
  const auto fam = family_of(node);
  const json empty = json::object();
  Node p(node.has("params") ? node.at("params") : empty, node.path("params"));
  auto w = at_path(node.path("params"), [&]() -> WeightFunction {
    if (fam == "default") return default_weight(err);
    if (fam == "one") return WeightFunction::one();
    if (fam == "gaussian_damp") return WeightFunction::gaussian_damp(p.positive("delta"));
    if (fam == "poly_gaussian_damp") return WeightFunction::poly_gaussian_damp(p.positive("delta"));
    if (fam == "bump_sum") {
      std::vector<BumpSegment> segs;
      const json& arr = p.at("segments");
      if (!arr.is_array()) throw ConfigError(p.path("segments"), "expected an array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        Node s(arr[i], p.path("segments[" + std::to_string(i) + "]"));
        segs.push_back({s.get<double>("a"), s.get<double>("b"), s.get<double>("r")});
        s.finish();
      }
      return WeightFunction::bump_sum(std::move(segs));
    }
    throw ConfigError(node.path("family"), "unknown weight '" + fam + "'");
  });
  p.finish();
  node.finish();
  return w;
}

CovariateLaw parse_covariate(Node node) {
  const auto law = node.get<std::string>("law");
  CovariateLaw out;
  if (law == "uniform") {
    out = covariate::Uniform{node.get<double>("lo"), node.get<double>("hi")};
  } else if (law == "gaussian_trunc") {
    out = covariate::GaussianTrunc{node.get<double>("mu"), node.get<double>("sigma"), node.get<double>("lo"),
                                   node.get<double>("hi")};
  } else if (law == "two_point") {
    out = covariate::TwoPoint{node.get<double>("z1"), node.get<double>("z2"), node.get<double>("p")};
  } else {
    throw ConfigError(node.path("law"), "unknown covariate law '" + law + "'");
  }
  node.finish();
  return out;
}

CensorLaw parse_censoring(Node node) {
  const auto law = node.get<std::string>("law");
  CensorLaw out;
  if (law == "none") {
    out = censoring::None{};
  } else if (law == "uniform") {
    out = censoring::Uniform{node.positive("c_max")};
  } else if (law == "exponential") {
    out = censoring::Exponential{node.positive("rate")};
  } else {
    throw ConfigError(node.path("law"), "unknown censoring law '" + law + "'");
  }
  node.finish();
  return out;
}

std::size_t positive_count(Node& node, const std::string& key, std::size_t fallback) {
  const auto v = node.get<long long>(key, static_cast<long long>(fallback));
  if (v <= 0) throw ConfigError(node.path(key), "must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

EstimateOptions RunConfig::estimate_options() const {
  EstimateOptions opt;
  opt.box = box;
  opt.minimize = minimize;
  opt.bandwidth = bandwidth;
  return opt;
}

StudyPlan RunConfig::study_plan() const {
  StudyPlan plan;
  plan.config = study;
  plan.n_list = n_list;
  plan.replicates = replicates;
  plan.estimators = estimators;
  plan.estimate = estimate_options();
  plan.master_seed = study.seed;
  plan.threads = threads;
  return plan;
}

RunConfig parse_run_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  Node root(doc, "");
  RunConfig cfg;
  auto& st = cfg.study;

  st.error = parse_noise(root.child("noise"));

  {
    Node model = root.child("model");
    st.risk = parse_risk(model.child("risk"));
    st.baseline = parse_baseline(model.at("baseline"), model.path("baseline"));
    if (model.has("weight")) {
      st.weight = parse_weight(model.child("weight"), st.error);
    } else {
      st.weight = WeightFunction::one();
    }
    Node theta = model.child("theta0");
    st.theta0.beta = vec_at(theta, "beta");
    st.theta0.gamma = vec_at(theta, "gamma");
    theta.finish();
    at_path(model.path("theta0"), [&] {
      st.risk.check_beta(st.theta0.beta);
      st.baseline.check_gamma(st.theta0.gamma);
      return 0;
    });
    if (model.has("theta_box")) {
      Node b = model.child("theta_box");
      Box box{vec_at(b, "lo"), vec_at(b, "hi")};
      b.finish();
      at_path(model.path("theta_box"), [&] {
        box.validate();
        return 0;
      });
      if (box.dim() != st.theta0.flat().size())
        throw ConfigError(model.path("theta_box"), "dimension does not match theta0");
      cfg.box = std::move(box);
    }
    model.finish();
  }

  {
    Node s = root.child("study");
    const bool one = s.has("n"), many = s.has("n_list");
    if (one == many) throw ConfigError(s.path("n"), "give exactly one of n and n_list");
    if (one) {
      cfg.n_list = {positive_count(s, "n", 1)};
    } else {
      const json& arr = s.at("n_list");
      if (!arr.is_array() || arr.empty()) throw ConfigError(s.path("n_list"), "expected a non-empty array");
      for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number_integer() || arr[i].get<long long>() <= 0)
          throw ConfigError(s.path("n_list[" + std::to_string(i) + "]"), "must be a positive integer");
        cfg.n_list.push_back(arr[i].get<std::size_t>());
      }
    }
    st.n = cfg.n_list.front();
    st.tau = s.positive("tau", 1.0);
    if (s.has("covariate")) st.covariate = parse_covariate(s.child("covariate"));
    if (s.has("censoring")) st.censoring = parse_censoring(s.child("censoring"));
    cfg.replicates = positive_count(s, "R", 2);
    st.seed = s.get<std::uint64_t>("seed", 0);
    s.finish();
    at_path("study", [&] {
      st.validate();
      return 0;
    });
  }

  if (root.has("estimators")) {
    const json& arr = root.at("estimators");
    if (!arr.is_array() || arr.empty()) throw ConfigError("estimators", "expected a non-empty array");
    cfg.estimators.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto path = "estimators[" + std::to_string(i) + "]";
      if (!arr[i].is_string()) throw ConfigError(path, "expected a string");
      cfg.estimators.push_back(at_path(path, [&] { return parse_estimator(arr[i].get<std::string>()); }));
    }
  }

  if (root.has("bandwidth")) {
    const json& b = root.at("bandwidth");
    if (b.is_string() && b.get<std::string>() == "auto") {
      cfg.bandwidth.reset();
    } else if (b.is_number() && b.get<double>() > 0.0) {
      cfg.bandwidth = b.get<double>();
    } else {
      throw ConfigError("bandwidth", "expected \"auto\" or a positive number");
    }
  }

  if (root.has("optimizer")) {
    Node o = root.child("optimizer");
    cfg.minimize.starts = o.get<int>("starts", cfg.minimize.starts);
    if (cfg.minimize.starts < 0) throw ConfigError(o.path("starts"), "must be non-negative");
    cfg.minimize.max_iterations = static_cast<int>(positive_count(o, "max_iterations", 4000));
    cfg.minimize.x_tol = o.positive("x_tol", cfg.minimize.x_tol);
    cfg.minimize.f_tol = o.positive("f_tol", cfg.minimize.f_tol);
    o.finish();
  }

  cfg.threads = static_cast<unsigned>(positive_count(root, "threads", 1));

  if (root.has("output")) {
    Node o = root.child("output");
    cfg.output.dir = o.get<std::string>("dir", cfg.output.dir);
    if (o.has("formats")) {
      cfg.output.formats = o.get<std::vector<std::string>>("formats");
      for (std::size_t i = 0; i < cfg.output.formats.size(); ++i) {
        const auto& f = cfg.output.formats[i];
        if (f != "jsonl" && f != "csv")
          throw ConfigError(o.path("formats[" + std::to_string(i) + "]"), "expected jsonl or csv");
      }
    }
    o.finish();
  }

  if (root.has("check")) {
    Node c = root.child("check");
    cfg.check.identity_n = positive_count(c, "identity_n", cfg.check.identity_n);
    cfg.check.identity_cut = c.positive("identity_cut", cfg.check.identity_cut);
    cfg.check.scan_half_width = static_cast<int>(positive_count(c, "scan_half_width", 5));
    cfg.check.scan_step = c.positive("scan_step", cfg.check.scan_step);
    c.finish();
  }

  root.finish();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string config_reference() {
  return R"({
  "model": {
    "risk": {"family": "exponential", "params": {}},
    "baseline": "constant",
    "weight": {"family": "one", "params": {}},
    "theta0": {"beta": [1.0], "gamma": [1.0]},
    "theta_box": {"lo": [-3.0, 0.01], "hi": [3.0, 10.0]}
  },
  "noise": {"family": "gaussian", "params": {"sigma": 0.5}},
  "study": {
    "n": 2000,
    "tau": 1.0,
    "covariate": {"law": "uniform", "lo": -1.0, "hi": 1.0},
    "censoring": {"law": "none"},
    "R": 2,
    "seed": 0
  },
  "estimators": ["theta2"],
  "bandwidth": "auto",
  "optimizer": {"starts": 5, "max_iterations": 4000, "x_tol": 1e-7, "f_tol": 1e-10},
  "threads": 1,
  "output": {"dir": "out", "formats": ["jsonl", "csv"]},
  "check": {"identity_n": 100000, "identity_cut": 3.0, "scan_half_width": 5, "scan_step": 0.1}
}

risk families: exponential, polynomial1 {m}, cosine1 {m}, cauchy1, laplace_kink,
  indicator, polygonal {a, b}, polynomial2 {coeffs}, cosine2 {coeffs}, cauchy2
baselines: constant, affine_positive, exp_poly
weights: default, one, gaussian_damp {delta}, poly_gaussian_damp {delta},
  bump_sum {segments: [{a, b, r}]}
noise: gaussian {sigma}, laplace {b}, cauchy {scale}
study: n or n_list; covariate laws uniform {lo, hi}, gaussian_trunc {mu, sigma,
  lo, hi}, two_point {z1, z2, p}; censoring laws none, uniform {c_max},
  exponential {rate}
estimators: oracle, naive, theta1, theta2
theta_box defaults to beta in [-3, 3] with a family-specific gamma box.
)";
}

}  // namespace mehaz
