#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mehaz/mc.hpp"

namespace mehaz {

struct OutputSpec {
  std::string dir = "out";
  /// Any of "jsonl", "csv".
  std::vector<std::string> formats{"jsonl", "csv"};
};

/// Settings of the `check` subcommand.
struct CheckSpec {
  std::size_t identity_n = 100000;
  double identity_cut = 3.0;
  /// Half-width of the population scan in grid steps, per coordinate.
  int scan_half_width = 5;
  double scan_step = 0.1;
};

struct RunConfig {
  /// Template study; n is the first entry of n_list.
  StudyConfig study;
  std::vector<std::size_t> n_list;
  std::size_t replicates = 2;
  std::vector<EstimatorKind> estimators{EstimatorKind::Theta2};
  std::optional<Box> box;
  /// Empty selects the rate-motivated bandwidth.
  std::optional<double> bandwidth;
  MinimizeOptions minimize{};
  unsigned threads = 1;
  OutputSpec output{};
  CheckSpec check{};

  ModelBundle model() const { return {study.risk, study.baseline, study.weight}; }
  EstimateOptions estimate_options() const;
  StudyPlan study_plan() const;
};

/// Parses and validates a JSON run configuration. Unknown keys are rejected;
/// every failure is a ConfigError naming the offending path.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);

/// Annotated example document listing every key with its default.
std::string config_reference();

}  // namespace mehaz
