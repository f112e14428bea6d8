#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mehaz/model.hpp"

namespace mehaz {

namespace covariate {
struct Uniform {
  double lo;
  double hi;
};
struct GaussianTrunc {
  double mu;
  double sigma;
  double lo;
  double hi;
};
/// z1 with probability p, z2 otherwise.
struct TwoPoint {
  double z1;
  double z2;
  double p;
};
}  // namespace covariate
using CovariateLaw = std::variant<covariate::Uniform, covariate::GaussianTrunc, covariate::TwoPoint>;

namespace censoring {
struct None {};
/// C ~ U[0, c_max].
struct Uniform {
  double c_max;
};
struct Exponential {
  double rate;
};
}  // namespace censoring
using CensorLaw = std::variant<censoring::None, censoring::Uniform, censoring::Exponential>;

struct StudyConfig {
  std::size_t n = 0;
  double tau = 1.0;
  Theta theta0;
  RelativeRisk risk = RelativeRisk::exponential();
  Baseline baseline = Baseline::constant();
  WeightFunction weight = WeightFunction::one();
  CovariateLaw covariate = covariate::Uniform{-1.0, 1.0};
  CensorLaw censoring = censoring::None{};
  ErrorDensity error = ErrorDensity::gaussian(0.5);
  std::uint64_t seed = 0;

  /// Throws DomainError when an invariant fails.
  void validate() const;
};

struct Observation {
  double x = 0.0;
  bool d = false;
  double u = 0.0;
  std::optional<double> z;
};

struct Dataset {
  std::vector<Observation> obs;
  double tau = 1.0;

  std::size_t size() const noexcept { return obs.size(); }
  bool has_z() const;
};

/// Draws Z, epsilon, the event time and the censoring time for each subject
/// from its own stream (seed, i).
Dataset sample_dataset(const StudyConfig& cfg);

/// Survival function of the censoring time, P(C >= t).
double censor_survival(const CensorLaw& law, double t);
/// Points where the censoring survival function has a kink.
std::vector<double> censor_breakpoints(const CensorLaw& law);

/// CSV with header `x,d,u,z`, 17 significant digits, empty z when withheld.
void write_csv(std::ostream& os, const Dataset& data, bool with_z = true);
Dataset read_csv(std::istream& is, double tau);
void write_csv_file(const std::string& path, const Dataset& data, bool with_z = true);
Dataset read_csv_file(const std::string& path, double tau);

}  // namespace mehaz
