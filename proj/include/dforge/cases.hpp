#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dforge/config.hpp"
#include "dforge/multifidelity.hpp"
#include "dforge/problem.hpp"
#include "dforge/rnn.hpp"
#include "dforge/upsample.hpp"

namespace dforge {

/// Piecewise-linear function of time given by (t, value) knots; constant
/// beyond the first and last knot.
struct PiecewiseLinear {
  std::vector<std::pair<double, double>> knots;

  double operator()(double t) const;
  static PiecewiseLinear parse(const std::string& text);
  std::string to_string() const;
};

/// A * exp(-(t - t0)^2 / (2 s^2)).
double gaussian_pulse(double t, double amplitude, double t0, double width);

/// Everything needed to rebuild one case: resolution, time grid, sampled
/// instants, training schedule and the case-specific dimensions and
/// materials in `params`.
struct CaseConfig {
  std::string name;
  int nx = 1;
  int ny = 1;
  int refinements = 1;
  double dt = 1.0;
  int steps = 1;
  std::vector<int> samples;
  TrainConfig train;
  UpsampleConfig upsample;
  std::uint64_t seed = 0;
  double validation_bound = 1.0;
  std::map<std::string, double> params;
  std::map<std::string, PiecewiseLinear> tables;

  double param(const std::string& key) const;
  TimeGrid grid() const { return TimeGrid(0.0, dt, steps); }
  /// Canonical `key = value` text; parsing it reproduces this config.
  std::string to_text() const;
  std::uint64_t hash() const { return fnv1a64(to_text()); }
};

/// Root seed; the training and upsampling streams derive from it.
void set_seed(CaseConfig& cfg, std::uint64_t seed);
/// Truncates the schedule at `epochs`, or stretches its last segment.
void set_epochs(CaseConfig& cfg, int epochs);

const std::vector<std::string>& case_names();
/// Defaults for `heat`, `quadrupole` or `cavity`.
CaseConfig default_case_config(const std::string& name);
/// Defaults of the case named by `case` (or `fallback_case`) with every key
/// of `cfg` applied. Unknown keys raise ConfigError.
CaseConfig case_config_from(const Config& cfg, const std::string& fallback_case = "");

std::vector<int> heat_default_samples();
std::vector<int> quadrupole_default_samples(int steps);

/// Conductivity of the heat sink at a point.
double heat_sink_kappa(const CaseConfig& cfg, Fidelity fidelity, const Point& p);

ProblemSetup build_heat_sink(Fidelity fidelity, const CaseConfig& cfg);
ProblemSetup build_quadrupole(Fidelity fidelity, const CaseConfig& cfg);
ProblemSetup build_cavity(Fidelity fidelity, const CaseConfig& cfg);
ProblemSetup build_case(const CaseConfig& cfg, Fidelity fidelity);

FidelityPair build_pair(const CaseConfig& cfg);

/// Region tags shared by the builders.
namespace region {
constexpr int kAir = 1;
constexpr int kConductor = 2;
constexpr int kYoke = 2;
constexpr int kCoilFirst = 3;
constexpr int kAperture = 7;
constexpr int kWall = 3;
}  // namespace region

}  // namespace dforge
