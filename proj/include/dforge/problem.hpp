#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "dforge/fem.hpp"
#include "dforge/timestepping.hpp"

namespace dforge {

enum class PdeKind { FirstOrder, SecondOrder };
enum class Fidelity { Lofi, Hifi };

const char* to_string(Fidelity f);
Fidelity parse_fidelity(const std::string& s);

/// Characteristic scales. d_c normalizes discrepancy targets for the network.
struct ScaleSet {
  double t_c = 1.0;
  double r_xc = 1.0;
  double r_yc = 1.0;
  double u_c = 1.0;
  double d_c = 1.0;

  void validate() const;
  bool is_identity() const;
};

/// Point excitation: value(t) times the nodal basis functions at `location`.
struct PointSource {
  Point location;
  std::function<double(double)> value;
};

/// Mesh, coefficients, boundary data, excitation and time grid of one
/// fidelity level.
///
/// First-order problems read  m du/dt - div(k grad u) = f,
/// second-order problems read d2u/dt2 - v^2 div(k grad u) = f with m = k = 1
/// in the usual case. `metric` multiplies the gradient components.
struct ProblemSetup {
  std::string case_name;
  Fidelity fidelity = Fidelity::Lofi;
  MeshPtr mesh;
  PdeKind kind = PdeKind::FirstOrder;
  CoefficientFn mass_coeff;
  CoefficientFn stiffness_coeff;
  Metric metric;
  double wave_speed = 1.0;
  /// Boundary tag -> constant Dirichlet value.
  std::map<int, double> dirichlet;
  /// Region tag -> constant value imposed on every node of the region.
  std::map<int, double> region_constraints;
  SourceFn source;
  std::vector<PointSource> point_sources;
  /// Scale applied to the distributed source and point-source values.
  double source_factor = 1.0;
  /// Initial interior state; Dirichlet values overwrite constrained nodes.
  CoefficientFn initial;
  TimeGrid grid;
  /// Scales used to express this setup; identity for physical units.
  ScaleSet scales;
  bool nondimensional = false;

  void validate() const;
  /// Constrained DOF with their values, sorted by DOF index.
  DirichletData dirichlet_data() const;
  Vector initial_state() const;
  Vector load(double t) const;
};

/// Assembles the setup and advances it over its time grid.
Trajectory simulate(const ProblemSetup& setup);

}  // namespace dforge
