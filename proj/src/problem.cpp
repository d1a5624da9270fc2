#include "dforge/problem.hpp"

#include <algorithm>
#include <cmath>

#include "dforge/error.hpp"

namespace dforge {

const char* to_string(Fidelity f) { return f == Fidelity::Lofi ? "lofi" : "hifi"; }

Fidelity parse_fidelity(const std::string& s) {
  if (s == "lofi") return Fidelity::Lofi;
  if (s == "hifi") return Fidelity::Hifi;
  throw ConfigError("unknown fidelity '" + s + "' (valid: lofi, hifi)");
}

void ScaleSet::validate() const {
  for (double v : {t_c, r_xc, r_yc, u_c, d_c}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("scales must be strictly positive and finite");
  }
}

bool ScaleSet::is_identity() const {
  return t_c == 1.0 && r_xc == 1.0 && r_yc == 1.0 && u_c == 1.0 && d_c == 1.0;
}

void ProblemSetup::validate() const {
  if (!mesh) throw ConfigError("problem setup has no mesh");
  if (!(wave_speed > 0.0)) throw InvalidCoefficient("wave speed must be positive");
  scales.validate();
  for (const auto& [tag, value] : dirichlet) {
    (void)value;
    if (mesh->nodes_with_boundary_tag(tag).empty())
      throw ConfigError("Dirichlet data references boundary tag " + std::to_string(tag) + " absent from the mesh");
  }
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    const Point c = mesh->centroid(t);
    const double m = mass_coeff ? mass_coeff(c) : 1.0;
    const double k = stiffness_coeff ? stiffness_coeff(c) : 1.0;
    if (!(m > 0.0) || !(k > 0.0))
      throw InvalidCoefficient("nonpositive coefficient at centroid of triangle " + std::to_string(t));
  }
}

DirichletData ProblemSetup::dirichlet_data() const {
  std::map<int, double> fixed;
  for (const auto& [tag, value] : dirichlet)
    for (int node : mesh->nodes_with_boundary_tag(tag)) fixed[node] = value;
  for (const auto& [region, value] : region_constraints)
    for (int node : mesh->nodes_of_region(region)) fixed[node] = value;
  DirichletData d;
  d.values.resize(static_cast<Eigen::Index>(fixed.size()));
  Eigen::Index i = 0;
  for (const auto& [node, value] : fixed) {
    d.dofs.push_back(node);
    d.values[i++] = value;
  }
  return d;
}

Vector ProblemSetup::initial_state() const {
  Vector u0 = initial ? interpolate(*mesh, initial) : Vector::Zero(mesh->num_nodes());
  const DirichletData d = dirichlet_data();
  for (std::size_t i = 0; i < d.dofs.size(); ++i) u0[d.dofs[i]] = d.values[static_cast<Eigen::Index>(i)];
  return u0;
}

Vector ProblemSetup::load(double t) const {
  Vector b = assemble_load(*mesh, source, t);
  for (const auto& ps : point_sources) b += assemble_point_load(*mesh, ps.location, ps.value(t));
  return source_factor * b;
}

Trajectory simulate(const ProblemSetup& setup) {
  setup.validate();
  const SparseMatrix mass = assemble_mass(*setup.mesh, setup.mass_coeff);
  const SparseMatrix stiffness = assemble_stiffness(*setup.mesh, setup.stiffness_coeff, setup.metric);
  const DirichletData dirichlet = setup.dirichlet_data();
  const Vector u0 = setup.initial_state();
  const bool driven = setup.source || !setup.point_sources.empty();
  LoadFn load;
  if (driven) load = [&setup](double t) { return setup.load(t); };
  if (setup.kind == PdeKind::FirstOrder)
    return implicit_euler_run(mass, stiffness, load, dirichlet, u0, setup.grid, setup.mesh);
  return central_difference_run(mass, stiffness, setup.wave_speed, load, dirichlet, u0, std::nullopt, setup.grid,
                                setup.mesh);
}

}  // namespace dforge
