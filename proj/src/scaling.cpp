#include "dforge/scaling.hpp"

#include <cmath>

#include "dforge/error.hpp"

namespace dforge {

MeshPtr scale_mesh(const TriMesh& mesh, double sx, double sy) {
  if (!(sx > 0.0) || !(sy > 0.0)) throw ConfigError("mesh scale factors must be positive");
  std::vector<Point> nodes = mesh.nodes();
  for (auto& p : nodes) {
    p.x /= sx;
    p.y /= sy;
  }
  return std::make_shared<const TriMesh>(std::move(nodes), mesh.triangles(), mesh.region_tags(),
                                         mesh.boundary_tags());
}

ScaleSet default_scales(const ProblemSetup& setup) {
  if (!setup.mesh) throw ConfigError("problem setup has no mesh");
  ScaleSet s;
  s.t_c = setup.grid.final_time() > 0.0 ? setup.grid.final_time() : setup.grid.dt;
  s.r_xc = s.r_yc = setup.mesh->diameter();
  return s;
}

ProblemSetup nondimensionalize_problem(const ProblemSetup& setup, const ScaleSet& scales) {
  scales.validate();
  if (setup.nondimensional) throw ConfigError("problem setup is already nondimensional");
  ProblemSetup out = setup;
  const double rx = scales.r_xc;
  const double ry = scales.r_yc;
  const double tc = scales.t_c;
  const double uc = scales.u_c;

  out.mesh = scale_mesh(*setup.mesh, rx, ry);
  out.grid = TimeGrid(setup.grid.t0 / tc, setup.grid.dt / tc, setup.grid.steps);
  out.metric = Metric{setup.metric.gxx / (rx * rx), setup.metric.gyy / (ry * ry)};

  auto to_physical = [rx, ry](const Point& p) { return Point{p.x * rx, p.y * ry}; };
  if (setup.mass_coeff) {
    auto f = setup.mass_coeff;
    out.mass_coeff = [f, to_physical](const Point& p) { return f(to_physical(p)); };
  }
  const double kfactor = setup.kind == PdeKind::FirstOrder ? tc : 1.0;
  auto k = setup.stiffness_coeff;
  out.stiffness_coeff = [k, to_physical, kfactor](const Point& p) {
    return kfactor * (k ? k(to_physical(p)) : 1.0);
  };
  if (setup.kind == PdeKind::SecondOrder) out.wave_speed = setup.wave_speed * tc;

  const double order = setup.kind == PdeKind::FirstOrder ? 1.0 : 2.0;
  const double time_factor = std::pow(tc, order);
  if (setup.source) {
    auto f = setup.source;
    out.source = [f, to_physical, tc](const Point& p, double tau) { return f(to_physical(p), tau * tc); };
  }
  out.point_sources.clear();
  for (const auto& ps : setup.point_sources) {
    auto v = ps.value;
    const double area_factor = 1.0 / (rx * ry);
    out.point_sources.push_back(
        {Point{ps.location.x / rx, ps.location.y / ry}, [v, tc, area_factor](double tau) { return area_factor * v(tau * tc); }});
  }
  out.source_factor = setup.source_factor * time_factor / uc;

  for (auto& [tag, value] : out.dirichlet) value /= uc;
  for (auto& [tag, value] : out.region_constraints) value /= uc;
  if (setup.initial) {
    auto f = setup.initial;
    out.initial = [f, to_physical, uc](const Point& p) { return f(to_physical(p)) / uc; };
  }
  out.scales = scales;
  out.nondimensional = true;
  return out;
}

Trajectory redimensionalize_trajectory(const Trajectory& traj, const ScaleSet& scales) {
  scales.validate();
  TimeGrid grid(traj.grid.t0 * scales.t_c, traj.grid.dt * scales.t_c, traj.grid.steps);
  MeshPtr mesh = traj.mesh ? scale_mesh(*traj.mesh, 1.0 / scales.r_xc, 1.0 / scales.r_yc) : nullptr;
  return Trajectory(grid, traj.states * scales.u_c, std::move(mesh));
}

Trajectory nondimensionalize_trajectory(const Trajectory& traj, const ScaleSet& scales) {
  scales.validate();
  TimeGrid grid(traj.grid.t0 / scales.t_c, traj.grid.dt / scales.t_c, traj.grid.steps);
  MeshPtr mesh = traj.mesh ? scale_mesh(*traj.mesh, scales.r_xc, scales.r_yc) : nullptr;
  return Trajectory(grid, traj.states / scales.u_c, std::move(mesh));
}

}  // namespace dforge
