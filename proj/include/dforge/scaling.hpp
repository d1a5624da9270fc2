#pragma once

#include "dforge/problem.hpp"

namespace dforge {

/// Copy of the mesh with x divided by sx and y divided by sy.
MeshPtr scale_mesh(const TriMesh& mesh, double sx, double sy);

/// Default scales: t_c = final time, r_xc = r_yc = bounding-box diagonal,
/// u_c = d_c = 1.
ScaleSet default_scales(const ProblemSetup& setup);

/// Rewrites a physical setup in the variables tau = t/t_c, x~ = x/r_xc,
/// y~ = y/r_yc, u~ = u/u_c. The gradient metric becomes
/// diag(r_xc^-2, r_yc^-2); first-order stiffness coefficients are multiplied
/// by t_c, wave speeds by t_c and sources by t_c^order / u_c (point sources
/// additionally by 1/(r_xc r_yc)).
ProblemSetup nondimensionalize_problem(const ProblemSetup& setup, const ScaleSet& scales);

/// Field times u_c, instants times t_c, mesh coordinates times (r_xc, r_yc).
Trajectory redimensionalize_trajectory(const Trajectory& traj, const ScaleSet& scales);
Trajectory nondimensionalize_trajectory(const Trajectory& traj, const ScaleSet& scales);

}  // namespace dforge
