#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dforge/fem.hpp"

namespace dforge {

/// Uniform time grid t_k = t0 + k*dt for k = 0..steps.
struct TimeGrid {
  double t0 = 0.0;
  double dt = 1.0;
  int steps = 0;

  TimeGrid() = default;
  TimeGrid(double t0_, double dt_, int steps_);

  int num_instants() const { return steps + 1; }
  double time(int k) const { return t0 + k * dt; }
  double final_time() const { return time(steps); }
  bool same_as(const TimeGrid& other, double rel_tol = 1e-12) const;
};

/// DOF states on a time grid; column k holds the coefficients at t_k.
struct Trajectory {
  TimeGrid grid;
  Matrix states;
  MeshPtr mesh;

  Trajectory() = default;
  Trajectory(TimeGrid grid_, Matrix states_, MeshPtr mesh_);

  int num_dofs() const { return static_cast<int>(states.rows()); }
  int num_instants() const { return static_cast<int>(states.cols()); }
  Vector state(int k) const { return states.col(k); }
};

/// Constant-in-time Dirichlet data.
struct DirichletData {
  std::vector<int> dofs;
  Vector values;

  static DirichletData homogeneous(std::vector<int> dofs);
};

using LoadFn = std::function<Vector(double)>;

/// (dt*A + M) u_{k+1} = dt*b(t_{k+1}) + M u_k with the left-hand matrix
/// factored once.
Trajectory implicit_euler_run(const SparseMatrix& mass, const SparseMatrix& stiffness, const LoadFn& load,
                              const DirichletData& dirichlet, const Vector& u0, const TimeGrid& grid,
                              MeshPtr mesh = nullptr);

/// (M + v^2 dt^2 A) u_{k+1} = dt^2 b(t_{k+1}) + 2 M u_k - M u_{k-1}.
/// u1 defaults to u0 (start from rest).
Trajectory central_difference_run(const SparseMatrix& mass, const SparseMatrix& stiffness, double wave_speed,
                                  const LoadFn& load, const DirichletData& dirichlet, const Vector& u0,
                                  const std::optional<Vector>& u1, const TimeGrid& grid,
                                  MeshPtr mesh = nullptr);

/// Header `t,dof_0,...,dof_{n-1}`, one row per instant, 17 significant digits.
std::string trajectory_to_csv(const Trajectory& traj);
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
/// Reads a trajectory CSV; the time grid is recovered from the first two rows.
Trajectory read_trajectory_csv(const std::string& path, MeshPtr mesh = nullptr);

}  // namespace dforge
