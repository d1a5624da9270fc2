#include "dforge/timestepping.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dforge/error.hpp"

namespace dforge {

namespace {

constexpr double kResidualTol = 1e-8;

DirichletLift make_lift(const SparseMatrix& system, const DirichletData& dirichlet, Vector& sorted_values) {
  if (static_cast<Eigen::Index>(dirichlet.dofs.size()) != dirichlet.values.size())
    throw DimensionError("Dirichlet DOF and value counts differ");
  DofPartition partition(static_cast<int>(system.rows()), dirichlet.dofs);
  sorted_values.resize(partition.constrained().size());
  std::vector<int> slot(system.rows(), -1);
  for (std::size_t i = 0; i < dirichlet.dofs.size(); ++i) slot[dirichlet.dofs[i]] = static_cast<int>(i);
  for (std::size_t i = 0; i < partition.constrained().size(); ++i)
    sorted_values[i] = dirichlet.values[slot[partition.constrained()[i]]];
  return DirichletLift(system, std::move(partition));
}

void check_square(const SparseMatrix& m, Eigen::Index n, const char* name) {
  if (m.rows() != n || m.cols() != n)
    throw DimensionError(std::string(name) + " has size " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()) + ", expected " + std::to_string(n));
}

Vector load_at(const LoadFn& load, double t, Eigen::Index n) {
  if (!load) return Vector::Zero(n);
  Vector b = load(t);
  if (b.size() != n) throw DimensionError("load vector has wrong length");
  return b;
}

// Solves the reduced system and verifies the interior residual.
Vector solve_step(const DirichletLift& lift, const SpdSolver& solver, const Vector& full_rhs,
                  const Vector& values, double scale, int step) {
  const Vector rhs = lift.reduce_rhs(full_rhs, values);
  const Vector free = solver.solve(rhs);
  if (!free.allFinite()) throw SolverError("non-finite solution", step);
  const double residual = (lift.reduced_matrix() * free - rhs).norm();
  const double bound = kResidualTol * std::max(scale, rhs.norm());
  if (residual > bound)
    throw SolverError("update residual " + std::to_string(residual) + " exceeds " + std::to_string(bound), step);
  return lift.expand(free, values);
}

}  // namespace

TimeGrid::TimeGrid(double t0_, double dt_, int steps_) : t0(t0_), dt(dt_), steps(steps_) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (steps < 0) throw ConfigError("step count must be nonnegative");
}

bool TimeGrid::same_as(const TimeGrid& other, double rel_tol) const {
  const double scale = std::max({std::abs(dt), std::abs(other.dt), std::abs(t0), std::abs(other.t0)});
  return steps == other.steps && std::abs(dt - other.dt) <= rel_tol * scale &&
         std::abs(t0 - other.t0) <= rel_tol * scale;
}

Trajectory::Trajectory(TimeGrid grid_, Matrix states_, MeshPtr mesh_)
    : grid(grid_), states(std::move(states_)), mesh(std::move(mesh_)) {
  if (states.cols() != grid.num_instants())
    throw DimensionError("trajectory has " + std::to_string(states.cols()) + " states for " +
                         std::to_string(grid.num_instants()) + " instants");
  if (mesh && states.rows() != mesh->num_nodes())
    throw DimensionError("trajectory state length does not match mesh node count");
}

DirichletData DirichletData::homogeneous(std::vector<int> dofs) {
  DirichletData d;
  d.values = Vector::Zero(static_cast<Eigen::Index>(dofs.size()));
  d.dofs = std::move(dofs);
  return d;
}

Trajectory implicit_euler_run(const SparseMatrix& mass, const SparseMatrix& stiffness, const LoadFn& load,
                              const DirichletData& dirichlet, const Vector& u0, const TimeGrid& grid,
                              MeshPtr mesh) {
  const Eigen::Index n = u0.size();
  check_square(mass, n, "mass matrix");
  check_square(stiffness, n, "stiffness matrix");

  const SparseMatrix system = grid.dt * stiffness + mass;
  Vector values;
  const DirichletLift lift = make_lift(system, dirichlet, values);
  const SpdSolver solver(lift.reduced_matrix());

  Matrix states(n, grid.num_instants());
  states.col(0) = u0;
  for (int k = 0; k < grid.steps; ++k) {
    const Vector mu = mass * states.col(k);
    const Vector rhs = grid.dt * load_at(load, grid.time(k + 1), n) + mu;
    states.col(k + 1) = solve_step(lift, solver, rhs, values, lift.partition().restrict_free(mu).norm(), k + 1);
  }
  return Trajectory(grid, std::move(states), std::move(mesh));
}

Trajectory central_difference_run(const SparseMatrix& mass, const SparseMatrix& stiffness, double wave_speed,
                                  const LoadFn& load, const DirichletData& dirichlet, const Vector& u0,
                                  const std::optional<Vector>& u1, const TimeGrid& grid, MeshPtr mesh) {
  const Eigen::Index n = u0.size();
  check_square(mass, n, "mass matrix");
  check_square(stiffness, n, "stiffness matrix");
  if (u1 && u1->size() != n) throw DimensionError("second starting state has wrong length");

  const double dt2 = grid.dt * grid.dt;
  const SparseMatrix system = mass + (wave_speed * wave_speed * dt2) * stiffness;
  Vector values;
  const DirichletLift lift = make_lift(system, dirichlet, values);
  const SpdSolver solver(lift.reduced_matrix());

  Matrix states(n, grid.num_instants());
  states.col(0) = u0;
  if (grid.steps >= 1) states.col(1) = u1 ? *u1 : u0;
  for (int k = 1; k < grid.steps; ++k) {
    const Vector mu = mass * (2.0 * states.col(k) - states.col(k - 1));
    const Vector rhs = dt2 * load_at(load, grid.time(k + 1), n) + mu;
    states.col(k + 1) = solve_step(lift, solver, rhs, values, lift.partition().restrict_free(mu).norm(), k + 1);
  }
  return Trajectory(grid, std::move(states), std::move(mesh));
}

std::string trajectory_to_csv(const Trajectory& traj) {
  std::string out = "t";
  for (int i = 0; i < traj.num_dofs(); ++i) out += ",dof_" + std::to_string(i);
  out += '\n';
  char buf[40];
  for (int k = 0; k < traj.num_instants(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", traj.grid.time(k));
    out += buf;
    for (int i = 0; i < traj.num_dofs(); ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", traj.states(i, k));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << trajectory_to_csv(traj);
}

Trajectory read_trajectory_csv(const std::string& path, MeshPtr mesh) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("t", 0) != 0) throw ParseError("missing trajectory header", 1);
  const auto cols = static_cast<int>(std::count(line.begin(), line.end(), ','));
  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError("bad number '" + cell + "'", lineno);
      }
    }
    if (static_cast<int>(row.size()) != cols + 1) throw ParseError("wrong column count", lineno);
    times.push_back(row[0]);
    rows.emplace_back(row.begin() + 1, row.end());
  }
  if (times.empty()) throw ParseError("trajectory has no rows", lineno);
  const double dt = times.size() > 1 ? (times.back() - times.front()) / static_cast<double>(times.size() - 1) : 1.0;
  TimeGrid grid(times.front(), dt, static_cast<int>(times.size()) - 1);
  Matrix states(cols, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (int i = 0; i < cols; ++i) states(i, static_cast<Eigen::Index>(k)) = rows[k][i];
  return Trajectory(grid, std::move(states), std::move(mesh));
}

}  // namespace dforge
