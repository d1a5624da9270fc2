#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <vector>

#include "dforge/mesh.hpp"

namespace dforge {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

using CoefficientFn = std::function<double(const Point&)>;
using SourceFn = std::function<double(const Point&, double)>;

/// Diagonal metric applied to the gradient term, (g_xx, g_yy). The identity
/// metric gives the ordinary Laplacian; anisotropic scalings of the domain
/// enter through it.
struct Metric {
  double gxx = 1.0;
  double gyy = 1.0;
};

/// P1 mass matrix. The coefficient is sampled at each triangle centroid and
/// the exact element integral of the barycentric products is used.
SparseMatrix assemble_mass(const TriMesh& mesh, const CoefficientFn& coeff);
SparseMatrix assemble_mass(const TriMesh& mesh);

SparseMatrix assemble_stiffness(const TriMesh& mesh, const CoefficientFn& coeff,
                                const Metric& metric = {});

/// One-point centroid quadrature per triangle.
Vector assemble_load(const TriMesh& mesh, const SourceFn& source, double t);

/// Load of a point source: value times each nodal basis function at `p`.
Vector assemble_point_load(const TriMesh& mesh, const Point& p, double value);

/// Split of the DOF set into free (interior) and constrained (Dirichlet)
/// indices. Reduced systems list the free DOF first in ascending order,
/// which is the interior-first ordering of the full coefficient vector.
class DofPartition {
 public:
  DofPartition(int num_dofs, std::vector<int> constrained);

  int num_dofs() const { return num_dofs_; }
  const std::vector<int>& free() const { return free_; }
  const std::vector<int>& constrained() const { return constrained_; }
  /// Position in the reduced system, -1 for constrained DOF.
  int reduced_index(int dof) const { return reduced_[dof]; }

  Vector restrict_free(const Vector& full) const;
  Vector expand(const Vector& free_values, const Vector& constrained_values) const;

 private:
  int num_dofs_;
  std::vector<int> free_;
  std::vector<int> constrained_;
  std::vector<int> reduced_;
};

/// Dirichlet lift of a system matrix: keeps K_II and moves K_IB g to the
/// right-hand side.
class DirichletLift {
 public:
  DirichletLift(const SparseMatrix& system, DofPartition partition);

  const SparseMatrix& reduced_matrix() const { return k_ii_; }
  const DofPartition& partition() const { return partition_; }
  /// rhs_I - K_IB * values.
  Vector reduce_rhs(const Vector& full_rhs, const Vector& values) const;
  Vector expand(const Vector& free_solution, const Vector& values) const {
    return partition_.expand(free_solution, values);
  }

 private:
  DofPartition partition_;
  SparseMatrix k_ii_;
  SparseMatrix k_ib_;
};

struct ReducedSystem {
  SparseMatrix matrix;
  Vector rhs;
  std::vector<int> free_dofs;
};

ReducedSystem apply_dirichlet_lift(const SparseMatrix& system, const Vector& rhs,
                                   const std::vector<int>& boundary_dofs,
                                   const Vector& boundary_values);

/// Direct sparse LDL^T factorization for symmetric positive-definite systems.
class SpdSolver {
 public:
  explicit SpdSolver(const SparseMatrix& matrix);
  Vector solve(const Vector& rhs) const;
  Matrix solve(const Matrix& rhs) const;
  int size() const { return size_; }

 private:
  int size_;
  std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> ldlt_;
};

/// sqrt(e^T M e) with the unit-coefficient mass matrix of the mesh.
class MassNorm {
 public:
  explicit MassNorm(const TriMesh& mesh) : mass_(assemble_mass(mesh)) {}
  explicit MassNorm(SparseMatrix mass) : mass_(std::move(mass)) {}

  double operator()(const Vector& e) const;
  double squared(const Vector& e) const;
  const SparseMatrix& mass() const { return mass_; }

 private:
  SparseMatrix mass_;
};

double l2_norm(const TriMesh& mesh, const Vector& e);

struct FeField {
  FeField(MeshPtr mesh, Vector coeffs);

  MeshPtr mesh;
  Vector coeffs;
};

double eval_field(const FeField& field, const Point& p);
/// Nodal interpolant of a point function.
Vector interpolate(const TriMesh& mesh, const CoefficientFn& fn);

}  // namespace dforge
