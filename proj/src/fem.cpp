#include "dforge/fem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dforge/error.hpp"

namespace dforge {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

SparseMatrix finalize(int n, const Triplets& triplets) {
  SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.prune([](int, int, double v) { return v != 0.0; });
  m.makeCompressed();
  return m;
}

double checked_coefficient(const CoefficientFn& coeff, const TriMesh& mesh, int t) {
  if (!coeff) return 1.0;
  const Point c = mesh.centroid(t);
  const double value = coeff(c);
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw InvalidCoefficient("coefficient " + std::to_string(value) + " at centroid of triangle " +
                             std::to_string(t) + " is not strictly positive");
  }
  return value;
}

// Gradients of the three barycentric functions (constant per triangle).
std::array<std::array<double, 2>, 3> p1_gradients(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangle(t);
  const Point& a = mesh.node(tri[0]);
  const Point& b = mesh.node(tri[1]);
  const Point& c = mesh.node(tri[2]);
  const double two_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  return {{{(b.y - c.y) / two_area, (c.x - b.x) / two_area},
           {(c.y - a.y) / two_area, (a.x - c.x) / two_area},
           {(a.y - b.y) / two_area, (b.x - a.x) / two_area}}};
}

}  // namespace

SparseMatrix assemble_mass(const TriMesh& mesh, const CoefficientFn& coeff) {
  Triplets triplets;
  triplets.reserve(static_cast<std::size_t>(9) * mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double scale = checked_coefficient(coeff, mesh, t) * mesh.triangle_area(t) / 12.0;
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) triplets.emplace_back(tri[i], tri[j], scale * (i == j ? 2.0 : 1.0));
  }
  return finalize(mesh.num_nodes(), triplets);
}

SparseMatrix assemble_mass(const TriMesh& mesh) { return assemble_mass(mesh, CoefficientFn{}); }

SparseMatrix assemble_stiffness(const TriMesh& mesh, const CoefficientFn& coeff, const Metric& metric) {
  if (!(metric.gxx > 0.0) || !(metric.gyy > 0.0)) throw InvalidCoefficient("metric must be positive");
  Triplets triplets;
  triplets.reserve(static_cast<std::size_t>(9) * mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double scale = checked_coefficient(coeff, mesh, t) * mesh.triangle_area(t);
    const auto grad = p1_gradients(mesh, t);
    const auto& tri = mesh.triangle(t);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double v = metric.gxx * grad[i][0] * grad[j][0] + metric.gyy * grad[i][1] * grad[j][1];
        triplets.emplace_back(tri[i], tri[j], scale * v);
      }
    }
  }
  return finalize(mesh.num_nodes(), triplets);
}

Vector assemble_load(const TriMesh& mesh, const SourceFn& source, double t) {
  Vector b = Vector::Zero(mesh.num_nodes());
  if (!source) return b;
  for (int e = 0; e < mesh.num_triangles(); ++e) {
    const double value = source(mesh.centroid(e), t);
    if (value == 0.0) continue;
    const double share = value * mesh.triangle_area(e) / 3.0;
    for (int v : mesh.triangle(e)) b[v] += share;
  }
  return b;
}

Vector assemble_point_load(const TriMesh& mesh, const Point& p, double value) {
  Vector b = Vector::Zero(mesh.num_nodes());
  const auto loc = mesh.locate(p);
  const auto& tri = mesh.triangle(loc.triangle);
  for (int i = 0; i < 3; ++i) b[tri[i]] += value * loc.bary[i];
  return b;
}

DofPartition::DofPartition(int num_dofs, std::vector<int> constrained)
    : num_dofs_(num_dofs), constrained_(std::move(constrained)), reduced_(num_dofs, 0) {
  std::sort(constrained_.begin(), constrained_.end());
  constrained_.erase(std::unique(constrained_.begin(), constrained_.end()), constrained_.end());
  for (int d : constrained_) {
    if (d < 0 || d >= num_dofs)
      throw IndexError("constrained DOF " + std::to_string(d) + " out of range [0," +
                       std::to_string(num_dofs) + ")");
    reduced_[d] = -1;
  }
  for (int d = 0; d < num_dofs; ++d) {
    if (reduced_[d] < 0) continue;
    reduced_[d] = static_cast<int>(free_.size());
    free_.push_back(d);
  }
}

Vector DofPartition::restrict_free(const Vector& full) const {
  Vector out(free_.size());
  for (std::size_t i = 0; i < free_.size(); ++i) out[i] = full[free_[i]];
  return out;
}

Vector DofPartition::expand(const Vector& free_values, const Vector& constrained_values) const {
  if (free_values.size() != static_cast<Eigen::Index>(free_.size()) ||
      constrained_values.size() != static_cast<Eigen::Index>(constrained_.size()))
    throw DimensionError("partition expand: size mismatch");
  Vector full(num_dofs_);
  for (std::size_t i = 0; i < free_.size(); ++i) full[free_[i]] = free_values[i];
  for (std::size_t i = 0; i < constrained_.size(); ++i) full[constrained_[i]] = constrained_values[i];
  return full;
}

DirichletLift::DirichletLift(const SparseMatrix& system, DofPartition partition)
    : partition_(std::move(partition)) {
  if (system.rows() != partition_.num_dofs() || system.cols() != partition_.num_dofs())
    throw DimensionError("Dirichlet lift: matrix size does not match partition");
  std::vector<int> bpos(partition_.num_dofs(), -1);
  for (std::size_t i = 0; i < partition_.constrained().size(); ++i) bpos[partition_.constrained()[i]] = static_cast<int>(i);
  Triplets ii;
  Triplets ib;
  for (int col = 0; col < system.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(system, col); it; ++it) {
      const int r = partition_.reduced_index(static_cast<int>(it.row()));
      if (r < 0) continue;
      const int c = partition_.reduced_index(static_cast<int>(it.col()));
      if (c >= 0) {
        ii.emplace_back(r, c, it.value());
      } else {
        ib.emplace_back(r, bpos[it.col()], it.value());
      }
    }
  }
  const auto nf = static_cast<Eigen::Index>(partition_.free().size());
  const auto nb = static_cast<Eigen::Index>(partition_.constrained().size());
  k_ii_.resize(nf, nf);
  k_ii_.setFromTriplets(ii.begin(), ii.end());
  k_ib_.resize(nf, nb);
  k_ib_.setFromTriplets(ib.begin(), ib.end());
}

Vector DirichletLift::reduce_rhs(const Vector& full_rhs, const Vector& values) const {
  if (full_rhs.size() != partition_.num_dofs())
    throw DimensionError("Dirichlet lift: rhs size mismatch");
  if (values.size() != k_ib_.cols()) throw DimensionError("Dirichlet lift: boundary value count mismatch");
  Vector r = partition_.restrict_free(full_rhs);
  if (values.size() > 0) r -= k_ib_ * values;
  return r;
}

ReducedSystem apply_dirichlet_lift(const SparseMatrix& system, const Vector& rhs,
                                   const std::vector<int>& boundary_dofs, const Vector& boundary_values) {
  if (static_cast<Eigen::Index>(boundary_dofs.size()) != boundary_values.size())
    throw DimensionError("boundary DOF and value counts differ");
  for (int d : boundary_dofs) {
    if (d < 0 || d >= system.rows())
      throw IndexError("boundary DOF " + std::to_string(d) + " out of range");
  }
  // Values follow the sorted, de-duplicated order used by DofPartition.
  DofPartition partition(static_cast<int>(system.rows()), boundary_dofs);
  Vector sorted_values(partition.constrained().size());
  for (std::size_t i = 0; i < partition.constrained().size(); ++i) {
    const int dof = partition.constrained()[i];
    const auto it = std::find(boundary_dofs.begin(), boundary_dofs.end(), dof);
    sorted_values[i] = boundary_values[it - boundary_dofs.begin()];
  }
  DirichletLift lift(system, partition);
  return {lift.reduced_matrix(), lift.reduce_rhs(rhs, sorted_values), partition.free()};
}

SpdSolver::SpdSolver(const SparseMatrix& matrix)
    : size_(static_cast<int>(matrix.rows())), ldlt_(std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>()) {
  if (matrix.rows() != matrix.cols()) throw DimensionError("SPD solver needs a square matrix");
  if (size_ == 0) return;
  ldlt_->compute(matrix);
  if (ldlt_->info() != Eigen::Success) throw SolverError("sparse LDL^T factorization failed", 0);
  if ((ldlt_->vectorD().array() <= 0.0).any())
    throw SolverError("matrix is not positive definite", 0);
}

Vector SpdSolver::solve(const Vector& rhs) const {
  if (rhs.size() != size_) throw DimensionError("SPD solver: rhs size mismatch");
  if (size_ == 0) return Vector(0);
  return ldlt_->solve(rhs);
}

Matrix SpdSolver::solve(const Matrix& rhs) const {
  if (rhs.rows() != size_) throw DimensionError("SPD solver: rhs size mismatch");
  if (size_ == 0) return Matrix(0, rhs.cols());
  return ldlt_->solve(rhs);
}

double MassNorm::squared(const Vector& e) const {
  if (e.size() != mass_.rows())
    throw DimensionError("mass norm: vector of length " + std::to_string(e.size()) + " for " +
                         std::to_string(mass_.rows()) + " DOF");
  return std::max(0.0, e.dot(mass_ * e));
}

double MassNorm::operator()(const Vector& e) const { return std::sqrt(squared(e)); }

double l2_norm(const TriMesh& mesh, const Vector& e) {
  if (e.size() != mesh.num_nodes())
    throw DimensionError("l2_norm: vector of length " + std::to_string(e.size()) + " for " +
                         std::to_string(mesh.num_nodes()) + " nodes");
  return MassNorm(mesh)(e);
}

FeField::FeField(MeshPtr mesh_, Vector coeffs_) : mesh(std::move(mesh_)), coeffs(std::move(coeffs_)) {
  if (!mesh) throw ValidationError("field without mesh");
  if (coeffs.size() != mesh->num_nodes())
    throw DimensionError("field has " + std::to_string(coeffs.size()) + " coefficients for " +
                         std::to_string(mesh->num_nodes()) + " nodes");
}

double eval_field(const FeField& field, const Point& p) {
  const auto loc = field.mesh->locate(p);
  const auto& tri = field.mesh->triangle(loc.triangle);
  return loc.bary[0] * field.coeffs[tri[0]] + loc.bary[1] * field.coeffs[tri[1]] +
         loc.bary[2] * field.coeffs[tri[2]];
}

Vector interpolate(const TriMesh& mesh, const CoefficientFn& fn) {
  Vector v(mesh.num_nodes());
  for (int i = 0; i < mesh.num_nodes(); ++i) v[i] = fn(mesh.node(i));
  return v;
}

}  // namespace dforge
