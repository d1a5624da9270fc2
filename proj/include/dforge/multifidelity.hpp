#pragma once

#include <string>
#include <vector>

#include "dforge/problem.hpp"

namespace dforge {

/// L2 projection from a fine P1 space onto a coarse one. The cross mass
/// P_ij = int phi_i^lofi phi_j^hifi is integrated over the hifi triangles
/// with the edge-midpoint rule, which is exact for nested meshes.
class Projector {
 public:
  Projector(MeshPtr lofi, MeshPtr hifi);

  const SparseMatrix& cross_mass() const { return cross_; }
  const SparseMatrix& lofi_mass() const { return mass_; }
  const MeshPtr& lofi_mesh() const { return lofi_; }
  const MeshPtr& hifi_mesh() const { return hifi_; }

  Vector project(const Vector& hifi_coeffs) const;
  /// Column-wise projection.
  Matrix project(const Matrix& hifi_states) const;
  Trajectory project(const Trajectory& hifi) const;

 private:
  MeshPtr lofi_;
  MeshPtr hifi_;
  SparseMatrix cross_;
  SparseMatrix mass_;
  SpdSolver solver_;
};

FeField galerkin_project(const FeField& hifi_field, const MeshPtr& lofi_mesh);

struct FidelityPair {
  ProblemSetup lofi;
  ProblemSetup hifi;
  /// Sampled instants T_hifi as indices into the lofi grid.
  std::vector<int> samples;

  void validate() const;
};

/// Ground-truth discrepancy snapshots at the sampled instants together with
/// the lofi trajectory that feeds the network.
struct DiscrepancyDataset {
  MeshPtr mesh;
  Trajectory lofi;
  std::vector<int> samples;
  /// n x |samples|; column j is the discrepancy at instant samples[j].
  Matrix snapshots;
  /// T_lofi minus T_hifi, ascending.
  std::vector<int> upsample_indices;
  std::vector<double> beta;

  int num_dofs() const { return static_cast<int>(snapshots.rows()); }
  const TimeGrid& grid() const { return lofi.grid; }
};

/// Sorted, de-duplicated sample indices checked against [0, steps].
std::vector<int> normalize_samples(std::vector<int> samples, int steps);

DiscrepancyDataset build_discrepancy_dataset(const Projector& projector, const Trajectory& lofi_traj,
                                             const Trajectory& hifi_traj, const std::vector<int>& samples);
DiscrepancyDataset build_discrepancy_dataset(const FidelityPair& pair, const Trajectory& lofi_traj,
                                             const Trajectory& hifi_traj);

/// Projected hifi minus lofi at every instant.
Trajectory dense_discrepancy(const Projector& projector, const Trajectory& lofi_traj, const Trajectory& hifi_traj);

struct ValidationResult {
  double value = 0.0;
  bool tenable = false;
};

/// (1/T) sum_{k=0}^{N_T-1} ||delta_k||^2 dt with left-endpoint sums and the
/// mass norm; tenable when value <= C.
ValidationResult validation_check(const Trajectory& discrepancy, const MassNorm& norm, double bound);
ValidationResult validation_check(const Trajectory& discrepancy, double bound);

void write_dataset(const DiscrepancyDataset& dataset, const std::string& dir);
/// Reads `lofi_trajectory.csv`, `sample_indices.csv` and
/// `delta_ground_truth.csv` from `dir`.
DiscrepancyDataset read_dataset(const std::string& dir, MeshPtr mesh);

}  // namespace dforge
