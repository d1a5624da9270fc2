#pragma once

#include <string>

#include "dforge/multifidelity.hpp"
#include "dforge/rnn.hpp"

namespace dforge {

/// Trained network on the lofi basis. `scales.u_c` divides network inputs,
/// `scales.d_c` converts network outputs back to discrepancy coefficients.
struct HybridModel {
  RnnModel rnn;
  MeshPtr mesh;
  ScaleSet scales;
};

/// Network scales for a dataset: t_c = final time, r_xc = r_yc = mesh
/// diameter, u_c = max |x_lofi|, d_c = max |delta| over the snapshots
/// (1 when the respective data vanish).
ScaleSet network_scales(const DiscrepancyDataset& dataset);

/// Scaled inputs and targets plus the mass matrix of the scaled mesh.
TrainingData make_training_data(const DiscrepancyDataset& dataset, const ScaleSet& scales);

/// Window-by-window network evaluation over the whole lofi trajectory.
Trajectory predict_discrepancy(const HybridModel& model, const Trajectory& lofi);

/// x_lofi + delta at every instant.
Trajectory bias_correct(const Trajectory& lofi, const Trajectory& discrepancy);

/// sum_k ||pred_k - ref_k||_M / sum_k ||ref_k||_M over k = 0..N_T-1
/// (left-endpoint Riemann sums; dt cancels).
double relative_l2_error_discrepancy(const Trajectory& predicted, const Trajectory& reference, const MassNorm& norm);
double relative_l2_error_discrepancy(const Trajectory& predicted, const Trajectory& reference, const TriMesh& mesh);

/// Same ratio against the projected hifi trajectory.
double relative_l2_error_state(const Trajectory& candidate, const Trajectory& hifi, const Projector& projector);
double relative_l2_error_projected(const Trajectory& candidate, const Trajectory& projected_hifi,
                                   const MassNorm& norm);

struct MetricsReport {
  double delta_l2_discrepancy = 0.0;
  double delta_l2_lofi = 0.0;
  double delta_l2_corrected = 0.0;
  double validation_bound_value = 0.0;
};

std::string metrics_to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const std::string& text);

}  // namespace dforge
