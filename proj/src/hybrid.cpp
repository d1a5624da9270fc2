#include "dforge/hybrid.hpp"

#include <json.hpp>

#include "dforge/error.hpp"
#include "dforge/scaling.hpp"

namespace dforge {

namespace {

void check_same(const Trajectory& a, const Trajectory& b) {
  if (!a.grid.same_as(b.grid)) throw ConfigError("trajectories use different time grids");
  if (a.num_dofs() != b.num_dofs()) throw ConfigError("trajectories have different DOF counts");
}

double riemann_ratio(const Matrix& diff, const Matrix& ref, const MassNorm& norm) {
  const Eigen::Index last = std::max<Eigen::Index>(1, diff.cols() - 1);
  double num = 0.0;
  double den = 0.0;
  for (Eigen::Index k = 0; k < last; ++k) {
    num += norm(Vector(diff.col(k)));
    den += norm(Vector(ref.col(k)));
  }
  if (!(den > 0.0)) throw UndefinedMetric("reference trajectory is identically zero");
  return num / den;
}

}  // namespace

ScaleSet network_scales(const DiscrepancyDataset& dataset) {
  ScaleSet s;
  s.t_c = dataset.grid().final_time() > 0.0 ? dataset.grid().final_time() : dataset.grid().dt;
  s.r_xc = s.r_yc = dataset.mesh->diameter();
  const double umax = dataset.lofi.states.cwiseAbs().maxCoeff();
  const double dmax = dataset.snapshots.size() ? dataset.snapshots.cwiseAbs().maxCoeff() : 0.0;
  s.u_c = umax > 0.0 ? umax : 1.0;
  s.d_c = dmax > 0.0 ? dmax : 1.0;
  return s;
}

TrainingData make_training_data(const DiscrepancyDataset& dataset, const ScaleSet& scales) {
  scales.validate();
  TrainingData d;
  d.grid = TimeGrid(dataset.grid().t0 / scales.t_c, dataset.grid().dt / scales.t_c, dataset.grid().steps);
  d.inputs = dataset.lofi.states / scales.u_c;
  d.samples = dataset.samples;
  d.targets = dataset.snapshots / scales.d_c;
  d.upsample_indices = dataset.upsample_indices;
  d.mass = assemble_mass(*scale_mesh(*dataset.mesh, scales.r_xc, scales.r_yc));
  return d;
}

Trajectory predict_discrepancy(const HybridModel& model, const Trajectory& lofi) {
  if (!model.mesh) throw ModelError("hybrid model has no mesh");
  if (lofi.num_dofs() != model.mesh->num_nodes() || model.rnn.n() != model.mesh->num_nodes())
    throw ModelError("trajectory with " + std::to_string(lofi.num_dofs()) + " DOF does not match the model width " +
                     std::to_string(model.rnn.n()));
  if (lofi.mesh && lofi.mesh != model.mesh && lofi.mesh->num_triangles() != model.mesh->num_triangles())
    throw ModelError("trajectory mesh differs from the model mesh");
  const Matrix outputs = predict_sequence(model.rnn, lofi.states / model.scales.u_c);
  return Trajectory(lofi.grid, outputs * model.scales.d_c, model.mesh);
}

Trajectory bias_correct(const Trajectory& lofi, const Trajectory& discrepancy) {
  check_same(lofi, discrepancy);
  return Trajectory(lofi.grid, lofi.states + discrepancy.states, lofi.mesh);
}

double relative_l2_error_discrepancy(const Trajectory& predicted, const Trajectory& reference, const MassNorm& norm) {
  check_same(predicted, reference);
  return riemann_ratio(predicted.states - reference.states, reference.states, norm);
}

double relative_l2_error_discrepancy(const Trajectory& predicted, const Trajectory& reference, const TriMesh& mesh) {
  return relative_l2_error_discrepancy(predicted, reference, MassNorm(mesh));
}

double relative_l2_error_projected(const Trajectory& candidate, const Trajectory& projected_hifi,
                                   const MassNorm& norm) {
  check_same(candidate, projected_hifi);
  return riemann_ratio(candidate.states - projected_hifi.states, projected_hifi.states, norm);
}

double relative_l2_error_state(const Trajectory& candidate, const Trajectory& hifi, const Projector& projector) {
  const Trajectory projected = projector.project(hifi);
  return relative_l2_error_projected(candidate, projected, MassNorm(projector.lofi_mass()));
}

std::string metrics_to_json(const MetricsReport& m) {
  nlohmann::ordered_json j;
  j["delta_l2_discrepancy"] = m.delta_l2_discrepancy;
  j["delta_l2_lofi"] = m.delta_l2_lofi;
  j["delta_l2_corrected"] = m.delta_l2_corrected;
  j["validation_bound_value"] = m.validation_bound_value;
  return j.dump(2) + "\n";
}

MetricsReport metrics_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    MetricsReport m;
    m.delta_l2_discrepancy = j.at("delta_l2_discrepancy").get<double>();
    m.delta_l2_lofi = j.at("delta_l2_lofi").get<double>();
    m.delta_l2_corrected = j.at("delta_l2_corrected").get<double>();
    m.validation_bound_value = j.at("validation_bound_value").get<double>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("metrics report: ") + e.what(), 0);
  }
}

}  // namespace dforge
