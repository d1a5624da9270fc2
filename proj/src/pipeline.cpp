#include "dforge/pipeline.hpp"

namespace dforge {

CaseData prepare_case(const CaseConfig& cfg) {
  CaseData d;
  d.cfg = cfg;
  d.pair = build_pair(cfg);
  d.lofi = simulate(d.pair.lofi);
  d.hifi = simulate(d.pair.hifi);
  d.projector = std::make_shared<const Projector>(d.pair.lofi.mesh, d.pair.hifi.mesh);
  d.dataset = build_discrepancy_dataset(*d.projector, d.lofi, d.hifi, d.pair.samples);
  d.reference = dense_discrepancy(*d.projector, d.lofi, d.hifi);
  return d;
}

HybridTraining train_hybrid(const DiscrepancyDataset& dataset, const TrainConfig& train_cfg, const UpsampleConfig& up,
                            const Trajectory* reference) {
  HybridTraining out;
  out.model.mesh = dataset.mesh;
  out.model.scales = network_scales(dataset);
  const TrainingData data = make_training_data(dataset, out.model.scales);
  TrainMonitor monitor;
  if (reference) {
    auto norm = std::make_shared<MassNorm>(*dataset.mesh);
    const double d_c = out.model.scales.d_c;
    monitor = [norm, reference, d_c](const Matrix& outputs) {
      const Trajectory predicted(reference->grid, outputs * d_c, reference->mesh);
      return relative_l2_error_discrepancy(predicted, *reference, *norm);
    };
  }
  out.result = train(data, train_cfg, up, monitor);
  out.model.rnn = out.result.model;
  return out;
}

MetricsReport evaluate_hybrid(const HybridModel& model, const Trajectory& lofi, const Trajectory& reference,
                              double validation_bound) {
  const MassNorm norm(*model.mesh);
  const Trajectory predicted = predict_discrepancy(model, lofi);
  const Trajectory projected = bias_correct(lofi, reference);
  const Trajectory corrected = bias_correct(lofi, predicted);
  MetricsReport m;
  m.delta_l2_discrepancy = relative_l2_error_discrepancy(predicted, reference, norm);
  m.delta_l2_lofi = relative_l2_error_projected(lofi, projected, norm);
  m.delta_l2_corrected = relative_l2_error_projected(corrected, projected, norm);
  m.validation_bound_value = validation_check(reference, norm, validation_bound).value;
  return m;
}

}  // namespace dforge
