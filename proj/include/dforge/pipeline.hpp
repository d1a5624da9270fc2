#pragma once

#include <memory>

#include "dforge/cases.hpp"
#include "dforge/hybrid.hpp"

namespace dforge {

/// Simulated fidelity pair with its dataset and dense reference discrepancy.
struct CaseData {
  CaseConfig cfg;
  FidelityPair pair;
  Trajectory lofi;
  Trajectory hifi;
  std::shared_ptr<const Projector> projector;
  DiscrepancyDataset dataset;
  Trajectory reference;
};

CaseData prepare_case(const CaseConfig& cfg);

struct HybridTraining {
  HybridModel model;
  TrainResult result;
};

/// Trains on `dataset`; history rows report the error against `reference`
/// when it is given.
HybridTraining train_hybrid(const DiscrepancyDataset& dataset, const TrainConfig& train, const UpsampleConfig& up,
                            const Trajectory* reference = nullptr);

/// Metrics of a hybrid model against the dense reference discrepancy; the
/// projected hifi trajectory is lofi + reference.
MetricsReport evaluate_hybrid(const HybridModel& model, const Trajectory& lofi, const Trajectory& reference,
                              double validation_bound);

}  // namespace dforge
