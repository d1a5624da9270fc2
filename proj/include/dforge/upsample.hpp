#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "dforge/multifidelity.hpp"

namespace dforge {

/// How alpha*|d| enters the Gaussian prior.
enum class PriorSpread { StdDev, Variance };

struct UpsampleConfig {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  PriorSpread spread = PriorSpread::StdDev;

  void validate() const;
};

using Rng = std::mt19937_64;

/// Generator for one (seed, epoch, instant) substream. Outputs do not depend
/// on the order in which substreams are drawn.
Rng substream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t instant);

Vector linear_interpolant(const Vector& dk, const Vector& dk1, double tk, double tk1, double t);

/// d*_i = d_i + N(0, s_i) with s_i = alpha |d_i| (standard deviation) or
/// s_i = sqrt(alpha |d_i|) under PriorSpread::Variance. Zero components stay
/// exactly zero.
Vector sample_prior(const Vector& mean, double alpha, Rng& rng, PriorSpread spread = PriorSpread::StdDev);

/// Artificial states at every upsampling instant, column j for indices[j].
struct UpsampledEpoch {
  std::vector<int> indices;
  Matrix states;
};

UpsampledEpoch build_upsampled_epoch(const TimeGrid& grid, const std::vector<int>& samples, const Matrix& snapshots,
                                     const std::vector<int>& upsample_indices, const UpsampleConfig& cfg,
                                     std::uint64_t epoch);
UpsampledEpoch build_upsampled_epoch(const DiscrepancyDataset& dataset, const UpsampleConfig& cfg,
                                     std::uint64_t epoch);

}  // namespace dforge
