#include "dforge/upsample.hpp"

#include <algorithm>
#include <cmath>

#include "dforge/error.hpp"

namespace dforge {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void UpsampleConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and nonnegative");
}

Rng substream(std::uint64_t seed, std::uint64_t epoch, std::uint64_t instant) {
  std::uint64_t state = seed;
  std::uint64_t key = splitmix64(state);
  state = key ^ epoch;
  key = splitmix64(state);
  state = key ^ instant;
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)), static_cast<std::uint32_t>(splitmix64(state))};
  return Rng(seq);
}

Vector linear_interpolant(const Vector& dk, const Vector& dk1, double tk, double tk1, double t) {
  if (!(tk1 > tk)) throw RangeError("interpolation interval is empty or reversed");
  if (t < tk || t > tk1) throw RangeError("interpolation time lies outside [t_k, t_k+1]");
  if (dk.size() != dk1.size()) throw DimensionError("anchor states differ in length");
  if (t == tk) return dk;
  if (t == tk1) return dk1;
  const double h = tk1 - tk;
  return (dk * tk1 - dk1 * tk) / h + t * (dk1 - dk) / h;
}

Vector sample_prior(const Vector& mean, double alpha, Rng& rng, PriorSpread spread) {
  if (!(alpha >= 0.0)) throw ConfigError("alpha must be nonnegative");
  Vector out = mean;
  if (alpha == 0.0) return out;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double m = mean[i];
    if (m == 0.0) continue;
    const double s = spread == PriorSpread::StdDev ? alpha * std::abs(m) : std::sqrt(alpha * std::abs(m));
    out[i] = m + s * normal(rng);
  }
  return out;
}

UpsampledEpoch build_upsampled_epoch(const TimeGrid& grid, const std::vector<int>& samples, const Matrix& snapshots,
                                     const std::vector<int>& upsample_indices, const UpsampleConfig& cfg,
                                     std::uint64_t epoch) {
  cfg.validate();
  UpsampledEpoch out;
  out.indices = upsample_indices;
  out.states.resize(snapshots.rows(), static_cast<Eigen::Index>(upsample_indices.size()));
  if (upsample_indices.empty()) return out;
  if (samples.size() < 2) throw CoverageError("upsampling needs at least two ground-truth snapshots");
  if (static_cast<Eigen::Index>(samples.size()) != snapshots.cols())
    throw DimensionError("snapshot count does not match the sample set");
  for (std::size_t j = 0; j < upsample_indices.size(); ++j) {
    const int k = upsample_indices[j];
    if (k <= samples.front() || k >= samples.back())
      throw CoverageError("upsampling instant " + std::to_string(k) + " lies outside the sampled range [" +
                          std::to_string(samples.front()) + ", " + std::to_string(samples.back()) + "]");
    const auto hi = static_cast<std::size_t>(std::upper_bound(samples.begin(), samples.end(), k) - samples.begin());
    const std::size_t lo = hi - 1;
    const Vector mean =
        linear_interpolant(snapshots.col(static_cast<Eigen::Index>(lo)), snapshots.col(static_cast<Eigen::Index>(hi)),
                           grid.time(samples[lo]), grid.time(samples[hi]), grid.time(k));
    Rng rng = substream(cfg.seed, epoch, static_cast<std::uint64_t>(k));
    out.states.col(static_cast<Eigen::Index>(j)) = sample_prior(mean, cfg.alpha, rng, cfg.spread);
  }
  return out;
}

UpsampledEpoch build_upsampled_epoch(const DiscrepancyDataset& dataset, const UpsampleConfig& cfg,
                                     std::uint64_t epoch) {
  return build_upsampled_epoch(dataset.grid(), dataset.samples, dataset.snapshots, dataset.upsample_indices, cfg,
                               epoch);
}

}  // namespace dforge
