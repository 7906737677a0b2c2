#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "anomap/errors.hpp"
#include "anomap/imageops.hpp"
#include "anomap/scoring.hpp"
#include "anomap/volume.hpp"

namespace anomap {

// Turns anomaly maps into binary segmentations: median smoothing, brain
// masking with an eroded mask, validation-driven threshold selection, and
// minimum-size component filtering after binarization.

struct PostprocessConfig {
  int median_kernel = 5;
  int erosion_iterations = 1;
  std::size_t min_component_size = 8;
  // Median runs before mask-zeroing by default; flip to mask first.
  bool median_before_masking = true;

  void validate() const {
    if (median_kernel < 1 || median_kernel % 2 == 0)
      throw validation_error("PostprocessConfig: median_kernel must be odd >= 1");
    if (erosion_iterations < 0)
      throw validation_error("PostprocessConfig: erosion_iterations must be >= 0");
  }
};

struct ThresholdSearch {
  int num_candidates = 100;

  void validate() const {
    if (num_candidates < 2)
      throw validation_error("ThresholdSearch: num_candidates must be >= 2");
  }
};

/// Median-filters the map and zeroes scores outside the eroded brain.
/// Component filtering happens later, after binarization.
inline AnomalyMap postprocess_map(const AnomalyMap& map, const Mask3D& brain,
                                  const PostprocessConfig& cfg) {
  cfg.validate();
  require_same_dims(brain, map, "postprocess_map");
  const Mask3D region = erode_mask(brain, cfg.erosion_iterations);
  if (cfg.median_before_masking)
    return masked(median_filter_3d(map, cfg.median_kernel), region);
  return median_filter_3d(masked(map, region), cfg.median_kernel);
}

/// Threshold strictly: a voxel is predicted iff score > t. Components
/// smaller than cfg.min_component_size are then dropped.
inline Mask3D binarize(const AnomalyMap& map, double threshold,
                       const PostprocessConfig& cfg) {
  if (!std::isfinite(threshold))
    throw validation_error("binarize: threshold must be finite");
  Mask3D pred(map.nx(), map.ny(), map.nz());
  for (std::size_t i = 0; i < map.size(); ++i)
    pred.data()[i] = (double(map.data()[i]) > threshold) ? 1 : 0;
  return remove_small_components(pred, cfg.min_component_size);
}

struct ThresholdSelection {
  double threshold = 0.0;
  double dice = 0.0; // pooled over the validation volumes at the threshold
};

namespace detail {

struct OverlapCounts {
  std::size_t inter = 0, pred = 0, gt = 0;

  void add(const Mask3D& p, const Mask3D& g) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const bool a = p.data()[i] != 0, b = g.data()[i] != 0;
      inter += (a && b);
      pred += a;
      gt += b;
    }
  }

  double dice() const {
    if (pred + gt == 0)
      throw validation_error("dice: undefined for two empty masks");
    return 2.0 * double(inter) / double(pred + gt);
  }
};

/// Candidate grid: evenly spaced order statistics (quantiles) of the
/// pooled score sample, duplicates removed. Ascending.
inline std::vector<double> quantile_candidates(std::vector<float>& pooled,
                                               int num_candidates) {
  std::sort(pooled.begin(), pooled.end());
  const std::size_t m = pooled.size();
  std::vector<double> out;
  out.reserve(std::size_t(num_candidates));
  for (int j = 0; j < num_candidates; ++j) {
    const std::size_t idx =
        std::size_t((std::uint64_t(j) * (m - 1)) / std::uint64_t(num_candidates - 1));
    const double t = pooled[idx];
    if (out.empty() || t != out.back()) out.push_back(t);
  }
  return out;
}

} // namespace detail

/// Picks the candidate threshold maximizing pooled Dice over the
/// validation set. Candidates are quantiles of the in-mask (eroded brain)
/// scores pooled across all validation maps; ties break toward the larger
/// threshold so flat optima yield the most conservative segmentation.
inline ThresholdSelection select_threshold(std::span<const AnomalyMap> val_maps,
                                           std::span<const Mask3D> val_gts,
                                           std::span<const Mask3D> val_brains,
                                           const ThresholdSearch& search,
                                           const PostprocessConfig& cfg) {
  search.validate();
  cfg.validate();
  if (val_maps.empty())
    throw validation_error("select_threshold: empty validation set");
  if (val_maps.size() != val_gts.size() || val_maps.size() != val_brains.size())
    throw validation_error("select_threshold: list length mismatch");

  std::size_t gt_total = 0;
  std::vector<float> pooled;
  for (std::size_t v = 0; v < val_maps.size(); ++v) {
    require_same_dims(val_gts[v], val_maps[v], "select_threshold");
    require_same_dims(val_brains[v], val_maps[v], "select_threshold");
    gt_total += val_gts[v].count_set();
    const Mask3D region = erode_mask(val_brains[v], cfg.erosion_iterations);
    for (std::size_t i = 0; i < region.size(); ++i)
      if (region.data()[i]) pooled.push_back(val_maps[v].data()[i]);
  }
  if (gt_total == 0)
    throw validation_error(
        "select_threshold: no ground-truth voxel set in the validation set");
  if (pooled.empty())
    throw validation_error("select_threshold: no in-mask scores to search");

  const std::vector<double> candidates =
      detail::quantile_candidates(pooled, search.num_candidates);

  std::vector<double> dice_at(candidates.size());
  for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
    detail::OverlapCounts counts;
    for (std::size_t v = 0; v < val_maps.size(); ++v)
      counts.add(binarize(val_maps[v], candidates[ci], cfg), val_gts[v]);
    // gt_total > 0, so pooled dice is always defined here
    dice_at[ci] = counts.dice();
  }

  ThresholdSelection best{candidates[0], dice_at[0]};
  for (std::size_t ci = 1; ci < candidates.size(); ++ci) {
    if (dice_at[ci] >= best.dice) {
      best.threshold = candidates[ci];
      best.dice = dice_at[ci];
    }
  }
  return best;
}

} // namespace anomap
