#pragma once

#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "anomap/config.hpp"
#include "anomap/errors.hpp"
#include "anomap/pipeline.hpp"
#include "anomap/scoring.hpp"
#include "anomap/volume.hpp"

namespace anomap {

// Segmentation metrics and the scale-sweep harness: for every scoring
// method, select a threshold on the validation split and report pooled
// Dice on the test split.

/// 2|A intersect B| / (|A| + |B|). Undefined (error) when both are empty;
/// a silent perfect score there would corrupt sweeps.
inline double dice(const Mask3D& pred, const Mask3D& gt) {
  require_same_dims(pred, gt, "dice");
  detail::OverlapCounts counts;
  counts.add(pred, gt);
  return counts.dice();
}

/// Dice of the voxel-wise concatenation of all volumes: one number per
/// dataset rather than a mean of per-volume scores.
inline double pooled_dice(std::span<const Mask3D> preds,
                          std::span<const Mask3D> gts) {
  if (preds.empty() || preds.size() != gts.size())
    throw validation_error("pooled_dice: empty or mismatched lists");
  detail::OverlapCounts counts;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require_same_dims(preds[i], gts[i], "pooled_dice");
    counts.add(preds[i], gts[i]);
  }
  return counts.dice();
}

/// One evaluation case: an input, its reconstruction, lesion ground truth,
/// brain mask, and which split it belongs to.
struct VolumeRecord {
  std::string id;
  Volume3D input;
  Volume3D reconstruction;
  Mask3D ground_truth;
  Mask3D brain;
  bool is_validation = false;
};

/// Outcome of one scoring method over a dataset.
struct MethodResult {
  std::string method;                       // "l1", "ssim", "ssim-ens"
  double sigma = std::numeric_limits<double>::quiet_NaN(); // "ssim" rows only
  double threshold = 0.0;
  double validation_dice = 0.0;             // pooled, at the chosen threshold
  double dataset_dice = 0.0;                // pooled over the test split
  // Test volumes in dataset order. NaN when prediction and truth are both
  // empty for a volume (per-volume Dice undefined there).
  std::vector<std::pair<std::string, double>> per_volume_dice;
};

struct EvalReport {
  std::vector<MethodResult> methods;
  ScoreConfig config;
};

namespace detail {

inline void check_dataset(std::span<const VolumeRecord> volumes) {
  if (volumes.empty()) throw validation_error("evaluate: empty dataset");
  std::size_t n_val = 0, n_test = 0;
  for (const VolumeRecord& v : volumes) {
    require_same_dims(v.input, v.reconstruction, "evaluate");
    require_same_dims(v.ground_truth, v.input, "evaluate");
    require_same_dims(v.brain, v.input, "evaluate");
    (v.is_validation ? n_val : n_test) += 1;
  }
  if (n_val == 0) throw validation_error("evaluate: empty validation split");
  if (n_test == 0) throw validation_error("evaluate: empty test split");
}

/// Threshold selection on the validation maps, pooled + per-volume Dice on
/// the test maps. `maps` holds one postprocessed map per dataset volume.
inline MethodResult finish_method(std::span<const VolumeRecord> volumes,
                                  std::vector<AnomalyMap> maps,
                                  const ScoreConfig& cfg, std::string name,
                                  double sigma) {
  std::vector<AnomalyMap> val_maps;
  std::vector<Mask3D> val_gts, val_brains;
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    if (!volumes[i].is_validation) continue;
    val_maps.push_back(maps[i]);
    val_gts.push_back(volumes[i].ground_truth);
    val_brains.push_back(volumes[i].brain);
  }
  const ThresholdSelection sel =
      select_threshold(val_maps, val_gts, val_brains, cfg.search, cfg.postprocess);

  MethodResult r;
  r.method = std::move(name);
  r.sigma = sigma;
  r.threshold = sel.threshold;
  r.validation_dice = sel.dice;

  OverlapCounts pooled;
  std::size_t test_gt = 0;
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    if (volumes[i].is_validation) continue;
    const Mask3D pred = binarize(maps[i], sel.threshold, cfg.postprocess);
    OverlapCounts one;
    one.add(pred, volumes[i].ground_truth);
    pooled.inter += one.inter;
    pooled.pred += one.pred;
    pooled.gt += one.gt;
    test_gt += one.gt;
    const double d = (one.pred + one.gt == 0)
                         ? std::numeric_limits<double>::quiet_NaN()
                         : one.dice();
    r.per_volume_dice.emplace_back(volumes[i].id, d);
  }
  if (test_gt == 0)
    throw validation_error("evaluate: no ground-truth voxel set in the test split");
  r.dataset_dice = pooled.dice();
  return r;
}

} // namespace detail

/// Scores, postprocesses, selects a threshold on the validation split, and
/// evaluates the test split for a single method.
inline MethodResult evaluate_method(std::span<const VolumeRecord> volumes,
                                    const ScoreMethod& method,
                                    const ScoreConfig& cfg) {
  cfg.validate();
  detail::check_dataset(volumes);
  std::vector<AnomalyMap> maps;
  maps.reserve(volumes.size());
  for (const VolumeRecord& v : volumes)
    maps.push_back(postprocess_map(
        compute_anomaly_map(v.input, v.reconstruction, method, cfg.sigmas,
                            cfg.constants, cfg.weight_mode),
        v.brain, cfg.postprocess));
  const double sigma = method.kind == ScoreMethod::Kind::ssim_single
                           ? method.sigma
                           : std::numeric_limits<double>::quiet_NaN();
  return detail::finish_method(volumes, std::move(maps), cfg, method.name(),
                               sigma);
}

/// Full scale sweep: one result per sigma in the set, then the ensemble,
/// then the l1 baseline. Per-scale SSIM volumes are computed once per
/// dataset volume and shared between the single-scale rows and the
/// ensemble row, so the sweep is bit-identical to calling evaluate_method
/// per method, just cheaper.
inline EvalReport sigma_sweep(std::span<const VolumeRecord> volumes,
                              const ScoreConfig& cfg) {
  cfg.validate();
  detail::check_dataset(volumes);
  const std::size_t ns = cfg.sigmas.size();

  // maps_by_method[m] holds one postprocessed map per volume; methods are
  // indexed 0..ns-1 for single scales, ns for the ensemble, ns+1 for l1.
  std::vector<std::vector<AnomalyMap>> maps_by_method(ns + 2);

  for (const VolumeRecord& v : volumes) {
    std::vector<Volume3D> stack;
    stack.reserve(ns);
    for (double s : cfg.sigmas.values())
      stack.push_back(
          ssim_maps_volume(v.input, v.reconstruction, s, cfg.constants));
    for (std::size_t si = 0; si < ns; ++si) {
      const std::span<const Volume3D> one(&stack[si], 1);
      maps_by_method[si].push_back(postprocess_map(
          ssim_ens_combine(one, cfg.weight_mode), v.brain, cfg.postprocess));
    }
    maps_by_method[ns].push_back(postprocess_map(
        ssim_ens_combine(stack, cfg.weight_mode), v.brain, cfg.postprocess));
    maps_by_method[ns + 1].push_back(postprocess_map(
        l1_map(v.input, v.reconstruction, cfg.constants.dynamic_range),
        v.brain, cfg.postprocess));
  }

  EvalReport report;
  report.config = cfg;
  for (std::size_t si = 0; si < ns; ++si)
    report.methods.push_back(
        detail::finish_method(volumes, std::move(maps_by_method[si]), cfg,
                              "ssim", cfg.sigmas.values()[si]));
  report.methods.push_back(
      detail::finish_method(volumes, std::move(maps_by_method[ns]), cfg,
                            "ssim-ens", std::numeric_limits<double>::quiet_NaN()));
  report.methods.push_back(
      detail::finish_method(volumes, std::move(maps_by_method[ns + 1]), cfg,
                            "l1", std::numeric_limits<double>::quiet_NaN()));
  return report;
}

} // namespace anomap
