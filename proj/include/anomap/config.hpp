#pragma once

#include "anomap/pipeline.hpp"
#include "anomap/scoring.hpp"

namespace anomap {

/// Every tunable of the scoring and evaluation pipeline in one place.
struct ScoreConfig {
  SigmaSet sigmas = SigmaSet::standard();
  SsimConstants constants;
  WeightMode weight_mode = WeightMode::per_voxel;
  PostprocessConfig postprocess;
  ThresholdSearch search;

  void validate() const {
    constants.validate();
    postprocess.validate();
    search.validate();
  }
};

} // namespace anomap
