#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "anomap/errors.hpp"
#include "anomap/imageops.hpp"
#include "anomap/parallel.hpp"
#include "anomap/volume.hpp"

namespace anomap {

// Anomaly-map computation. Three scores are provided:
//   l1        per-voxel absolute intensity difference
//   ssim:<s>  one minus the windowed structural similarity at spread s
//   ssim-ens  one minus a softmax-weighted average of SSIM maps across a
//             spread set, weights inversely related to similarity so the
//             most dissimilar scale dominates at each location
//
// SSIM local statistics come from Gaussian-weighted windows computed per
// transverse slice; maps are restacked into volumes. Higher score = more
// anomalous for every method.

using AnomalyMap = Volume3D;

/// Stabilizers for the SSIM ratios: C1 = (k1*L)^2, C2 = (k2*L)^2.
struct SsimConstants {
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0; // intensity span L; inputs live in [0, L]

  double c1() const { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const { return (k2 * dynamic_range) * (k2 * dynamic_range); }

  void validate() const {
    if (!(std::isfinite(k1) && k1 > 0.0) || !(std::isfinite(k2) && k2 > 0.0))
      throw validation_error("SsimConstants: k1 and k2 must be > 0");
    if (!(std::isfinite(dynamic_range) && dynamic_range > 0.0))
      throw validation_error("SsimConstants: dynamic_range must be > 0");
  }
};

/// Strictly increasing positive spreads defining the ensemble scales.
class SigmaSet {
public:
  explicit SigmaSet(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
    if (sigmas_.empty()) throw validation_error("SigmaSet: empty");
    double prev = 0.0;
    for (double s : sigmas_) {
      if (!std::isfinite(s) || s <= prev)
        throw validation_error(
            "SigmaSet: values must be positive and strictly increasing");
      prev = s;
    }
  }

  const std::vector<double>& values() const { return sigmas_; }
  std::size_t size() const { return sigmas_.size(); }

  /// Default scale range 0.3, 0.5, ..., 1.5, 1.7.
  static SigmaSet standard() {
    return SigmaSet({0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7});
  }

private:
  std::vector<double> sigmas_;
};

/// How the ensemble weights vary: independently at every voxel, or one
/// scalar weight per slice derived from the slice-mean SSIM.
enum class WeightMode { per_voxel, per_slice_scalar };

namespace detail {

inline constexpr double kRangeTolerance = 1e-4;

inline void check_intensity_range(const std::vector<float>& data, double range,
                                  const char* what) {
  for (float v : data) {
    // NaN fails both comparisons.
    if (!(v >= -kRangeTolerance && v <= range + kRangeTolerance))
      throw validation_error(std::string(what) +
                             ": intensity outside [0, " +
                             std::to_string(range) + "] (got " +
                             std::to_string(v) + "); normalize inputs first");
  }
}

} // namespace detail

/// Per-voxel absolute residual |x - rec|; the intensity-only baseline.
inline AnomalyMap l1_map(const Volume3D& x, const Volume3D& rec,
                         double dynamic_range = 1.0) {
  require_same_dims(x, rec, "l1_map");
  detail::check_intensity_range(x.data(), dynamic_range, "l1_map");
  detail::check_intensity_range(rec.data(), dynamic_range, "l1_map");
  AnomalyMap out(x.nx(), x.ny(), x.nz(), x.spacing());
  for (std::size_t i = 0; i < x.size(); ++i)
    out.data()[i] = std::fabs(x.data()[i] - rec.data()[i]);
  return out;
}

namespace detail {

/// SSIM of two planes already converted to double, through a shared
/// Gaussian window. Buffers are scratch planes of nx*ny doubles.
struct SsimPlaneScratch {
  std::vector<double> xs, ys, prod, mu_x, mu_y, m2, tmp;

  void resize(std::size_t n) {
    xs.resize(n);
    ys.resize(n);
    prod.resize(n);
    mu_x.resize(n);
    mu_y.resize(n);
    m2.resize(n);
    tmp.resize(n);
  }
};

inline void ssim_plane(const float* x, const float* y, float* out,
                       std::int64_t nx, std::int64_t ny,
                       const GaussianKernel1D& k, const SsimConstants& c,
                       SsimPlaneScratch& s) {
  const std::size_t n = std::size_t(nx) * std::size_t(ny);
  s.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.xs[i] = x[i];
    s.ys[i] = y[i];
  }

  gaussian_filter_plane(s.xs.data(), s.mu_x.data(), s.tmp.data(), nx, ny, k);
  gaussian_filter_plane(s.ys.data(), s.mu_y.data(), s.tmp.data(), nx, ny, k);

  const double c1 = c.c1(), c2 = c.c2();

  // Second moments, one field at a time to keep scratch small:
  // var_x, then var_y, then covariance; fold into the SSIM ratio.
  for (std::size_t i = 0; i < n; ++i) s.prod[i] = s.xs[i] * s.xs[i];
  gaussian_filter_plane(s.prod.data(), s.m2.data(), s.tmp.data(), nx, ny, k);
  std::vector<double>& var_x = s.prod; // reuse
  for (std::size_t i = 0; i < n; ++i)
    var_x[i] = s.m2[i] - s.mu_x[i] * s.mu_x[i];

  std::vector<double> var_y(n);
  for (std::size_t i = 0; i < n; ++i) s.tmp[i] = s.ys[i] * s.ys[i];
  { // tmp holds y*y; m2 gets E[y^2]; reuse a local scratch for the pass
    std::vector<double> pass(n);
    gaussian_filter_plane(s.tmp.data(), s.m2.data(), pass.data(), nx, ny, k);
  }
  for (std::size_t i = 0; i < n; ++i)
    var_y[i] = s.m2[i] - s.mu_y[i] * s.mu_y[i];

  std::vector<double> xy(n);
  for (std::size_t i = 0; i < n; ++i) xy[i] = s.xs[i] * s.ys[i];
  gaussian_filter_plane(xy.data(), s.m2.data(), s.tmp.data(), nx, ny, k);

  for (std::size_t i = 0; i < n; ++i) {
    const double cov = s.m2[i] - s.mu_x[i] * s.mu_y[i];
    const double num =
        (2.0 * s.mu_x[i] * s.mu_y[i] + c1) * (2.0 * cov + c2);
    const double den =
        (s.mu_x[i] * s.mu_x[i] + s.mu_y[i] * s.mu_y[i] + c1) *
        (var_x[i] + var_y[i] + c2);
    out[i] = static_cast<float>(num / den);
  }
}

} // namespace detail

/// Per-pixel SSIM map of two slices with Gaussian-windowed local
/// statistics at the given spread. Output values lie in [-1, 1] up to
/// floating-point slack; 1 means locally identical.
inline Image2D ssim_map_2d(const Image2D& x, const Image2D& y, double sigma,
                           const SsimConstants& c = {}) {
  if (x.nx != y.nx || x.ny != y.ny)
    throw validation_error("ssim_map_2d: dimension mismatch");
  if (x.nx == 0 || x.ny == 0) throw validation_error("ssim_map_2d: empty image");
  c.validate();
  detail::check_intensity_range(x.data, c.dynamic_range, "ssim_map_2d");
  detail::check_intensity_range(y.data, c.dynamic_range, "ssim_map_2d");
  const GaussianKernel1D k = gaussian_kernel(sigma);
  Image2D out(x.nx, x.ny);
  detail::SsimPlaneScratch scratch;
  detail::ssim_plane(x.data.data(), y.data.data(), out.data.data(), x.nx,
                     x.ny, k, c, scratch);
  return out;
}

/// SSIM computed slice by slice over the transverse planes and restacked.
inline Volume3D ssim_maps_volume(const Volume3D& x, const Volume3D& rec,
                                 double sigma, const SsimConstants& c = {}) {
  require_same_dims(x, rec, "ssim_maps_volume");
  c.validate();
  detail::check_intensity_range(x.data(), c.dynamic_range, "ssim_maps_volume");
  detail::check_intensity_range(rec.data(), c.dynamic_range,
                                "ssim_maps_volume");
  const GaussianKernel1D k = gaussian_kernel(sigma);
  Volume3D out(x.nx(), x.ny(), x.nz(), x.spacing());
  const std::size_t plane = std::size_t(x.nx()) * x.ny();
  parallel_for(x.nz(), [&](std::int64_t z) {
    detail::SsimPlaneScratch scratch;
    detail::ssim_plane(x.data().data() + plane * std::size_t(z),
                       rec.data().data() + plane * std::size_t(z),
                       out.data().data() + plane * std::size_t(z), x.nx(),
                       x.ny(), k, c, scratch);
  });
  return out;
}

namespace detail {

inline void check_stack(std::span<const Volume3D> maps, const char* what) {
  if (maps.empty()) throw validation_error(std::string(what) + ": empty scale set");
  for (const Volume3D& m : maps)
    require_same_dims(maps.front(), m, what);
}

} // namespace detail

/// Softmax weights over the negated per-scale SSIM values: at each voxel
/// (or slice, in scalar mode) the scales with smaller similarity receive
/// strictly larger weight, and the weights sum to 1.
inline std::vector<Volume3D> ssim_ens_weights(
    std::span<const Volume3D> ssim_maps, WeightMode mode = WeightMode::per_voxel) {
  detail::check_stack(ssim_maps, "ssim_ens_weights");
  const std::size_t ns = ssim_maps.size();
  const Volume3D& first = ssim_maps.front();
  std::vector<Volume3D> weights(
      ns, Volume3D(first.nx(), first.ny(), first.nz(), first.spacing()));

  const std::size_t plane = std::size_t(first.nx()) * first.ny();
  std::vector<double> e(ns);

  if (mode == WeightMode::per_voxel) {
    for (std::size_t i = 0; i < first.size(); ++i) {
      double m = -ssim_maps[0].data()[i];
      for (std::size_t s = 1; s < ns; ++s)
        m = std::max(m, double(-ssim_maps[s].data()[i]));
      double denom = 0.0;
      for (std::size_t s = 0; s < ns; ++s) {
        e[s] = std::exp(-double(ssim_maps[s].data()[i]) - m);
        denom += e[s];
      }
      for (std::size_t s = 0; s < ns; ++s)
        weights[s].data()[i] = static_cast<float>(e[s] / denom);
    }
    return weights;
  }

  // Scalar mode: one weight per (slice, scale) from the slice-mean SSIM.
  for (std::uint32_t z = 0; z < first.nz(); ++z) {
    std::vector<double> mean(ns, 0.0);
    for (std::size_t s = 0; s < ns; ++s) {
      const float* p = ssim_maps[s].data().data() + plane * z;
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      mean[s] = acc / double(plane);
    }
    double m = -mean[0];
    for (std::size_t s = 1; s < ns; ++s) m = std::max(m, -mean[s]);
    double denom = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      e[s] = std::exp(-mean[s] - m);
      denom += e[s];
    }
    for (std::size_t s = 0; s < ns; ++s) {
      const auto w = static_cast<float>(e[s] / denom);
      float* p = weights[s].data().data() + plane * z;
      for (std::size_t i = 0; i < plane; ++i) p[i] = w;
    }
  }
  return weights;
}

/// Combines precomputed per-scale SSIM volumes into the ensemble anomaly
/// map: 1 minus the weighted average of the per-scale similarities.
/// Output lies in [0, 2].
inline AnomalyMap ssim_ens_combine(std::span<const Volume3D> ssim_maps,
                                   WeightMode mode = WeightMode::per_voxel) {
  detail::check_stack(ssim_maps, "ssim_ens_combine");
  const std::size_t ns = ssim_maps.size();
  const Volume3D& first = ssim_maps.front();
  AnomalyMap out(first.nx(), first.ny(), first.nz(), first.spacing());

  if (mode == WeightMode::per_voxel) {
    std::vector<double> e(ns);
    for (std::size_t i = 0; i < first.size(); ++i) {
      double m = -ssim_maps[0].data()[i];
      for (std::size_t s = 1; s < ns; ++s)
        m = std::max(m, double(-ssim_maps[s].data()[i]));
      double denom = 0.0;
      for (std::size_t s = 0; s < ns; ++s) {
        e[s] = std::exp(-double(ssim_maps[s].data()[i]) - m);
        denom += e[s];
      }
      double avg = 0.0;
      for (std::size_t s = 0; s < ns; ++s)
        avg += (e[s] / denom) * double(ssim_maps[s].data()[i]);
      out.data()[i] = static_cast<float>(1.0 - avg);
    }
    return out;
  }

  const std::vector<Volume3D> weights = ssim_ens_weights(ssim_maps, mode);
  for (std::size_t i = 0; i < first.size(); ++i) {
    double avg = 0.0;
    for (std::size_t s = 0; s < ns; ++s)
      avg += double(weights[s].data()[i]) * double(ssim_maps[s].data()[i]);
    out.data()[i] = static_cast<float>(1.0 - avg);
  }
  return out;
}

/// The adaptive multi-scale anomaly score: SSIM at every spread in the
/// set, combined with inverse-similarity softmax weights.
inline AnomalyMap ssim_ens_map(const Volume3D& x, const Volume3D& rec,
                               const SigmaSet& sigmas,
                               const SsimConstants& c = {},
                               WeightMode mode = WeightMode::per_voxel) {
  std::vector<Volume3D> maps;
  maps.reserve(sigmas.size());
  for (double s : sigmas.values())
    maps.push_back(ssim_maps_volume(x, rec, s, c));
  return ssim_ens_combine(maps, mode);
}

/// Zeroes scores outside the mask; scores outside the brain carry no
/// meaning.
inline AnomalyMap masked(const AnomalyMap& map, const Mask3D& brain) {
  require_same_dims(brain, map, "masked");
  AnomalyMap out = map;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (!brain.data()[i]) out.data()[i] = 0.f;
  return out;
}

/// Scoring method selector, parsed from "l1", "ssim:<sigma>" or "ssim-ens".
struct ScoreMethod {
  enum class Kind { l1, ssim_single, ssim_ensemble };
  Kind kind = Kind::ssim_ensemble;
  double sigma = 0.0; // ssim_single only

  std::string name() const {
    switch (kind) {
      case Kind::l1: return "l1";
      case Kind::ssim_single: return "ssim";
      case Kind::ssim_ensemble: return "ssim-ens";
    }
    return "?";
  }
};

inline ScoreMethod parse_method(const std::string& text) {
  if (text == "l1") return {ScoreMethod::Kind::l1, 0.0};
  if (text == "ssim-ens") return {ScoreMethod::Kind::ssim_ensemble, 0.0};
  if (text.rfind("ssim:", 0) == 0) {
    const std::string arg = text.substr(5);
    char* end = nullptr;
    const double sigma = std::strtod(arg.c_str(), &end);
    if (arg.empty() || end != arg.c_str() + arg.size() ||
        !std::isfinite(sigma) || sigma <= 0.0)
      throw validation_error("invalid sigma in method '" + text + "'");
    return {ScoreMethod::Kind::ssim_single, sigma};
  }
  throw validation_error("unknown method '" + text +
                         "' (expected l1, ssim:<sigma> or ssim-ens)");
}

/// One entry point for all three scores. A single-sigma request is the
/// singleton ensemble, which reduces to 1 - SSIM at that spread.
inline AnomalyMap compute_anomaly_map(const Volume3D& x, const Volume3D& rec,
                                      const ScoreMethod& method,
                                      const SigmaSet& sigmas,
                                      const SsimConstants& c = {},
                                      WeightMode mode = WeightMode::per_voxel) {
  switch (method.kind) {
    case ScoreMethod::Kind::l1:
      return l1_map(x, rec, c.dynamic_range);
    case ScoreMethod::Kind::ssim_single:
      return ssim_ens_map(x, rec, SigmaSet({method.sigma}), c, mode);
    case ScoreMethod::Kind::ssim_ensemble:
      return ssim_ens_map(x, rec, sigmas, c, mode);
  }
  throw validation_error("compute_anomaly_map: bad method");
}

} // namespace anomap
