#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "anomap/errors.hpp"
#include "anomap/metrics.hpp"
#include "anomap/rng.hpp"
#include "anomap/volume.hpp"

namespace anomap {

// Deterministic synthetic phantoms: an ellipsoidal "brain" with smooth
// sinusoidal anatomy, spherical lesions with known ground truth, and a
// noisy pseudo-reconstruction standing in for a generative model's
// healthy output. Every voxel is a pure function of the spec, so two
// runs (or two machines) produce bit-identical volumes.

/// One spherical lesion. Coordinates and radius are in voxel units.
/// intensity_offset 0 with texture_amplitude > 0 gives an iso-intense
/// lesion that differs from healthy tissue only in structure.
struct Lesion {
  double cx = 0, cy = 0, cz = 0;
  double radius = 1;
  double intensity_offset = 0;
  double texture_amplitude = 0;
};

struct PhantomSpec {
  std::uint32_t nx = 96, ny = 96, nz = 50;
  std::array<float, 3> spacing{1.f, 1.f, 1.f};
  std::uint64_t seed = 42;
  std::vector<Lesion> lesions;
  double background_texture_scale = 24.0; // wavelength, voxels
  double lesion_texture_scale = 4.0;      // wavelength, voxels
  double reconstruction_noise = 0.02;     // Gaussian std, intensity units

  void validate() const {
    if (nx == 0 || ny == 0 || nz == 0)
      throw validation_error("PhantomSpec: dims must be nonzero");
    if (!(background_texture_scale > 0) || !std::isfinite(background_texture_scale))
      throw validation_error("PhantomSpec: background_texture_scale must be positive");
    if (!(lesion_texture_scale > 0) || !std::isfinite(lesion_texture_scale))
      throw validation_error("PhantomSpec: lesion_texture_scale must be positive");
    if (!(reconstruction_noise >= 0) || !std::isfinite(reconstruction_noise))
      throw validation_error("PhantomSpec: reconstruction_noise must be >= 0");
    for (std::size_t i = 0; i < lesions.size(); ++i) {
      const Lesion& l = lesions[i];
      const bool finite = std::isfinite(l.cx) && std::isfinite(l.cy) &&
                          std::isfinite(l.cz) && std::isfinite(l.radius) &&
                          std::isfinite(l.intensity_offset) &&
                          std::isfinite(l.texture_amplitude);
      if (!finite || l.radius < 1 || l.texture_amplitude < 0)
        throw validation_error("PhantomSpec: lesion " + std::to_string(i) +
                               " has invalid parameters");
    }
  }
};

namespace detail {

// Stream tags; each derived generator gets its own key so adding draws
// to one stage never shifts another.
inline constexpr std::uint64_t kTagBackground = 0x62616367; // "bacg"
inline constexpr std::uint64_t kTagLesion = 0x6c65736e;     // "lesn"
inline constexpr std::uint64_t kTagNoise = 0x6e6f6973;      // "nois"
inline constexpr std::uint64_t kTagVolume = 0x766f6c75;     // "volu"

struct Ellipsoid {
  double mx, my, mz; // center
  double ax, ay, az; // semi-axes

  double phi(double x, double y, double z) const {
    const double u = (x - mx) / ax, v = (y - my) / ay, w = (z - mz) / az;
    return u * u + v * v + w * w;
  }
  bool contains(double x, double y, double z) const {
    return phi(x, y, z) <= 1.0;
  }
  double min_axis() const { return std::min(ax, std::min(ay, az)); }
};

/// Brain = ellipsoid centered in the grid, semi-axes 0.8 of the half-dims.
inline Ellipsoid brain_ellipsoid(const PhantomSpec& spec) {
  return Ellipsoid{(spec.nx - 1) / 2.0, (spec.ny - 1) / 2.0,
                   (spec.nz - 1) / 2.0, 0.8 * spec.nx / 2.0,
                   0.8 * spec.ny / 2.0, 0.8 * spec.nz / 2.0};
}

/// Sum of K seeded plane-wave sinusoids, normalized to [-1, 1].
struct WaveField {
  struct Wave {
    double fx, fy, fz; // angular frequency vector
    double phase;
    double amp;
  };
  std::vector<Wave> waves;
  double amp_sum = 0;

  /// Draws `count` waves with wavelengths around `scale` voxels.
  WaveField(std::uint64_t key, int count, double scale) {
    const rng::CounterRng r{key};
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double base = two_pi / scale;
    waves.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
      const std::uint64_t c = static_cast<std::uint64_t>(k) * 8;
      Wave w;
      w.fx = base * (2.0 * r.uniform(c + 0) - 1.0);
      w.fy = base * (2.0 * r.uniform(c + 1) - 1.0);
      w.fz = base * (2.0 * r.uniform(c + 2) - 1.0);
      w.phase = two_pi * r.uniform(c + 3);
      w.amp = 0.5 + 0.5 * r.uniform(c + 4);
      waves.push_back(w);
      amp_sum += w.amp;
    }
  }

  double at(double x, double y, double z) const {
    double g = 0;
    for (const Wave& w : waves)
      g += w.amp * rng::portable_sin(w.fx * x + w.fy * y + w.fz * z + w.phase);
    return g / amp_sum;
  }
};

/// Sphere-in-ellipsoid check, slightly conservative: a ball of radius r
/// at c fits whenever sqrt(phi(c)) + r/min_axis <= 1.
inline bool lesion_inside(const Ellipsoid& e, const Lesion& l) {
  return std::sqrt(e.phi(l.cx, l.cy, l.cz)) + l.radius / e.min_axis() <= 1.0;
}

inline bool in_sphere(const Lesion& l, double x, double y, double z) {
  const double dx = x - l.cx, dy = y - l.cy, dz = z - l.cz;
  return dx * dx + dy * dy + dz * dz <= l.radius * l.radius;
}

} // namespace detail

struct HealthyPhantom {
  Volume3D volume;
  Mask3D brain;
};

/// Ellipsoidal brain filled with smooth seeded texture. Two sinusoid
/// bands (the configured wavelength plus a weaker one at a third of it)
/// keep local variance nonzero everywhere, as in real anatomy; a single
/// band leaves window-sized flat patches at its crests. Intensities
/// inside the brain lie in [0.1, 0.9]; outside is exactly 0.
inline HealthyPhantom generate_healthy(const PhantomSpec& spec) {
  spec.validate();
  const detail::Ellipsoid brain = detail::brain_ellipsoid(spec);
  const std::uint64_t key = rng::stream_key(spec.seed, detail::kTagBackground);
  const detail::WaveField coarse(key, 4, spec.background_texture_scale);
  const detail::WaveField fine(rng::splitmix64(key), 4,
                               spec.background_texture_scale / 3.0);
  HealthyPhantom out{Volume3D(spec.nx, spec.ny, spec.nz, spec.spacing),
                     Mask3D(spec.nx, spec.ny, spec.nz)};
  for (std::uint32_t z = 0; z < spec.nz; ++z)
    for (std::uint32_t y = 0; y < spec.ny; ++y)
      for (std::uint32_t x = 0; x < spec.nx; ++x) {
        if (!brain.contains(x, y, z)) continue;
        const std::size_t i = out.volume.index(x, y, z);
        out.brain.data()[i] = 1;
        const double g =
            (coarse.at(x, y, z) + 0.5 * fine.at(x, y, z)) / 1.5;
        auto v = static_cast<float>(0.5 + 0.4 * g);
        v = std::min(std::max(v, 0.1f), 0.9f);
        out.volume.data()[i] = v;
      }
  return out;
}

struct UnhealthyPhantom {
  Volume3D volume;
  Mask3D ground_truth;
};

/// Adds the spec's lesions to a healthy volume. Ground truth is the
/// exact union of sphere memberships (center distance <= radius);
/// voxels outside every lesion are left bit-identical to the input.
inline UnhealthyPhantom inject_lesions(const Volume3D& healthy,
                                       const PhantomSpec& spec) {
  spec.validate();
  if (healthy.nx() != spec.nx || healthy.ny() != spec.ny || healthy.nz() != spec.nz)
    throw validation_error("inject_lesions: volume does not match spec dims");
  const detail::Ellipsoid brain = detail::brain_ellipsoid(spec);
  for (std::size_t i = 0; i < spec.lesions.size(); ++i)
    if (!detail::lesion_inside(brain, spec.lesions[i]))
      throw validation_error("inject_lesions: lesion " + std::to_string(i) +
                             " extends outside the brain");

  const std::uint64_t base = rng::stream_key(spec.seed, detail::kTagLesion);
  std::vector<detail::WaveField> textures;
  textures.reserve(spec.lesions.size());
  for (std::size_t i = 0; i < spec.lesions.size(); ++i)
    textures.emplace_back(rng::stream_key(base, i), 4, spec.lesion_texture_scale);

  UnhealthyPhantom out{healthy, Mask3D(spec.nx, spec.ny, spec.nz)};
  for (std::uint32_t z = 0; z < spec.nz; ++z)
    for (std::uint32_t y = 0; y < spec.ny; ++y)
      for (std::uint32_t x = 0; x < spec.nx; ++x) {
        double delta = 0;
        bool hit = false;
        for (std::size_t li = 0; li < spec.lesions.size(); ++li) {
          if (!detail::in_sphere(spec.lesions[li], x, y, z)) continue;
          hit = true;
          delta += spec.lesions[li].intensity_offset +
                   spec.lesions[li].texture_amplitude * textures[li].at(x, y, z);
        }
        if (!hit) continue;
        const std::size_t i = out.volume.index(x, y, z);
        out.ground_truth.data()[i] = 1;
        const double v = double(out.volume.data()[i]) + delta;
        out.volume.data()[i] = static_cast<float>(std::min(std::max(v, 0.0), 1.0));
      }
  return out;
}

/// Healthy volume plus seeded Gaussian noise of std `reconstruction_noise`
/// inside the brain, clamped to [0, 1]. Noise 0 returns the input
/// unchanged. Stands in for a generative model's healthy reconstruction.
inline Volume3D pseudo_reconstruct(const Volume3D& healthy,
                                   const PhantomSpec& spec) {
  spec.validate();
  if (healthy.nx() != spec.nx || healthy.ny() != spec.ny || healthy.nz() != spec.nz)
    throw validation_error("pseudo_reconstruct: volume does not match spec dims");
  Volume3D out = healthy;
  if (spec.reconstruction_noise == 0) return out;

  const detail::Ellipsoid brain = detail::brain_ellipsoid(spec);
  const rng::CounterRng noise{rng::stream_key(spec.seed, detail::kTagNoise)};
  for (std::uint32_t z = 0; z < spec.nz; ++z)
    for (std::uint32_t y = 0; y < spec.ny; ++y)
      for (std::uint32_t x = 0; x < spec.nx; ++x) {
        if (!brain.contains(x, y, z)) continue;
        const std::size_t i = out.index(x, y, z);
        const double v = double(out.data()[i]) +
                         spec.reconstruction_noise * noise.normal(i);
        out.data()[i] = static_cast<float>(std::min(std::max(v, 0.0), 1.0));
      }
  return out;
}

/// Spec for volume `index` of a family: same geometry and lesion layout,
/// new seed, so anatomy texture and noise differ between volumes.
inline PhantomSpec family_member(const PhantomSpec& spec, std::size_t index) {
  PhantomSpec sub = spec;
  sub.seed = rng::CounterRng{rng::stream_key(spec.seed, detail::kTagVolume)}
                 .bits(index);
  return sub;
}

/// Builds a ready-to-evaluate dataset of `num_volumes` family members;
/// the first `num_val` are the validation split. Inputs carry the
/// lesions, reconstructions are noisy healthy volumes.
inline std::vector<VolumeRecord> generate_dataset(const PhantomSpec& spec,
                                                  std::size_t num_volumes,
                                                  std::size_t num_val) {
  spec.validate();
  if (num_volumes == 0)
    throw validation_error("generate_dataset: num_volumes must be >= 1");
  if (num_val > num_volumes)
    throw validation_error("generate_dataset: num_val exceeds num_volumes");
  std::vector<VolumeRecord> records;
  records.reserve(num_volumes);
  for (std::size_t v = 0; v < num_volumes; ++v) {
    const PhantomSpec sub = family_member(spec, v);
    HealthyPhantom healthy = generate_healthy(sub);
    UnhealthyPhantom unhealthy = inject_lesions(healthy.volume, sub);
    VolumeRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "vol%03zu", v);
    rec.id = id;
    rec.reconstruction = pseudo_reconstruct(healthy.volume, sub);
    rec.input = std::move(unhealthy.volume);
    rec.ground_truth = std::move(unhealthy.ground_truth);
    rec.brain = std::move(healthy.brain);
    rec.is_validation = v < num_val;
    records.push_back(std::move(rec));
  }
  return records;
}

} // namespace anomap
