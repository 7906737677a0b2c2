#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "anomap/errors.hpp"
#include "anomap/parallel.hpp"
#include "anomap/volume.hpp"

namespace anomap {

// Low-level kernels shared by the scoring and post-processing stages.
// Linear filters use reflect padding (edge sample included): index -1 maps
// to 0, index n to n-1. Erosion is the exception; it treats everything
// outside the grid as unset.

/// Mirrors an index into [0, n).
inline std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i - 1;
    if (i >= n) i = 2 * n - 1 - i;
  }
  return i;
}

/// 1D Gaussian window. Length from the spread: int(3.5*sigma + 0.5)*2 + 1,
/// truncating toward zero. Taps are normalized to sum 1 and symmetric.
struct GaussianKernel1D {
  double sigma = 0.0;
  int radius = 0;
  std::vector<double> taps;

  int length() const { return static_cast<int>(taps.size()); }
};

inline GaussianKernel1D gaussian_kernel(double sigma) {
  if (!std::isfinite(sigma) || sigma <= 0.0)
    throw validation_error("gaussian_kernel: sigma must be finite and > 0");
  GaussianKernel1D k;
  k.sigma = sigma;
  k.radius = static_cast<int>(3.5 * sigma + 0.5);
  k.taps.resize(2 * std::size_t(k.radius) + 1);
  double sum = 0.0;
  for (int i = -k.radius; i <= k.radius; ++i) {
    const double w = std::exp(-(double(i) * i) / (2.0 * sigma * sigma));
    k.taps[std::size_t(i + k.radius)] = w;
    sum += w;
  }
  for (double& w : k.taps) w /= sum;
  return k;
}

namespace detail {

// Separable pass along x for one row, then reused along y by striding.
// src/dst are nx*ny planes of doubles, x-fastest.
inline void filter_rows(const double* src, double* dst, std::int64_t nx,
                        std::int64_t ny, const GaussianKernel1D& k) {
  const std::int64_t r = k.radius;
  for (std::int64_t y = 0; y < ny; ++y) {
    const double* in = src + y * nx;
    double* out = dst + y * nx;
    for (std::int64_t x = 0; x < nx; ++x) {
      double acc = 0.0;
      if (x >= r && x + r < nx) {
        for (std::int64_t j = -r; j <= r; ++j)
          acc += k.taps[std::size_t(j + r)] * in[x + j];
      } else {
        for (std::int64_t j = -r; j <= r; ++j)
          acc += k.taps[std::size_t(j + r)] * in[reflect_index(x + j, nx)];
      }
      out[x] = acc;
    }
  }
}

inline void filter_cols(const double* src, double* dst, std::int64_t nx,
                        std::int64_t ny, const GaussianKernel1D& k) {
  const std::int64_t r = k.radius;
  for (std::int64_t y = 0; y < ny; ++y) {
    double* out = dst + y * nx;
    if (y >= r && y + r < ny) {
      for (std::int64_t x = 0; x < nx; ++x) {
        double acc = 0.0;
        for (std::int64_t j = -r; j <= r; ++j)
          acc += k.taps[std::size_t(j + r)] * src[(y + j) * nx + x];
        out[x] = acc;
      }
    } else {
      for (std::int64_t x = 0; x < nx; ++x) {
        double acc = 0.0;
        for (std::int64_t j = -r; j <= r; ++j)
          acc += k.taps[std::size_t(j + r)] *
                 src[reflect_index(y + j, ny) * nx + x];
        out[x] = acc;
      }
    }
  }
}

/// Rows then columns over a double plane; scratch must hold nx*ny.
inline void gaussian_filter_plane(const double* src, double* dst,
                                  double* scratch, std::int64_t nx,
                                  std::int64_t ny, const GaussianKernel1D& k) {
  filter_rows(src, scratch, nx, ny, k);
  filter_cols(scratch, dst, nx, ny, k);
}

} // namespace detail

/// Separable Gaussian blur of a 2D image, reflect padding, dims preserved.
inline Image2D gaussian_filter_2d(const Image2D& img,
                                  const GaussianKernel1D& k) {
  if (img.nx == 0 || img.ny == 0)
    throw validation_error("gaussian_filter_2d: empty image");
  const std::size_t n = img.data.size();
  std::vector<double> src(n), dst(n), scratch(n);
  for (std::size_t i = 0; i < n; ++i) src[i] = img.data[i];
  detail::gaussian_filter_plane(src.data(), dst.data(), scratch.data(),
                                img.nx, img.ny, k);
  Image2D out(img.nx, img.ny);
  for (std::size_t i = 0; i < n; ++i) out.data[i] = static_cast<float>(dst[i]);
  return out;
}

/// Rank filter: each voxel becomes the median of its k*k*k neighborhood,
/// reflect padding. k must be odd and >= 1.
inline Volume3D median_filter_3d(const Volume3D& v, int k) {
  if (k < 1 || k % 2 == 0)
    throw validation_error("median_filter_3d: window edge must be odd and >= 1");
  if (k == 1) return v;

  const std::int64_t nx = v.nx(), ny = v.ny(), nz = v.nz();
  const std::int64_t r = k / 2;

  // Per-axis lookup of reflected neighbor indices: idx[c * k + (d + r)].
  const auto axis_table = [&](std::int64_t n) {
    std::vector<std::int64_t> t(std::size_t(n) * k);
    for (std::int64_t c = 0; c < n; ++c)
      for (std::int64_t d = -r; d <= r; ++d)
        t[std::size_t(c * k + d + r)] = reflect_index(c + d, n);
    return t;
  };
  const auto tx = axis_table(nx), ty = axis_table(ny), tz = axis_table(nz);

  Volume3D out(v.nx(), v.ny(), v.nz(), v.spacing());
  const float* src = v.data().data();
  float* dst = out.data().data();
  const std::size_t window = std::size_t(k) * k * k;

  parallel_for(nz, [&](std::int64_t z) {
    std::vector<float> buf(window);
    for (std::int64_t y = 0; y < ny; ++y) {
      for (std::int64_t x = 0; x < nx; ++x) {
        std::size_t m = 0;
        for (std::int64_t dz = 0; dz < k; ++dz) {
          const std::int64_t zz = tz[std::size_t(z * k + dz)] * ny;
          for (std::int64_t dy = 0; dy < k; ++dy) {
            const std::int64_t row = (zz + ty[std::size_t(y * k + dy)]) * nx;
            for (std::int64_t dx = 0; dx < k; ++dx)
              buf[m++] = src[row + tx[std::size_t(x * k + dx)]];
          }
        }
        auto mid = buf.begin() + static_cast<std::ptrdiff_t>(window / 2);
        std::nth_element(buf.begin(), mid, buf.end());
        dst[x + nx * (y + ny * z)] = *mid;
      }
    }
  });
  return out;
}

/// Morphological erosion with the full 3x3x3 structuring element. A voxel
/// survives a pass iff its whole 27-neighborhood is set; outside the grid
/// counts as unset. iterations = 0 returns the input.
inline Mask3D erode_mask(const Mask3D& m, int iterations) {
  if (iterations < 0)
    throw validation_error("erode_mask: iterations must be >= 0");
  Mask3D cur = m;
  const std::int64_t nx = m.nx(), ny = m.ny(), nz = m.nz();
  for (int it = 0; it < iterations; ++it) {
    Mask3D next(m.nx(), m.ny(), m.nz());
    const std::uint8_t* src = cur.data().data();
    std::uint8_t* dst = next.data().data();
    for (std::int64_t z = 1; z + 1 < nz; ++z) {
      for (std::int64_t y = 1; y + 1 < ny; ++y) {
        for (std::int64_t x = 1; x + 1 < nx; ++x) {
          bool all = true;
          for (std::int64_t dz = -1; dz <= 1 && all; ++dz)
            for (std::int64_t dy = -1; dy <= 1 && all; ++dy)
              for (std::int64_t dx = -1; dx <= 1; ++dx)
                if (!src[(x + dx) + nx * ((y + dy) + ny * (z + dz))]) {
                  all = false;
                  break;
                }
          dst[x + nx * (y + ny * z)] = all ? 1 : 0;
        }
      }
    }
    cur = std::move(next);
  }
  return cur;
}

/// Result of 26-connectivity labeling. Component ids start at 1 in
/// raster-scan order of each component's first voxel; 0 is background.
struct ConnectedComponents {
  std::uint32_t nx = 0, ny = 0, nz = 0;
  std::vector<std::uint32_t> labels;  // per voxel
  std::vector<std::size_t> sizes;     // sizes[i] = voxels in component i+1

  std::size_t count() const { return sizes.size(); }
};

inline ConnectedComponents connected_components(const Mask3D& m) {
  const std::int64_t nx = m.nx(), ny = m.ny(), nz = m.nz();
  ConnectedComponents cc;
  cc.nx = m.nx();
  cc.ny = m.ny();
  cc.nz = m.nz();
  cc.labels.assign(m.size(), 0);

  const std::uint8_t* src = m.data().data();
  std::vector<std::size_t> queue;

  for (std::int64_t z = 0; z < nz; ++z) {
    for (std::int64_t y = 0; y < ny; ++y) {
      for (std::int64_t x = 0; x < nx; ++x) {
        const std::size_t seed = std::size_t(x + nx * (y + ny * z));
        if (!src[seed] || cc.labels[seed] != 0) continue;

        const auto label = static_cast<std::uint32_t>(cc.sizes.size() + 1);
        std::size_t count = 0;
        queue.clear();
        queue.push_back(seed);
        cc.labels[seed] = label;
        while (!queue.empty()) {
          const std::size_t p = queue.back();
          queue.pop_back();
          ++count;
          const std::int64_t pz = std::int64_t(p) / (nx * ny);
          const std::int64_t py = (std::int64_t(p) / nx) % ny;
          const std::int64_t px = std::int64_t(p) % nx;
          for (std::int64_t dz = -1; dz <= 1; ++dz) {
            const std::int64_t qz = pz + dz;
            if (qz < 0 || qz >= nz) continue;
            for (std::int64_t dy = -1; dy <= 1; ++dy) {
              const std::int64_t qy = py + dy;
              if (qy < 0 || qy >= ny) continue;
              for (std::int64_t dx = -1; dx <= 1; ++dx) {
                const std::int64_t qx = px + dx;
                if (qx < 0 || qx >= nx) continue;
                const std::size_t q = std::size_t(qx + nx * (qy + ny * qz));
                if (src[q] && cc.labels[q] == 0) {
                  cc.labels[q] = label;
                  queue.push_back(q);
                }
              }
            }
          }
        }
        cc.sizes.push_back(count);
      }
    }
  }
  return cc;
}

/// Clears every component smaller than min_size voxels. 0 and 1 are no-ops.
inline Mask3D remove_small_components(const Mask3D& m, std::size_t min_size) {
  if (min_size <= 1) return m;
  const ConnectedComponents cc = connected_components(m);
  Mask3D out(m.nx(), m.ny(), m.nz());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const std::uint32_t id = cc.labels[i];
    out.data()[i] = (id != 0 && cc.sizes[id - 1] >= min_size) ? 1 : 0;
  }
  return out;
}

} // namespace anomap
