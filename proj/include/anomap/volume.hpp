#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "anomap/errors.hpp"

namespace anomap {

// Dense scalar fields over a 3D voxel grid. Sample (x, y, z) lives at
// linear index x + nx * (y + ny * z) -- x-fastest; every kernel in this
// library assumes that ordering. Volumes are immutable by convention once
// built (operations return new objects), so sharing across threads is safe.

namespace detail {

inline void check_dims_nonzero(std::uint32_t nx, std::uint32_t ny,
                               std::uint32_t nz, const char* what) {
  if (nx == 0 || ny == 0 || nz == 0)
    throw validation_error(std::string(what) + ": zero dimension " +
                           std::to_string(nx) + "x" + std::to_string(ny) +
                           "x" + std::to_string(nz));
}

} // namespace detail

/// Scalar volume: dims, mm-per-voxel spacing, 32-bit float samples.
class Volume3D {
public:
  Volume3D() = default;

  Volume3D(std::uint32_t nx, std::uint32_t ny, std::uint32_t nz,
           std::array<float, 3> spacing = {1.f, 1.f, 1.f}, float fill = 0.f)
      : nx_(nx), ny_(ny), nz_(nz), spacing_(spacing) {
    detail::check_dims_nonzero(nx, ny, nz, "Volume3D");
    data_.assign(std::size_t(nx) * ny * nz, fill);
  }

  std::uint32_t nx() const { return nx_; }
  std::uint32_t ny() const { return ny_; }
  std::uint32_t nz() const { return nz_; }
  std::size_t size() const { return data_.size(); }
  const std::array<float, 3>& spacing() const { return spacing_; }
  void set_spacing(std::array<float, 3> s) { spacing_ = s; }

  std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    return std::size_t(x) + std::size_t(nx_) * (std::size_t(y) + std::size_t(ny_) * z);
  }

  float operator()(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    assert(x < nx_ && y < ny_ && z < nz_);
    return data_[index(x, y, z)];
  }
  float& operator()(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    assert(x < nx_ && y < ny_ && z < nz_);
    return data_[index(x, y, z)];
  }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  bool same_dims(const Volume3D& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && nz_ == o.nz_;
  }

  bool has_nonfinite() const {
    for (float v : data_)
      if (!std::isfinite(v)) return true;
    return false;
  }

private:
  std::uint32_t nx_ = 0, ny_ = 0, nz_ = 0;
  std::array<float, 3> spacing_ = {1.f, 1.f, 1.f};
  std::vector<float> data_;
};

/// Binary volume: brain masks, lesion ground truth, predicted segmentations.
/// Samples are 0 or 1.
class Mask3D {
public:
  Mask3D() = default;

  Mask3D(std::uint32_t nx, std::uint32_t ny, std::uint32_t nz,
         std::uint8_t fill = 0)
      : nx_(nx), ny_(ny), nz_(nz) {
    detail::check_dims_nonzero(nx, ny, nz, "Mask3D");
    data_.assign(std::size_t(nx) * ny * nz, fill);
  }

  std::uint32_t nx() const { return nx_; }
  std::uint32_t ny() const { return ny_; }
  std::uint32_t nz() const { return nz_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    return std::size_t(x) + std::size_t(nx_) * (std::size_t(y) + std::size_t(ny_) * z);
  }

  std::uint8_t operator()(std::uint32_t x, std::uint32_t y, std::uint32_t z) const {
    assert(x < nx_ && y < ny_ && z < nz_);
    return data_[index(x, y, z)];
  }
  std::uint8_t& operator()(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    assert(x < nx_ && y < ny_ && z < nz_);
    return data_[index(x, y, z)];
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  bool same_dims(const Mask3D& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && nz_ == o.nz_;
  }
  bool same_dims(const Volume3D& o) const {
    return nx_ == o.nx() && ny_ == o.ny() && nz_ == o.nz();
  }

  std::size_t count_set() const {
    std::size_t n = 0;
    for (std::uint8_t v : data_) n += (v != 0);
    return n;
  }

private:
  std::uint32_t nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Single transverse plane, x-fastest.
struct Image2D {
  std::uint32_t nx = 0, ny = 0;
  std::vector<float> data;

  Image2D() = default;
  Image2D(std::uint32_t w, std::uint32_t h, float fill = 0.f)
      : nx(w), ny(h), data(std::size_t(w) * h, fill) {}

  std::size_t index(std::uint32_t x, std::uint32_t y) const {
    return std::size_t(x) + std::size_t(nx) * y;
  }
  float operator()(std::uint32_t x, std::uint32_t y) const {
    assert(x < nx && y < ny);
    return data[index(x, y)];
  }
  float& operator()(std::uint32_t x, std::uint32_t y) {
    assert(x < nx && y < ny);
    return data[index(x, y)];
  }
};

/// Copies the transverse plane at index z.
inline Image2D extract_slice(const Volume3D& v, std::uint32_t z) {
  if (z >= v.nz())
    throw validation_error("extract_slice: z " + std::to_string(z) +
                           " out of range [0, " + std::to_string(v.nz()) + ")");
  Image2D img(v.nx(), v.ny());
  const std::size_t plane = std::size_t(v.nx()) * v.ny();
  std::memcpy(img.data.data(), v.data().data() + plane * z,
              plane * sizeof(float));
  return img;
}

/// Writes a plane back at index z; inverse of extract_slice.
inline void insert_slice(Volume3D& v, std::uint32_t z, const Image2D& img) {
  if (z >= v.nz())
    throw validation_error("insert_slice: z " + std::to_string(z) +
                           " out of range [0, " + std::to_string(v.nz()) + ")");
  if (img.nx != v.nx() || img.ny != v.ny())
    throw validation_error("insert_slice: slice dims mismatch");
  const std::size_t plane = std::size_t(v.nx()) * v.ny();
  std::memcpy(v.data().data() + plane * z, img.data.data(),
              plane * sizeof(float));
}

inline bool bitwise_equal(const Volume3D& a, const Volume3D& b) {
  return a.same_dims(b) && a.spacing() == b.spacing() &&
         std::memcmp(a.data().data(), b.data().data(),
                     a.size() * sizeof(float)) == 0;
}

inline bool bitwise_equal(const Mask3D& a, const Mask3D& b) {
  return a.same_dims(b) &&
         std::memcmp(a.data().data(), b.data().data(), a.size()) == 0;
}

inline void require_same_dims(const Volume3D& a, const Volume3D& b,
                              const char* what) {
  if (!a.same_dims(b))
    throw validation_error(std::string(what) + ": dimension mismatch");
}

inline void require_same_dims(const Mask3D& m, const Volume3D& v,
                              const char* what) {
  if (!m.same_dims(v))
    throw validation_error(std::string(what) + ": dimension mismatch");
}

inline void require_same_dims(const Mask3D& a, const Mask3D& b,
                              const char* what) {
  if (!a.same_dims(b))
    throw validation_error(std::string(what) + ": dimension mismatch");
}

} // namespace anomap
