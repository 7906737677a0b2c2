#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "anomap/errors.hpp"
#include "anomap/volume.hpp"

namespace anomap::mvol {

// MVOL container, little-endian throughout:
//
//   offset  size  field
//   0       6     magic "MVOL1\0"
//   6       2     u16 version, = 1
//   8       12    u32 nx, ny, nz
//   20      12    f32 spacing sx, sy, sz
//   32      1     u8 kind: 0 = float volume, 1 = mask
//   33      --    payload, x-fastest:
//                   kind 0: nx*ny*nz * f32
//                   kind 1: nx*ny*nz * u8, each 0 or 1
//
// Spacing is metadata for kind 0; mask files carry it for bookkeeping only.
// Serialization is byte-level, so files are identical regardless of the
// host's endianness, and write followed by read returns the input bit for
// bit.

inline constexpr char kMagic[6] = {'M', 'V', 'O', 'L', '1', '\0'};
inline constexpr std::uint16_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 33;

enum class errc {
  bad_magic,
  bad_version,
  zero_dimension,
  truncated,
  trailing_data,
  nonfinite_sample,
  bad_mask_byte,
  wrong_kind,
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::bad_magic: return "bad magic";
    case errc::bad_version: return "unsupported version";
    case errc::zero_dimension: return "zero dimension";
    case errc::truncated: return "truncated payload";
    case errc::trailing_data: return "trailing data";
    case errc::nonfinite_sample: return "non-finite sample";
    case errc::bad_mask_byte: return "mask byte not 0/1";
    case errc::wrong_kind: return "wrong payload kind";
  }
  return "unknown";
}

/// Malformed MVOL content. Carries a code so callers can tell the failure
/// modes apart.
class format_error : public validation_error {
public:
  format_error(errc c, const std::string& path)
      : validation_error("MVOL " + path + ": " + errc_name(c)), code_(c) {}
  errc code() const { return code_; }

private:
  errc code_;
};

namespace detail {

inline void put_u16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v & 0xFF));
  b.push_back(static_cast<unsigned char>(v >> 8));
}

inline void put_u32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::vector<unsigned char>& b, float v) {
  put_u32(b, std::bit_cast<std::uint32_t>(v));
}

inline std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

inline float get_f32(const unsigned char* p) {
  return std::bit_cast<float>(get_u32(p));
}

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw io_error("cannot open " + path + " for reading");
  std::fseek(f, 0, SEEK_END);
  const long len = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<unsigned char> buf(len > 0 ? static_cast<std::size_t>(len) : 0);
  if (!buf.empty() && std::fread(buf.data(), 1, buf.size(), f) != buf.size()) {
    std::fclose(f);
    throw io_error("read failed on " + path);
  }
  std::fclose(f);
  return buf;
}

inline void write_file(const std::string& path,
                       const std::vector<unsigned char>& buf) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw io_error("cannot open " + path + " for writing");
  const bool ok = std::fwrite(buf.data(), 1, buf.size(), f) == buf.size();
  const bool closed = std::fclose(f) == 0;
  if (!ok || !closed) throw io_error("write failed on " + path);
}

struct Header {
  std::uint32_t nx, ny, nz;
  float sx, sy, sz;
  std::uint8_t kind;
};

inline Header parse_header(const std::vector<unsigned char>& buf,
                           const std::string& path) {
  if (buf.size() < kHeaderSize) {
    // Too short to even check the magic counts as bad magic.
    if (buf.size() < 6 || std::memcmp(buf.data(), kMagic, 6) != 0)
      throw format_error(errc::bad_magic, path);
    throw format_error(errc::truncated, path);
  }
  if (std::memcmp(buf.data(), kMagic, 6) != 0)
    throw format_error(errc::bad_magic, path);
  if (get_u16(buf.data() + 6) != kVersion)
    throw format_error(errc::bad_version, path);
  Header h;
  h.nx = get_u32(buf.data() + 8);
  h.ny = get_u32(buf.data() + 12);
  h.nz = get_u32(buf.data() + 16);
  h.sx = get_f32(buf.data() + 20);
  h.sy = get_f32(buf.data() + 24);
  h.sz = get_f32(buf.data() + 28);
  h.kind = buf[32];
  if (h.nx == 0 || h.ny == 0 || h.nz == 0)
    throw format_error(errc::zero_dimension, path);
  return h;
}

inline std::vector<unsigned char> header_bytes(std::uint32_t nx,
                                               std::uint32_t ny,
                                               std::uint32_t nz,
                                               std::array<float, 3> spacing,
                                               std::uint8_t kind) {
  std::vector<unsigned char> b;
  b.reserve(kHeaderSize);
  b.insert(b.end(), kMagic, kMagic + 6);
  put_u16(b, kVersion);
  put_u32(b, nx);
  put_u32(b, ny);
  put_u32(b, nz);
  put_f32(b, spacing[0]);
  put_f32(b, spacing[1]);
  put_f32(b, spacing[2]);
  b.push_back(kind);
  return b;
}

} // namespace detail

inline Volume3D read_volume(const std::string& path) {
  const auto buf = detail::read_file(path);
  const auto h = detail::parse_header(buf, path);
  if (h.kind != 0) throw format_error(errc::wrong_kind, path);
  const std::size_t n = std::size_t(h.nx) * h.ny * h.nz;
  if (buf.size() < kHeaderSize + 4 * n)
    throw format_error(errc::truncated, path);
  if (buf.size() > kHeaderSize + 4 * n)
    throw format_error(errc::trailing_data, path);
  Volume3D v(h.nx, h.ny, h.nz, {h.sx, h.sy, h.sz});
  const unsigned char* p = buf.data() + kHeaderSize;
  for (std::size_t i = 0; i < n; ++i, p += 4) {
    const float s = detail::get_f32(p);
    if (!std::isfinite(s)) throw format_error(errc::nonfinite_sample, path);
    v.data()[i] = s;
  }
  return v;
}

inline Mask3D read_mask(const std::string& path) {
  const auto buf = detail::read_file(path);
  const auto h = detail::parse_header(buf, path);
  if (h.kind != 1) throw format_error(errc::wrong_kind, path);
  const std::size_t n = std::size_t(h.nx) * h.ny * h.nz;
  if (buf.size() < kHeaderSize + n) throw format_error(errc::truncated, path);
  if (buf.size() > kHeaderSize + n)
    throw format_error(errc::trailing_data, path);
  Mask3D m(h.nx, h.ny, h.nz);
  const unsigned char* p = buf.data() + kHeaderSize;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] > 1) throw format_error(errc::bad_mask_byte, path);
    m.data()[i] = p[i];
  }
  return m;
}

inline void write_volume(const Volume3D& v, const std::string& path) {
  if (v.size() == 0) throw validation_error("write_volume: empty volume");
  if (v.has_nonfinite())
    throw validation_error("write_volume: non-finite sample in " + path);
  auto buf = detail::header_bytes(v.nx(), v.ny(), v.nz(), v.spacing(), 0);
  buf.reserve(kHeaderSize + 4 * v.size());
  for (float s : v.data()) detail::put_f32(buf, s);
  detail::write_file(path, buf);
}

inline void write_mask(const Mask3D& m, const std::string& path,
                       std::array<float, 3> spacing = {1.f, 1.f, 1.f}) {
  if (m.size() == 0) throw validation_error("write_mask: empty mask");
  auto buf = detail::header_bytes(m.nx(), m.ny(), m.nz(), spacing, 1);
  buf.reserve(kHeaderSize + m.size());
  for (std::uint8_t s : m.data())
    buf.push_back(s ? 1 : 0);
  detail::write_file(path, buf);
}

} // namespace anomap::mvol

namespace anomap {

// The reader/writer entry points are part of the library's everyday
// vocabulary; the format details stay under mvol::.
using mvol::read_mask;
using mvol::read_volume;
using mvol::write_mask;
using mvol::write_volume;

namespace detail {
using mvol::detail::read_file;
using mvol::detail::write_file;
} // namespace detail

} // namespace anomap
