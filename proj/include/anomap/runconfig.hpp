#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include "anomap/config.hpp"
#include "anomap/errors.hpp"
#include "anomap/mvol.hpp"
#include "anomap/phantom.hpp"

namespace anomap {

// Flat key=value run configuration. One "key = value" pair per line,
// '#' lines are comments, unknown keys are hard errors so typos never
// silently fall back to defaults. Every key has a default; an empty
// file is a valid config.
//
//   sigma_set                comma list, default 0.3,0.5,0.7,0.9,1.1,1.3,1.5,1.7
//   k1, k2, dynamic_range    SSIM constants
//   median_kernel            odd cube side, default 5
//   erosion_iterations       brain-mask erosion passes, default 1
//   min_component_size       component filter, default 8
//   num_thresholds           candidate count for selection, default 100
//   weight_mode              pervoxel | scalar
//   seed                     64-bit phantom seed
//   dims                     phantom grid, e.g. 96x96x50
//   spacing                  mm per voxel, e.g. 1,1,1
//   rho                      pseudo-reconstruction noise std
//   background_texture_scale anatomy wavelength in voxels
//   lesion_texture_scale     lesion texture wavelength in voxels
//   lesion                   cx,cy,cz,radius,offset,texture_amp (repeatable)
//   num_volumes, num_val     phantom family size and validation count

struct RunConfig {
  std::vector<double> sigma_set = {0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7};
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
  int median_kernel = 5;
  int erosion_iterations = 1;
  std::size_t min_component_size = 8;
  int num_thresholds = 100;
  WeightMode weight_mode = WeightMode::per_voxel;
  std::uint64_t seed = 42;

  std::uint32_t nx = 96, ny = 96, nz = 50;
  std::array<float, 3> spacing{1.f, 1.f, 1.f};
  double rho = 0.02;
  double background_texture_scale = 24.0;
  double lesion_texture_scale = 4.0;
  std::vector<Lesion> lesions;
  std::size_t num_volumes = 1;
  std::size_t num_val = 0;

  ScoreConfig score_config() const {
    ScoreConfig cfg;
    cfg.sigmas = SigmaSet(sigma_set);
    cfg.constants.k1 = k1;
    cfg.constants.k2 = k2;
    cfg.constants.dynamic_range = dynamic_range;
    cfg.weight_mode = weight_mode;
    cfg.postprocess.median_kernel = median_kernel;
    cfg.postprocess.erosion_iterations = erosion_iterations;
    cfg.postprocess.min_component_size = min_component_size;
    cfg.search.num_candidates = num_thresholds;
    cfg.validate();
    return cfg;
  }

  PhantomSpec phantom_spec() const {
    PhantomSpec spec;
    spec.nx = nx;
    spec.ny = ny;
    spec.nz = nz;
    spec.spacing = spacing;
    spec.seed = seed;
    spec.lesions = lesions;
    spec.background_texture_scale = background_texture_scale;
    spec.lesion_texture_scale = lesion_texture_scale;
    spec.reconstruction_noise = rho;
    spec.validate();
    if (num_volumes == 0)
      throw config_error("num_volumes must be >= 1");
    if (num_val > num_volumes)
      throw config_error("num_val exceeds num_volumes");
    return spec;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline double config_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(v))
    throw config_error(key + ": expected a number, got '" + value + "'");
  return v;
}

inline long long config_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size())
    throw config_error(key + ": expected an integer, got '" + value + "'");
  return v;
}

inline std::uint64_t config_u64(const std::string& key,
                                const std::string& value) {
  if (!value.empty() && value[0] == '-')
    throw config_error(key + ": expected a non-negative integer, got '" +
                       value + "'");
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (value.empty() || end != value.c_str() + value.size())
    throw config_error(key + ": expected an integer, got '" + value + "'");
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return parts;
}

inline void apply_config_line(RunConfig& cfg, const std::string& key,
                              const std::string& value) {
  if (key == "sigma_set") {
    cfg.sigma_set.clear();
    for (const std::string& p : split(value, ','))
      cfg.sigma_set.push_back(config_double(key, p));
  } else if (key == "k1") {
    cfg.k1 = config_double(key, value);
  } else if (key == "k2") {
    cfg.k2 = config_double(key, value);
  } else if (key == "dynamic_range") {
    cfg.dynamic_range = config_double(key, value);
  } else if (key == "median_kernel") {
    cfg.median_kernel = static_cast<int>(config_int(key, value));
  } else if (key == "erosion_iterations") {
    cfg.erosion_iterations = static_cast<int>(config_int(key, value));
  } else if (key == "min_component_size") {
    cfg.min_component_size = static_cast<std::size_t>(config_u64(key, value));
  } else if (key == "num_thresholds") {
    cfg.num_thresholds = static_cast<int>(config_int(key, value));
  } else if (key == "weight_mode") {
    if (value == "pervoxel") cfg.weight_mode = WeightMode::per_voxel;
    else if (value == "scalar") cfg.weight_mode = WeightMode::per_slice_scalar;
    else throw config_error("weight_mode: expected pervoxel or scalar, got '" +
                            value + "'");
  } else if (key == "seed") {
    cfg.seed = config_u64(key, value);
  } else if (key == "dims") {
    const std::vector<std::string> d = split(value, 'x');
    if (d.size() != 3)
      throw config_error("dims: expected NXxNYxNZ, got '" + value + "'");
    cfg.nx = static_cast<std::uint32_t>(config_u64(key, d[0]));
    cfg.ny = static_cast<std::uint32_t>(config_u64(key, d[1]));
    cfg.nz = static_cast<std::uint32_t>(config_u64(key, d[2]));
  } else if (key == "spacing") {
    const std::vector<std::string> s = split(value, ',');
    if (s.size() != 3)
      throw config_error("spacing: expected sx,sy,sz, got '" + value + "'");
    for (int i = 0; i < 3; ++i)
      cfg.spacing[static_cast<std::size_t>(i)] =
          static_cast<float>(config_double(key, s[static_cast<std::size_t>(i)]));
  } else if (key == "rho") {
    cfg.rho = config_double(key, value);
  } else if (key == "background_texture_scale") {
    cfg.background_texture_scale = config_double(key, value);
  } else if (key == "lesion_texture_scale") {
    cfg.lesion_texture_scale = config_double(key, value);
  } else if (key == "lesion") {
    const std::vector<std::string> f = split(value, ',');
    if (f.size() != 6)
      throw config_error(
          "lesion: expected cx,cy,cz,radius,offset,texture_amp, got '" +
          value + "'");
    Lesion l;
    l.cx = config_double(key, f[0]);
    l.cy = config_double(key, f[1]);
    l.cz = config_double(key, f[2]);
    l.radius = config_double(key, f[3]);
    l.intensity_offset = config_double(key, f[4]);
    l.texture_amplitude = config_double(key, f[5]);
    cfg.lesions.push_back(l);
  } else if (key == "num_volumes") {
    cfg.num_volumes = static_cast<std::size_t>(config_u64(key, value));
  } else if (key == "num_val") {
    cfg.num_val = static_cast<std::size_t>(config_u64(key, value));
  } else {
    throw config_error("unknown config key '" + key + "'");
  }
}

} // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::size_t line_no = 0, start = 0;
  while (start <= text.size()) {
    const std::size_t eol = text.find('\n', start);
    const std::string raw =
        text.substr(start, eol == std::string::npos ? eol : eol - start);
    start = eol == std::string::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    const std::string line = detail::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(line_no) +
                         ": expected key=value, got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error("line " + std::to_string(line_no) + ": empty key");
    // The lesion key repeats; everything else may appear once.
    if (key != "lesion" && !seen.insert(key).second)
      throw config_error("duplicate config key '" + key + "'");
    detail::apply_config_line(cfg, key, value);
  }
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  const std::vector<unsigned char> buf = detail::read_file(path);
  return parse_run_config(std::string(buf.begin(), buf.end()));
}

} // namespace anomap
