#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "anomap/errors.hpp"
#include "anomap/metrics.hpp"
#include "anomap/mvol.hpp"

namespace anomap {

// Dataset manifest: one volume per line,
//   role <TAB> x <TAB> rec <TAB> gt <TAB> brain
// with role "val" or "test". Paths are taken relative to the manifest's
// directory unless absolute.

struct ManifestEntry {
  bool is_validation = false;
  std::string x, rec, gt, brain; // paths as written in the file
};

inline std::vector<ManifestEntry> load_manifest(const std::string& path) {
  const std::vector<unsigned char> buf = detail::read_file(path);
  const std::string text(buf.begin(), buf.end());
  std::vector<ManifestEntry> entries;
  std::size_t line_no = 0, start = 0;
  while (start < text.size()) {
    const std::size_t eol = text.find('\n', start);
    const std::string line =
        text.substr(start, eol == std::string::npos ? eol : eol - start);
    start = eol == std::string::npos ? text.size() : eol + 1;
    ++line_no;
    if (line.empty()) continue;

    std::vector<std::string> fields;
    std::size_t fs = 0;
    while (true) {
      const std::size_t tab = line.find('\t', fs);
      fields.push_back(line.substr(fs, tab == std::string::npos ? tab : tab - fs));
      if (tab == std::string::npos) break;
      fs = tab + 1;
    }
    if (fields.size() != 5)
      throw validation_error(path + ":" + std::to_string(line_no) +
                             ": expected 5 tab-separated fields, got " +
                             std::to_string(fields.size()));
    ManifestEntry e;
    if (fields[0] == "val") e.is_validation = true;
    else if (fields[0] == "test") e.is_validation = false;
    else
      throw validation_error(path + ":" + std::to_string(line_no) +
                             ": role must be val or test, got '" + fields[0] +
                             "'");
    e.x = fields[1];
    e.rec = fields[2];
    e.gt = fields[3];
    e.brain = fields[4];
    entries.push_back(std::move(e));
  }
  if (entries.empty()) throw validation_error(path + ": empty manifest");
  return entries;
}

inline void save_manifest(const std::string& path,
                          const std::vector<ManifestEntry>& entries) {
  std::string text;
  for (const ManifestEntry& e : entries) {
    text += e.is_validation ? "val" : "test";
    text += '\t';
    text += e.x;
    text += '\t';
    text += e.rec;
    text += '\t';
    text += e.gt;
    text += '\t';
    text += e.brain;
    text += '\n';
  }
  detail::write_file(path, std::vector<unsigned char>(text.begin(), text.end()));
}

namespace detail {

inline std::string resolve_against(const std::string& manifest_path,
                                   const std::string& file) {
  const std::filesystem::path p(file);
  if (p.is_absolute()) return file;
  return (std::filesystem::path(manifest_path).parent_path() / p).string();
}

} // namespace detail

/// Reads every volume a manifest references. Record ids are vol000,
/// vol001, ... in file order.
inline std::vector<VolumeRecord> load_dataset(const std::string& manifest_path) {
  const std::vector<ManifestEntry> entries = load_manifest(manifest_path);
  std::vector<VolumeRecord> records;
  records.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const ManifestEntry& e = entries[i];
    VolumeRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "vol%03zu", i);
    rec.id = id;
    rec.input = read_volume(detail::resolve_against(manifest_path, e.x));
    rec.reconstruction = read_volume(detail::resolve_against(manifest_path, e.rec));
    rec.ground_truth = read_mask(detail::resolve_against(manifest_path, e.gt));
    rec.brain = read_mask(detail::resolve_against(manifest_path, e.brain));
    if (!rec.input.same_dims(rec.reconstruction) ||
        !rec.ground_truth.same_dims(rec.input) ||
        !rec.brain.same_dims(rec.input))
      throw validation_error(manifest_path + ": volume " + rec.id +
                             " has mismatched dimensions");
    rec.is_validation = e.is_validation;
    records.push_back(std::move(rec));
  }
  return records;
}

} // namespace anomap
