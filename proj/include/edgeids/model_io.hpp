#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "edgeids/detection.hpp"
#include "edgeids/features.hpp"

namespace edgeids {

// Binary model format, little-endian (layout in docs/FORMATS.md):
//   "EIDSMODL" u32 version u32 kind u32 dimension u32 class_count
//   str name  u64 block_len  <kind-specific parameter block>
inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_model(std::ostream& out, const ClassifierModel& model);
// Throws Error(FormatError) on bad magic, version, dimension or truncation.
ClassifierModel read_model(std::istream& in);

// What `train` emits and `run` / `replay` load: normalization statistics plus
// the trained models, in pipeline order.
struct ModelBundle {
  NormalizationStats stats;
  std::vector<ClassifierModel> models;
};

void write_bundle(std::ostream& out, const ModelBundle& bundle);
ModelBundle read_bundle(std::istream& in);

void save_bundle(const std::filesystem::path& path, const ModelBundle& bundle);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace edgeids
