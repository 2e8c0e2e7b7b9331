#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "edgeids/pipeline.hpp"

namespace edgeids {

// INI file; every key is optional and defaults to PipelineConfig's value.
// Relative asset paths resolve against the config file's directory.
// Throws Error(ParseError) naming the offending key.
PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

// The effective configuration in the same INI layout.
std::string dump_config(const PipelineConfig& config);

}  // namespace edgeids
