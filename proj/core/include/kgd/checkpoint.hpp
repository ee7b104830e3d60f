#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "kgd/tape.hpp"

namespace kgd::ad {

// Parameter container: 8-byte magic "KGDPARAM", little-endian u64 manifest
// length, a JSON manifest
//   {"format": 1, "metadata": {...}, "parameters": [{"name", "shape", "offset"}]}
// and then every parameter's values as little-endian IEEE-754 doubles,
// concatenated in manifest order ("offset" counts doubles).
struct Checkpoint {
  std::string metadata_json = "{}";
  std::vector<Parameter> parameters;
};

void write_checkpoint(const std::filesystem::path& path, const std::string& metadata_json,
                      const std::vector<const Parameter*>& parameters);

Checkpoint read_checkpoint(const std::filesystem::path& path);

// Copies values by name into `targets`; every target must be present with
// an identical shape.
void load_parameters(const Checkpoint& checkpoint, const std::vector<Parameter*>& targets);

}  // namespace kgd::ad
