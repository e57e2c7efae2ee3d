#pragma once

// Checkpoint files hold every parameter block of a model together with its
// variant tag, dimensions and seed lineage.
//
// Binary layout (little-endian):
//   8 bytes  magic "DIRECKPT"
//   u32      format version
//   u64      header length N
//   N bytes  JSON header {model, dims, lineage, blocks: [{name, rows, cols}]}
//   f64 ...  block values, row-major, in header order
//
// Paths ending in ".json" use a pure JSON form with the values inline.

#include <filesystem>

#include <json.hpp>

#include "dire/models.hpp"

namespace dire {

struct Checkpoint {
  Model model;
  nlohmann::json lineage = nlohmann::json::object();  // seeds, epoch, etc.
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json dims_to_json(const ModelDims& dims);
ModelDims dims_from_json(const nlohmann::json& j);

}  // namespace dire
