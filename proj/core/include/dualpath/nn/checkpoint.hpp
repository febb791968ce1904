#pragma once

#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualpath/nn/tape.hpp"

namespace dualpath::nn {

// Writes <dir>/manifest.json (names, shapes, offsets, user metadata) and
// <dir>/params.bin (little-endian f64, concatenated in store order).
void save_checkpoint(const std::filesystem::path& dir, const ParameterStore& store,
                     const nlohmann::json& metadata = nlohmann::json::object());

// Reads only the manifest's metadata.
nlohmann::json read_checkpoint_metadata(const std::filesystem::path& dir);

// Loads values into an already-built store; names and shapes must match.
// Returns the stored metadata.
nlohmann::json load_checkpoint(const std::filesystem::path& dir, ParameterStore& store);

// In-memory copy of all parameter values (used for best-epoch weights).
std::vector<Tensor> snapshot(const ParameterStore& store);
void restore(ParameterStore& store, const std::vector<Tensor>& values);

}  // namespace dualpath::nn
