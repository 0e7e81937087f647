#pragma once

#include "winnet/model.hpp"

#include <filesystem>
#include <memory>

namespace winnet {

/**
 * Checkpoint on disk is a pair of files:
 *
 *   <stem>.json  manifest: format tag, model kind, config snapshot, and one
 *                {name, shape, offset, count} entry per parameter
 *   <stem>.bin   little-endian float32 values in manifest order
 *
 * `offset` is in bytes from the start of the blob.
 */
struct Checkpoint {
    std::string model_kind;
    nlohmann::json config;
    nlohmann::json extra;  ///< free-form provenance (train config, dataset)
    std::unique_ptr<Forecaster> model;
};

inline constexpr const char* kCheckpointFormat = "winnet-checkpoint/1";

/// Writes <stem>.json and <stem>.bin. Returns the manifest.
nlohmann::json save_checkpoint(const std::filesystem::path& stem, const Forecaster& model,
                               const nlohmann::json& extra = nlohmann::json::object());

Checkpoint load_checkpoint(const std::filesystem::path& stem);

} // namespace winnet
