#pragma once

#include <string>

#include "mpview/trainer.hpp"

namespace mpview {

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& msg) : std::runtime_error(msg) {}
};

// Versioned binary container: magic + version header, then per-field
// encoding config, camera, plane stack, parameters and Adam moments, plus
// the epoch/step counters and RNG state. Little-endian doubles throughout;
// identical state writes identical bytes.
void save_checkpoint(const std::string& path, const TrainState& state);
TrainState load_checkpoint(const std::string& path);

}  // namespace mpview
