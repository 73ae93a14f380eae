#pragma once

#include <string>

#include "cts/policy.hpp"

namespace cts {

// Binary checkpoint: fixed header carrying the layer sizes, then one
// little-endian float32 block per tensor. A YAML sidecar (written by the
// trainer next to the file) carries the full run configuration.
void save_checkpoint(const PolicyParams& params, const std::string& path);

// Throws std::runtime_error on bad magic/version/shape.
PolicyParams load_checkpoint(const std::string& path);

}  // namespace cts
