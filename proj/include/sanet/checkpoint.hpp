#pragma once

#include <string>

#include "sanet/network.hpp"

namespace sanet {

/// Checkpoint container: magic "SANC", format version byte 1, a u32
/// little-endian manifest length, the JSON manifest (parameter names,
/// shapes, byte offsets, element counts, plus the architecture), then one
/// blob of little-endian 8-byte floats.
void save_checkpoint(const std::string& path, const SanetParams& params);
SanetParams load_checkpoint(const std::string& path);

}  // namespace sanet
