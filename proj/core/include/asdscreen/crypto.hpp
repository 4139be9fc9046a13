#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace asdscreen {

std::string sha256_hex(std::span<const uint8_t> data);
std::string sha256_hex(const std::string& data);

// Keyed hash backing pseudonymization: stable under a fixed salt,
// irreversible without it.
std::string hmac_sha256_hex(const std::string& key, const std::string& message);

// OS entropy; used for seal() nonces only, never for seeded pipeline state.
std::vector<uint8_t> random_bytes(size_t n);

}  // namespace asdscreen
