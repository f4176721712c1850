#pragma once

#include <filesystem>
#include <vector>

#include "polarscan/optim.hpp"

namespace polarscan {

// Checkpoint format, little-endian:
//   magic "MASN", u32 version = 1, u32 parameter count,
//   per parameter: u16 name length, name bytes, u8 rank, u32 dims...,
//   f32 values, then CRC32 over all preceding bytes.
inline constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<Parameter<T>>& params);

// Loads values into an existing parameter set; names and shapes must match
// exactly. Throws IoError / FormatError / VersionError / TruncatedError /
// ChecksumError, each distinct.
template <typename T>
void load_checkpoint(const std::filesystem::path& path, std::vector<Parameter<T>>& params);

}  // namespace polarscan
