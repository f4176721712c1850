#pragma once

#include <filesystem>

#include "polarscan/forward_model.hpp"

namespace polarscan {

// Binary raster format, little-endian:
//   magic "GPRG", u32 version = 1, u32 rows, u32 cols,
//   f64 dt_s, f64 dx_m, f64 t0_s,
//   rows*cols f32 values row-major, u32 CRC32 of the value bytes.
// Values pass through f32, so grids written from f32-exact data round-trip
// bit-identically.
inline constexpr uint32_t kGrdVersion = 1;

void write_grd(const std::filesystem::path& path, const Radargram& r);

// Throws IoError (missing/short file), FormatError (bad magic),
// VersionError, TruncatedError and ChecksumError, each distinct.
Radargram read_grd(const std::filesystem::path& path);

// CRC32 of an arbitrary byte range (IEEE, as used by the file formats).
uint32_t crc32_bytes(const void* data, size_t n);

}  // namespace polarscan
