#include "polarscan/grd_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <vector>

#include "polarscan/errors.hpp"

namespace polarscan {

namespace {

constexpr char kMagic[4] = {'G', 'P', 'R', 'G'};

template <typename T>
void put(std::vector<char>& buf, T v) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.insert(buf.end(), tmp, tmp + sizeof(T));
}

template <typename T>
T take(const std::vector<char>& buf, size_t& off) {
  if (off + sizeof(T) > buf.size()) {
    throw TruncatedError("grd file truncated");
  }
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

uint32_t crc32_bytes(const void* data, size_t n) {
  return static_cast<uint32_t>(
      ::crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

void write_grd(const std::filesystem::path& path, const Radargram& r) {
  std::vector<char> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put<uint32_t>(buf, kGrdVersion);
  put<uint32_t>(buf, static_cast<uint32_t>(r.n_traces));
  put<uint32_t>(buf, static_cast<uint32_t>(r.n_time));
  put<double>(buf, r.dt_s);
  put<double>(buf, r.dx_m);
  put<double>(buf, r.t0_s);

  std::vector<float> payload(r.values.size());
  for (size_t i = 0; i < r.values.size(); ++i) payload[i] = static_cast<float>(r.values[i]);
  const char* pb = reinterpret_cast<const char*>(payload.data());
  const size_t pn = payload.size() * sizeof(float);
  buf.insert(buf.end(), pb, pb + pn);
  put<uint32_t>(buf, crc32_bytes(pb, pn));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write: " + path.string());
}

Radargram read_grd(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());

  size_t off = 0;
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw FormatError("not a grd file (bad magic): " + path.string());
  }
  off = 4;
  const auto version = take<uint32_t>(buf, off);
  if (version != kGrdVersion) {
    throw VersionError("unsupported grd version " + std::to_string(version) + ": " +
                       path.string());
  }
  const auto rows = take<uint32_t>(buf, off);
  const auto cols = take<uint32_t>(buf, off);
  Radargram r;
  r.n_traces = static_cast<int>(rows);
  r.n_time = static_cast<int>(cols);
  r.dt_s = take<double>(buf, off);
  r.dx_m = take<double>(buf, off);
  r.t0_s = take<double>(buf, off);
  if (r.dt_s <= 0.0 || r.dx_m <= 0.0) {
    throw FormatError("non-positive grid spacing: " + path.string());
  }

  const size_t n = static_cast<size_t>(rows) * cols;
  if (off + n * sizeof(float) + sizeof(uint32_t) > buf.size()) {
    throw TruncatedError("grd payload truncated: " + path.string());
  }
  const char* pb = buf.data() + off;
  const uint32_t actual = crc32_bytes(pb, n * sizeof(float));
  std::vector<float> payload(n);
  std::memcpy(payload.data(), pb, n * sizeof(float));
  off += n * sizeof(float);
  const auto stored = take<uint32_t>(buf, off);
  if (stored != actual) {
    throw ChecksumError("grd checksum mismatch: " + path.string());
  }

  r.values.resize(n);
  for (size_t i = 0; i < n; ++i) r.values[i] = static_cast<double>(payload[i]);
  return r;
}

}  // namespace polarscan
