#include "polarscan/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "polarscan/errors.hpp"
#include "polarscan/grd_io.hpp"

namespace polarscan {

namespace {

constexpr char kMagic[4] = {'M', 'A', 'S', 'N'};

template <typename T>
void put(std::vector<char>& buf, T v) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.insert(buf.end(), tmp, tmp + sizeof(T));
}

template <typename T>
T take(const std::vector<char>& buf, size_t& off, const std::string& path) {
  if (off + sizeof(T) > buf.size()) throw TruncatedError("checkpoint truncated: " + path);
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path,
                     const std::vector<Parameter<T>>& params) {
  std::vector<char> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put<uint32_t>(buf, kCheckpointVersion);
  put<uint32_t>(buf, static_cast<uint32_t>(params.size()));
  for (const Parameter<T>& p : params) {
    put<uint16_t>(buf, static_cast<uint16_t>(p.name.size()));
    buf.insert(buf.end(), p.name.begin(), p.name.end());
    put<uint8_t>(buf, static_cast<uint8_t>(p.tensor.shape().size()));
    for (int d : p.tensor.shape()) put<uint32_t>(buf, static_cast<uint32_t>(d));
    for (T v : p.tensor.values()) put<float>(buf, static_cast<float>(v));
  }
  put<uint32_t>(buf, crc32_bytes(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write: " + path.string());
}

template <typename T>
void load_checkpoint(const std::filesystem::path& path,
                     std::vector<Parameter<T>>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());

  if (buf.size() < 4 + sizeof(uint32_t)) throw TruncatedError("checkpoint truncated: " + path.string());
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw FormatError("not a checkpoint file (bad magic): " + path.string());
  }
  if (buf.size() < sizeof(uint32_t)) throw TruncatedError("checkpoint truncated: " + path.string());
  const size_t body = buf.size() - sizeof(uint32_t);
  uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + body, sizeof(uint32_t));
  if (stored_crc != crc32_bytes(buf.data(), body)) {
    throw ChecksumError("checkpoint checksum mismatch: " + path.string());
  }

  size_t off = 4;
  const auto version = take<uint32_t>(buf, off, path.string());
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version) + ": " +
                       path.string());
  }
  const auto count = take<uint32_t>(buf, off, path.string());
  if (count != params.size()) {
    throw FormatError("checkpoint has " + std::to_string(count) + " parameters, model has " +
                      std::to_string(params.size()));
  }
  for (Parameter<T>& p : params) {
    const auto name_len = take<uint16_t>(buf, off, path.string());
    if (off + name_len > body) throw TruncatedError("checkpoint truncated: " + path.string());
    const std::string name(buf.data() + off, name_len);
    off += name_len;
    if (name != p.name) {
      throw FormatError("checkpoint parameter '" + name + "' does not match model '" +
                        p.name + "'");
    }
    const auto rank = take<uint8_t>(buf, off, path.string());
    Shape shape(rank);
    for (uint8_t i = 0; i < rank; ++i) {
      shape[i] = static_cast<int>(take<uint32_t>(buf, off, path.string()));
    }
    if (shape != p.tensor.shape()) {
      throw FormatError("checkpoint shape mismatch for '" + name + "': file " +
                        shape_str(shape) + " vs model " + shape_str(p.tensor.shape()));
    }
    auto vals = p.tensor.values_mut();
    for (size_t i = 0; i < vals.size(); ++i) {
      vals[i] = static_cast<T>(take<float>(buf, off, path.string()));
    }
  }
}

template void save_checkpoint(const std::filesystem::path&,
                              const std::vector<Parameter<float>>&);
template void save_checkpoint(const std::filesystem::path&,
                              const std::vector<Parameter<double>>&);
template void load_checkpoint(const std::filesystem::path&, std::vector<Parameter<float>>&);
template void load_checkpoint(const std::filesystem::path&, std::vector<Parameter<double>>&);

}  // namespace polarscan
