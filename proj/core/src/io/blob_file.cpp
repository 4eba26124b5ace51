#include "io/blob_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "slicevol/errors.hpp"

namespace slicevol::io {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) out = (out << 8) | ((v >> (8 * i)) & 0xff);
    return out;
  }
}

template <class T, class U>
std::string encode_le(std::span<const T> values) {
  std::string out(values.size() * sizeof(T), '\0');
  for (std::size_t i = 0; i < values.size(); ++i) {
    const U bits = to_little(std::bit_cast<U>(values[i]));
    std::memcpy(&out[i * sizeof(T)], &bits, sizeof(T));
  }
  return out;
}

template <class T, class U>
std::vector<T> decode_le(std::string_view bytes) {
  if (bytes.size() % sizeof(T) != 0) throw ShapeError("payload is not a whole number of values");
  std::vector<T> out(bytes.size() / sizeof(T));
  for (std::size_t i = 0; i < out.size(); ++i) {
    U bits;
    std::memcpy(&bits, bytes.data() + i * sizeof(T), sizeof(T));
    out[i] = std::bit_cast<T>(to_little(bits));
  }
  return out;
}

}  // namespace

std::string pack(std::string_view magic, std::string_view header, std::string_view payload) {
  std::string out(magic.substr(0, kMagicSize));
  out.resize(kMagicSize, '\0');
  const std::uint64_t len = to_little<std::uint64_t>(header.size());
  out.append(reinterpret_cast<const char*>(&len), sizeof(len));
  out.append(header);
  out.append(payload);
  return out;
}

Unpacked unpack(std::string_view bytes, std::string_view magic, std::string_view what) {
  if (bytes.size() < kMagicSize) throw TruncationError(std::string(what) + ": file too short");
  if (bytes.substr(0, kMagicSize) != magic.substr(0, kMagicSize)) {
    throw HeaderError(std::string(what) + ": bad magic");
  }
  if (bytes.size() < kMagicSize + sizeof(std::uint64_t)) {
    throw TruncationError(std::string(what) + ": header length missing");
  }
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + kMagicSize, sizeof(len));
  len = to_little(len);
  const std::size_t start = kMagicSize + sizeof(std::uint64_t);
  if (len > bytes.size() - start) throw TruncationError(std::string(what) + ": header cut short");
  return {std::string(bytes.substr(start, len)), bytes.substr(start + len)};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

std::string encode_f32le(std::span<const float> values) {
  return encode_le<float, std::uint32_t>(values);
}
std::vector<float> decode_f32le(std::string_view bytes) {
  return decode_le<float, std::uint32_t>(bytes);
}
std::string encode_f64le(std::span<const double> values) {
  return encode_le<double, std::uint64_t>(values);
}
std::vector<double> decode_f64le(std::string_view bytes) {
  return decode_le<double, std::uint64_t>(bytes);
}

}  // namespace slicevol::io
